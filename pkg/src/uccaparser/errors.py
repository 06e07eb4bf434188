"""Exception hierarchy shared across the toolkit."""


class UccaParserError(Exception):
    """Base class for all toolkit errors."""


class GraphError(UccaParserError):
    """A graph operation received structurally unusable input."""


class ConversionError(UccaParserError):
    """Graph/tree conversion failed (invalid graph, unmatchable record, bad label)."""


class CorpusFormatError(UccaParserError):
    """A corpus, vector, or tree file violates its documented format."""


class CheckpointError(UccaParserError):
    """A checkpoint file is unreadable or inconsistent with its own manifest."""


class ConfigError(UccaParserError):
    """A training or CLI configuration is invalid."""
