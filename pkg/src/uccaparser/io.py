"""Loading and saving: passages, trees, external vectors, checkpoints.

The native corpus container is line-delimited JSON (one passage per line)
with a ``format: 1`` header field per record; a directory of ``*.json`` /
``*.jsonl`` files is also accepted.  Importers for two published formats
(``ucca-xml`` and ``mrp-json``) cover interop at fixture scale.  See
``docs/formats.md`` for the full field-by-field description.
"""

from __future__ import annotations

import json
import logging
import struct
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .conversion import ConstituencyTree, DiscontinuityRecord, RemoteRecord
from .errors import CheckpointError, CorpusFormatError
from .graph import (
    Category,
    Edge,
    Passage,
    Terminal,
    UccaGraph,
    GraphError,
    terminal_id,
    validate_graph,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
CHECKPOINT_MAGIC = b"UCCACKPT1\n"


# ---------------------------------------------------------------------------
# native passage container


def passage_to_dict(p: Passage) -> dict:
    doc: dict = {
        "format": FORMAT_VERSION,
        "id": p.id,
        "language": p.language,
        "tokens": [
            {"position": t.position, "surface": t.surface, "pos": t.pos_tag,
             "dep": t.dep_label, "entity": t.entity_type, "iob": t.entity_iob}
            for t in p.terminals
        ],
        "graph": None,
    }
    if p.graph is not None:
        doc["graph"] = {
            "nodes": sorted(p.graph.nodes),
            "edges": [
                {"parent": e.parent, "child": e.child,
                 "category": e.category.value, "remote": e.remote}
                for e in p.graph.edges
            ],
            "root": p.graph.root,
        }
    return doc


def passage_from_dict(doc: dict) -> Passage:
    try:
        if doc.get("format") != FORMAT_VERSION:
            raise CorpusFormatError(f"unsupported passage format {doc.get('format')!r}")
        terminals = tuple(
            Terminal(position=t["position"], surface=t["surface"],
                     pos_tag=t.get("pos", ""), dep_label=t.get("dep", ""),
                     entity_type=t.get("entity", ""), entity_iob=t.get("iob", "O"))
            for t in doc["tokens"]
        )
        graph = None
        if doc.get("graph") is not None:
            gd = doc["graph"]
            edges = tuple(
                Edge(parent=e["parent"], child=e["child"],
                     category=Category.parse(e["category"]), remote=bool(e.get("remote", False)))
                for e in gd["edges"]
            )
            graph = UccaGraph(nodes=frozenset(gd["nodes"]), edges=edges, root=gd["root"])
        return Passage(id=doc["id"], language=doc["language"],
                       terminals=terminals, graph=graph)
    except (KeyError, TypeError) as exc:
        raise CorpusFormatError(f"malformed passage document: {exc}") from exc


def save_corpus(passages: Iterable[Passage], path: str | Path) -> None:
    """Write passages as line-delimited JSON with sorted keys."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf8") as fh:
        for p in passages:
            fh.write(json.dumps(passage_to_dict(p), sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def _iter_documents(path: Path) -> Iterable[dict]:
    if path.is_dir():
        files = sorted(p for p in path.iterdir()
                       if p.suffix in (".json", ".jsonl") and p.is_file())
        for f in files:
            yield from _iter_documents(f)
        return
    text = path.read_text(encoding="utf8")
    if not text.strip():
        return
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict):
        yield doc
        return
    if isinstance(doc, list):
        yield from doc
        return
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{path}:{line_no}: invalid JSON: {exc}") from exc


def load_corpus(path: str | Path, language: Optional[str] = None,
                strict: bool = True) -> list[Passage]:
    """Load a corpus file or directory, validating every graph.

    Invalid passages raise with per-passage diagnostics in strict mode and
    are skipped with a warning otherwise.  ``language`` filters passages
    after loading.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"corpus path does not exist: {path}")
    if path.is_dir() and not any(path.iterdir()):
        logger.warning("corpus directory %s is empty", path)
        return []
    out: list[Passage] = []
    for doc in _iter_documents(path):
        try:
            passage = passage_from_dict(doc)
        except (CorpusFormatError, GraphError) as exc:
            if strict:
                raise CorpusFormatError(f"passage {doc.get('id', '?')!r}: {exc}") from exc
            logger.warning("skipping unparseable passage %r: %s", doc.get("id", "?"), exc)
            continue
        if passage.graph is not None:
            report = validate_graph(passage.graph, passage.n_tokens)
            if not report.is_valid:
                msg = f"passage {passage.id!r}: invalid graph: {report}"
                if strict:
                    raise CorpusFormatError(msg)
                logger.warning("skipping %s", msg)
                continue
        if language is not None and passage.language != language:
            continue
        out.append(passage)
    return out


# ---------------------------------------------------------------------------
# external formats


def import_external_format(path: str | Path, format: str,
                           language: str = "en", strict: bool = True) -> list[Passage]:
    """Convert a published corpus format into native passages.

    Supported: ``ucca-xml`` (one passage per file) and ``mrp-json`` (one
    graph per line).  Implicit units are dropped with a warning; an edge
    carrying several categories keeps the first as its primary category,
    extra categories survive only on remote edges (as parallel edges).
    """
    path = Path(path)
    if format == "ucca-xml":
        if path.is_dir():
            passages = []
            for f in sorted(path.glob("*.xml")):
                passages.append(_import_ucca_xml(f, language))
            return passages
        return [_import_ucca_xml(path, language)]
    if format == "mrp-json":
        out = []
        with path.open(encoding="utf8") as fh:
            for line in fh:
                if line.strip():
                    out.append(_import_mrp(json.loads(line), language))
        return out
    raise CorpusFormatError(f"unknown import format {format!r} "
                            f"(expected 'ucca-xml' or 'mrp-json')")


def _split_categories(raw: str) -> list[str]:
    return [c for c in raw.split("|") if c]


def _import_ucca_xml(path: Path, language: str) -> Passage:
    try:
        tree = ET.parse(path)
    except ET.ParseError as exc:
        raise CorpusFormatError(f"{path}: XML parse error: {exc}") from exc
    root = tree.getroot()
    passage_id = root.get("passageID") or path.stem

    terminals: list[Terminal] = []
    word_to_position: dict[str, int] = {}
    layer0 = root.find("layer[@layerID='0']")
    layer1 = root.find("layer[@layerID='1']")
    if layer0 is None or layer1 is None:
        raise CorpusFormatError(f"{path}: layers 0 and 1 are both required")
    for node in layer0.findall("node"):
        attrs = node.find("attributes")
        text = attrs.get("text") if attrs is not None else None
        if text is None:
            raise CorpusFormatError(f"{path}: terminal {node.get('ID')} has no text")
        position = len(terminals) + 1
        terminals.append(Terminal(position=position, surface=text))
        word_to_position[node.get("ID", "")] = position

    implicit: set[str] = set()
    fn_edges: dict[str, list[tuple[str, str, bool]]] = {}
    incoming: dict[str, int] = {}
    for node in layer1.findall("node"):
        nid = node.get("ID", "")
        attrs = node.find("attributes")
        if attrs is not None and attrs.get("implicit") in ("True", "true", "1"):
            implicit.add(nid)
            continue
        edges = []
        for edge in node.findall("edge"):
            to = edge.get("toID", "")
            tag = edge.get("type", "")
            eattrs = edge.find("attributes")
            remote = eattrs is not None and eattrs.get("remote") in ("True", "true", "1")
            edges.append((to, tag, remote))
        fn_edges[nid] = edges
    dropped_implicit = 0

    node_map: dict[str, str] = {}
    counter = 0
    for nid in fn_edges:
        counter += 1
        node_map[nid] = f"n{counter}"

    built: list[Edge] = []
    for nid, edges in fn_edges.items():
        for to, tag, remote in edges:
            if to in implicit:
                dropped_implicit += 1
                continue
            if to in word_to_position:
                child = terminal_id(word_to_position[to])
                if tag == "Terminal":
                    # Words collapse into their preterminal unit; the unit's
                    # own incoming category covers them.
                    built.append(Edge(node_map[nid], child, Category.PUNCTUATION
                                      if _is_punct(terminals, word_to_position[to])
                                      else Category.CENTER, remote))
                    continue
                built.append(Edge(node_map[nid], child, Category.parse(tag), remote))
                continue
            if to not in node_map:
                raise CorpusFormatError(f"{path}: edge to unknown node {to!r}")
            cats = _split_categories(tag)
            if not cats:
                raise CorpusFormatError(f"{path}: edge {nid}->{to} has no category")
            built.append(Edge(node_map[nid], node_map[to], Category.parse(cats[0]), remote))
            for extra in cats[1:]:
                if remote:
                    built.append(Edge(node_map[nid], node_map[to], Category.parse(extra), True))
                else:
                    logger.warning("%s: dropping extra category %s on primary edge %s->%s",
                                   path, extra, nid, to)
    if dropped_implicit:
        logger.warning("%s: dropped %d edge(s) to implicit units", path, dropped_implicit)

    for e in built:
        if not e.remote:
            incoming[e.child] = incoming.get(e.child, 0) + 1
    roots = [node_map[nid] for nid in fn_edges
             if incoming.get(node_map[nid], 0) == 0 and node_map[nid] in _nodes_of(built)]
    if len(roots) != 1:
        raise CorpusFormatError(f"{path}: expected exactly one top node, found {roots}")
    built = _collapse_preterminals(built, protect=roots[0])
    nodes = _nodes_of(built) | {roots[0]}
    graph = UccaGraph(nodes=frozenset(nodes), edges=tuple(built), root=roots[0])
    return Passage(id=str(passage_id), language=language,
                   terminals=tuple(terminals), graph=graph)


def _is_punct(terminals: list[Terminal], position: int) -> bool:
    surface = terminals[position - 1].surface
    return all(not ch.isalnum() for ch in surface)


def _collapse_preterminals(edges: list[Edge], protect: str = "") -> list[Edge]:
    """Merge single-terminal units into the terminal itself.

    A unit whose only child is one terminal is redundant after import: the
    terminal takes over the unit's incoming edges.  ``protect`` (the root)
    is never collapsed.
    """
    children: dict[str, list[Edge]] = {}
    for e in edges:
        if not e.remote:
            children.setdefault(e.parent, []).append(e)
    redirect: dict[str, str] = {}
    for parent, kids in children.items():
        if parent != protect and len(kids) == 1 and kids[0].child.startswith("t"):
            redirect[parent] = kids[0].child
    # Resolve chains of redirects (unit over unit over word).
    def resolve(node: str) -> str:
        while node in redirect:
            node = redirect[node]
        return node

    out = []
    for e in edges:
        if e.parent in redirect:
            continue  # the collapsed unit's terminal edge disappears
        child = resolve(e.child)
        out.append(Edge(e.parent, child, e.category, e.remote))
    return out


def _nodes_of(edges: list[Edge]) -> set[str]:
    out: set[str] = set()
    for e in edges:
        out.add(e.parent)
        out.add(e.child)
    return out


def _import_mrp(doc: dict, default_language: str) -> Passage:
    pid = str(doc.get("id", "?"))
    text: str = doc.get("input", "")
    anchored: list[tuple[int, dict]] = []
    internal: list[dict] = []
    out_degree: dict[int, int] = {}
    for e in doc.get("edges", []):
        out_degree[e["source"]] = out_degree.get(e["source"], 0) + 1
    for node in doc.get("nodes", []):
        if node.get("anchors") and out_degree.get(node["id"], 0) == 0:
            anchored.append((node["anchors"][0]["from"], node))
        else:
            internal.append(node)
    anchored.sort(key=lambda pair: pair[0])
    terminals = []
    mrp_to_node: dict[int, str] = {}
    for position, (_, node) in enumerate(anchored, start=1):
        pieces = [text[a["from"]:a["to"]] for a in node["anchors"]]
        terminals.append(Terminal(position=position, surface=" ".join(pieces)))
        mrp_to_node[node["id"]] = terminal_id(position)
    dropped = 0
    for node in internal:
        if not node.get("anchors") and out_degree.get(node["id"], 0) == 0:
            dropped += 1  # implicit unit
            continue
        mrp_to_node[node["id"]] = f"n{node['id']}"
    if dropped:
        logger.warning("passage %s: dropped %d implicit unit(s)", pid, dropped)
    edges: list[Edge] = []
    for e in doc.get("edges", []):
        if e["source"] not in mrp_to_node or e["target"] not in mrp_to_node:
            continue  # endpoints dropped as implicit
        remote = False
        attributes = e.get("attributes") or []
        values = e.get("values") or []
        for attr, value in zip(attributes, values):
            if attr == "remote" and bool(value):
                remote = True
        cats = _split_categories(e.get("label", ""))
        if not cats:
            raise CorpusFormatError(f"passage {pid}: edge without a label")
        parent, child = mrp_to_node[e["source"]], mrp_to_node[e["target"]]
        edges.append(Edge(parent, child, Category.parse(cats[0]), remote))
        for extra in cats[1:]:
            if remote:
                edges.append(Edge(parent, child, Category.parse(extra), True))
            else:
                logger.warning("passage %s: dropping extra category %s on primary edge",
                               pid, extra)
    tops = doc.get("tops") or []
    if len(tops) != 1 or tops[0] not in mrp_to_node:
        raise CorpusFormatError(f"passage {pid}: expected exactly one known top node")
    nodes = _nodes_of(edges) | {mrp_to_node[tops[0]]}
    graph = UccaGraph(nodes=frozenset(nodes), edges=tuple(edges), root=mrp_to_node[tops[0]])
    return Passage(id=pid, language=doc.get("language", default_language),
                   terminals=tuple(terminals), graph=graph)


# ---------------------------------------------------------------------------
# external per-token vectors


def save_external_vectors(path: str | Path,
                          vectors: dict[tuple[str, int], np.ndarray]) -> None:
    items = sorted(vectors.items())
    if not items:
        raise CorpusFormatError("refusing to write an empty vector file")
    dim = len(items[0][1])
    path = Path(path)
    with path.open("w", encoding="utf8") as fh:
        fh.write(json.dumps({"format": FORMAT_VERSION, "dim": dim}, sort_keys=True))
        fh.write("\n")
        for (pid, position), vec in items:
            if len(vec) != dim:
                raise CorpusFormatError(
                    f"vector for ({pid}, {position}) has dim {len(vec)}, header says {dim}")
            fh.write(f"{pid}\t{position}\t{' '.join(repr(float(x)) for x in vec)}\n")


def load_external_vectors(path: str | Path) -> tuple[int, dict[tuple[str, int], np.ndarray]]:
    """Read the per-token vector file: header line, then one row per token."""
    path = Path(path)
    with path.open(encoding="utf8") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line)
            dim = int(header["dim"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"{path}: malformed vector header") from exc
        out: dict[tuple[str, int], np.ndarray] = {}
        for line_no, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 3:
                raise CorpusFormatError(f"{path}:{line_no}: expected 3 tab-separated fields")
            values = np.array([float(x) for x in parts[2].split()], dtype=np.float64)
            if values.shape[0] != dim:
                raise CorpusFormatError(
                    f"{path}:{line_no}: vector has {values.shape[0]} values, header says {dim}")
            out[(parts[0], int(parts[1]))] = values
    return dim, out


def passage_vectors(passage_id: str, n_tokens: int, dim: int,
                    table: dict[tuple[str, int], np.ndarray]) -> np.ndarray:
    """Stack one vector per token of a passage; every token must be present."""
    rows = []
    for position in range(1, n_tokens + 1):
        key = (passage_id, position)
        if key not in table:
            raise CorpusFormatError(
                f"external vectors missing token {position} of passage {passage_id!r}")
        rows.append(table[key])
    return np.stack(rows) if rows else np.zeros((0, dim))


# ---------------------------------------------------------------------------
# tree files (for the convert command)


def trees_to_file(path: str | Path,
                  entries: Iterable[tuple[str, ConstituencyTree,
                                          list[RemoteRecord], list[DiscontinuityRecord]]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf8") as fh:
        for pid, tree, remotes, disc in entries:
            doc = {
                "format": FORMAT_VERSION,
                "id": pid,
                "n": tree.n,
                "spans": [[i, j, label] for i, j, label in tree.sorted_spans()],
                "remotes": [
                    {"parent_yield": sorted(r.parent_yield),
                     "child_yield": sorted(r.child_yield),
                     "category": r.category.value} for r in remotes
                ],
                "discontinuities": [
                    {"moved_child_yield": sorted(d.moved_child_yield),
                     "original_parent_yield": sorted(d.original_parent_yield),
                     "tag": d.augmentation_tag} for d in disc
                ],
            }
            fh.write(json.dumps(doc, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def trees_from_file(path: str | Path) -> list[tuple[str, ConstituencyTree,
                                                    list[RemoteRecord],
                                                    list[DiscontinuityRecord]]]:
    out = []
    for doc in _iter_documents(Path(path)):
        try:
            tree = ConstituencyTree(
                n=doc["n"],
                spans=frozenset((i, j, label) for i, j, label in doc["spans"]))
            remotes = [RemoteRecord(parent_yield=frozenset(r["parent_yield"]),
                                    child_yield=frozenset(r["child_yield"]),
                                    category=Category.parse(r["category"]))
                       for r in doc.get("remotes", [])]
            disc = [DiscontinuityRecord(moved_child_yield=frozenset(d["moved_child_yield"]),
                                        original_parent_yield=frozenset(d["original_parent_yield"]),
                                        augmentation_tag=d["tag"])
                    for d in doc.get("discontinuities", [])]
        except (KeyError, TypeError) as exc:
            raise CorpusFormatError(f"malformed tree document: {exc}") from exc
        out.append((doc.get("id", "?"), tree, remotes, disc))
    return out


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str | Path, manifest: dict,
                    arrays: dict[str, np.ndarray]) -> None:
    """Write a deterministic binary container: JSON manifest + raw arrays."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    index = []
    offset = 0
    payload = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        raw = arr.tobytes()
        index.append({"name": name, "dtype": str(arr.dtype),
                      "shape": list(arr.shape), "offset": offset, "nbytes": len(raw)})
        payload.append(raw)
        offset += len(raw)
    header = json.dumps({"version": FORMAT_VERSION, "manifest": manifest, "arrays": index},
                        sort_keys=True).encode("utf8")
    with path.open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        for raw in payload:
            fh.write(raw)


def load_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    path = Path(path)
    blob = path.read_bytes()
    if not blob.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    cursor = len(CHECKPOINT_MAGIC)
    (header_len,) = struct.unpack("<Q", blob[cursor:cursor + 8])
    cursor += 8
    try:
        header = json.loads(blob[cursor:cursor + header_len].decode("utf8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: corrupt header") from exc
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {header.get('version')!r}")
    base = cursor + header_len
    arrays: dict[str, np.ndarray] = {}
    for entry in header["arrays"]:
        start = base + entry["offset"]
        stop = start + entry["nbytes"]
        if stop > len(blob):
            raise CheckpointError(f"{path}: truncated array {entry['name']!r}")
        arr = np.frombuffer(blob[start:stop], dtype=np.dtype(entry["dtype"]))
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header["manifest"], arrays


# ---------------------------------------------------------------------------
# corpus statistics


@dataclass(frozen=True)
class CorpusStats:
    unit: str
    passages: int
    tokens: int
    primary_edges: int
    remote_edges: int
    with_remote: int
    with_discontinuity: int

    def to_dict(self) -> dict:
        return {"unit": self.unit, "passages": self.passages, "tokens": self.tokens,
                "primary_edges": self.primary_edges, "remote_edges": self.remote_edges,
                "with_remote": self.with_remote,
                "with_discontinuity": self.with_discontinuity}


def stats_for_passages(unit: str, passages: list[Passage]) -> CorpusStats:
    from .graph import discontinuous_nodes

    primary = remote = with_remote = with_disc = tokens = 0
    for p in passages:
        tokens += p.n_tokens
        if p.graph is None:
            continue
        n_remote = len(p.graph.remote_edges)
        primary += len(p.graph.primary_edges)
        remote += n_remote
        with_remote += 1 if n_remote else 0
        with_disc += 1 if discontinuous_nodes(p.graph) else 0
    return CorpusStats(unit=unit, passages=len(passages), tokens=tokens,
                       primary_edges=primary, remote_edges=remote,
                       with_remote=with_remote, with_discontinuity=with_disc)


def corpus_stats(path: str | Path, strict: bool = False) -> list[CorpusStats]:
    """Per-unit statistics: one row per file or subdirectory of ``path``."""
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"corpus path does not exist: {path}")
    units: list[Path]
    if path.is_dir():
        units = sorted(p for p in path.iterdir()
                       if p.is_dir() or p.suffix in (".json", ".jsonl"))
        if not units:
            return [stats_for_passages(path.name, [])]
    else:
        units = [path]
    return [stats_for_passages(unit.stem if unit.is_file() else unit.name,
                               load_corpus(unit, strict=strict))
            for unit in units]
