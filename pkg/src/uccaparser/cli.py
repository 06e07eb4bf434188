"""Command-line front door: validate, convert, train, parse, evaluate, stats.

Every command is a thin shell over the library operations; commands exit 0
on success and nonzero with an ``error:`` line on stderr otherwise.  The
global ``--seed`` flag overrides the config seed for ``train``;
``--threads`` bounds per-passage parallelism for ``parse`` and
``evaluate`` (default from ``UCCAPARSER_THREADS``, else 1).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import io as uio
from .conversion import graph_to_tree, tree_to_graph
from .errors import UccaParserError
from .evaluation import evaluate_pairs
from .graph import Passage, validate_graph
from .pipeline import ParserModel
from .training import TrainConfig, train

logger = logging.getLogger(__name__)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uccaparser",
        description="UCCA parsing toolkit: graph/tree conversion, training, "
                    "parsing and mutual-edge evaluation.")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured random seed")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("UCCAPARSER_THREADS", "1")),
                        help="worker threads for parse/evaluate")
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check every graph in a corpus")
    p.add_argument("corpus")

    p = sub.add_parser("convert", help="convert between graphs and trees")
    p.add_argument("corpus")
    p.add_argument("--direction", choices=("graph2tree", "tree2graph"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true",
                   help="fail instead of warning on unmatchable records")

    p = sub.add_parser("train", help="train a parser from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--log-out", default=None, help="write the training log as JSON")

    p = sub.add_parser("parse", help="parse a corpus with a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-remotes", action="store_true",
                   help="skip remote edge recovery")
    p.add_argument("--external-vectors", default=None,
                   help="per-token vector file for models trained with one")

    p = sub.add_parser("evaluate", help="score predictions against gold graphs")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--breakdown", default="",
                   help="comma-separated subset of {length, category}")
    p.add_argument("--json", action="store_true", dest="as_json")

    p = sub.add_parser("stats", help="corpus statistics per file or subdirectory")
    p.add_argument("corpus")
    p.add_argument("--json", action="store_true", dest="as_json")
    return parser


def cmd_validate(args) -> int:
    passages = uio.load_corpus(args.corpus, strict=False)
    bad = 0
    for p in passages:
        if p.graph is None:
            print(f"{p.id}: no graph")
            continue
        report = validate_graph(p.graph, p.n_tokens)
        if not report.is_valid:
            bad += 1
            for violation in report.violations:
                print(f"{p.id}: {violation}")
    print(f"checked {len(passages)} passages, {bad} invalid")
    return 0 if bad == 0 else 1


def cmd_convert(args) -> int:
    if args.direction == "graph2tree":
        passages = uio.load_corpus(args.corpus, strict=args.strict)
        entries = []
        for p in passages:
            if p.graph is None:
                logger.warning("passage %s has no graph; skipping", p.id)
                continue
            tree, remotes, disc = graph_to_tree(p.graph)
            entries.append((p.id, tree, remotes, disc))
        uio.trees_to_file(args.out, entries)
        print(f"wrote {len(entries)} trees to {args.out}")
        return 0
    entries = uio.trees_from_file(args.corpus)
    passages = []
    for pid, tree, remotes, disc in entries:
        graph = tree_to_graph(tree, remotes, disc, strict=args.strict)
        terminals = tuple(
            _terminal_placeholder(position) for position in range(1, tree.n + 1))
        passages.append(Passage(id=pid, language="und", terminals=terminals, graph=graph))
    uio.save_corpus(passages, args.out)
    print(f"wrote {len(passages)} graphs to {args.out}")
    return 0


def _terminal_placeholder(position: int):
    from .graph import Terminal

    return Terminal(position=position, surface=f"<tok{position}>")


def cmd_train(args) -> int:
    with open(args.config, encoding="utf8") as fh:
        config_dict = json.load(fh)
    if args.seed is not None:
        config_dict["seed"] = args.seed
    config = TrainConfig.from_dict(config_dict)
    result = train(config)
    result.model.save(args.out)
    log_path = args.log_out or (args.out + ".log.json")
    with open(log_path, "w", encoding="utf8") as fh:
        json.dump(result.log.to_dict(), fh, sort_keys=True, indent=2)
    best = result.log.best_val_f1
    print(f"trained {len(result.log.epochs)} epochs, "
          f"best validation labeled F1 {best:.4f} at epoch {result.log.best_epoch}")
    print(f"checkpoint: {args.out}")
    print(f"log: {log_path}")
    return 0


def cmd_parse(args) -> int:
    model = ParserModel.load(args.checkpoint)
    passages = uio.load_corpus(args.input, strict=False)
    vectors = None
    if args.external_vectors:
        _, vectors = uio.load_external_vectors(args.external_vectors)

    def external_for(p: Passage):
        if model.encoder.external_dim == 0:
            return None
        return uio.passage_vectors(p.id, p.n_tokens, model.encoder.external_dim,
                                   vectors or {})

    def parse_one(p: Passage) -> Passage:
        graph = model.parse_passage(p, external=external_for(p),
                                    with_remotes=not args.no_remotes)
        return Passage(id=p.id, language=p.language, terminals=p.terminals, graph=graph)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            parsed = list(pool.map(parse_one, passages))
    else:
        parsed = [parse_one(p) for p in passages]
    uio.save_corpus(parsed, args.out)
    print(f"parsed {len(parsed)} passages to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    pred = {p.id: p for p in uio.load_corpus(args.pred, strict=False)}
    gold = {p.id: p for p in uio.load_corpus(args.gold, strict=False)}
    missing = sorted(set(gold) - set(pred))
    if missing:
        raise UccaParserError(f"predictions missing for passages: {missing[:5]}")
    breakdown = {b.strip() for b in args.breakdown.split(",") if b.strip()}
    unknown = breakdown - {"length", "category"}
    if unknown:
        raise UccaParserError(f"unknown breakdown keys: {sorted(unknown)}")

    def pair(pid: str):
        if pred[pid].graph is None or gold[pid].graph is None:
            raise UccaParserError(f"passage {pid} lacks a graph on one side")
        return pred[pid].graph, gold[pid].graph

    ids = sorted(gold)
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            pairs = list(pool.map(pair, ids))
    else:
        pairs = [pair(pid) for pid in ids]
    report = evaluate_pairs(pairs,
                            breakdown_lengths="length" in breakdown,
                            breakdown_categories="category" in breakdown)
    if args.as_json:
        print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    else:
        print(report.to_text())
    return 0


def cmd_stats(args) -> int:
    rows = uio.corpus_stats(args.corpus)
    if args.as_json:
        print(json.dumps([r.to_dict() for r in rows], sort_keys=True, indent=2))
        return 0
    header = (f"{'unit':<16} {'passages':>8} {'tokens':>8} {'primary':>8} "
              f"{'remote':>7} {'w/rem':>6} {'w/disc':>7}")
    print(header)
    for r in rows:
        print(f"{r.unit:<16} {r.passages:>8} {r.tokens:>8} {r.primary_edges:>8} "
              f"{r.remote_edges:>7} {r.with_remote:>6} {r.with_discontinuity:>7}")
    return 0


COMMANDS = {
    "validate": cmd_validate,
    "convert": cmd_convert,
    "train": cmd_train,
    "parse": cmd_parse,
    "evaluate": cmd_evaluate,
    "stats": cmd_stats,
}


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UccaParserError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
