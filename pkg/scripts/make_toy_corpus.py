#!/usr/bin/env python3
"""Regenerate the bundled toy corpus (deterministic, hand-specified).

Ten short English passages over a small vocabulary; three contain remote
edges and two contain discontinuous units, so every structural code path
is exercised by overfit runs.
"""

from __future__ import annotations

import sys
from pathlib import Path

from uccaparser.graph import Passage, Terminal, make_graph, validate_graph, discontinuous_nodes
from uccaparser.conversion import graph_to_tree, tree_to_graph
from uccaparser.graph import graph_signature
from uccaparser import io as uio


def toks(rows):
    return tuple(Terminal(position=i + 1, surface=s, pos_tag=p, dep_label=d,
                          entity_type=e, entity_iob=b)
                 for i, (s, p, d, e, b) in enumerate(rows))


def passage(pid, rows, edges, root="root"):
    return Passage(id=pid, language="en", terminals=toks(rows),
                   graph=make_graph(edges, root))


PASSAGES = [
    # 1. remote: second scene shares "He" as participant
    passage("toy-01", [
        ("He", "PRON", "nsubj", "", "O"), ("tied", "VERB", "root", "", "O"),
        ("a", "DET", "det", "", "O"), ("sheet", "NOUN", "obj", "", "O"),
        ("and", "CCONJ", "cc", "", "O"), ("hanged", "VERB", "conj", "", "O"),
        ("himself", "PRON", "obj", "", "O"), (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t5", "L"), ("root", "s2", "H"), ("root", "t8", "U"),
        ("s1", "t1", "A"), ("s1", "t2", "P"),
        ("s1", "u1", "A"), ("u1", "t3", "E"), ("u1", "t4", "C"),
        ("s2", "t6", "P"), ("s2", "t7", "A"), ("s2", "t1", "A", True),
    ]),
    # 2. discontinuity: particle verb "picked ... up"
    passage("toy-02", [
        ("Mary", "PROPN", "nsubj", "PER", "B"), ("picked", "VERB", "root", "", "O"),
        ("the", "DET", "det", "", "O"), ("box", "NOUN", "obj", "", "O"),
        ("up", "ADP", "compound", "", "O"), ("quickly", "ADV", "advmod", "", "O"),
        (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t7", "U"),
        ("s1", "t1", "A"), ("s1", "v1", "P"), ("v1", "t2", "C"), ("v1", "t5", "C"),
        ("s1", "u1", "A"), ("u1", "t3", "E"), ("u1", "t4", "C"),
        ("s1", "t6", "D"),
    ]),
    # 3. coordination of centers
    passage("toy-03", [
        ("John", "PROPN", "nsubj", "PER", "B"), ("and", "CCONJ", "cc", "", "O"),
        ("Mary", "PROPN", "conj", "PER", "B"), ("laughed", "VERB", "root", "", "O"),
        (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t5", "U"),
        ("s1", "u1", "A"), ("u1", "t1", "C"), ("u1", "t2", "N"), ("u1", "t3", "C"),
        ("s1", "t4", "P"),
    ]),
    # 4. ditransitive with an elaborated object
    passage("toy-04", [
        ("She", "PRON", "nsubj", "", "O"), ("gave", "VERB", "root", "", "O"),
        ("him", "PRON", "iobj", "", "O"), ("the", "DET", "det", "", "O"),
        ("old", "ADJ", "amod", "", "O"), ("book", "NOUN", "obj", "", "O"),
        (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t7", "U"),
        ("s1", "t1", "A"), ("s1", "t2", "P"), ("s1", "t3", "A"),
        ("s1", "u1", "A"), ("u1", "t4", "E"), ("u1", "t5", "E"), ("u1", "t6", "C"),
    ]),
    # 5. grounding adverb over a weather scene
    passage("toy-05", [
        ("Surprisingly", "ADV", "advmod", "", "O"), (",", "PUNCT", "punct", "", "O"),
        ("it", "PRON", "expl", "", "O"), ("rained", "VERB", "root", "", "O"),
        (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "t1", "G"), ("root", "t2", "U"), ("root", "s1", "H"), ("root", "t5", "U"),
        ("s1", "t3", "F"), ("s1", "t4", "P"),
    ]),
    # 6. two remotes: shared participant in an embedded scene and a conjunct
    passage("toy-06", [
        ("He", "PRON", "nsubj", "", "O"), ("tried", "VERB", "root", "", "O"),
        ("to", "PART", "mark", "", "O"), ("sleep", "VERB", "xcomp", "", "O"),
        ("and", "CCONJ", "cc", "", "O"), ("failed", "VERB", "conj", "", "O"),
        (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t5", "L"), ("root", "s2", "H"), ("root", "t7", "U"),
        ("s1", "t1", "A"), ("s1", "t2", "D"), ("s1", "e1", "P"),
        ("e1", "t3", "F"), ("e1", "t4", "C"),
        ("s2", "t6", "P"), ("s2", "t1", "A", True),
    ]),
    # 7. relational modifier "at night"
    passage("toy-07", [
        ("The", "DET", "det", "", "O"), ("dog", "NOUN", "nsubj", "", "O"),
        ("barked", "VERB", "root", "", "O"), ("loudly", "ADV", "advmod", "", "O"),
        ("at", "ADP", "case", "", "O"), ("night", "NOUN", "obl", "", "O"),
        (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t7", "U"),
        ("s1", "u1", "A"), ("u1", "t1", "E"), ("u1", "t2", "C"),
        ("s1", "t3", "P"), ("s1", "t4", "D"),
        ("s1", "u2", "D"), ("u2", "t5", "R"), ("u2", "t6", "C"),
    ]),
    # 8. discontinuity and a remote in one passage
    passage("toy-08", [
        ("She", "PRON", "nsubj", "", "O"), ("turned", "VERB", "root", "", "O"),
        ("the", "DET", "det", "", "O"), ("lamp", "NOUN", "obj", "", "O"),
        ("off", "ADP", "compound", "", "O"), ("and", "CCONJ", "cc", "", "O"),
        ("left", "VERB", "conj", "", "O"), (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t6", "L"), ("root", "s2", "H"), ("root", "t8", "U"),
        ("s1", "t1", "A"), ("s1", "v1", "P"), ("v1", "t2", "C"), ("v1", "t5", "C"),
        ("s1", "u1", "A"), ("u1", "t3", "E"), ("u1", "t4", "C"),
        ("s2", "t7", "P"), ("s2", "t1", "A", True),
    ]),
    # 9. copular state
    passage("toy-09", [
        ("Is", "AUX", "cop", "", "O"), ("he", "PRON", "nsubj", "", "O"),
        ("okay", "ADJ", "root", "", "O"), ("?", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t4", "U"),
        ("s1", "t1", "F"), ("s1", "t2", "A"), ("s1", "t3", "S"),
    ]),
    # 10. plain intransitive
    passage("toy-10", [
        ("They", "PRON", "nsubj", "", "O"), ("ate", "VERB", "root", "", "O"),
        ("quietly", "ADV", "advmod", "", "O"), (".", "PUNCT", "punct", "", "O"),
    ], [
        ("root", "s1", "H"), ("root", "t4", "U"),
        ("s1", "t1", "A"), ("s1", "t2", "P"), ("s1", "t3", "D"),
    ]),
]


def main() -> int:
    out_dir = Path(__file__).resolve().parent.parent / "src" / "uccaparser" / "data" / "toy"
    out_dir.mkdir(parents=True, exist_ok=True)
    n_remote = n_disc = 0
    for p in PASSAGES:
        report = validate_graph(p.graph, p.n_tokens)
        assert report.is_valid, (p.id, report.violations)
        assert p.n_tokens <= 12, p.id
        tree, remotes, disc = graph_to_tree(p.graph)
        back = tree_to_graph(tree, remotes, disc)
        assert graph_signature(back) == graph_signature(p.graph), p.id
        n_remote += 1 if remotes else 0
        n_disc += 1 if discontinuous_nodes(p.graph) else 0
    assert len(PASSAGES) == 10 and n_remote >= 3 and n_disc >= 2, (n_remote, n_disc)
    uio.save_corpus(PASSAGES, out_dir / "train.jsonl")
    print(f"wrote {len(PASSAGES)} passages ({n_remote} with remotes, "
          f"{n_disc} with discontinuities) to {out_dir / 'train.jsonl'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
