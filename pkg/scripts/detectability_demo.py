#!/usr/bin/env python3
"""Detectability demo: original-style traces carry self-talk keywords at
around 2.9% term frequency while rewritten ones sit near 0.4%. With that
separation even a bare threshold on the keyword frequency classifies
perfectly; this script reproduces the sweep on synthetic texts and prints the
resulting report.

    python3 scripts/detectability_demo.py --per-class 50
"""

import argparse
import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from tracereform.selftalk import (
    ORIGINAL_LIKE,
    REFORMULATED_LIKE,
    SelfTalkLexicon,
    classifier_metrics,
    term_frequency,
)

FILLERS = [
    "the", "value", "equals", "therefore", "compute", "result", "sum",
    "factor", "term", "equation", "holds", "because", "number", "divides",
]
KEYWORDS = ["hmm", "wait", "okay", "i", "we"]


def synth_text(rng: random.Random, n_words: int, n_hits: int) -> str:
    words = [rng.choice(FILLERS) for _ in range(n_words - n_hits)]
    words += [rng.choice(KEYWORDS) for _ in range(n_hits)]
    rng.shuffle(words)
    return " ".join(words)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--per-class", type=int, default=50)
    parser.add_argument("--words", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--fpr", type=float, default=0.01)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    lexicon = SelfTalkLexicon.default()
    scored = []
    for _ in range(args.per_class):
        # 2.9% +- 0.1% of the words are self-talk keywords
        hits = rng.randint(round(0.028 * args.words), round(0.030 * args.words))
        text = synth_text(rng, args.words, hits)
        scored.append((term_frequency(text, lexicon).frequency, ORIGINAL_LIKE))
    for _ in range(args.per_class):
        # 0.4% +- 0.1% after rewriting
        hits = rng.randint(round(0.003 * args.words), round(0.005 * args.words))
        text = synth_text(rng, args.words, hits)
        scored.append((term_frequency(text, lexicon).frequency, REFORMULATED_LIKE))

    report = classifier_metrics(scored, fpr_budget=args.fpr)
    print(json.dumps({
        "n_scored": len(scored),
        "f1": report.f1,
        "tpr_at_fpr": report.tpr_at_fpr,
        "fpr_budget": report.fpr_budget,
        "threshold_used": report.threshold_used,
    }, indent=2))


if __name__ == "__main__":
    main()
