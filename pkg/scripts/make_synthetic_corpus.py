#!/usr/bin/env python3
"""Generate a small synthetic reasoning-trace corpus.

Each record carries a multi-step trace written in a self-talk style (first
person, interjections) so the downstream rewrite/detect tooling has realistic
structure to chew on. Useful for exercising the CLI without real model
outputs:

    python3 scripts/make_synthetic_corpus.py --n 50 --out corpus.jsonl
"""

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from tracereform.corpus import TraceRecord, save_corpus

OPENERS = ["Okay, let's see.", "Hmm, let me think.", "Alright, starting over.", "Wait, let's be careful."]
CHECKS = ["Wait, double-check that.", "Hmm, does that hold?", "Okay, that looks right."]


def build_record(i: int, rng: random.Random) -> TraceRecord:
    a, b, c = rng.randint(2, 12), rng.randint(2, 12), rng.randint(1, 9)
    product = a * b
    total = product + c
    reasoning = (
        f"{rng.choice(OPENERS)} I need to find {a} * {b} + {c} for case {i}. "
        f"First I'll compute the product. {a} * {b} = {product}.\n\n"
        f"{rng.choice(CHECKS)} Adding {c} gives {product} + {c} = {total}. "
        f"So the final value is {total}.\n\n"
        f"Let's confirm: {total} - {c} = {product}, and {product} / {a} = {b}. "
        f"Therefore the answer is {total}."
    )
    return TraceRecord(
        id=f"syn-{i:04d}",
        query=f"Case {i}: compute {a} * {b} + {c}.",
        reasoning=reasoning,
        answer=str(total),
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=20, help="number of records")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True, help="output corpus path (JSONL)")
    args = parser.parse_args()

    rng = random.Random(args.seed)
    records = [build_record(i, rng) for i in range(args.n)]
    save_corpus(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")


if __name__ == "__main__":
    main()
