"""Shared fixture data: reference-scored excerpt pairs, a worked trace
rewrite, and synthetic corpus builders."""

from __future__ import annotations

import random

import pytest

from tracereform.corpus import TraceRecord

# Hand-labeled (reference score, original step, matched rewritten part)
# triples; the published reference scores carry unknown text normalization, so
# checks use a +-0.07 band.
REFERENCE_PAIRS = [
    (
        0.63,
        "But wait, let me verify this again to be sure. Because sometimes with clock angle "
        "problems, there can be another instance where the angle is 110 degrees, but depending "
        "on the direction (whether the minute hand is ahead or behind the hour hand). Let me think.",
        "Verification is necessary to ensure accuracy, as there can be another instance where "
        "the angle is 110 degrees, depending on the direction of the hands. The formula "
        "|30H - 5.5M| provides the absolute angle between the two hands.",
    ),
    (
        0.75,
        "Okay, let me try to figure out this problem. So, we have a set of consecutive positive "
        "integers starting from 1, and one number is erased. The average of the remaining numbers "
        "is 35 and 7/17. We need to find out which number was erased. The options are from 6 to 9, "
        "or cannot be determined. Hmm.",
        "The problem involves a set of consecutive positive integers starting from 1, with one "
        "number erased. The average of the remaining numbers is 35 and 7/17. The objective is to "
        "identify the erased number. The options range from 6 to 9, or indicate that the number "
        "cannot be determined.",
    ),
    (
        0.81,
        "Wait, just to be thorough, let's make sure none of the other options could work. Let's "
        "check option E: y = 10^x. If we take x = 0, then y = 1, which would correspond to the "
        "rotated point (0,1), which is correct. But let's take another point. If x = -1, "
        "y = 10^(-1) = 0.1, but according to G', when x = -1, y should be 10. But according to "
        "option E, y = 10^(-1) = 0.1, which is wrong. So E is out. Option D, as we saw, gives "
        "y = 10^1 = 10 when x = -1, which is correct.",
        "Check option E: y = 10^x. Taking x = 0, then y = 1, which would correspond to the "
        "rotated point (0,1), which is correct. However, taking another point: if x = -1, "
        "y = 10^(-1) = 0.1, but according to G', when x = -1, y should be 10. According to "
        "option E, y = 10^(-1) = 0.1, which is wrong. Thus, E is out. Option D gives "
        "y = 10^1 = 10 when x = -1, which is correct.",
    ),
    (
        0.96,
        "So Thuy is 21, Kareem 22. So Kareem is indeed higher than Thuy, and Jose is the lowest "
        "of the three. Wait, but Thuy is 21, Jose is 20, Kareem 22. So the order from highest to "
        "lowest is Kareem, Thuy, Jose. So the largest is Kareem. Therefore, answer C.",
        "So Thuy is 21, Kareem 22. So Kareem is indeed higher than Thuy, and Jose is the lowest "
        "of the three. Thuy is 21, Jose is 20, Kareem 22. So the order from highest to lowest is "
        "Kareem, Thuy, Jose. So the largest is Kareem. Therefore, answer C.",
    ),
]

# A worked original/rewritten trace pair (transceiver communication problem);
# the rewrite moves the goal statement to the front of its paragraph.
COMM_TRACE_ORIGINAL = """Okay, let's see. I need to solve this problem where three people (Chef, head server, sous-chef) have transceivers that can communicate directly if within R meters. If not, but there's a third person acting as a bridge, then they can still communicate. The goal is to check if all three can communicate with each other, possibly through the third.

Hmm. So for each test case, given R and three points, determine if the three form a connected graph where each pair is either directly connected (distance <= R) or connected via the third.

Wait, but how exactly? Let's think. The communication can go through one intermediary. So all three must be in a chain where each consecutive pair is within R, or perhaps any two are connected via a path through the third."""

COMM_TRACE_REWRITTEN = """The goal is to check if all three can communicate with each other, possibly through the third. The problem involves three people (Chef, head server, sous-chef) who have transceivers that can communicate directly if within R meters. If not, but there's a third person acting as a bridge, then they can still communicate.

For each test case, given R and three points, it is necessary to determine if the three form a connected graph where each pair is either directly connected (distance <= R) or connected via the third.

The condition is that all three can communicate with each other, possibly through one another. The communication can go through one intermediary. Therefore, all three must be in a chain where each consecutive pair is within R, or any two are connected via a path through the third."""

COMM_SUB_CONCLUSION = (
    "The goal is to check if all three can communicate with each other, "
    "possibly through the third."
)

# filler vocabulary guaranteed disjoint from the default self-talk lexicon
FILLER_WORDS = [
    "the", "value", "equals", "therefore", "compute", "result", "sum",
    "factor", "term", "equation", "holds", "because", "number", "divides",
    "remainder", "proof", "follows", "step", "yields", "total",
]

SELFTALK_WORDS = ["hmm", "wait", "okay", "i", "we"]


def make_text_with_rate(rng: random.Random, n_words: int, n_hits: int) -> str:
    """A text of exactly n_words word tokens, n_hits of them lexicon words."""
    words = [rng.choice(FILLER_WORDS) for _ in range(n_words - n_hits)]
    words += [rng.choice(SELFTALK_WORDS) for _ in range(n_hits)]
    rng.shuffle(words)
    return " ".join(words)


def make_records(n: int, rng: random.Random | None = None) -> list[TraceRecord]:
    """Small synthetic trace corpus with multi-step reasoning."""
    rng = rng or random.Random(0)
    records = []
    for i in range(n):
        a = rng.randint(2, 9)
        b = rng.randint(2, 9)
        reasoning = (
            f"Okay, let's work case {i}. First take {a} and double it to get {2 * a}.\n\n"
            f"Hmm, now multiply by {b}. The result is {2 * a * b}. "
            f"Wait, that matches the direct product {a} * {2 * b}."
        )
        records.append(
            TraceRecord(
                id=f"rec-{i:03d}",
                query=f"Case {i}: what is {2 * a} times {b}?",
                reasoning=reasoning,
                answer=str(2 * a * b),
            )
        )
    return records


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)
