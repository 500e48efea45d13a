import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracereform.errors import SelfTalkError
from tracereform.selftalk import (
    ORIGINAL_LIKE,
    REFORMULATED_LIKE,
    SelfTalkLexicon,
    classifier_metrics,
    classify_by_threshold,
    find_selftalk,
    strip_selftalk_baseline,
    term_frequency,
)

from .conftest import FILLER_WORDS, SELFTALK_WORDS, make_text_with_rate
from .oracles import sweep_classifier

LEX = SelfTalkLexicon.default()


# --- find_selftalk -------------------------------------------------------------


def test_direct_hit_span():
    text = "Wait, that is wrong."
    assert find_selftalk(text, LEX) == [(0, 4)]
    assert text[0:4] == "Wait"


def test_substring_never_matches():
    assert find_selftalk("The waiter arrived.", LEX) == []


def test_multiple_hits_enumerated_in_order():
    text = "Hmm, let's see. I think so."
    spans = find_selftalk(text, LEX)
    assert [text[a:b] for a, b in spans] == ["Hmm", "let's", "I"]


def test_spans_align_to_word_boundaries():
    text = "so I said: we, too"
    for start, end in find_selftalk(text, LEX):
        assert start == 0 or not text[start - 1].isalpha()
        assert end == len(text) or not text[end].isalpha()


def test_curly_apostrophe_matches():
    text = "Let’s verify."
    spans = find_selftalk(text, LEX)
    assert [text[a:b] for a, b in spans] == ["Let’s"]


# --- term_frequency --------------------------------------------------------------


def test_frequency_two_in_hundred(rng):
    text = make_text_with_rate(rng, 100, 2)
    report = term_frequency(text, LEX)
    assert (report.hit_count, report.word_count) == (2, 100)
    assert report.frequency == 0.02


def test_frequency_saturation():
    report = term_frequency("wait hmm okay i we", LEX)
    assert report.frequency == 1.0


def test_frequency_empty_text():
    report = term_frequency("", LEX)
    assert (report.hit_count, report.word_count, report.frequency) == (0, 0, 0.0)


def test_symbol_only_tokens_are_not_words():
    report = term_frequency("x = 2 , so", LEX)
    assert report.word_count == 3  # "x", "2", "so"


@given(st.text(alphabet=st.sampled_from(list("hmwait angle. ,")), max_size=80))
@settings(max_examples=200)
def test_frequency_case_invariant(text):
    assert term_frequency(text.lower(), LEX) == term_frequency(text.upper(), LEX)


# --- threshold classification ------------------------------------------------------


def test_high_frequency_is_original_like():
    assert classify_by_threshold(0.029, 0.01) == ORIGINAL_LIKE


def test_low_frequency_is_reformulated_like():
    assert classify_by_threshold(0.004, 0.01) == REFORMULATED_LIKE


def test_tie_goes_to_original_like():
    assert classify_by_threshold(0.01, 0.01) == ORIGINAL_LIKE


# --- classifier metrics --------------------------------------------------------------


def test_perfect_separation():
    scores = [(0.9, ORIGINAL_LIKE), (0.8, ORIGINAL_LIKE), (0.1, REFORMULATED_LIKE)]
    report = classifier_metrics(scores, fpr_budget=0.01)
    assert report.f1 == 1.0
    assert report.tpr_at_fpr == 1.0


def test_overlapping_scores_match_bruteforce_enumeration():
    # positives {0.9, 0.8, 0.3}, negatives {0.4, 0.2, 0.1}: the sweep over all
    # distinct thresholds peaks at 0.3 with TP=3, FP=1 -> F1 = 6/7
    scores = [
        (0.9, ORIGINAL_LIKE), (0.8, ORIGINAL_LIKE), (0.3, ORIGINAL_LIKE),
        (0.4, REFORMULATED_LIKE), (0.2, REFORMULATED_LIKE), (0.1, REFORMULATED_LIKE),
    ]
    oracle_f1, oracle_tpr = sweep_classifier(
        [(v, label == ORIGINAL_LIKE) for v, label in scores], 0.01
    )
    assert oracle_f1 == 6 / 7
    report = classifier_metrics(scores, fpr_budget=0.01)
    assert report.f1 == oracle_f1
    assert report.tpr_at_fpr == oracle_tpr
    assert report.threshold_used == 0.3


def test_single_class_is_roc_undefined():
    with pytest.raises(SelfTalkError, match="ROC undefined"):
        classifier_metrics([(0.5, ORIGINAL_LIKE)], 0.01)


def test_identical_scores_fall_back_to_all_positive_classifier():
    # documented degenerate case: both classes share one score, so the sweep
    # reduces to the all-positive classifier (no error)
    scores = [(0.5, ORIGINAL_LIKE), (0.5, REFORMULATED_LIKE)]
    report = classifier_metrics(scores, 0.01)
    assert report.f1 == pytest.approx(2 / 3)
    assert report.tpr_at_fpr == 0.0  # only the sentinel threshold stays within budget


def test_roc_endpoints_and_order():
    scores = [(0.9, ORIGINAL_LIKE), (0.4, REFORMULATED_LIKE), (0.6, ORIGINAL_LIKE)]
    report = classifier_metrics(scores, 0.5)
    assert report.roc[0] == (0.0, 0.0)
    assert report.roc[-1] == (1.0, 1.0)
    fprs = [f for f, _ in report.roc]
    assert fprs == sorted(fprs)


def test_fpr_budget_validation():
    scores = [(0.9, ORIGINAL_LIKE), (0.1, REFORMULATED_LIKE)]
    with pytest.raises(ValueError):
        classifier_metrics(scores, 0.0)


@given(
    pos=st.lists(st.floats(0, 1), min_size=1, max_size=25),
    neg=st.lists(st.floats(0, 1), min_size=1, max_size=25),
    budget=st.sampled_from([0.01, 0.05, 0.2, 0.5]),
)
@settings(max_examples=200)
def test_metrics_agree_with_bruteforce_oracle(pos, neg, budget):
    scores = [(v, ORIGINAL_LIKE) for v in pos] + [(v, REFORMULATED_LIKE) for v in neg]
    report = classifier_metrics(scores, budget)
    oracle_f1, oracle_tpr = sweep_classifier(
        [(v, label == ORIGINAL_LIKE) for v, label in scores], budget
    )
    assert report.f1 == oracle_f1
    assert report.tpr_at_fpr == oracle_tpr


def test_synthetic_rates_separate_cleanly(rng):
    # keyword rates around 2.9% vs 0.4% with +-0.1% jitter are disjoint, so a
    # threshold sweep attains F1 = 1.0
    scores = []
    for _ in range(20):
        hits = rng.randint(28, 30)  # 2.8%..3.0% of 1000 words
        text = make_text_with_rate(rng, 1000, hits)
        scores.append((term_frequency(text, LEX).frequency, ORIGINAL_LIKE))
    for _ in range(20):
        hits = rng.randint(3, 5)  # 0.3%..0.5%
        text = make_text_with_rate(rng, 1000, hits)
        scores.append((term_frequency(text, LEX).frequency, REFORMULATED_LIKE))
    report = classifier_metrics(scores, fpr_budget=0.01)
    assert report.f1 == 1.0
    assert report.tpr_at_fpr == 1.0


# --- baseline stripper -----------------------------------------------------------------


def test_strip_repairs_sentence_start():
    assert strip_selftalk_baseline("Hmm, so x = 2.", LEX) == "So x = 2."


def test_strip_no_hits_is_identity():
    text = "The value equals 4. Therefore the sum follows."
    assert strip_selftalk_baseline(text, LEX) == text


def test_strip_keeps_content_verbs():
    text = "We wait for results."
    assert strip_selftalk_baseline(text, LEX) == text


def test_strip_requires_trailing_comma():
    text = "Hmm that might be."  # interjection without comma stays
    assert strip_selftalk_baseline(text, LEX) == text


def test_strip_mid_sentence():
    assert strip_selftalk_baseline("The sum, wait, equals 4.", LEX) == "The sum, equals 4."


def test_strip_consecutive_interjections():
    assert strip_selftalk_baseline("Hmm, wait, that's odd.", LEX) == "That's odd."


def test_strip_is_idempotent_examples():
    for text in [
        "Hmm, so x = 2.",
        "Okay, first step. Wait, second thought.",
        "No interjections here.",
    ]:
        once = strip_selftalk_baseline(text, LEX)
        assert strip_selftalk_baseline(once, LEX) == once


@st.composite
def _selftalk_text(draw):
    words = draw(
        st.lists(
            st.sampled_from(FILLER_WORDS + SELFTALK_WORDS + ["Hmm,", "Wait,", "okay,"]),
            min_size=0,
            max_size=30,
        )
    )
    return " ".join(words)


@given(text=_selftalk_text())
@settings(max_examples=200)
def test_strip_idempotent_and_frequency_nonincreasing(text):
    once = strip_selftalk_baseline(text, LEX)
    assert strip_selftalk_baseline(once, LEX) == once
    assert term_frequency(once, LEX).frequency <= term_frequency(text, LEX).frequency


# --- lexicon loading ---------------------------------------------------------------------


def test_default_lexicon_contents():
    assert {"hmm", "wait", "let's", "i", "we"} <= LEX.keywords
    assert LEX.interjections == {"hmm", "wait", "okay", "oh", "alright"}


def test_lexicon_from_file(tmp_path):
    path = tmp_path / "lex.txt"
    path.write_text("# comment\nHmm\nwait  # trailing\n\nCustomWord\n")
    lex = SelfTalkLexicon.from_file(path)
    assert lex.keywords == {"hmm", "wait", "customword"}


def test_lexicon_validation():
    with pytest.raises(SelfTalkError):
        SelfTalkLexicon(frozenset())
    with pytest.raises(SelfTalkError):
        SelfTalkLexicon(frozenset({"Hmm"}))
    with pytest.raises(SelfTalkError):
        SelfTalkLexicon(frozenset({"two words"}))
