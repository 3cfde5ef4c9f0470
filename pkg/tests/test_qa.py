import itertools
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import oracle_edit_distance
from speechforge.qa import (
    DEFAULT_THRESHOLDS,
    EditCounts,
    dialogue_rate,
    edit_counts,
    evaluate_dialogue,
    normalize_text,
    passes_gate,
    qa_filter,
    score_turn,
    tokens,
)
from test_records import two_turn_record


class TestNormalization:
    def test_nfkc_folds_fullwidth(self):
        assert normalize_text("Ｈｅｌｌｏ", "en") == "hello"

    def test_english_lowercased(self):
        assert normalize_text("Hello World", "en") == "hello world"

    def test_chinese_not_case_touched(self):
        assert normalize_text("今天天气", "zh") == "今天天气"

    def test_english_digits_become_words(self):
        assert normalize_text("call 911 now", "en") == "call nine one one now"

    def test_english_digits_split_from_letters(self):
        assert normalize_text("7pm", "en") == "seven pm"

    def test_multidigit_read_digit_by_digit(self):
        assert normalize_text("2023", "en") == "two zero two three"

    def test_chinese_digits_inline(self):
        assert normalize_text("7点开会", "zh") == "七点开会"
        assert normalize_text("23号", "zh") == "二三号"

    def test_punctuation_removed(self):
        assert normalize_text("hello, world!", "en") == "hello world"
        assert normalize_text("今天，很好。", "zh") == "今天 很好"

    def test_symbols_removed(self):
        assert normalize_text("cost: $5 + tax", "en") == "cost five tax"

    def test_apostrophe_is_boundary(self):
        assert normalize_text("don't", "en") == "don t"

    def test_whitespace_collapsed(self):
        assert normalize_text("  a \t b\n\nc ", "en") == "a b c"

    def test_fullwidth_digit_normalized_then_verbalized(self):
        assert normalize_text("７", "zh") == "七"


class TestTokens:
    def test_chinese_tokens_are_codepoints(self):
        assert tokens("今天好", "zh") == ["今", "天", "好"]

    def test_chinese_tokens_skip_spaces(self):
        assert tokens("今天，很好", "zh") == ["今", "天", "很", "好"]

    def test_english_tokens_are_words(self):
        assert tokens("Hello, World", "en") == ["hello", "world"]


class TestEditCounts:
    def test_identity(self):
        assert edit_counts("abc", "abc") == EditCounts(0, 0, 0)

    def test_pure_insertions(self):
        assert edit_counts("", "ab") == EditCounts(0, 0, 2)

    def test_pure_deletions(self):
        assert edit_counts("ab", "") == EditCounts(0, 2, 0)

    def test_kitten_sitting(self):
        c = edit_counts("kitten", "sitting")
        assert c.total == 3
        assert (c.substitutions, c.deletions, c.insertions) == (2, 0, 1)

    def test_tie_prefers_substitution(self):
        # "ab" -> "ba" costs 2 either as two substitutions or as
        # delete+insert; the backtrace must pick substitutions
        assert edit_counts("ab", "ba") == EditCounts(2, 0, 0)

    def test_works_on_word_lists(self):
        c = edit_counts(["the", "cat", "sat"], ["the", "bat", "sat", "down"])
        assert (c.substitutions, c.deletions, c.insertions) == (1, 0, 1)

    def test_exhaustive_small_alphabet_matches_oracle(self):
        alphabet = "ab"
        words = [""]
        for n in range(1, 5):
            words += ["".join(p) for p in itertools.product(alphabet, repeat=n)]
        for ref in words:
            for hyp in words:
                assert edit_counts(ref, hyp).total == oracle_edit_distance(ref, hyp)

    @given(st.text("abcde", max_size=12), st.text("abcde", max_size=12))
    @settings(max_examples=200, deadline=None)
    def test_random_pairs_match_oracle(self, ref, hyp):
        assert edit_counts(ref, hyp).total == oracle_edit_distance(ref, hyp)

    @given(st.text("abc", max_size=10), st.text("abc", max_size=10))
    @settings(max_examples=100, deadline=None)
    def test_swap_swaps_deletions_insertions(self, a, b):
        ab = edit_counts(a, b)
        ba = edit_counts(b, a)
        assert ab.total == ba.total
        assert ab.deletions == ba.insertions
        assert ab.insertions == ba.deletions


class TestRates:
    def test_turn_rate(self):
        s = score_turn("hello world", "hello word", "en")
        assert s.ref_len == 2
        assert s.rate == 0.5

    def test_zh_rate_per_codepoint(self):
        s = score_turn("今天天气很好", "今天天气很糟", "zh")
        assert s.ref_len == 6
        assert s.rate == pytest.approx(1 / 6)

    def test_normalization_applied_before_scoring(self):
        s = score_turn("It costs $5.", "it costs five", "en")
        assert s.rate == 0.0

    def test_empty_ref_nonempty_hyp_is_infinite(self):
        assert math.isinf(score_turn("", "word", "en").rate)

    def test_empty_both_is_zero(self):
        assert score_turn("", "", "en").rate == 0.0

    def test_micro_average_weights_by_length(self):
        s1 = score_turn("a b c d e f g h i j", "a b c d e f g h i x", "en")
        s2 = score_turn(" ".join(["w"] * 30), " ".join(["w"] * 30), "en")
        assert s1.rate == pytest.approx(0.1)
        assert dialogue_rate([s1, s2]) == pytest.approx(1 / 40)


class TestGate:
    def test_thresholds(self):
        assert DEFAULT_THRESHOLDS == {"zh": 0.05, "en": 0.10}

    def test_rate_at_threshold_passes(self):
        assert passes_gate(0.05, "zh")
        assert passes_gate(0.10, "en")

    def test_rate_above_threshold_fails(self):
        assert not passes_gate(0.05 + 1e-9, "zh")
        assert not passes_gate(0.10 + 1e-9, "en")

    def test_custom_thresholds(self):
        assert passes_gate(0.5, "en", {"en": 0.5, "zh": 0.5})


class TestDialogueFilter:
    def test_perfect_transcripts_kept(self):
        rec = two_turn_record()
        qa = evaluate_dialogue(rec, [t.text for t in rec.dialog])
        assert qa.kept
        assert qa.rate == 0.0
        assert qa.language == "zh"

    def test_garbled_transcripts_discarded(self):
        rec = two_turn_record()
        qa = evaluate_dialogue(rec, ["完全不同的句子", "这也不一样啊这也不一样啊"])
        assert not qa.kept
        assert qa.rate > 0.05

    def test_hypothesis_count_must_match_turns(self):
        rec = two_turn_record()
        with pytest.raises(ValueError):
            evaluate_dialogue(rec, ["只有一句"])

    def test_filter_report(self):
        rec = two_turn_record()

        def perfect(r):
            return [t.text for t in r.dialog]

        def garbled(r):
            return ["x" * max(1, len(t.text)) for t in r.dialog]

        report = qa_filter([rec], perfect)
        assert report.kept_ids == [rec.id]
        assert report.kept_fraction == 1.0

        report = qa_filter([rec], garbled)
        assert report.discarded_ids == [rec.id]
        assert report.kept_fraction == 0.0

    def test_empty_report(self):
        report = qa_filter([], lambda r: [])
        assert report.kept_fraction == 1.0
        assert report.kept_ids == []
