"""Transcript quality gating.

Synthesized dialogue audio is transcribed back to text; a dialogue is kept
only if its transcript error rate stays within the per-language threshold
(character error rate for zh at 5%, word error rate for en at 10%,
micro-averaged over the dialogue's turns).  Rates exactly at the threshold
pass; only exceeding it discards.

Both reference and hypothesis go through the same normalization before
comparison: NFKC, en lowercasing, digit verbalization (en digit words with
space padding, zh numerals inline), punctuation and symbol removal,
whitespace collapse.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from .records import DialogueRecord

DEFAULT_THRESHOLDS = {"zh": 0.05, "en": 0.10}

_EN_DIGITS = {
    "0": "zero", "1": "one", "2": "two", "3": "three", "4": "four",
    "5": "five", "6": "six", "7": "seven", "8": "eight", "9": "nine",
}
_ZH_DIGITS = "零一二三四五六七八九"


def normalize_text(text: str, language: str) -> str:
    text = unicodedata.normalize("NFKC", text)
    if language == "en":
        text = text.lower()
    out = []
    for ch in text:
        if "0" <= ch <= "9":
            if language == "zh":
                out.append(_ZH_DIGITS[ord(ch) - ord("0")])
            else:
                out.append(f" {_EN_DIGITS[ch]} ")
        elif unicodedata.category(ch)[0] in "PS":
            out.append(" ")  # punctuation becomes a token boundary, not a join
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def tokens(text: str, language: str) -> list[str]:
    """Comparison units: codepoints for zh, whitespace words for en."""
    norm = normalize_text(text, language)
    if language == "zh":
        return [c for c in norm if not c.isspace()]
    return norm.split()


@dataclass(frozen=True)
class EditCounts:
    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def edit_counts(ref: Sequence, hyp: Sequence) -> EditCounts:
    """Minimal edit operations turning ref into hyp.

    When several minimal alignments exist the backtrace prefers substitution
    over deletion over insertion, so the split into S/D/I is deterministic.
    """
    n, m = len(ref), len(hyp)
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
    cost[0] = list(range(m + 1))
    for i in range(1, n + 1):
        row = cost[i]
        prev = cost[i - 1]
        r = ref[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (r != hyp[j - 1]),
                         prev[j] + 1,
                         row[j - 1] + 1)
    subs = dels = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and cost[i][j] == cost[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            subs += ref[i - 1] != hyp[j - 1]
            i -= 1
            j -= 1
        elif i > 0 and cost[i][j] == cost[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditCounts(subs, dels, ins)


def _rate(total_edits: int, ref_len: int) -> float:
    if ref_len == 0:
        return 0.0 if total_edits == 0 else float("inf")
    return total_edits / ref_len


@dataclass(frozen=True)
class TurnScore:
    ref_len: int
    counts: EditCounts

    @property
    def rate(self) -> float:
        return _rate(self.counts.total, self.ref_len)


def score_turn(ref_text: str, hyp_text: str, language: str) -> TurnScore:
    ref = tokens(ref_text, language)
    hyp = tokens(hyp_text, language)
    return TurnScore(ref_len=len(ref), counts=edit_counts(ref, hyp))


def dialogue_rate(turn_scores: Iterable[TurnScore]) -> float:
    """Micro-average: total edits over total reference length."""
    total = 0
    ref_len = 0
    for s in turn_scores:
        total += s.counts.total
        ref_len += s.ref_len
    return _rate(total, ref_len)


def passes_gate(rate: float, language: str,
                thresholds: dict[str, float] | None = None) -> bool:
    limit = (thresholds or DEFAULT_THRESHOLDS)[language]
    return rate <= limit


@dataclass(frozen=True)
class DialogueQA:
    dialogue_id: str
    language: str
    rate: float
    turn_scores: tuple[TurnScore, ...]
    kept: bool


@dataclass(frozen=True)
class QAReport:
    results: tuple[DialogueQA, ...]

    @property
    def kept_ids(self) -> list[str]:
        return [r.dialogue_id for r in self.results if r.kept]

    @property
    def discarded_ids(self) -> list[str]:
        return [r.dialogue_id for r in self.results if not r.kept]

    @property
    def kept_fraction(self) -> float:
        if not self.results:
            return 1.0
        return sum(r.kept for r in self.results) / len(self.results)


def evaluate_dialogue(record: DialogueRecord, hypotheses: Sequence[str],
                      thresholds: dict[str, float] | None = None) -> DialogueQA:
    if len(hypotheses) != len(record.dialog):
        raise ValueError(
            f"dialogue {record.id!r}: {len(hypotheses)} hypotheses for "
            f"{len(record.dialog)} turns")
    language = record.language()
    scores = tuple(score_turn(turn.text, hyp, language)
                   for turn, hyp in zip(record.dialog, hypotheses))
    rate = dialogue_rate(scores)
    return DialogueQA(
        dialogue_id=record.id,
        language=language,
        rate=rate,
        turn_scores=scores,
        kept=passes_gate(rate, language, thresholds),
    )


def qa_filter(records: Iterable[DialogueRecord],
              hypothesis_fn: Callable[[DialogueRecord], Sequence[str]],
              thresholds: dict[str, float] | None = None) -> QAReport:
    """Gate each dialogue on the transcripts produced by hypothesis_fn."""
    results = tuple(
        evaluate_dialogue(record, hypothesis_fn(record), thresholds)
        for record in records
    )
    return QAReport(results=results)
