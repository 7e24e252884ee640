"""Word error rate from minimal-cost edit distance with unit costs.

The substitution/deletion/insertion split is canonical: among all minimal-cost
alignments the one with the most substitutions is reported (substitutions are
preferred over insert/delete pairs). That choice makes the split well defined
and symmetric: swapping reference and hypothesis keeps S and exchanges D and I.
The total distance never depends on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    deletions: int
    insertions: int
    reference_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def wer(self) -> float:
        return self.errors / self.reference_words

    def to_dict(self) -> dict:
        return {
            "substitutions": self.substitutions,
            "deletions": self.deletions,
            "insertions": self.insertions,
            "reference_words": self.reference_words,
            "wer": self.wer,
        }


def edit_counts(reference: Sequence[str], hypothesis: Sequence[str]) -> tuple[int, int, int]:
    """Return (S, D, I) of a minimal-cost alignment maximizing substitutions.

    Runs the usual O(len(ref) * len(hyp)) dynamic program over lexicographic
    (cost, -substitutions) values; the delete/insert counts then follow from
    the length difference, so they need no backtrace.
    """
    nr, nh = len(reference), len(hypothesis)
    # prev[j] = (cost, -subs) for aligning reference[:i-1] with hypothesis[:j]
    prev = [(j, 0) for j in range(nh + 1)]
    for i in range(1, nr + 1):
        cur = [(i, 0)] + [(0, 0)] * nh
        ref_tok = reference[i - 1]
        for j in range(1, nh + 1):
            dc, ds = prev[j - 1]
            diag = (dc, ds) if ref_tok == hypothesis[j - 1] else (dc + 1, ds - 1)
            ic, isub = cur[j - 1]
            kc, ksub = prev[j]
            cur[j] = min(diag, (ic + 1, isub), (kc + 1, ksub))
        prev = cur
    cost, neg_subs = prev[nh]
    subs = -neg_subs
    delta = nh - nr
    insertions = (cost - subs + delta) // 2
    deletions = (cost - subs - delta) // 2
    return subs, deletions, insertions


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> WerBreakdown:
    """Score one utterance; the reference must be non-empty."""
    if len(reference) == 0:
        raise ValueError("WER is undefined for an empty reference")
    s, d, i = edit_counts(reference, hypothesis)
    return WerBreakdown(s, d, i, len(reference))


def corpus_wer(pairs: Iterable[tuple[Sequence[str], Sequence[str]]]) -> WerBreakdown:
    """Pooled corpus score: error and reference counts are summed across
    utterances before dividing, not averaged per utterance."""
    s_total = d_total = i_total = n_total = 0
    count = 0
    for reference, hypothesis in pairs:
        b = wer(reference, hypothesis)
        s_total += b.substitutions
        d_total += b.deletions
        i_total += b.insertions
        n_total += b.reference_words
        count += 1
    if count == 0:
        raise ValueError("corpus_wer needs at least one utterance pair")
    return WerBreakdown(s_total, d_total, i_total, n_total)


def relative_reduction(baseline_wer: float, new_wer: float) -> float:
    """Relative WER reduction in percent: 100 * (baseline - new) / baseline.

    Returned unrounded; reports format it to one decimal.
    """
    if baseline_wer <= 0:
        raise ValueError("relative reduction is undefined for a zero baseline")
    return 100.0 * (baseline_wer - new_wer) / baseline_wer
