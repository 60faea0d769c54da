"""Levenshtein-based WER/CER.

Rates are distance / reference length and are not clamped, so an
insertion-heavy hypothesis can score above 1.0.  Corpus rates are
token-weighted: total distance over total reference length.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Hashable, Iterable, Sequence

from .errors import DegenerateInputError


@dataclass(frozen=True)
class ErrorBreakdown:
    distance: int
    substitutions: int
    deletions: int
    insertions: int
    reference_length: int

    @property
    def rate(self) -> float:
        if self.reference_length == 0:
            raise DegenerateInputError("rate undefined for an empty reference")
        return self.distance / self.reference_length


def align(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> list[tuple[str, int | None, int | None]]:
    """Minimal edit script as (op, ref index, hyp index) with op in "=SDI".

    On cost ties the backtrace prefers a substitution, then a deletion
    (token of ``ref`` missing from ``hyp``), then an insertion.
    """
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d[i][0] = i
    for j in range(1, m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        row, prev = d[i], d[i - 1]
        a = ref[i - 1]
        for j in range(1, m + 1):
            cost = 0 if a == hyp[j - 1] else 1
            row[j] = min(prev[j - 1] + cost, prev[j] + 1, row[j - 1] + 1)

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            diag = d[i - 1][j - 1]
            if ref[i - 1] == hyp[j - 1] and d[i][j] == diag:
                i, j = i - 1, j - 1
                ops.append(("=", i, j))
                continue
            if d[i][j] == diag + 1:
                i, j = i - 1, j - 1
                ops.append(("S", i, j))
                continue
        if i > 0 and d[i][j] == d[i - 1][j] + 1:
            i -= 1
            ops.append(("D", i, None))
        else:
            j -= 1
            ops.append(("I", None, j))
    ops.reverse()
    return ops


def edit_distance(ref: Sequence[Hashable], hyp: Sequence[Hashable]) -> ErrorBreakdown:
    """Unit-cost Levenshtein distance from ``ref`` to ``hyp`` with its S/D/I split."""
    counts = {"=": 0, "S": 0, "D": 0, "I": 0}
    for op, _, _ in align(ref, hyp):
        counts[op] += 1
    return ErrorBreakdown(counts["S"] + counts["D"] + counts["I"], counts["S"], counts["D"], counts["I"], len(ref))


def sentence_error_rates(ref: str, hyp: str) -> tuple[ErrorBreakdown, ErrorBreakdown]:
    """(word-level, character-level) breakdowns; CER counts spaces."""
    if not ref:
        raise DegenerateInputError("empty reference")
    wer = edit_distance(ref.split(), hyp.split())
    cer = edit_distance(list(ref), list(hyp))
    return wer, cer


@dataclass
class EvalReport:
    wer: float
    cer: float
    n_examples: int
    word_errors: int
    word_total: int
    char_errors: int
    char_total: int
    per_sentence: list = field(default_factory=list)
    model_id: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, sort_keys=True) + "\n"


def corpus_error_rates(pairs: Iterable[tuple[str, str]], model_id: str = "") -> EvalReport:
    pairs = list(pairs)
    if not pairs:
        raise DegenerateInputError("no (reference, hypothesis) pairs to evaluate")
    rows = []
    wd = wn = cd = cn = 0
    for ref, hyp in pairs:
        w, c = sentence_error_rates(ref, hyp)
        wd += w.distance
        wn += w.reference_length
        cd += c.distance
        cn += c.reference_length
        rows.append(
            {
                "ref": ref,
                "hyp": hyp,
                "wer": asdict(w),
                "cer": asdict(c),
            }
        )
    return EvalReport(
        wer=wd / wn,
        cer=cd / cn,
        n_examples=len(pairs),
        word_errors=wd,
        word_total=wn,
        char_errors=cd,
        char_total=cn,
        per_sentence=rows,
        model_id=model_id,
    )


def cer(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """Corpus CER without the per-sentence bookkeeping."""
    return corpus_error_rates(zip(refs, hyps)).cer
