"""Homoviseme classes and the context-free word-level WER lower bound.

Without context, a decoder that sees only a word's viseme sequence can do
no better than always emitting the most frequent word sharing that
sequence; every other token in the class is an unavoidable error.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import VocabStats
from .errors import ContractViolation, DegenerateInputError, OOVError
from .lexicon import Lexicon, VisemeMapping, word_to_visemes


@dataclass(frozen=True)
class HomovisemeClass:
    key: tuple[str, ...]
    members: tuple[tuple[str, int], ...]
    representative: str

    @property
    def mass(self) -> int:
        return sum(f for _, f in self.members)

    @property
    def representative_count(self) -> int:
        return dict(self.members)[self.representative]

    @property
    def lost(self) -> int:
        return self.mass - self.representative_count


def pick_representative(members: Iterable[tuple[str, int]]) -> str:
    # highest frequency, ties to the lexicographically smallest word
    return min(members, key=lambda wf: (-wf[1], wf[0]))[0]


def make_class(key, members) -> HomovisemeClass:
    members = tuple(sorted(members, key=lambda wf: (-wf[1], wf[0])))
    if not members:
        raise ContractViolation("a homoviseme class needs at least one member")
    return HomovisemeClass(tuple(key), members, pick_representative(members))


def group_homovisemes(stats: VocabStats, lexicon: Lexicon, mapping: VisemeMapping) -> list[HomovisemeClass]:
    """Partition the counted vocabulary by viseme sequence.

    Classes come back sorted by descending frequency mass, then by key.
    """
    groups: dict[tuple[str, ...], list[tuple[str, int]]] = defaultdict(list)
    for word, count in stats.counts.items():
        try:
            key = word_to_visemes(lexicon, mapping, word)
        except OOVError:
            raise ContractViolation(f"counted word {word!r} is not in the lexicon") from None
        groups[key].append((word, count))
    classes = [make_class(k, m) for k, m in groups.items()]
    classes.sort(key=lambda c: (-c.mass, c.key))
    return classes


@dataclass
class LowerBoundReport:
    wer_lb: float
    total_tokens: int
    covered_tokens: int
    classes: list[HomovisemeClass]
    mapping_name: str = ""

    def to_text(self) -> str:
        """Key/value report; one ``class`` line per ambiguous class."""
        ambiguous = [c for c in self.classes if len(c.members) > 1]
        lines = [
            f"mapping_name = {self.mapping_name}",
            f"wer_lb = {self.wer_lb:.4f}",
            f"total_tokens = {self.total_tokens}",
            f"covered_tokens = {self.covered_tokens}",
            f"n_classes = {len(self.classes)}",
            f"n_ambiguous_classes = {len(ambiguous)}",
        ]
        for c in ambiguous:
            members = " ".join(f"{w}:{f}" for w, f in c.members)
            lines.append(f"class = {' '.join(c.key)} | {members} | {c.representative}")
        return "\n".join(lines) + "\n"


def greedy_lower_bound(
    classes: Sequence[HomovisemeClass],
    total_tokens: int,
    mapping_name: str = "",
) -> LowerBoundReport:
    if total_tokens <= 0:
        raise DegenerateInputError("lower bound undefined for an empty vocabulary")
    covered = sum(c.representative_count for c in classes)
    if covered > total_tokens:
        raise ContractViolation("classes hold more tokens than total_tokens")
    return LowerBoundReport(
        wer_lb=1.0 - covered / total_tokens,
        total_tokens=total_tokens,
        covered_tokens=covered,
        classes=list(classes),
        mapping_name=mapping_name,
    )


def lower_bound_for(stats: VocabStats, lexicon: Lexicon, mapping: VisemeMapping) -> LowerBoundReport:
    classes = group_homovisemes(stats, lexicon, mapping)
    return greedy_lower_bound(classes, stats.total_tokens, mapping.name)


@dataclass
class AmbiguitySummary:
    size_histogram: dict[int, int]
    top: list[HomovisemeClass]

    def to_table(self) -> str:
        out = ["class size  count"]
        for size in sorted(self.size_histogram):
            out.append(f"{size:>10}  {self.size_histogram[size]}")
        out.append("")
        out.append(f"{'lost':>8}  {'mass':>8}  representative / members")
        for c in self.top:
            others = ", ".join(w for w, _ in c.members if w != c.representative)
            out.append(f"{c.lost:>8}  {c.mass:>8}  {c.representative} / {others}")
        return "\n".join(out) + "\n"


def ambiguity_report(classes: Sequence[HomovisemeClass], top_k: int = 10) -> AmbiguitySummary:
    hist = Counter(len(c.members) for c in classes)
    lossy = [c for c in classes if c.lost > 0]
    lossy.sort(key=lambda c: (-c.lost, c.key))
    return AmbiguitySummary(dict(sorted(hist.items())), lossy[:top_k])
