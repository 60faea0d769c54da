"""Template grammar whose homoviseme collisions are resolved by context.

Every sentence is a run of phrases ``CUE W1 ... Wk``.  Each cue word owns a
category of slot words, and members of one homoviseme class are spread over
different categories.  Seen word by word the slot words are ambiguous; seen
after their cue they are not.  This gives a corpus on which a context-aware
decoder can beat the unigram lower bound by construction.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import ConfigError
from .lexicon import Lexicon, VisemeMapping, word_to_visemes

DEFAULT_CUES = ("THE", "TO", "MY", "WE", "VERY", "NOT", "ALL", "SOME", "NO", "HER", "OUR", "ONE")


def common_words() -> list[str]:
    text = (resources.files("visemekit") / "data" / "common_words.txt").read_text(encoding="utf-8")
    return [w for w in text.split("\n") if w and not w.startswith("#")]


@dataclass(frozen=True)
class TemplateGrammar:
    cues: tuple[str, ...]
    slots: tuple[tuple[str, ...], ...]  # slot words per cue, same order as cues
    slots_per_phrase: int = 2
    phrases: tuple[int, int] = (1, 3)

    @property
    def vocabulary(self) -> set[str]:
        return set(self.cues) | {w for cat in self.slots for w in cat}

    def generate(self, n: int, seed: int) -> list[str]:
        rng = np.random.default_rng(seed)
        lo, hi = self.phrases
        out = []
        for _ in range(n):
            words = []
            for _ in range(int(rng.integers(lo, hi + 1))):
                c = int(rng.integers(len(self.cues)))
                words.append(self.cues[c])
                cat = self.slots[c]
                words.extend(cat[int(rng.integers(len(cat)))] for _ in range(self.slots_per_phrase))
            out.append(" ".join(words))
        return out


def build_grammar(
    lexicon: Lexicon,
    mapping: VisemeMapping,
    vocab_size: int = 500,
    n_categories: int = 8,
    ambiguous_fraction: float = 0.8,
    min_length: int = 3,
    slots_per_phrase: int = 2,
    phrases: tuple[int, int] = (1, 3),
    words: list[str] | None = None,
) -> TemplateGrammar:
    """Pick ~``vocab_size`` words (cues included) from a frequency-ranked pool.

    Ambiguous classes are taken first, most frequent first, and their
    members dealt to distinct categories; unambiguous words fill the rest.
    No category ever holds two words with the same viseme sequence.
    """
    if not 2 <= n_categories <= len(DEFAULT_CUES):
        raise ConfigError(f"n_categories must be in [2, {len(DEFAULT_CUES)}]")
    pool = words if words is not None else common_words()

    cues, cue_keys = [], set()
    for cue in DEFAULT_CUES:
        key = word_to_visemes(lexicon, mapping, cue)
        if key not in cue_keys:
            cues.append(cue)
            cue_keys.add(key)
        if len(cues) == n_categories:
            break
    if len(cues) < n_categories:
        raise ConfigError("not enough distinct cue words for the requested categories")

    classes: dict[tuple, list[str]] = defaultdict(list)
    first_seen: dict[tuple, int] = {}
    for rank, w in enumerate(pool):
        if w in cues or len(w) < min_length or w not in lexicon:
            continue
        key = word_to_visemes(lexicon, mapping, w)
        if not key or key in cue_keys:
            continue
        if len(classes[key]) < n_categories:
            classes[key].append(w)
        first_seen.setdefault(key, rank)
    ordered = sorted(classes, key=lambda k: first_seen[k])

    n_slots = vocab_size - n_categories
    n_ambiguous = int(round(ambiguous_fraction * n_slots))
    slots: list[list[str]] = [[] for _ in range(n_categories)]
    used = 0

    def deal(members):
        # smallest categories first keeps category sizes balanced
        order = sorted(range(n_categories), key=lambda c: (len(slots[c]), c))
        for w, c in zip(members, order):
            slots[c].append(w)

    for key in ordered:
        members = classes[key]
        if len(members) < 2 or used + len(members) > n_ambiguous:
            continue
        deal(members)
        used += len(members)
    for key in ordered:
        if used >= n_slots:
            break
        if len(classes[key]) == 1:
            deal(classes[key])
            used += 1
    return TemplateGrammar(tuple(cues), tuple(tuple(s) for s in slots), slots_per_phrase, tuple(phrases))
