"""Raw text to parallel viseme/character corpora.

Everything here works sentence by sentence so corpus files can be streamed;
only :func:`split_corpus` needs the whole parallel corpus in memory.
"""

from __future__ import annotations

import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, ContractViolation, OOVError, ParseError
from .lexicon import WORD_BOUNDARY, Lexicon, VisemeMapping, sentence_to_visemes

NORMALIZATION_VERSION = "1"
SPLITS = ("train", "valid", "test")

_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'", "`": "'"})
_NOT_ALLOWED = re.compile(r"[^A-Z' ]")
_DIGIT = re.compile(r"\d")


def normalize_sentence(raw: str) -> str | None:
    """Uppercase, drop punctuation except apostrophes, collapse spaces.

    Returns None (a rejection) for empty results or any digit.
    """
    if _DIGIT.search(raw):
        return None
    text = unicodedata.normalize("NFKD", raw.translate(_APOSTROPHES))
    text = "".join(ch for ch in text if not unicodedata.combining(ch)).upper()
    # letters outside A-Z cannot be spelled by the target vocabulary
    if any(ch.isalpha() and ord(ch) > 127 for ch in text):
        return None
    text = _NOT_ALLOWED.sub(" ", text)
    words = [w for w in text.split() if w.strip("'")]
    return " ".join(words) or None


@dataclass
class TextCorpus:
    sentences: list[str]
    provenance: str = ""

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def iter_normalized(lines: Iterable[str]) -> Iterator[str]:
    for line in lines:
        s = normalize_sentence(line)
        if s is not None:
            yield s


def read_corpus(path, limit: int | None = None) -> TextCorpus:
    sentences = []
    with open(path, encoding="utf-8", errors="replace") as fh:
        for s in iter_normalized(fh):
            sentences.append(s)
            if limit is not None and len(sentences) >= limit:
                break
    return TextCorpus(sentences, provenance=f"{path} norm=v{NORMALIZATION_VERSION}")


def reservoir_sample(items: Iterable[str], k: int, seed: int) -> list[str]:
    """Uniform sample of ``k`` items from a stream, in stream order."""
    rng = np.random.default_rng(seed)
    chosen: list[tuple[int, str]] = []
    for i, item in enumerate(items):
        if i < k:
            chosen.append((i, item))
        else:
            j = int(rng.integers(0, i + 1))
            if j < k:
                chosen[j] = (i, item)
    chosen.sort()
    return [s for _, s in chosen]


def in_lexicon(sentence: str, lexicon: Lexicon) -> bool:
    return all(w in lexicon for w in sentence.split(" "))


def filter_by_lexicon(corpus: TextCorpus, lexicon: Lexicon) -> tuple[TextCorpus, int]:
    kept = [s for s in corpus.sentences if in_lexicon(s, lexicon)]
    return TextCorpus(kept, corpus.provenance), len(corpus.sentences) - len(kept)


@dataclass
class VocabStats:
    counts: dict[str, int]
    total_tokens: int

    def frequency(self, word: str) -> float:
        return self.counts.get(word, 0) / self.total_tokens if self.total_tokens else 0.0


def build_vocab_stats(corpus: Iterable[str]) -> VocabStats:
    counts: Counter[str] = Counter()
    for sentence in corpus:
        counts.update(sentence.split(" "))
    return VocabStats(dict(counts), sum(counts.values()))


@dataclass
class ParallelCorpus:
    """Aligned (viseme tokens, character string, split) examples.

    ``splits`` is None until :func:`split_corpus` assigns labels.
    """

    sources: list[tuple[str, ...]]
    targets: list[str]
    splits: list[str] | None = None
    boundaries: bool = False

    def __len__(self):
        return len(self.targets)

    def subset(self, label: str) -> "ParallelCorpus":
        if self.splits is None:
            raise ContractViolation("corpus has not been split")
        idx = [i for i, s in enumerate(self.splits) if s == label]
        return ParallelCorpus(
            [self.sources[i] for i in idx],
            [self.targets[i] for i in idx],
            [label] * len(idx),
            self.boundaries,
        )

    def pairs(self):
        return list(zip(self.sources, self.targets))


def build_parallel_corpus(
    corpus: Iterable[str],
    lexicon: Lexicon,
    mapping: VisemeMapping,
    boundaries: bool = False,
) -> ParallelCorpus:
    sources, targets = [], []
    for sentence in corpus:
        try:
            seq = sentence_to_visemes(lexicon, mapping, sentence, boundaries)
        except OOVError as exc:
            raise ContractViolation(
                f"sentence {sentence!r} contains OOV word {exc.word!r}; filter the corpus first"
            ) from None
        if not seq:
            raise ContractViolation(f"sentence {sentence!r} has an empty viseme sequence")
        sources.append(seq)
        targets.append(sentence)
    return ParallelCorpus(sources, targets, None, boundaries)


def split_sizes(n: int, ratios: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of ``n`` items to ``ratios``."""
    exact = [n * r for r in ratios]
    sizes = [math.floor(x + 1e-9) for x in exact]
    rest = n - sum(sizes)
    order = sorted(range(len(ratios)), key=lambda i: (-(exact[i] - sizes[i]), i))
    for i in order[:rest]:
        sizes[i] += 1
    return sizes


def check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ConfigError(f"split ratios must be three non-negative numbers, got {list(ratios)}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must sum to 1, got {sum(ratios):.12g}")
    return tuple(float(r) for r in ratios)


def split_corpus(pc: ParallelCorpus, ratios: Sequence[float], seed: int) -> ParallelCorpus:
    """Seeded shuffle, then contiguous train/valid/test blocks."""
    ratios = check_ratios(ratios)
    n = len(pc)
    perm = np.random.default_rng(seed).permutation(n)
    labels = []
    for label, size in zip(SPLITS, split_sizes(n, ratios)):
        labels.extend([label] * size)
    return ParallelCorpus(
        [pc.sources[i] for i in perm],
        [pc.targets[i] for i in perm],
        labels,
        pc.boundaries,
    )


def write_parallel_tsv(pc: ParallelCorpus, path) -> None:
    if pc.splits is None:
        raise ContractViolation("only split corpora can be written")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for src, tgt, split in zip(pc.sources, pc.targets, pc.splits):
            fh.write(f"{' '.join(src)}\t{tgt}\t{split}\n")


def read_parallel_tsv(path) -> ParallelCorpus:
    sources, targets, splits = [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in SPLITS or not parts[0]:
                raise ParseError(f"malformed parallel corpus row {line!r}", lineno)
            sources.append(tuple(parts[0].split(" ")))
            targets.append(parts[1])
            splits.append(parts[2])
    boundaries = any(WORD_BOUNDARY in s for s in sources)
    return ParallelCorpus(sources, targets, splits, boundaries)
