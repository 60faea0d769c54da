"""Pronunciation lexicon and phoneme-to-viseme conversion.

The lexicon is read from a CMU-style dictionary and keeps only the first
pronunciation of every word.  A :class:`VisemeMapping` collapses phonemes
into visemes; phonemes mapped to ``NULL`` are deleted from the output,
which is what makes e.g. ART and HEART look identical on the lips.
"""

from __future__ import annotations

import gzip
import io
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import MappingError, OOVError, ParseError, TotalityError

NULL = "NULL"
WORD_BOUNDARY = "WB"

_WORD_RE = re.compile(r"^[A-Z']*[A-Z][A-Z']*$")
_ALT_RE = re.compile(r"^(?P<word>[^()]+)\((?P<n>\d+)\)$")
_PHONE_RE = re.compile(r"^(?P<base>[A-Z]+)[0-9]?$")


def is_valid_word(word: str) -> bool:
    return bool(_WORD_RE.match(word))


@dataclass(frozen=True)
class Lexicon:
    entries: Mapping[str, tuple[str, ...]]
    inventory: frozenset[str]

    def __contains__(self, word) -> bool:
        return word in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, word: str) -> tuple[str, ...]:
        return lookup_phonemes(self, word)


@dataclass(frozen=True)
class VisemeMapping:
    name: str
    version: str
    table: Mapping[str, str]
    visemes: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        alphabet = sorted({v for v in self.table.values() if v != NULL})
        object.__setattr__(self, "visemes", tuple(alphabet))
        if len(alphabet) < 2:
            raise MappingError(f"mapping {self.name!r} has fewer than two non-NULL visemes")

    def __getitem__(self, phoneme: str) -> str:
        try:
            return self.table[phoneme]
        except KeyError:
            raise MappingError(f"phoneme {phoneme!r} not covered by mapping {self.name!r}") from None


def _strip_stress(token: str, lineno: int) -> str:
    m = _PHONE_RE.match(token)
    if m is None:
        raise ParseError(f"bad phoneme symbol {token!r}", lineno)
    return m.group("base")


def parse_pronunciation_dict(stream: Iterable[str]) -> Lexicon:
    """Parse a CMU-format pronunciation dictionary.

    Lines starting with ``;;;`` and blank lines are skipped.  Alternate
    pronunciations written ``WORD(2)`` are dropped, so each word keeps the
    first transcription that appears.  Stress digits are removed.
    """
    entries: dict[str, tuple[str, ...]] = {}
    inventory: set[str] = set()
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line or line.startswith(";;;"):
            continue
        fields = line.split()
        word, phones = fields[0], fields[1:]
        if not phones:
            raise ParseError(f"no phonemes for {word!r}", lineno)
        alt = _ALT_RE.match(word)
        if alt is not None:
            if not is_valid_word(alt.group("word")):
                raise ParseError(f"unparseable word field {word!r}", lineno)
            continue
        if not is_valid_word(word):
            raise ParseError(f"unparseable word field {word!r}", lineno)
        seq = tuple(_strip_stress(p, lineno) for p in phones)
        if word in entries:
            # a repeated headword without "(n)" is still an alternate
            continue
        entries[word] = seq
        inventory.update(seq)
    return Lexicon(entries=entries, inventory=frozenset(inventory))


def lookup_phonemes(lexicon: Lexicon, word: str) -> tuple[str, ...]:
    try:
        return lexicon.entries[word]
    except KeyError:
        raise OOVError(word) from None


def load_viseme_mapping(
    stream: Iterable[str],
    inventory: Iterable[str],
    name: str = "custom",
    version: str = "0",
) -> VisemeMapping:
    """Read ``PHONEME<TAB>VISEME`` rows and check coverage of ``inventory``.

    ``#`` comment lines are allowed; a comment of the form
    ``# name: X`` or ``# version: Y`` overrides the arguments.
    """
    table: dict[str, str] = {}
    for lineno, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.lstrip().startswith("#"):
            meta = line.lstrip("# ").split(":", 1)
            if len(meta) == 2 and meta[0].strip() in ("name", "version"):
                if meta[0].strip() == "name":
                    name = meta[1].strip()
                else:
                    version = meta[1].strip()
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError(f"expected PHONEME<TAB>VISEME, got {line!r}", lineno)
        phoneme, viseme = parts[0].strip(), parts[1].strip()
        if phoneme in table:
            raise ParseError(f"duplicate phoneme {phoneme!r}", lineno)
        table[phoneme] = viseme
    missing = set(inventory) - set(table)
    if missing:
        raise TotalityError(missing)
    return VisemeMapping(name=name, version=version, table=table)


def phonemes_to_visemes(mapping: VisemeMapping, phonemes: Sequence[str]) -> tuple[str, ...]:
    out = []
    for p in phonemes:
        v = mapping[p]
        if v != NULL:
            out.append(v)
    return tuple(out)


def word_to_visemes(lexicon: Lexicon, mapping: VisemeMapping, word: str) -> tuple[str, ...]:
    return phonemes_to_visemes(mapping, lookup_phonemes(lexicon, word))


def sentence_to_visemes(
    lexicon: Lexicon,
    mapping: VisemeMapping,
    sentence: str,
    boundaries: bool = False,
) -> tuple[str, ...]:
    out: list[str] = []
    for i, word in enumerate(sentence.split()):
        seq = word_to_visemes(lexicon, mapping, word)
        if boundaries and i > 0:
            out.append(WORD_BOUNDARY)
        out.extend(seq)
    return tuple(out)


def identity_mapping(inventory: Iterable[str]) -> VisemeMapping:
    """Every phoneme is its own viseme; homoviseme classes become homophones."""
    return VisemeMapping(name="identity", version="1", table={p: p for p in inventory})


# bundled assets ------------------------------------------------------------

DEFAULT_DICT = "cmudict.txt.gz"
DEFAULT_MAPPING = "visemes_lee_hh_null.tsv"

_cache: dict[str, object] = {}


def _open_data(name: str):
    ref = resources.files("visemekit") / "data" / name
    raw = ref.open("rb")
    if name.endswith(".gz"):
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="utf-8")
    return io.TextIOWrapper(raw, encoding="utf-8")


def load_lexicon(path=None) -> Lexicon:
    """Load a dictionary file, or the bundled one when ``path`` is None."""
    if path is None:
        if "lexicon" not in _cache:
            with _open_data(DEFAULT_DICT) as fh:
                _cache["lexicon"] = parse_pronunciation_dict(fh)
        return _cache["lexicon"]
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rt", encoding="utf-8") as fh:
        return parse_pronunciation_dict(fh)


def load_mapping(inventory: Iterable[str], path=None) -> VisemeMapping:
    """Load a mapping file, or the bundled default when ``path`` is None."""
    if path is None:
        with _open_data(DEFAULT_MAPPING) as fh:
            return load_viseme_mapping(fh, inventory)
    with open(path, encoding="utf-8") as fh:
        return load_viseme_mapping(fh, inventory)


def default_assets() -> tuple[Lexicon, VisemeMapping]:
    lex = load_lexicon()
    return lex, load_mapping(lex.inventory)
