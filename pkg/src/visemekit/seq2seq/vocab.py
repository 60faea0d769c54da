from __future__ import annotations

import string
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import InputError
from ..lexicon import WORD_BOUNDARY

PAD, SOS, EOS = "<pad>", "<s>", "</s>"
DEFAULT_CHARS = " '" + string.ascii_uppercase


@dataclass(frozen=True)
class TokenVocab:
    """Source (viseme) and target (character) index maps.

    Source index 0 is padding.  Target indices 0, 1, 2 are PAD, SOS and EOS;
    the decoder's softmax ranges over EOS and the characters only, so output
    class ``k`` is target token ``k + 2``.
    """

    source_tokens: tuple[str, ...]
    target_chars: tuple[str, ...] = tuple(DEFAULT_CHARS)
    src_index: dict = field(init=False, repr=False, compare=False)
    tgt_index: dict = field(init=False, repr=False, compare=False)

    PAD_ID = 0
    SOS_ID = 1
    EOS_ID = 2
    OUT_OFFSET = 2

    def __post_init__(self):
        src = (PAD,) + tuple(self.source_tokens)
        tgt = (PAD, SOS, EOS) + tuple(self.target_chars)
        if len(set(src)) != len(src) or len(set(tgt)) != len(tgt):
            raise InputError("vocabulary tokens must be distinct")
        object.__setattr__(self, "src_index", {t: i for i, t in enumerate(src)})
        object.__setattr__(self, "tgt_index", {t: i for i, t in enumerate(tgt)})

    @classmethod
    def for_visemes(cls, visemes: Sequence[str], boundaries: bool = False, chars: str = DEFAULT_CHARS):
        toks = tuple(visemes) + ((WORD_BOUNDARY,) if boundaries else ())
        return cls(toks, tuple(chars))

    @property
    def source_size(self) -> int:
        return len(self.source_tokens) + 1

    @property
    def target_size(self) -> int:
        return len(self.target_chars) + 3

    @property
    def n_outputs(self) -> int:
        return self.target_size - self.OUT_OFFSET

    def encode_source(self, tokens: Sequence[str]) -> list[int]:
        try:
            return [self.src_index[t] for t in tokens if t != PAD]
        except KeyError as exc:
            raise InputError(f"unknown source token {exc.args[0]!r}") from None

    def encode_target(self, text: str) -> list[int]:
        """Character ids followed by EOS (SOS is added by the model)."""
        try:
            return [self.tgt_index[ch] for ch in text] + [self.EOS_ID]
        except KeyError as exc:
            raise InputError(f"character {exc.args[0]!r} is not in the target vocabulary") from None

    def decode_target(self, ids) -> str:
        chars = []
        for i in ids:
            i = int(i)
            if i == self.EOS_ID:
                break
            if i in (self.PAD_ID, self.SOS_ID):
                continue
            chars.append(self.target_chars[i - 3])
        return "".join(chars)

    def to_dict(self) -> dict:
        return {"source_tokens": list(self.source_tokens), "target_chars": "".join(self.target_chars)}

    @classmethod
    def from_dict(cls, d: dict) -> "TokenVocab":
        return cls(tuple(d["source_tokens"]), tuple(d["target_chars"]))
