"""
From raw text to a parallel corpus
==================================

Normalize raw lines, drop anything the dictionary cannot pronounce,
convert the rest to viseme sequences and split deterministically.
"""

from visemekit.corpus import (
    build_parallel_corpus,
    in_lexicon,
    normalize_sentence,
    split_corpus,
    split_sizes,
)
from visemekit.lexicon import default_assets

lexicon, mapping = default_assets()

raw = [
    "Well, the range is quite a bit.",
    "Café au lait?",
    "Room 101 is upstairs.",
    "  It’s   fine  ",
    "Zorblat went home.",
    "That is my mom and dad.",
]

# Digits reject a line outright; accents fold to ASCII; punctuation splits words.
for line in raw:
    print(f"{line!r:38} -> {normalize_sentence(line)!r}")

kept = [s for s in map(normalize_sentence, raw) if s and in_lexicon(s, lexicon)]
pc = build_parallel_corpus(kept, lexicon, mapping)
for src, tgt in pc.pairs():
    print(f"{tgt:28s} <- {' '.join(src)}")

# Split sizes use largest remainders, so they always add up.
print(split_sizes(len(kept), (0.5, 0.25, 0.25)))
print(split_corpus(pc, (0.5, 0.25, 0.25), seed=0).splits)
