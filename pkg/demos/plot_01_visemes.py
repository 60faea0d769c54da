"""
Words, phonemes and visemes
===========================

Lip shapes carry less information than sound. This walk-through looks
up a few words in the bundled pronunciation dictionary, maps their
phonemes to visemes and shows which words become indistinguishable.
"""

from visemekit.lexicon import default_assets, lookup_phonemes, sentence_to_visemes, word_to_visemes

lexicon, mapping = default_assets()
print(f"{len(lexicon.entries)} words, {len(lexicon.inventory)} phonemes, {len(mapping.visemes)} visemes")

# Each viseme groups phonemes that look alike on the lips.
groups = {}
for phoneme, viseme in sorted(mapping.table.items()):
    groups.setdefault(viseme, []).append(phoneme)
for viseme, phonemes in sorted(groups.items()):
    print(f"  {viseme:8s} {' '.join(phonemes)}")

# HH has no visible articulation, so it maps to NULL and vanishes.
for word in ("ART", "HEART", "PAT", "BAT", "MAT"):
    print(f"{word:6s} {' '.join(lookup_phonemes(lexicon, word)):12s} -> {' '.join(word_to_visemes(lexicon, mapping, word))}")

# A sentence becomes one flat viseme stream. Boundaries are optional.
print(" ".join(sentence_to_visemes(lexicon, mapping, "SO I SHOULD TALK ABOUT ART")))
print(" ".join(sentence_to_visemes(lexicon, mapping, "SO I SHOULD TALK ABOUT ART", boundaries=True)))
