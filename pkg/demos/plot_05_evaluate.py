"""
Scoring hypotheses and simulating a noisy front-end
===================================================

Word and character error rates come from the same Levenshtein
alignment. Substituting random visemes mimics an imperfect
video-to-viseme stage.
"""

import numpy as np

from visemekit.metrics import align, corpus_error_rates, sentence_error_rates
from visemekit.pipeline import format_samples, inject_viseme_noise

pairs = [
    ("SO I SHOULD TALK ABOUT ART", "SO I SHOULD TALK ABOUT HEART"),
    ("THAT IS MY MOM AND DAD", "THAT IS MY MOM AND DAD"),
    ("NEXT IS SYLVIA SLATER", "NEXT IS SYLVIA SLATOR"),
]

wer, cer = sentence_error_rates(*pairs[0])
print(f"WER {wer.rate:.3f} ({wer.substitutions} substitution), CER {cer.rate:.3f}")
print(align("KITTEN", "SITTING"))

# Corpus rates weight every reference token equally.
report = corpus_error_rates(pairs)
print(f"corpus WER {report.wer:.3f}, CER {report.cer:.3f}")
print(format_samples(pairs, n=3))

# Noise replaces each viseme with a different one at rate p; boundaries survive.
alphabet = ["V_bmp", "V_fv", "V_tdsz", "V_aa", "V_ih"]
seq = ("V_tdsz", "V_aa", "WB", "V_bmp", "V_ih", "V_fv")
rng = np.random.default_rng(0)
for p in (0.0, 0.3, 1.0):
    print(p, " ".join(inject_viseme_noise(seq, p, alphabet, rng)))
