"""
How ambiguous is a vocabulary?
==============================

Group words by viseme sequence, then decode every sequence to its most
frequent word. The resulting word error rate is the best any decoder can
do when it looks at one word at a time.
"""

from visemekit.analysis import ambiguity_report, lower_bound_for
from visemekit.corpus import build_vocab_stats
from visemekit.lexicon import default_assets
from visemekit.synthetic import common_words

lexicon, mapping = default_assets()

# A tiny corpus first, small enough to check by hand.
stats = build_vocab_stats(["ART"] * 5 + ["HEART"] * 3 + ["CAT"] * 2)
report = lower_bound_for(stats, lexicon, mapping)
print(report.to_text())

# Now a frequency-shaped corpus over the 4000 most common words.
# Word i appears roughly in proportion to 1 / (i + 1).
words = common_words()
counts = {w: max(1, 10_000 // (i + 1)) for i, w in enumerate(words)}
stats = build_vocab_stats([" ".join([w] * c) for w, c in counts.items()])
report = lower_bound_for(stats, lexicon, mapping)
print(f"greedy lower-bound WER: {report.wer_lb:.3f} over {stats.total_tokens} tokens")

summary = ambiguity_report(report.classes, top_k=8)
print(summary.to_table())
