"""Regenerate src/visemekit/data/common_words.txt (development-time only).

Frequency-ranked English words from `wordfreq` that the bundled dictionary
covers; used as the word pool of the synthetic template grammar.
"""

import re
from pathlib import Path

from wordfreq import top_n_list

from visemekit.lexicon import load_lexicon

OUT = Path(__file__).resolve().parents[1] / "src" / "visemekit" / "data" / "common_words.txt"


def main(n=4000):
    lex = load_lexicon()
    words = []
    for w in top_n_list("en", 20000):
        w = w.upper()
        if re.fullmatch(r"[A-Z]{2,10}", w) and w in lex and w not in words:
            words.append(w)
        if len(words) == n:
            break
    OUT.write_text("# frequency-ranked common English words (wordfreq), all in cmudict\n" + "\n".join(words) + "\n")
    print(len(words))


if __name__ == "__main__":
    main()
