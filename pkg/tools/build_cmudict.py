"""Regenerate src/visemekit/data/cmudict.txt.gz from the `cmudict` wheel.

Development-time only.  Converts the lowercase upstream file into the classic
uppercase CMU layout and keeps headwords made of letters and apostrophes.
"""

import gzip
import io
import re
from pathlib import Path

import cmudict

OUT = Path(__file__).resolve().parents[1] / "src" / "visemekit" / "data" / "cmudict.txt.gz"
WORD = re.compile(r"^([a-z']*[a-z][a-z']*)(\(\d+\))?$")


def main():
    kept = dropped = 0
    with open(OUT, "wb") as raw, gzip.GzipFile(fileobj=raw, mode="wb", compresslevel=9, mtime=0) as gz, \
            io.TextIOWrapper(gz, encoding="utf-8") as out:
        out.write(";;; CMU Pronouncing Dictionary (cmudict 0.7b lineage, BSD-style license)\n")
        out.write(";;; Filtered to headwords of letters and apostrophes; inline comments removed.\n")
        for raw in cmudict.dict_stream().read().decode("utf-8").splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            word, *phones = line.split()
            if not WORD.match(word) or not phones:
                dropped += 1
                continue
            out.write(f"{word.upper()}  {' '.join(phones)}\n")
            kept += 1
    print(f"kept {kept} lines, dropped {dropped}")


if __name__ == "__main__":
    main()
