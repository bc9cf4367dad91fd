"""Builds crates/core/data/lexicon.dict: the most frequent English words that
have a CMUdict pronunciation, plus every word the synthetic fixture emits.

    pip install cmudict wordfreq
    python3 scripts/build_lexicon.py
"""
import pathlib
import re

import cmudict
import wordfreq

ROOT = pathlib.Path(__file__).resolve().parent.parent
TOP_N = 20000

fixture_src = (ROOT / "crates/core/src/harness/fixture.rs").read_text()
fixture_words = set()
for lit in re.findall(r'"([^"]*)"', fixture_src):
    for w in lit.split():
        if w.isalpha():
            fixture_words.add(w.lower())

prons = cmudict.dict()
words = []
for w in wordfreq.top_n_list("en", 60000):
    if w.isalpha() and w.isascii() and w in prons and (len(w) > 1 or w in ("a", "i")):
        words.append(w)
    if len(words) == TOP_N:
        break
missing = sorted(w for w in fixture_words if w not in prons)
chosen = sorted(set(words) | (fixture_words & prons.keys()))

out = ROOT / "crates/core/data/lexicon.dict"
with out.open("w") as f:
    f.write(";;; Subset of the CMU Pronouncing Dictionary (cmudict 0.7b, BSD license,\n")
    f.write(";;; Copyright (C) 1993-2015 Carnegie Mellon University).\n")
    f.write(f";;; {len(chosen)} entries: the {TOP_N} most frequent English words with a\n")
    f.write(";;; pronunciation, plus the synthetic fixture vocabulary.\n")
    for w in chosen:
        f.write(f"{w.upper()}  {' '.join(prons[w][0])}\n")
print(len(chosen), "entries; fixture words without pronunciation:", missing)
