#!/usr/bin/env python3
"""Standalone language-detection oracle.

Recomputes the profile-based prediction directly from the bundled seed
corpora, sharing no code with the package: character 1-3-gram counts over
casefolded, whitespace-collapsed, space-padded text, cosine-compared
against per-language profiles.  Used to freeze expected values in tests.

Usage: python3 scripts/langid_oracle.py "sentence" ["sentence" ...]
"""

import sys
import unicodedata
from pathlib import Path

SEED_DIR = Path(__file__).resolve().parent.parent / "src" / "aloha" / "assets" / "langid"


def norm(text):
    return " ".join(unicodedata.normalize("NFC", text).casefold().split())


def grams(text):
    padded = f" {text} "
    counts = {}
    for n in (1, 2, 3):
        for i in range(len(padded) - n + 1):
            g = padded[i : i + n]
            counts[g] = counts.get(g, 0) + 1
    return counts


def load_profiles():
    profiles = {}
    for seed_file in sorted(SEED_DIR.glob("seed_*.txt")):
        lang = seed_file.stem.replace("seed_", "")
        profile = {}
        for line in seed_file.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line:
                continue
            for g, c in grams(norm(line)).items():
                profile[g] = profile.get(g, 0) + c
        profiles[lang] = profile
    return profiles


def predict(text, profiles):
    q = grams(norm(text))
    qn = sum(v * v for v in q.values()) ** 0.5
    best = []
    for lang, profile in profiles.items():
        pn = sum(v * v for v in profile.values()) ** 0.5
        dot = sum(c * profile.get(g, 0) for g, c in q.items())
        best.append((dot / (qn * pn) if qn * pn else 0.0, lang))
    best.sort(key=lambda t: (-t[0], t[1]))
    return best


def main():
    profiles = load_profiles()
    for sentence in sys.argv[1:]:
        ranking = predict(sentence, profiles)
        ranked = ", ".join(f"{lang}={score:.4f}" for score, lang in ranking)
        print(f"{ranking[0][1]}\t{sentence}\t[{ranked}]")


if __name__ == "__main__":
    main()
