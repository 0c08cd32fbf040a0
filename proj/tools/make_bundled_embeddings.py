#!/usr/bin/env python3
"""Regenerates data/embeddings/bundled-50d.txt.

The bundled table is synthetic: it covers every token the built-in templates and the command
grammar can produce, with a hand-set neighbourhood structure around the action tokens
(directions cluster together, "going" sits near "go", coin-related words near "coin") and
random directions for everything else. Real GloVe / word2vec / ConceptNet files in the same
text format can be used instead via --embeddings.
"""
import pathlib
import re

import numpy as np

DIM = 50
SEED = 20200705
ROOT = pathlib.Path(__file__).resolve().parent.parent

GRAMMAR = ["go", "take", "open", "look", "drop", "examine", "close", "eat", "push", "pull",
           "north", "south", "east", "west", "coin", "door", "exit", "table", "box", "key"]

# token -> (anchor, weight on the anchor); the remainder is fresh noise
NEIGHBOURS = {
    "going": ("go", 0.80),
    "exit": ("go", 0.60),
    "entranceway": ("go", 0.55),
    "unblocked": ("go", 0.45),
    "unguarded": ("go", 0.40),
    "try": ("go", 0.35),
    "arrive": ("go", 0.40),
    "entered": ("go", 0.35),
    "pick": ("take", 0.55),
    "retrieve": ("take", 0.60),
    "find": ("take", 0.40),
    "shiny": ("coin", 0.45),
    "glinting": ("coin", 0.40),
    "won": ("coin", 0.30),
}


def tokenize(text):
    out = []
    for tok in re.sub(r"[^a-z0-9']", " ", text.lower()).split():
        tok = tok.strip("'")
        if tok:
            out.append(tok)
    return out


def unit(v):
    return v / np.linalg.norm(v)


def main():
    tokens = set(GRAMMAR)
    for f in sorted((ROOT / "data" / "templates").glob("*.txt")):
        for line in f.read_text().splitlines():
            line = line.replace("{adj}", " ").replace("{room}", " ").replace("{dir}", " ")
            tokens.update(tokenize(line))
    tokens.update(tokenize("You pick up the coin. Congratulations, you have won!"))

    rng = np.random.default_rng(SEED)
    vecs = {}
    directions = unit(rng.standard_normal(DIM))
    for d in ["north", "south", "east", "west"]:
        vecs[d] = unit(0.87 * directions + 0.49 * unit(rng.standard_normal(DIM)))
    vecs["go"] = unit(0.30 * directions + 0.95 * unit(rng.standard_normal(DIM)))
    for t in sorted(tokens):
        if t in vecs or t in NEIGHBOURS:
            continue
        vecs[t] = unit(rng.standard_normal(DIM))
    for t, (anchor, w) in sorted(NEIGHBOURS.items()):
        noise = unit(rng.standard_normal(DIM))
        vecs[t] = unit(w * vecs[anchor] + np.sqrt(1 - w * w) * noise)

    out = ROOT / "data" / "embeddings" / "bundled-50d.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w") as fh:
        fh.write(f"{len(vecs)} {DIM}\n")
        for t in sorted(vecs):
            fh.write(t + " " + " ".join(f"{x:.6f}" for x in vecs[t]) + "\n")
    print(f"wrote {len(vecs)} vectors to {out}")


if __name__ == "__main__":
    main()
