#!/usr/bin/env python3
"""Regenerates the synthetic mini-corpus fixture.

Writes train/dev/test corpora, the manifest, simulated encoder probabilities
for every training sentence, and bag-of-words embeddings for every sentence.
Deterministic for a fixed --seed.
"""
import argparse
import hashlib
import json
import pathlib

import numpy as np

MATERIALS = ["NaCl", "TiO2", "ethanol", "the solution", "zinc nitrate", "LiCoO2",
             "graphene oxide", "the precursor", "deionized water", "the powder"]
OPERATIONS = ["stirred", "annealed", "dried", "calcined", "washed", "filtered",
              "dissolved", "heated"]
PROPERTIES = ["white", "transparent", "homogeneous", "viscous", "porous", "crystalline",
              "solution"]

TEMPLATES = [
    "The {M} was {O} for 2 h .",
    "{M} was {O} at 80 C .",
    "The resulting {P} {M} was {O} overnight .",
    "After cooling , the {M} was {O} and {O2} .",
    "A {P} {M} was obtained .",
    "Then {M} and {M2} were {O} together .",
    "The mixture turned {P} after 10 min .",
    "Samples were stored in a closed box .",
    "The {M} was {O} in {M2} .",
    "The product was {P} and {P2} .",
]

CLASSES = ["O", "B-Material", "I-Material", "B-Operation", "I-Operation",
           "B-Property", "I-Property"]


def realize(template, rng):
    picks = {
        "M": rng.choice(MATERIALS), "M2": rng.choice(MATERIALS),
        "O": rng.choice(OPERATIONS), "O2": rng.choice(OPERATIONS),
        "P": rng.choice(PROPERTIES), "P2": rng.choice(PROPERTIES),
    }
    kinds = {"M": "Material", "M2": "Material", "O": "Operation", "O2": "Operation",
             "P": "Property", "P2": "Property"}
    tokens, tags = [], []
    for word in template.split():
        if word.startswith("{") and word.endswith("}"):
            key = word[1:-1]
            parts = picks[key].split()
            for i, part in enumerate(parts):
                tokens.append(part)
                tags.append(("B-" if i == 0 else "I-") + kinds[key])
        else:
            tokens.append(word)
            tags.append("O")
    return tokens, tags


def make_split(n, rng, prefix):
    out = []
    for i in range(n):
        template = TEMPLATES[int(rng.integers(len(TEMPLATES)))]
        tokens, tags = realize(template, rng)
        out.append((f"{prefix}-{i:03d}", tokens, tags))
    return out


def write_corpus(path, sentences):
    with open(path, "w", encoding="utf-8") as f:
        for k, (_, tokens, tags) in enumerate(sentences):
            if k:
                f.write("\n")
            for tok, tag in zip(tokens, tags):
                f.write(f"{tok}\t{tag}\n")


def token_vector(token, dim):
    h = hashlib.sha256(token.lower().encode()).digest()
    seed = int.from_bytes(h[:8], "little")
    return np.random.default_rng(seed).normal(size=dim)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seed", type=int, default=20240601)
    ap.add_argument("--dim", type=int, default=16)
    ap.add_argument("--out", default=str(pathlib.Path(__file__).parent))
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    rng = np.random.default_rng(args.seed)

    rng_choice = type("R", (), {})()
    rng_choice.choice = lambda seq: seq[int(rng.integers(len(seq)))]
    rng_choice.integers = rng.integers

    splits = {
        "train": make_split(30, rng_choice, "train"),
        "dev": make_split(5, rng_choice, "dev"),
        "test": make_split(10, rng_choice, "test"),
    }
    for name, sentences in splits.items():
        write_corpus(out / f"{name}.tsv", sentences)

    manifest = {
        "dataset": "mini-synthesis",
        "scheme": [
            {"type": "Material", "definition": "A substance, compound or mixture used or produced in the procedure."},
            {"type": "Operation", "definition": "An action performed on a material, such as stirring or heating."},
            {"type": "Property", "definition": "A descriptor of a material's characteristics or state."},
        ],
        "split": {name: [sid for sid, _, _ in sentences] for name, sentences in splits.items()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    # Simulated encoder: peaked at the gold class with per-sentence confidence.
    with open(out / "probs.jsonl", "w") as f:
        f.write(json.dumps({"class_labels": CLASSES}) + "\n")
        for sid, tokens, tags in splits["train"]:
            confidence = float(rng.uniform(0.55, 0.99))
            rows = []
            for tag in tags:
                noise = rng.dirichlet(np.full(len(CLASSES), 0.5))
                row = (1.0 - confidence) * noise
                row[CLASSES.index(tag)] += confidence
                row = row / row.sum()
                rows.append([round(float(p), 12) for p in row])
            f.write(json.dumps({"id": sid, "labels": CLASSES, "probs": rows}) + "\n")

    with open(out / "embeddings.jsonl", "w") as f:
        for name in ("train", "dev", "test"):
            for sid, tokens, _ in splits[name]:
                v = sum(token_vector(t, args.dim) for t in tokens) / len(tokens)
                v = v + rng.normal(scale=0.05, size=args.dim)
                f.write(json.dumps({"id": sid, "vector": [round(float(x), 10) for x in v]}) + "\n")


if __name__ == "__main__":
    main()
