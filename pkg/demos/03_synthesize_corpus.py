#!/usr/bin/env python3
"""Generate a small weather corpus and poke at what comes out.

Usage:
    python3 demos/03_synthesize_corpus.py [--n 12] [--seed 42]
"""

import argparse
import json

from treegen.weather import SynthConfig, corpus_stats, split_examples, synthesize_examples

parser = argparse.ArgumentParser()
parser.add_argument("--n", type=int, default=12)
parser.add_argument("--seed", type=int, default=42)
args = parser.parse_args()

examples = synthesize_examples(args.n, seed=args.seed)
train, test = split_examples(examples, 0.8)

print(f"Synthesized {len(examples)} examples (seed {args.seed}); "
      f"{len(train)} train / {len(test)} test.\n")

for example in examples[:4]:
    print("query:    ", example.query)
    print("mr:       ", example.mr)
    print("response: ", example.response)
    print()

print("Every example also stores the annotated response, the same text")
print("with bracket tokens marking which span realizes which argument:")
print(" ", examples[0].annotated_response)

stats = corpus_stats(train, test)
print("\nCorpus statistics:")
print(json.dumps(stats, indent=2, sort_keys=True))

cfg = SynthConfig(ellipsis_probability=0.0, temp_mean=95.0)
hot = synthesize_examples(6, seed=args.seed, config=cfg)
print("\nThe generator takes a config; here is a hotter climate with no")
print("ellipsis in the references:")
for example in hot[:2]:
    print("  ", example.response)
