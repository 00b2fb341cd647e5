#!/usr/bin/env python3
"""Swap argument values for placeholders and back again.

Usage:
    python3 demos/06_delexicalization.py

City names, temperatures, and dates are open-class: a scorer trained on
raw text burns capacity memorizing them and still meets unseen ones at
decode time.  Delexicalization rewrites both the MR and its response so
each listed value becomes a placeholder like __CITY_1__, the model
trains on the template, and the table turns placeholders back into
grounded text afterwards.
"""

from treegen import (
    DelexTable,
    delexicalize_example,
    relexicalize,
    to_string,
    weather_ontology,
)
from treegen.weather import synthesize_examples

ontology = weather_ontology()
print("argument labels that get placeholders:")
print("  ", ", ".join(sorted(ontology.delexicalized)), "\n")

example = next(
    ex for ex in synthesize_examples(50, seed=3) if "[city" in ex.mr
)
mr = example.mr_tree(ontology)
annotated = example.annotated_tree(ontology)

mr_out, annotated_out, table = delexicalize_example(mr, annotated, ontology)
print("original MR:")
print("  ", example.mr)
print("delexicalized MR:")
print("  ", to_string(mr_out))
print()
print("delexicalized response:")
print("  ", to_string(annotated_out))
print()
print("table:")
for entry in table.entries:
    print(f"   {entry.placeholder:>24} -> {entry.value}")
print()

# The table inverts the rewrite exactly.
restored = relexicalize(to_string(annotated_out), table)
print("relexicalize(delexicalize(x)) == x:",
      " ".join(restored) == example.annotated_response)
print()

# And a different table re-grounds the same template elsewhere.
swapped = DelexTable.from_json(
    [[p, label, "reykjavik" if label == "city" else v]
     for p, label, v in table.to_json()]
)
print("same template, city swapped in the table:")
print("  ", " ".join(
    t for t in relexicalize(to_string(annotated_out), swapped)
    if t != "]" and not t.startswith("[")
))
