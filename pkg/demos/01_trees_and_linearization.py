#!/usr/bin/env python3
"""Tour of the tree representation: parsing, linearizing, canonical form.

Usage:
    python3 demos/01_trees_and_linearization.py
"""

from treegen import (
    canonicalize,
    parse_linearized,
    parse_mr,
    signature,
    to_string,
    weather_ontology,
)
from treegen.trees import annotated_to_mr

ontology = weather_ontology()

MR = (
    "[JOIN [INFORM [location [city boston ] ] [condition rain ] ] "
    "[INFORM [temp 48 ] [condition_not snow ] ] ]"
)

print("A meaning representation is a bracketed tree:")
print(" ", MR)
tree = parse_mr(MR, ontology)
print("\nParsed nodes, depth-first:")
for node in tree.root.iter_nodes():
    value = f" = {node.value!r}" if node.value else ""
    print(f"  {node.kind.value:9s} {node.label}{value}")

print("\nCanonical form sorts a dialog act's arguments so that logically")
print("equal MRs serialize identically (relation children keep their order):")
print(" ", to_string(canonicalize(tree)))

print("\nThe signature drops values and keeps the label skeleton; scorers")
print("use it to bucket structurally similar examples:")
print(" ", signature(tree))

ANNOTATED = (
    "[JOIN [INFORM in [location [city boston ] ] , expect "
    "[condition rain ] today ] . [INFORM around [temp 48 ] degrees , "
    "and [condition_not snow ] is not expected ] . ]"
)

print("\nAn annotated response is the same tree with surface words woven in:")
print(" ", ANNOTATED)
annotated = parse_linearized(ANNOTATED, ontology)
projected = annotated_to_mr(annotated)
print("\nProjecting the response back to an MR recovers the input:")
print(" ", to_string(canonicalize(projected)))
match = to_string(canonicalize(projected)) == to_string(canonicalize(tree))
print("  matches the original:", match)
