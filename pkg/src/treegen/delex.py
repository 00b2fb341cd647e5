"""Delexicalization of sparse argument values into placeholder tokens.

Values of arguments the ontology lists as delexicalized are swapped for
``__<LABEL>_<k>__`` tokens before training or decoding, and substituted
back afterwards.  Within one example, equal (label, value) pairs share a
placeholder by default, so repeated mentions stay recognizably equal to
the scorer; pass ``number_occurrences=True`` to number each occurrence
instead.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from dataclasses import dataclass, replace

from .ontology import Ontology
from .trees import AnnotatedNode, MrNode, MrTree

PLACEHOLDER_PATTERN = re.compile(r"^__[A-Z0-9_]+_\d+__$")


class UnknownPlaceholder(KeyError):
    """A placeholder token has no entry in this example's table.

    Seeing this during relexicalization means the decoder hallucinated a
    delexicalized slot that the input never provided.
    """


@dataclass(frozen=True)
class DelexEntry:
    placeholder: str
    label: str
    value: str


class DelexTable:
    """Ordered placeholder assignments for one example."""

    def __init__(self, entries: Sequence[DelexEntry] = ()):
        self.entries: list[DelexEntry] = list(entries)
        self._by_placeholder = {e.placeholder: e for e in self.entries}
        if len(self._by_placeholder) != len(self.entries):
            raise ValueError("duplicate placeholder in table")
        self._by_key = {(e.label, e.value): e for e in self.entries}
        self._label_counts: dict[str, int] = {}
        for entry in self.entries:
            self._label_counts[entry.label] = self._label_counts.get(entry.label, 0) + 1

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DelexTable) and self.entries == other.entries

    def value_of(self, placeholder: str) -> str:
        entry = self._by_placeholder.get(placeholder)
        if entry is None:
            raise UnknownPlaceholder(placeholder)
        return entry.value

    def assign(self, label: str, value: str, share: bool) -> str:
        """Placeholder for (label, value), minting a new one when needed."""
        if share:
            existing = self._by_key.get((label, value))
            if existing is not None:
                return existing.placeholder
        k = self._label_counts.get(label, 0) + 1
        placeholder = f"__{label.upper()}_{k}__"
        entry = DelexEntry(placeholder, label, value)
        self.entries.append(entry)
        self._by_placeholder[placeholder] = entry
        self._by_key.setdefault((label, value), entry)
        self._label_counts[label] = k
        return placeholder

    def to_json(self) -> list[list[str]]:
        return [[e.placeholder, e.label, e.value] for e in self.entries]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[str]]) -> "DelexTable":
        return cls([DelexEntry(p, l, v) for p, l, v in data])


def delexicalize(
    tree: MrTree | MrNode | AnnotatedNode,
    ontology: Ontology,
    table: DelexTable | None = None,
    number_occurrences: bool = False,
):
    """Replace listed argument values with placeholders.

    Returns (tree of the same type, table).  Pass the returned table into
    a second call to keep placeholders consistent across the MR and its
    annotated response.
    """
    if table is None:
        table = DelexTable()
    share = not number_occurrences
    listed = ontology.delexicalized

    def rewrite_mr(node: MrNode) -> MrNode:
        children = tuple(rewrite_mr(c) for c in node.children)
        value = node.value
        if value is not None and node.label in listed:
            value = table.assign(node.label, value, share)
        return replace(node, children=children, value=value)

    def rewrite_annotated(node: AnnotatedNode) -> AnnotatedNode:
        direct_words = [i for i in node.items if not isinstance(i, AnnotatedNode)]
        if node.label in listed and direct_words:
            # the argument's own surface words are its value, verbatim;
            # multi-word values collapse into a single placeholder (any
            # subspans keep their place after it)
            value = " ".join(direct_words)
            placeholder = table.assign(node.label, value, share)
            items = tuple(
                [placeholder] + [rewrite_annotated(i) for i in node.children()]
            )
            return replace(node, items=items)
        items = tuple(
            rewrite_annotated(i) if isinstance(i, AnnotatedNode) else i
            for i in node.items
        )
        return replace(node, items=items)

    if isinstance(tree, MrTree):
        return MrTree(rewrite_mr(tree.root)), table
    if isinstance(tree, MrNode):
        return rewrite_mr(tree), table
    return rewrite_annotated(tree), table


def delexicalize_example(
    mr: MrTree | MrNode,
    annotated: AnnotatedNode,
    ontology: Ontology,
    number_occurrences: bool = False,
):
    """Delexicalize an MR and its response against one shared table."""
    mr_out, table = delexicalize(mr, ontology, number_occurrences=number_occurrences)
    annotated_out, table = delexicalize(
        annotated, ontology, table=table, number_occurrences=number_occurrences
    )
    return mr_out, annotated_out, table


def relexicalize(tokens: str | Sequence[str], table: DelexTable) -> list[str]:
    """Substitute placeholder tokens back to their original values.

    Multi-word values expand to multiple tokens, inverting the collapse
    done by delexicalize.  A placeholder-shaped token missing from the
    table raises UnknownPlaceholder.
    """
    if isinstance(tokens, str):
        tokens = tokens.split()
    out: list[str] = []
    for token in tokens:
        if PLACEHOLDER_PATTERN.match(token):
            out.extend(table.value_of(token).split())
        else:
            out.append(token)
    return out
