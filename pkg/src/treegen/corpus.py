"""Corpus file format: one JSON object per line.

Each example carries the user query, its scenario context, the
linearized MR, the plain response text, and the bracket-annotated
response.  Delexicalized corpora additionally store the placeholder
table so the surface form can be restored.
"""

from __future__ import annotations

import json
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

from .delex import DelexTable
from .ontology import Ontology
from .trees import AnnotatedNode, MrTree, parse_linearized, parse_mr

REQUIRED_KEYS = ("query", "context", "mr", "response", "annotated_response")


class MalformedLine(ValueError):
    """A corpus line that is not valid JSON or misses required keys."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


@dataclass
class CorpusExample:
    query: str
    context: dict
    mr: str
    response: str
    annotated_response: str
    delex_table: list | None = None

    def mr_tree(self, ontology: Ontology) -> MrTree:
        return parse_mr(self.mr, ontology)

    def annotated_tree(self, ontology: Ontology) -> AnnotatedNode:
        return parse_linearized(self.annotated_response, ontology)

    def table(self) -> DelexTable:
        return DelexTable.from_json(self.delex_table or [])

    def to_json(self) -> dict:
        data = {
            "query": self.query,
            "context": self.context,
            "mr": self.mr,
            "response": self.response,
            "annotated_response": self.annotated_response,
        }
        if self.delex_table is not None:
            data["delex_table"] = self.delex_table
        return data

    @classmethod
    def from_json(cls, data: dict) -> "CorpusExample":
        return cls(
            query=data["query"],
            context=data["context"],
            mr=data["mr"],
            response=data["response"],
            annotated_response=data["annotated_response"],
            delex_table=data.get("delex_table"),
        )


def read_corpus(path) -> list[CorpusExample]:
    """Load a JSONL corpus; malformed lines fail with their line number."""
    examples: list[CorpusExample] = []
    with open(path, encoding="utf-8") as fh:
        for number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedLine(number, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(data, dict):
                raise MalformedLine(number, "line is not a JSON object")
            missing = [k for k in REQUIRED_KEYS if k not in data]
            if missing:
                raise MalformedLine(number, f"missing keys: {missing}")
            examples.append(CorpusExample.from_json(data))
    return examples


def write_corpus(path, examples: Iterable[CorpusExample]) -> None:
    """Write JSONL with stable key order, one example per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for example in examples:
            fh.write(json.dumps(example.to_json(), sort_keys=True))
            fh.write("\n")
