"""Ontologies: the label inventory that meaning representations draw from.

An ontology declares three disjoint label sets (discourse relations, dialog
acts, arguments), the subfield structure of nested arguments, polarity and
summary variants, and which arguments carry sparse values that should be
delexicalized before training a scorer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field


class NodeKind(enum.Enum):
    """What role a labelled node plays in a meaning representation."""

    RELATION = "relation"
    ACT = "act"
    ARGUMENT = "argument"


class UnknownLabel(KeyError):
    """A label that the ontology does not declare."""


@dataclass(frozen=True)
class ArgumentSpec:
    """One argument slot.

    has_not adds a `<name>_not` polarity variant, has_summary a
    `<name>_summary` variant.  subfields lists nested argument names
    (nested arguments hold subfields instead of a direct value).
    """

    name: str
    has_not: bool = False
    has_summary: bool = False
    subfields: tuple[str, ...] = ()

    def variants(self) -> list[str]:
        names = [self.name]
        if self.has_not:
            names.append(self.name + "_not")
        if self.has_summary:
            names.append(self.name + "_summary")
        return names


@dataclass(frozen=True)
class Ontology:
    """Label inventory for one domain.

    Dialog act and relation labels are canonically upper-case; argument
    labels keep their declared spelling.  Lookup is case-insensitive and
    numeric display suffixes (INFORM_1) are not part of any label.
    """

    name: str
    dialog_acts: frozenset[str]
    discourse_relations: frozenset[str]
    arguments: tuple[ArgumentSpec, ...]
    delexicalized: frozenset[str] = frozenset()
    _lookup: dict[str, tuple[NodeKind, str]] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        lookup: dict[str, tuple[NodeKind, str]] = {}

        def add(label: str, kind: NodeKind) -> None:
            key = label.lower()
            prior = lookup.get(key)
            if prior is not None and prior != (kind, label):
                raise ValueError(f"label {label!r} declared twice with different roles")
            lookup[key] = (kind, label)

        for act in self.dialog_acts:
            add(act.upper(), NodeKind.ACT)
        for rel in self.discourse_relations:
            add(rel.upper(), NodeKind.RELATION)
        for spec in self.arguments:
            for variant in spec.variants():
                add(variant, NodeKind.ARGUMENT)
            for sub in spec.subfields:
                add(sub, NodeKind.ARGUMENT)
        object.__setattr__(self, "_lookup", lookup)

    def classify(self, label: str) -> tuple[NodeKind, str]:
        """Resolve a raw label to (kind, canonical spelling).

        Case-insensitive; a trailing numeric display suffix (`_2`) is
        ignored.  Raises UnknownLabel for anything undeclared.
        """
        key = label.lower()
        found = self._lookup.get(key)
        if found is None:
            base, _, tail = key.rpartition("_")
            if base and tail.isdigit():
                found = self._lookup.get(base)
        if found is None:
            raise UnknownLabel(label)
        return found

    def is_known(self, label: str) -> bool:
        try:
            self.classify(label)
        except UnknownLabel:
            return False
        return True

    def subfields_of(self, label: str) -> tuple[str, ...]:
        for spec in self.arguments:
            if label in spec.variants():
                return spec.subfields
        return ()

    def argument_names(self) -> list[str]:
        """All argument labels, variants and subfields included."""
        names: list[str] = []
        for spec in self.arguments:
            names.extend(spec.variants())
            for sub in spec.subfields:
                if sub not in names:
                    names.append(sub)
        return names

    def with_arguments(self, *specs: ArgumentSpec) -> "Ontology":
        """A copy of this ontology with extra argument slots declared."""
        return Ontology(
            name=self.name,
            dialog_acts=self.dialog_acts,
            discourse_relations=self.discourse_relations,
            arguments=self.arguments + specs,
            delexicalized=self.delexicalized,
        )


DATE_SUBFIELDS = ("year", "month", "day", "weekday", "colloquial")
DATE_RANGE_SUBFIELDS = (
    "start_year", "start_month", "start_day", "start_weekday",
    "end_year", "end_month", "end_day", "end_weekday", "colloquial",
)
LOCATION_SUBFIELDS = ("city", "region", "country", "colloquial")


def weather_ontology() -> Ontology:
    """The weather-domain ontology used by the synthetic corpus."""
    args = (
        ArgumentSpec("date_time", subfields=DATE_SUBFIELDS),
        ArgumentSpec("date_time_range", subfields=DATE_RANGE_SUBFIELDS),
        ArgumentSpec("location", subfields=LOCATION_SUBFIELDS),
        ArgumentSpec("attire", has_not=True),
        ArgumentSpec("activity", has_not=True),
        ArgumentSpec("condition", has_not=True),
        ArgumentSpec("humidity", has_not=True),
        ArgumentSpec("precip_amount"),
        ArgumentSpec("precip_amount_unit"),
        ArgumentSpec("precip_chance"),
        ArgumentSpec("precip_chance_summary"),
        ArgumentSpec("precip_type"),
        ArgumentSpec("sunrise_time"),
        ArgumentSpec("temp"),
        ArgumentSpec("temp_high", has_summary=True),
        ArgumentSpec("temp_low", has_summary=True),
        ArgumentSpec("temp_unit"),
        ArgumentSpec("wind_speed", has_not=True),
        ArgumentSpec("wind_speed_unit"),
        ArgumentSpec("sunset_time"),
        ArgumentSpec("task"),
        ArgumentSpec("bad_arg"),
        ArgumentSpec("bad_value"),
        ArgumentSpec("error_reason"),
    )
    delex = frozenset(
        {
            "temp", "temp_high", "temp_low",
            "temp_high_summary", "temp_low_summary",
            "precip_chance",
            "day", "month", "year", "weekday",
            "start_day", "start_month", "start_year", "start_weekday",
            "end_day", "end_month", "end_year", "end_weekday",
            "city", "region", "country",
        }
    )
    return Ontology(
        name="weather",
        dialog_acts=frozenset({"INFORM", "RECOMMEND", "YES", "NO", "ERROR"}),
        discourse_relations=frozenset({"JOIN", "CONTRAST", "JUSTIFY"}),
        arguments=args,
        delexicalized=delex,
    )


def restaurant_ontology() -> Ontology:
    """Flat restaurant-domain ontology (sparse name/near values delexicalized)."""
    args = (
        ArgumentSpec("name"),
        ArgumentSpec("eatType"),
        ArgumentSpec("food"),
        ArgumentSpec("pricerange"),
        ArgumentSpec("customerrating"),
        ArgumentSpec("rating"),
        ArgumentSpec("area"),
        ArgumentSpec("familyFriendly"),
        ArgumentSpec("near"),
    )
    return Ontology(
        name="restaurant",
        dialog_acts=frozenset({"INFORM", "RECOMMEND"}),
        discourse_relations=frozenset({"JOIN", "CONTRAST"}),
        arguments=args,
        delexicalized=frozenset({"name", "near"}),
    )
