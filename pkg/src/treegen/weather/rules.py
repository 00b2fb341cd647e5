"""Rule-based MR construction from a scenario and its forecast.

Rules apply in a fixed order: error acts short-circuit everything,
similar consecutive points aggregate into one INFORM, opposing adjacent
INFORMs pair up under CONTRAST, boolean queries get a YES/NO verdict,
and activity queries become a RECOMMEND justified by an INFORM.
"""

from __future__ import annotations

from dataclasses import replace
from datetime import datetime, timedelta

from ..ontology import NodeKind
from ..trees import MrNode, MrTree, canonicalize
from .forecast import Forecast, ForecastPoint
from .scenario import QueryScenario, SynthConfig

MONTHS = (
    "january", "february", "march", "april", "may", "june", "july",
    "august", "september", "october", "november", "december",
)
WEEKDAYS = (
    "monday", "tuesday", "wednesday", "thursday", "friday",
    "saturday", "sunday",
)

WINDY_MPH = 18
GALE_MPH = 25
COLD_F = 40.0
HOT_F = 85.0


def _arg(label: str, value: str | None = None,
         children: tuple[MrNode, ...] = ()) -> MrNode:
    return MrNode(NodeKind.ARGUMENT, label, children, value)


def _act(label: str, *children: MrNode) -> MrNode:
    return MrNode(NodeKind.ACT, label, tuple(children))


def _rel(label: str, *children: MrNode) -> MrNode:
    return MrNode(NodeKind.RELATION, label, tuple(children))


def precip_band(chance: int) -> str:
    if chance < 20:
        return "unlikely"
    if chance <= 50:
        return "chance"
    if chance <= 80:
        return "likely"
    return "very_likely"


def cloud_band(cloud: int) -> str:
    if cloud <= 25:
        return "sunny"
    if cloud <= 60:
        return "partly"
    return "cloudy"


def group_key(point: ForecastPoint, config: SynthConfig) -> tuple:
    """Bucketed attributes; equal keys mean 'similar weather'."""
    temp = point.temp_high if point.daily else point.temp
    return (
        int(temp) // config.temp_bucket_degrees,
        precip_band(point.precip_chance),
        cloud_band(point.cloud),
    )


def group_consecutive(points: tuple[ForecastPoint, ...],
                      config: SynthConfig) -> list[list[ForecastPoint]]:
    groups: list[list[ForecastPoint]] = []
    for point in points:
        if groups and group_key(groups[-1][-1], config) == group_key(point, config):
            groups[-1].append(point)
        else:
            groups.append([point])
    return groups


def _date_subfields(when: datetime, reference: datetime) -> tuple[MrNode, ...]:
    if when.date() == (reference + timedelta(days=1)).date():
        return (_arg("colloquial", "tomorrow"),)
    return (
        _arg("weekday", WEEKDAYS[when.weekday()]),
        _arg("month", MONTHS[when.month - 1]),
        _arg("day", str(when.day)),
    )


def _hour_colloquial(when: datetime) -> str:
    if 5 <= when.hour < 12:
        return "this morning"
    if 12 <= when.hour < 17:
        return "this afternoon"
    if 17 <= when.hour < 22:
        return "this evening"
    return "tonight"


def _date_time(when: datetime, reference: datetime) -> MrNode:
    return _arg("date_time", children=_date_subfields(when, reference))


def _date_range(start: datetime, end: datetime) -> MrNode:
    return _arg(
        "date_time_range",
        children=(
            _arg("start_weekday", WEEKDAYS[start.weekday()]),
            _arg("start_month", MONTHS[start.month - 1]),
            _arg("start_day", str(start.day)),
            _arg("end_weekday", WEEKDAYS[end.weekday()]),
            _arg("end_month", MONTHS[end.month - 1]),
            _arg("end_day", str(end.day)),
        ),
    )


def _group_date(group: list[ForecastPoint], scenario: QueryScenario) -> MrNode:
    first, last = group[0], group[-1]
    if not first.daily:
        return _arg(
            "date_time", children=(_arg("colloquial", _hour_colloquial(first.when)),)
        )
    if first.when.date() == last.when.date():
        return _date_time(first.when, scenario.reference)
    return _date_range(first.when, last.when)


def _span_date(points: tuple[ForecastPoint, ...],
               scenario: QueryScenario) -> MrNode:
    """Date argument covering all points at once."""
    return _group_date(list(points), scenario)


def _decade_phrase(temp: int) -> str:
    decade = (temp // 10) * 10
    return "single digits" if decade <= 0 else f"{decade}s"


def _inform_for_group(group: list[ForecastPoint],
                      scenario: QueryScenario) -> MrNode:
    first = group[0]
    args = [
        _group_date(group, scenario),
        _arg("condition", first.condition),
    ]
    if first.daily:
        if len(group) == 1:
            args.append(_arg("temp_high", str(first.temp_high)))
            args.append(_arg("temp_low", str(first.temp_low)))
        else:
            high = max(p.temp_high for p in group if p.temp_high is not None)
            low = min(p.temp_low for p in group if p.temp_low is not None)
            args.append(_arg("temp_high_summary", _decade_phrase(high)))
            args.append(_arg("temp_low_summary", _decade_phrase(low)))
    else:
        args.append(_arg("temp", str(first.temp)))
    if precip_band(first.precip_chance) != "unlikely":
        chance = max(p.precip_chance for p in group)
        args.append(_arg("precip_chance", str(chance)))
        args.append(_arg("precip_type", first.precip_type))
    if first.wind >= WINDY_MPH:
        args.append(_arg("wind_speed", str(first.wind)))
    return _act("INFORM", *args)


def _condition_value(act: MrNode) -> str | None:
    for child in act.children:
        if child.label == "condition":
            return child.value
    return None


def _wrap_contrasts(acts: list[MrNode], config: SynthConfig) -> list[MrNode]:
    """Pair adjacent INFORMs whose condition values oppose."""
    out: list[MrNode] = []
    i = 0
    while i < len(acts):
        if i + 1 < len(acts):
            a, b = _condition_value(acts[i]), _condition_value(acts[i + 1])
            if a and b and config.opposes(a, b):
                out.append(_rel("CONTRAST", acts[i], acts[i + 1]))
                i += 2
                continue
        out.append(acts[i])
        i += 1
    return out


def _forecast_acts(scenario: QueryScenario, forecast: Forecast,
                   config: SynthConfig) -> list[MrNode]:
    groups = group_consecutive(forecast.points, config)
    informs = [_inform_for_group(g, scenario) for g in groups]
    return _wrap_contrasts(informs, config)


def _boolean_acts(scenario: QueryScenario, forecast: Forecast,
                  config: SynthConfig) -> list[MrNode]:
    topic = scenario.boolean_topic or ""
    occurs = [
        p for p in forecast.points
        if p.precip_type == topic and p.precip_chance > 50
    ]
    if occurs:
        return [_act("YES"), *_forecast_acts(scenario, forecast, config)]
    other = [
        p for p in forecast.points
        if p.precip_type not in ("none", topic) and p.precip_chance > 50
    ]
    if other:
        # asked about one precipitation type, a different one is coming:
        # deny the topic, contrast with what actually falls
        point = other[0]
        date = _group_date([point], scenario)
        denial = _act("INFORM", _arg("condition_not", topic), date)
        actual = _act(
            "INFORM",
            _arg("condition", point.condition),
            _arg("precip_chance", str(point.precip_chance)),
            _arg("precip_type", point.precip_type),
            _group_date([point], scenario),
        )
        return [_act("NO"), _rel("CONTRAST", denial, actual)]
    date = _span_date(forecast.points, scenario)
    return [_act("NO"), _act("INFORM", _arg("condition_not", topic), date)]


def _activity_acts(scenario: QueryScenario, forecast: Forecast,
                   config: SynthConfig) -> list[MrNode]:
    points = forecast.points
    rainy = [p for p in points if p.precip_chance > 50]
    temps = [p.temp_high if p.daily else p.temp for p in points]
    avg_temp = sum(t for t in temps if t is not None) / len(temps)
    gusty = max(p.wind for p in points) >= GALE_MPH
    date = _span_date(points, scenario)
    first = points[0]
    if not rainy and not gusty and COLD_F <= avg_temp <= HOT_F:
        nucleus = _act("RECOMMEND", _arg("activity", scenario.activity or ""))
        temp_arg = (
            _arg("temp_high", str(first.temp_high))
            if first.daily
            else _arg("temp", str(first.temp))
        )
        evidence = _act(
            "INFORM", _arg("condition", first.condition), temp_arg, date
        )
        return [_rel("JUSTIFY", nucleus, evidence)]
    nucleus = _act("RECOMMEND", _arg("activity_not", scenario.activity or ""))
    if rainy:
        point = rainy[0]
        evidence = _act(
            "INFORM",
            _arg("condition", point.condition),
            _arg("precip_chance", str(point.precip_chance)),
            _arg("precip_type", point.precip_type),
            date,
        )
    elif gusty:
        evidence = _act(
            "INFORM",
            _arg("wind_speed", str(max(p.wind for p in points))),
            date,
        )
    else:
        temp_arg = (
            _arg("temp_high", str(first.temp_high))
            if first.daily
            else _arg("temp", str(first.temp))
        )
        evidence = _act(
            "INFORM", _arg("condition", first.condition), temp_arg, date
        )
    return [_rel("JUSTIFY", nucleus, evidence)]


def _error_act(scenario: QueryScenario) -> MrNode:
    if scenario.unknown_location:
        return _act(
            "ERROR",
            _arg("task", "get the forecast"),
            _arg("bad_arg", "location"),
            _arg("bad_value", scenario.location),
            _arg("error_reason", "unknown location"),
        )
    days = scenario.start_hours // 24
    return _act(
        "ERROR",
        _arg("task", "get the forecast"),
        _arg("bad_arg", "date"),
        _arg("bad_value", f"{days} days"),
        _arg("error_reason", "beyond the forecast horizon"),
    )


def _attach_location(acts: list[MrNode], scenario: QueryScenario) -> list[MrNode]:
    """Add the queried location to the first INFORM act, if any."""
    location = _arg("location", children=(_arg("city", scenario.location),))
    done = False

    def rec(node: MrNode) -> MrNode:
        nonlocal done
        if done:
            return node
        if node.kind is NodeKind.ACT and node.label == "INFORM":
            done = True
            return replace(node, children=(location,) + node.children)
        if node.kind is NodeKind.RELATION:
            return replace(node, children=tuple(rec(c) for c in node.children))
        return node

    return [rec(node) for node in acts]


def build_mr(scenario: QueryScenario, forecast: Forecast,
             config: SynthConfig | None = None) -> MrTree:
    """Apply the construction rules; returns a canonicalized tree."""
    config = config or SynthConfig()
    if scenario.out_of_range or scenario.unknown_location:
        return canonicalize(MrTree(_error_act(scenario)))
    if scenario.boolean_topic:
        acts = _boolean_acts(scenario, forecast, config)
    elif scenario.activity:
        acts = _activity_acts(scenario, forecast, config)
    else:
        acts = _forecast_acts(scenario, forecast, config)
    acts = _attach_location(acts, scenario)
    return canonicalize(MrTree.from_nodes(acts))
