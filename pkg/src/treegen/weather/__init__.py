"""Synthetic weather domain: scenarios, forecasts, MR rules, realization."""

from .scenario import SynthConfig, QueryScenario, sample_scenario
from .forecast import Forecast, ForecastPoint, generate_forecast
from .rules import build_mr
from .realize import NoTemplate, realize
from .synth import (
    corpus_stats,
    split_examples,
    synthesize_corpus,
    synthesize_example,
    synthesize_examples,
)

__all__ = [
    "SynthConfig",
    "QueryScenario",
    "sample_scenario",
    "Forecast",
    "ForecastPoint",
    "generate_forecast",
    "build_mr",
    "NoTemplate",
    "realize",
    "synthesize_corpus",
    "synthesize_example",
    "synthesize_examples",
    "split_examples",
    "corpus_stats",
]
