"""Python bindings for the sleepcot core.

Structured results come back from C++ as JSON and are decoded here.
"""

import json as _json

from . import _sleepcot
from ._sleepcot import SleepcotError, exact_match, normalize_answer, synthesize_rr, validate_report as _validate

__all__ = [
    "SleepcotError",
    "aggregate",
    "assess",
    "check_printed_average",
    "compute_metrics",
    "exact_match",
    "exemplar_report",
    "normalize_answer",
    "render_report",
    "run_cli",
    "score_em",
    "synthesize_reports",
    "synthesize_rr",
    "validate_report",
]


def compute_metrics(rr_ms):
    return _json.loads(_sleepcot.compute_metrics(list(rr_ms)))


def synthesize_reports(n, seed=42):
    return _json.loads(_sleepcot.synthesize_reports(n, seed))


def exemplar_report():
    return _json.loads(_sleepcot.exemplar_report())


def validate_report(report):
    return _validate(_json.dumps(report))


def render_report(report):
    return _sleepcot.render_report(_json.dumps(report))


def assess(report):
    return _json.loads(_sleepcot.assess(_json.dumps(report)))


def score_em(predictions, golds):
    return _json.loads(_sleepcot.score_em(list(predictions), list(golds)))


def aggregate(scores, system="system"):
    """scores: iterable of (personalization, relevance, completeness, accuracy)."""
    return _json.loads(_sleepcot.aggregate([tuple(s) for s in scores], system))


def check_printed_average(means, printed, decimals=1):
    return _json.loads(_sleepcot.check_printed_average(tuple(means), printed, decimals))


def run_cli(*args):
    """Runs the CLI in-process. Returns (exit_code, stdout, stderr)."""
    return _sleepcot.run_cli([str(a) for a in args])
