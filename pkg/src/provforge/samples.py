"""Bundled sample inputs: a five-feature milled demo workpiece.

The Diamond-Circle-Square piece carries four dimensional features with
symmetric 0.10 mm tolerances and one flatness band, plus one set of
measured actuals. Useful for smoke tests and as a template for real
workpiece definitions.
"""

from __future__ import annotations

from decimal import Decimal
from importlib import resources

from .quality import WorkpieceDefinition, load_measurements, load_workpiece_definition

WORKPIECE_FILENAME = "diamond_circle_square.json"
MEASUREMENTS_FILENAME = "diamond_circle_square_measurements.json"


def _data_text(name: str) -> str:
    return resources.files("provforge").joinpath("data", name).read_text(encoding="utf-8")


def sample_workpiece_text() -> str:
    return _data_text(WORKPIECE_FILENAME)


def sample_measurements_text() -> str:
    return _data_text(MEASUREMENTS_FILENAME)


def sample_workpiece() -> WorkpieceDefinition:
    return load_workpiece_definition(sample_workpiece_text())


def sample_measurements() -> dict[str, Decimal]:
    return load_measurements(sample_measurements_text())
