"""Feature evaluation: exact decimal deviations and boundary-inclusive verdicts."""

import json
from datetime import datetime, timezone
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from provforge.errors import (
    InvalidMeasurement,
    InvalidSpec,
    MissingMeasurement,
    ParseError,
    SchemaError,
    UnknownFeature,
)
from provforge.quality import (
    FeatureKind,
    FeatureSpec,
    MeasurementRecord,
    evaluate_feature,
    evaluate_workpiece,
    format_mm,
    load_measurements,
    load_workpiece_definition,
    report_from_json,
    report_to_json,
)
from provforge.samples import sample_measurements_text, sample_workpiece_text

# measured demo workpiece: feature -> (deviation, in spec)
DEMO_EXPECTED = {
    "Height_Surface_1": (Decimal("0.05"), True),
    "Diameter_Surface_3": (Decimal("0.06"), True),
    "Diameter_Hole_1": (Decimal("-0.03"), True),
    "Height_Surface_3": (Decimal("-0.05"), True),
    "Flatness_Surface_1": (Decimal("0.10"), True),
}


def _dim(fid="F", nominal="10.00", tol="0.10"):
    return FeatureSpec(fid, fid, FeatureKind.DIMENSION, tolerance_mm=tol, nominal_mm=nominal)


def test_demo_workpiece_exact_results(sample_report):
    assert sample_report.workpiece_id == "DCS-0001"
    assert len(sample_report.records) == 5
    for rec in sample_report.records:
        deviation, verdict = DEMO_EXPECTED[rec.feature_id]
        assert rec.deviation_mm == deviation, rec.feature_id
        assert rec.in_spec is verdict, rec.feature_id


def test_deviation_is_exact_not_float():
    # 25.06 - 25.00 must be exactly 0.06, not 0.060000000000002274
    rec = evaluate_feature(_dim(nominal="25.00"), "25.06")
    assert rec.deviation_mm == Decimal("0.06")
    assert format_mm(rec.deviation_mm) == "0.06"


@pytest.mark.parametrize(
    "actual,expected",
    [
        ("10.10", True),   # exactly on the upper boundary
        ("9.90", True),    # exactly on the lower boundary
        ("10.101", False),
        ("9.899", False),
        ("10.00", True),
    ],
)
def test_dimension_boundaries_inclusive(actual, expected):
    assert evaluate_feature(_dim(), actual).in_spec is expected


def test_band_feature_semantics():
    band = FeatureSpec("Flat", "Flat", FeatureKind.BAND, tolerance_mm="0.10")
    rec = evaluate_feature(band, "0.10")
    assert rec.deviation_mm == Decimal("0.10")
    assert rec.in_spec is True
    assert evaluate_feature(band, "0.101").in_spec is False
    assert evaluate_feature(band, "0").in_spec is True
    with pytest.raises(InvalidMeasurement):
        evaluate_feature(band, "-0.01")


@pytest.mark.parametrize("bad", [0.05, "0.0001", "nan", "inf", "abc", None, "1e-4"])
def test_measurement_rejects_inexact_values(bad):
    with pytest.raises(InvalidMeasurement):
        evaluate_feature(_dim(), bad)


def test_measurement_accepts_decimal_and_int():
    assert evaluate_feature(_dim(), Decimal("10.05")).deviation_mm == Decimal("0.05")
    assert evaluate_feature(_dim(nominal="10"), 10).deviation_mm == 0


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        FeatureSpec("", "x", FeatureKind.DIMENSION, tolerance_mm="0.1", nominal_mm="1")
    with pytest.raises(InvalidSpec):
        FeatureSpec("F", "x", FeatureKind.DIMENSION, tolerance_mm="0.1")  # no nominal
    with pytest.raises(InvalidSpec):
        FeatureSpec("F", "x", FeatureKind.BAND, tolerance_mm="0.1", nominal_mm="1")
    with pytest.raises(InvalidSpec):
        FeatureSpec("F", "x", FeatureKind.DIMENSION, tolerance_mm="-0.1", nominal_mm="1")
    with pytest.raises(InvalidSpec):
        FeatureSpec("F", "x", FeatureKind.DIMENSION, tolerance_mm=0.1, nominal_mm="1")


def test_evaluate_workpiece_coverage_checks():
    specs = [_dim("A"), _dim("B")]
    with pytest.raises(MissingMeasurement):
        evaluate_workpiece(specs, {"A": "10.00"}, "W-1")
    with pytest.raises(UnknownFeature):
        evaluate_workpiece(specs, {"A": "10.00", "B": "10.00", "C": "1"}, "W-1")
    with pytest.raises(InvalidSpec):
        evaluate_workpiece([], {}, "W-1")
    with pytest.raises(InvalidSpec):
        evaluate_workpiece([_dim("A"), _dim("A")], {"A": "10.00"}, "W-1")


def test_records_follow_spec_order():
    specs = [_dim("B"), _dim("A")]
    report = evaluate_workpiece(specs, {"A": "10.00", "B": "10.00"}, "W-1")
    assert [r.feature_id for r in report.records] == ["B", "A"]


def test_bundled_workpiece_loads():
    definition = load_workpiece_definition(sample_workpiece_text())
    assert definition.workpiece_id == "DCS-0001"
    assert definition.product_name == "DiamondCicleSquare"
    kinds = {f.feature_id: f.kind for f in definition.features}
    assert kinds["Flatness_Surface_1"] is FeatureKind.BAND
    assert all(f.tolerance_mm == Decimal("0.10") for f in definition.features)
    actuals = load_measurements(sample_measurements_text())
    assert set(actuals) == set(kinds)


@pytest.mark.parametrize(
    "data,exc",
    [
        (b"not json", ParseError),
        (b"[]", SchemaError),
        (b'{"workpiece_id": "W", "features": []}', SchemaError),
        (b'{"workpiece_id": "W", "features": [{}], "bogus": 1}', SchemaError),
        (b'{"features": [{"feature_id": "F", "kind": "nope", "tolerance_mm": "0.1"}]}', SchemaError),
        (b'{"features": [{"feature_id": "F", "kind": "band", "tolerance_mm": "0.1", "extra": 1}]}', SchemaError),
        (b'{"features": [{"feature_id": "F", "kind": "dimension", "tolerance_mm": "0.1"}]}', SchemaError),
    ],
)
def test_workpiece_loader_rejects(data, exc):
    with pytest.raises(exc):
        load_workpiece_definition(data)


def test_measurements_loader_rejects_floats_and_bad_json():
    with pytest.raises(SchemaError):
        load_measurements(b'{"F": 0.05}')
    with pytest.raises(SchemaError):
        load_measurements(b'{"F": "0.0001"}')
    with pytest.raises(ParseError):
        load_measurements(b"{")


def test_report_json_round_trip(sample_report):
    text = report_to_json(sample_report)
    again = report_from_json(text)
    assert again == sample_report
    # values travel as strings so exactness survives serialization
    raw = json.loads(text)
    assert raw["records"][0]["actual_mm"] == "2.05"
    assert raw["records"][0]["deviation_mm"] == "0.05"


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(created_at="yesterday"),
        lambda d: d.update(records=[]),
        lambda d: d.update(extra=1),
        lambda d: d["records"][0].update(in_spec="True"),
        lambda d: d["records"][0].update(actual_mm=2.05),
        lambda d: d["records"][0].pop("deviation_mm"),
        lambda d: d["records"].append(dict(d["records"][0])),
    ],
)
def test_report_loader_rejects(sample_report, mutate):
    doc = json.loads(report_to_json(sample_report))
    mutate(doc)
    with pytest.raises(SchemaError):
        report_from_json(json.dumps(doc))


_mm = st.decimals(
    min_value=Decimal("-999.999"), max_value=Decimal("999.999"), places=3, allow_nan=False
)


@given(nominal=_mm, actual=_mm, tol=_mm.filter(lambda d: d >= 0))
def test_verdict_matches_definition(nominal, actual, tol):
    spec = FeatureSpec("F", "F", FeatureKind.DIMENSION, tolerance_mm=tol, nominal_mm=nominal)
    rec = evaluate_feature(spec, actual)
    assert rec.deviation_mm == actual - nominal
    assert rec.in_spec is (abs(actual - nominal) <= tol)


@given(actual=_mm.filter(lambda d: d >= 0), tol=_mm.filter(lambda d: d >= 0))
def test_band_verdict_matches_definition(actual, tol):
    spec = FeatureSpec("F", "F", FeatureKind.BAND, tolerance_mm=tol)
    rec = evaluate_feature(spec, actual)
    assert rec.deviation_mm == actual
    assert rec.in_spec is (actual <= tol)


def test_report_created_at_preserved():
    created = datetime(2026, 3, 1, 12, 0, 0, tzinfo=timezone.utc)
    report = evaluate_workpiece([_dim("A")], {"A": "10.00"}, "W-1", created_at=created)
    assert report_from_json(report_to_json(report)).created_at == created


def test_measurement_record_is_plain_data():
    rec = MeasurementRecord("F", Decimal("1"), Decimal("0"), True)
    with pytest.raises(AttributeError):
        rec.in_spec = False
