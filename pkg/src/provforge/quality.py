"""Feature evaluation: measured values against nominal dimensions and tolerances.

All millimetre values are exact decimals with at most three fractional
digits; verdicts never depend on binary floating-point rounding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from enum import Enum

from .errors import (
    InvalidMeasurement,
    InvalidSpec,
    MissingMeasurement,
    ParseError,
    SchemaError,
    UnknownFeature,
)

# Smallest representable step; inputs with finer resolution are rejected.
MM_STEP = Decimal("0.001")


class FeatureKind(str, Enum):
    DIMENSION = "dimension"  # nominal value, symmetric +/- tolerance
    BAND = "band"            # no nominal, one-sided upper bound (e.g. flatness)


def _decimal_mm(value) -> Decimal:
    """Parse a millimetre value, enforcing decimal exactness (<= 3 places)."""
    if isinstance(value, float):
        raise ValueError("millimetre values must be strings or Decimal, not float")
    try:
        dec = Decimal(value)
    except (InvalidOperation, TypeError) as exc:
        raise ValueError(f"not a decimal value: {value!r}") from exc
    if not dec.is_finite():
        raise ValueError(f"millimetre value must be finite, got {value!r}")
    if dec % MM_STEP != 0:
        raise ValueError(f"{value!r} has finer resolution than {MM_STEP} mm")
    return dec


def format_mm(value: Decimal) -> str:
    """Fixed-point rendering that preserves the value's decimal places."""
    return format(value, "f")


@dataclass(frozen=True)
class FeatureSpec:
    """Nominal geometry and tolerance for one workpiece feature."""

    feature_id: str
    display_name: str
    kind: FeatureKind
    tolerance_mm: Decimal
    nominal_mm: Decimal | None = None
    description: str = ""

    def __post_init__(self):
        if not self.feature_id:
            raise InvalidSpec("feature_id must be non-empty")
        try:
            object.__setattr__(self, "tolerance_mm", _decimal_mm(self.tolerance_mm))
            if self.nominal_mm is not None:
                object.__setattr__(self, "nominal_mm", _decimal_mm(self.nominal_mm))
        except ValueError as exc:
            raise InvalidSpec(f"feature {self.feature_id!r}: {exc}") from exc
        if self.tolerance_mm < 0:
            raise InvalidSpec(f"feature {self.feature_id!r}: tolerance must be >= 0")
        if self.kind is FeatureKind.DIMENSION and self.nominal_mm is None:
            raise InvalidSpec(f"feature {self.feature_id!r}: dimension features need a nominal value")
        if self.kind is FeatureKind.BAND and self.nominal_mm is not None:
            raise InvalidSpec(f"feature {self.feature_id!r}: band features must not have a nominal value")


@dataclass(frozen=True)
class MeasurementRecord:
    feature_id: str
    actual_mm: Decimal
    deviation_mm: Decimal
    in_spec: bool


@dataclass(frozen=True)
class QualityReport:
    workpiece_id: str
    product_name: str
    records: tuple[MeasurementRecord, ...]
    created_at: datetime


def evaluate_feature(spec: FeatureSpec, actual_mm) -> MeasurementRecord:
    """Deviation and boundary-inclusive in-spec verdict for one feature."""
    try:
        actual = _decimal_mm(actual_mm)
    except ValueError as exc:
        raise InvalidMeasurement(f"feature {spec.feature_id!r}: {exc}") from exc
    if spec.kind is FeatureKind.BAND:
        if actual < 0:
            raise InvalidMeasurement(
                f"feature {spec.feature_id!r}: band measurements must be non-negative, got {actual}"
            )
        deviation = actual
    else:
        deviation = actual - spec.nominal_mm
    return MeasurementRecord(
        feature_id=spec.feature_id,
        actual_mm=actual,
        deviation_mm=deviation,
        in_spec=abs(deviation) <= spec.tolerance_mm,
    )


def evaluate_workpiece(
    specs: list[FeatureSpec],
    actuals: dict,
    workpiece_id: str,
    product_name: str = "",
    created_at: datetime | None = None,
) -> QualityReport:
    """One record per spec, in spec order; actuals must cover the specs exactly."""
    if not specs:
        raise InvalidSpec("workpiece definition has no features")
    spec_ids = [s.feature_id for s in specs]
    if len(set(spec_ids)) != len(spec_ids):
        raise InvalidSpec("feature_ids must be unique within a workpiece definition")
    for fid in actuals:
        if fid not in spec_ids:
            raise UnknownFeature(fid)
    records = []
    for spec in specs:
        if spec.feature_id not in actuals:
            raise MissingMeasurement(spec.feature_id)
        records.append(evaluate_feature(spec, actuals[spec.feature_id]))
    return QualityReport(
        workpiece_id=workpiece_id,
        product_name=product_name,
        records=tuple(records),
        created_at=created_at or datetime.now(timezone.utc),
    )


# --- file formats -------------------------------------------------------------
#
# Workpiece definition: {"workpiece_id", "product_name", "features": [...]}
# Measurements: flat map feature_id -> string-encoded decimal millimetres.
# Report: output of evaluate_workpiece, schema in docs/formats.md.


@dataclass(frozen=True)
class WorkpieceDefinition:
    workpiece_id: str
    product_name: str
    features: tuple[FeatureSpec, ...] = field(default_factory=tuple)


def _load_json(data: bytes | str, what: str) -> dict:
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{what}: malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError(f"{what}: top level must be a JSON object")
    return obj


def load_workpiece_definition(data: bytes | str) -> WorkpieceDefinition:
    obj = _load_json(data, "workpiece definition")
    extra = set(obj) - {"workpiece_id", "product_name", "features"}
    if extra:
        raise SchemaError(f"workpiece definition: unknown fields {sorted(extra)}")
    features_raw = obj.get("features")
    if not isinstance(features_raw, list) or not features_raw:
        raise SchemaError("workpiece definition: 'features' must be a non-empty list")
    features = []
    for entry in features_raw:
        if not isinstance(entry, dict):
            raise SchemaError("workpiece definition: each feature must be an object")
        unknown = set(entry) - {
            "feature_id", "display_name", "kind", "nominal_mm", "tolerance_mm", "description",
        }
        if unknown:
            raise SchemaError(f"workpiece definition: unknown feature fields {sorted(unknown)}")
        try:
            kind = FeatureKind(entry.get("kind", ""))
        except ValueError as exc:
            raise SchemaError(f"workpiece definition: {exc}") from exc
        try:
            features.append(
                FeatureSpec(
                    feature_id=entry.get("feature_id", ""),
                    display_name=entry.get("display_name", ""),
                    kind=kind,
                    tolerance_mm=entry.get("tolerance_mm", ""),
                    nominal_mm=entry.get("nominal_mm"),
                    description=entry.get("description", ""),
                )
            )
        except InvalidSpec as exc:
            raise SchemaError(f"workpiece definition: {exc}") from exc
    ids = [f.feature_id for f in features]
    if len(set(ids)) != len(ids):
        raise SchemaError("workpiece definition: duplicate feature_ids")
    return WorkpieceDefinition(
        workpiece_id=str(obj.get("workpiece_id", "")),
        product_name=str(obj.get("product_name", "")),
        features=tuple(features),
    )


def load_measurements(data: bytes | str) -> dict[str, Decimal]:
    """Measured actuals keyed by feature_id, string-encoded to stay exact."""
    obj = _load_json(data, "measurements")
    actuals: dict[str, Decimal] = {}
    for fid, value in obj.items():
        try:
            actuals[fid] = _decimal_mm(value)
        except ValueError as exc:
            raise SchemaError(f"measurements: feature {fid!r}: {exc}") from exc
    return actuals


def report_to_json(report: QualityReport) -> str:
    doc = {
        "workpiece_id": report.workpiece_id,
        "product_name": report.product_name,
        "created_at": report.created_at.isoformat(),
        "records": [
            {
                "feature_id": r.feature_id,
                "actual_mm": format_mm(r.actual_mm),
                "deviation_mm": format_mm(r.deviation_mm),
                "in_spec": r.in_spec,
            }
            for r in report.records
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def report_from_json(data: bytes | str) -> QualityReport:
    obj = _load_json(data, "quality report")
    extra = set(obj) - {"workpiece_id", "product_name", "created_at", "records"}
    if extra:
        raise SchemaError(f"quality report: unknown fields {sorted(extra)}")
    records_raw = obj.get("records")
    if not isinstance(records_raw, list) or not records_raw:
        raise SchemaError("quality report: 'records' must be a non-empty list")
    try:
        created_at = datetime.fromisoformat(str(obj.get("created_at", "")))
    except ValueError as exc:
        raise SchemaError(f"quality report: bad created_at: {exc}") from exc
    records = []
    for entry in records_raw:
        if not isinstance(entry, dict) or set(entry) != {"feature_id", "actual_mm", "deviation_mm", "in_spec"}:
            raise SchemaError("quality report: each record needs exactly feature_id/actual_mm/deviation_mm/in_spec")
        if not isinstance(entry["in_spec"], bool):
            raise SchemaError("quality report: in_spec must be a boolean")
        try:
            records.append(
                MeasurementRecord(
                    feature_id=str(entry["feature_id"]),
                    actual_mm=_decimal_mm(entry["actual_mm"]),
                    deviation_mm=_decimal_mm(entry["deviation_mm"]),
                    in_spec=entry["in_spec"],
                )
            )
        except ValueError as exc:
            raise SchemaError(f"quality report: {exc}") from exc
    ids = [r.feature_id for r in records]
    if len(set(ids)) != len(ids):
        raise SchemaError("quality report: duplicate feature_ids")
    return QualityReport(
        workpiece_id=str(obj.get("workpiece_id", "")),
        product_name=str(obj.get("product_name", "")),
        records=tuple(records),
        created_at=created_at,
    )
