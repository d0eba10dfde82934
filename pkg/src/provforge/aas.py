"""Quality-record documents shaped like the machining quality-control submodel
of an Asset Administration Shell, with canonical byte serialization.

Canonical form (UTF-8, lexicographically sorted keys, no insignificant
whitespace) makes equal documents byte-identical, which in turn makes their
content identifiers deterministic.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

from .errors import ParseError, SchemaError, SpecReportMismatch
from .quality import FeatureSpec, QualityReport, format_mm

SUBMODEL_ID = "QualityControlForMachining"
ELEMENT_PREFIX = "MetrologyData_"

_HEADER_KEYS = {"AssetId", "SubmodelId", "Producer", "StepIndex"}
_ELEMENT_KEYS = {"QualityActualValue", "Description", "QualityInSpec"}
_ELEMENT_KEY_RE = re.compile(r"^MetrologyData_.+$")


@dataclass(frozen=True)
class MetrologyElement:
    """Measured value, description and verdict for one feature.

    The actual value keeps the exact decimal rendering it was built with;
    the verdict is serialized as the strings "True"/"False".
    """

    quality_actual_value: str
    description: str
    quality_in_spec: bool


@dataclass(frozen=True)
class QualityRecordDocument:
    asset_id: str
    producer: str
    step_index: int
    elements: dict[str, MetrologyElement] = field(default_factory=dict)
    submodel_id: str = SUBMODEL_ID

    def __post_init__(self):
        if self.step_index < 0:
            raise SchemaError("step_index must be non-negative")
        if not self.elements:
            raise SchemaError("document must contain at least one metrology element")
        for key in self.elements:
            if not _ELEMENT_KEY_RE.match(key):
                raise SchemaError(f"element key {key!r} must match {ELEMENT_PREFIX}<FeatureId>")

    def feature_ids(self) -> list[str]:
        return [key[len(ELEMENT_PREFIX):] for key in self.elements]


def element_key(feature_id: str) -> str:
    return ELEMENT_PREFIX + feature_id


def build_document(
    report: QualityReport,
    specs: list[FeatureSpec],
    producer: str,
    step_index: int,
) -> QualityRecordDocument:
    """One element per measurement record, descriptions copied from the specs."""
    report_ids = {r.feature_id for r in report.records}
    spec_by_id = {s.feature_id: s for s in specs}
    if not report.records:
        raise SpecReportMismatch("report has no measurement records")
    if report_ids != set(spec_by_id):
        missing = sorted(set(spec_by_id) - report_ids)
        extra = sorted(report_ids - set(spec_by_id))
        raise SpecReportMismatch(
            f"report and specs cover different features (missing={missing}, extra={extra})"
        )
    elements = {
        element_key(r.feature_id): MetrologyElement(
            quality_actual_value=format_mm(r.actual_mm),
            description=spec_by_id[r.feature_id].description,
            quality_in_spec=r.in_spec,
        )
        for r in report.records
    }
    return QualityRecordDocument(
        asset_id=report.workpiece_id,
        producer=producer,
        step_index=step_index,
        elements=elements,
    )


def canonical_json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def element_to_obj(element: MetrologyElement) -> dict:
    return {
        "QualityActualValue": element.quality_actual_value,
        "Description": element.description,
        "QualityInSpec": "True" if element.quality_in_spec else "False",
    }


def serialize_canonical(doc: QualityRecordDocument) -> bytes:
    obj = {
        "AssetId": doc.asset_id,
        "SubmodelId": doc.submodel_id,
        "Producer": doc.producer,
        "StepIndex": doc.step_index,
    }
    for key, element in doc.elements.items():
        obj[key] = element_to_obj(element)
    return canonical_json_bytes(obj)


def _parse_element(key: str, obj) -> MetrologyElement:
    if not isinstance(obj, dict):
        raise SchemaError(f"element {key!r} must be an object")
    if set(obj) != _ELEMENT_KEYS:
        raise SchemaError(
            f"element {key!r} must have exactly the keys {sorted(_ELEMENT_KEYS)}, got {sorted(obj)}"
        )
    value = obj["QualityActualValue"]
    if not isinstance(value, str):
        raise SchemaError(f"element {key!r}: QualityActualValue must be a string")
    try:
        if not Decimal(value).is_finite():
            raise InvalidOperation
    except InvalidOperation as exc:
        raise SchemaError(f"element {key!r}: QualityActualValue {value!r} is not a decimal") from exc
    in_spec = obj["QualityInSpec"]
    if in_spec not in ("True", "False"):
        raise SchemaError(f"element {key!r}: QualityInSpec must be 'True' or 'False'")
    description = obj["Description"]
    if not isinstance(description, str):
        raise SchemaError(f"element {key!r}: Description must be a string")
    return MetrologyElement(
        quality_actual_value=value,
        description=description,
        quality_in_spec=(in_spec == "True"),
    )


def parse_document(data: bytes) -> QualityRecordDocument:
    """Inverse of serialize_canonical; rejects unknown top-level fields."""
    try:
        obj = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"quality record: malformed JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("quality record: top level must be a JSON object")
    missing = _HEADER_KEYS - set(obj)
    if missing:
        raise SchemaError(f"quality record: missing header fields {sorted(missing)}")
    for key in ("AssetId", "SubmodelId", "Producer"):
        if not isinstance(obj[key], str):
            raise SchemaError(f"quality record: {key} must be a string")
    if not isinstance(obj["StepIndex"], int) or isinstance(obj["StepIndex"], bool):
        raise SchemaError("quality record: StepIndex must be an integer")
    if obj["SubmodelId"] != SUBMODEL_ID:
        raise SchemaError(f"quality record: SubmodelId must be {SUBMODEL_ID!r}")
    elements = {}
    for key, value in obj.items():
        if key in _HEADER_KEYS:
            continue
        if not _ELEMENT_KEY_RE.match(key):
            raise SchemaError(f"quality record: unknown top-level field {key!r}")
        elements[key] = _parse_element(key, value)
    if not elements:
        raise SchemaError("quality record: no metrology elements")
    return QualityRecordDocument(
        asset_id=obj["AssetId"],
        producer=obj["Producer"],
        step_index=obj["StepIndex"],
        elements=elements,
    )
