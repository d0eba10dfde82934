"""End-to-end pipeline: quality report to sealed blob to minted token, and back.

Publishing turns a quality report into an encrypted canonical document,
stores it, wraps its address in a small cleartext metadata document (the
part a marketplace would render), stores that too, and anchors the
metadata address in the token ledger. Verification walks the token's URI
history in reverse order of trust: ledger chain, metadata bytes against
their CID, sealed payload bytes against their CID, envelope decryption,
document parse, and finally a recomputation of every in-spec verdict from
the recorded actual values. Per-step failures are collected, never fatal;
verification writes nothing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from typing import Callable, Mapping, Sequence

from .aas import ELEMENT_PREFIX, build_document, parse_document, serialize_canonical
from .cid import Cid, format_uri, parse_uri
from .cid import verify as cid_verify
from .envelope import EncryptedEnvelope, SymmetricKey, decrypt, encrypt
from .errors import (
    IntegrityViolation,
    InvalidUri,
    ParseError,
    ProvForgeError,
    SchemaError,
)
from .ledger import Address, LedgerState, add_token_uri, mint_token, token_uris, verify_chain
from .quality import FeatureSpec, QualityReport, evaluate_feature
from .store import BlobStore

HIDDEN_CONTENT_KEY = "hidden content"
_METADATA_KEYS = {"name", "description", "image", "attributes", HIDDEN_CONTENT_KEY}


@dataclass(frozen=True)
class MetadataHeader:
    """Cleartext display fields of a token's metadata document."""

    name: str
    description: str
    image: str
    attributes: tuple = ()

    def __post_init__(self):
        for label in ("name", "description", "image"):
            value = getattr(self, label)
            if not isinstance(value, str) or not value:
                raise SchemaError(f"metadata {label} must be a non-empty string")
        parse_uri(self.image)  # image must address a stored blob


def build_metadata(header: MetadataHeader, payload_cid: Cid) -> bytes:
    """Canonical metadata bytes linking to the sealed payload."""
    obj = {
        "name": header.name,
        "description": header.description,
        "image": header.image,
        "attributes": list(header.attributes),
        HIDDEN_CONTENT_KEY: {"ipfs_hash": format_uri(payload_cid)},
    }
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def parse_metadata(data: bytes) -> tuple[MetadataHeader, Cid]:
    try:
        obj = json.loads(data)
    except (ValueError, UnicodeDecodeError) as exc:
        raise ParseError(f"metadata is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("metadata must be a JSON object")
    if set(obj) != _METADATA_KEYS:
        raise SchemaError(f"metadata must carry exactly the keys {sorted(_METADATA_KEYS)}")
    if not isinstance(obj["attributes"], list):
        raise SchemaError("metadata attributes must be a list")
    hidden = obj[HIDDEN_CONTENT_KEY]
    if not isinstance(hidden, dict) or set(hidden) != {"ipfs_hash"}:
        raise SchemaError(f'metadata "{HIDDEN_CONTENT_KEY}" must be an object with the single key "ipfs_hash"')
    if not isinstance(hidden["ipfs_hash"], str):
        raise SchemaError("metadata ipfs_hash must be a string")
    try:
        header = MetadataHeader(
            name=obj["name"],
            description=obj["description"],
            image=obj["image"],
            attributes=tuple(obj["attributes"]),
        )
    except InvalidUri as exc:
        raise SchemaError(f"metadata image is not a content URI: {exc}") from exc
    try:
        payload_cid = parse_uri(hidden["ipfs_hash"])
    except InvalidUri as exc:
        raise SchemaError(f"metadata ipfs_hash is not a content URI: {exc}") from exc
    return header, payload_cid


def publish_step(
    report: QualityReport,
    specs: Sequence[FeatureSpec],
    key: SymmetricKey,
    store: BlobStore,
    metadata_header: MetadataHeader,
    producer: str,
    step_index: int,
    nonce_source: Callable[[int], bytes] | None = None,
) -> tuple[Cid, Cid]:
    """Seals a report and stores payload plus metadata; returns (metadata_cid, payload_cid)."""
    document = build_document(report, specs, producer=producer, step_index=step_index)
    if nonce_source is None:
        envelope = encrypt(serialize_canonical(document), key)
    else:
        envelope = encrypt(serialize_canonical(document), key, nonce_source=nonce_source)
    payload_cid = store.put(envelope.to_bytes())
    metadata_cid = store.put(build_metadata(metadata_header, payload_cid))
    return metadata_cid, payload_cid


def mint_quality_nft(state: LedgerState, owner: Address, token_id: int, metadata_cid: Cid) -> LedgerState:
    """Mints a token whose first URI is the metadata address; owner is the caller."""
    return mint_token(state, caller=owner, owner=owner, token_id=token_id, uri=format_uri(metadata_cid))


def append_manufacturing_step(state: LedgerState, caller: Address, token_id: int, metadata_cid: Cid) -> LedgerState:
    """Appends one manufacturing step's metadata address; caller must own the token."""
    return add_token_uri(state, caller=caller, token_id=token_id, uri=format_uri(metadata_cid))


@dataclass(frozen=True)
class StepVerification:
    """Outcome of checking one URI of a token's history.

    verdicts_consistent is True when recomputed verdicts match the recorded
    ones, False on any disagreement, and None when no feature definitions
    were supplied for the step (cross-check skipped).
    """

    uri: str
    metadata_ok: bool
    payload_ok: bool
    in_spec_summary: Mapping[str, bool]
    producer: str | None
    step_index: int | None
    verdicts_consistent: bool | None
    problems: tuple[str, ...] = ()

    @property
    def verified(self) -> bool:
        return self.metadata_ok and self.payload_ok and self.verdicts_consistent is not False


@dataclass(frozen=True)
class ProvenanceReport:
    token_id: int
    steps: tuple[StepVerification, ...]
    chain_ok: bool
    overall_ok: bool


def _cross_check(document, specs: Sequence[FeatureSpec]) -> tuple[bool, dict[str, bool], list[str]]:
    """Recomputes verdicts from recorded actuals; reports disagreements."""
    problems: list[str] = []
    stored = {key[len(ELEMENT_PREFIX):]: el.quality_in_spec for key, el in document.elements.items()}
    by_id = {spec.feature_id: spec for spec in specs}
    if len(by_id) != len(specs):
        problems.append("supplied feature definitions contain duplicates")
        return False, stored, problems
    if set(by_id) != set(stored):
        problems.append("recorded features do not match the supplied feature definitions")
        return False, stored, problems
    summary: dict[str, bool] = {}
    consistent = True
    for key, element in document.elements.items():
        feature_id = key[len(ELEMENT_PREFIX):]
        try:
            record = evaluate_feature(by_id[feature_id], Decimal(element.quality_actual_value))
        except (ProvForgeError, ValueError) as exc:
            problems.append(f"{feature_id}: recorded value cannot be evaluated ({exc})")
            summary[feature_id] = element.quality_in_spec
            consistent = False
            continue
        summary[feature_id] = record.in_spec
        if record.in_spec != element.quality_in_spec:
            problems.append(
                f"{feature_id}: recorded verdict {element.quality_in_spec} "
                f"disagrees with recomputed {record.in_spec}"
            )
            consistent = False
    return consistent, summary, problems


def _verify_step(
    uri: str,
    key: SymmetricKey,
    store: BlobStore,
    specs_by_step: Mapping[int, Sequence[FeatureSpec]],
) -> StepVerification:
    problems: list[str] = []
    metadata_ok = False
    payload_ok = False
    summary: dict[str, bool] = {}
    producer: str | None = None
    step_index: int | None = None
    consistent: bool | None = None
    document = None
    try:
        metadata_cid = parse_uri(uri)
        metadata_bytes = store.get(metadata_cid)
        if not cid_verify(metadata_cid, metadata_bytes):
            raise IntegrityViolation(f"metadata bytes do not hash to {metadata_cid}")
        metadata_ok = True
        _, payload_cid = parse_metadata(metadata_bytes)
        envelope_bytes = store.get(payload_cid)
        if not cid_verify(payload_cid, envelope_bytes):
            raise IntegrityViolation(f"payload bytes do not hash to {payload_cid}")
        document = parse_document(decrypt(EncryptedEnvelope.from_bytes(envelope_bytes), key))
        payload_ok = True
    except ProvForgeError as exc:
        problems.append(f"{type(exc).__name__}: {exc}")
    if document is not None:
        producer = document.producer
        step_index = document.step_index
        specs = specs_by_step.get(step_index)
        if specs is None:
            summary = {key[len(ELEMENT_PREFIX):]: el.quality_in_spec for key, el in document.elements.items()}
        else:
            consistent, summary, check_problems = _cross_check(document, specs)
            problems.extend(check_problems)
    return StepVerification(
        uri=uri,
        metadata_ok=metadata_ok,
        payload_ok=payload_ok,
        in_spec_summary=summary,
        producer=producer,
        step_index=step_index,
        verdicts_consistent=consistent,
        problems=tuple(problems),
    )


def verify_provenance(
    state: LedgerState,
    token_id: int,
    key: SymmetricKey,
    store: BlobStore,
    specs_by_step: Mapping[int, Sequence[FeatureSpec]] | None = None,
) -> ProvenanceReport:
    """Walks a token's full URI history and checks every layer of the trail.

    Raises TokenNotFound for an unknown token; every other failure is
    captured inside the returned report.
    """
    uris = token_uris(state, token_id)
    chain_ok = verify_chain(state)
    lookup = specs_by_step if specs_by_step is not None else {}
    steps = tuple(_verify_step(uri, key, store, lookup) for uri in uris)
    overall_ok = chain_ok and all(step.verified for step in steps)
    return ProvenanceReport(token_id=token_id, steps=steps, chain_ok=chain_ok, overall_ok=overall_ok)


# --- presentation ------------------------------------------------------------------


def report_to_dict(report: ProvenanceReport) -> dict:
    return {
        "token_id": report.token_id,
        "chain_ok": report.chain_ok,
        "overall_ok": report.overall_ok,
        "steps": [
            {
                "uri": step.uri,
                "metadata_ok": step.metadata_ok,
                "payload_ok": step.payload_ok,
                "verified": step.verified,
                "producer": step.producer,
                "step_index": step.step_index,
                "in_spec_summary": dict(step.in_spec_summary),
                "verdicts_consistent": step.verdicts_consistent,
                "problems": list(step.problems),
            }
            for step in report.steps
        ],
    }


def render_report_text(report: ProvenanceReport) -> str:
    lines = [f"Provenance of token {report.token_id}"]
    lines.append(f"  ledger chain: {'ok' if report.chain_ok else 'BROKEN'}")
    for i, step in enumerate(report.steps, start=1):
        lines.append(f"  step {i}/{len(report.steps)}: {step.uri}")
        lines.append(f"    metadata: {'ok' if step.metadata_ok else 'FAILED'}")
        lines.append(f"    payload:  {'ok' if step.payload_ok else 'FAILED'}")
        if step.producer is not None:
            lines.append(f"    producer: {step.producer} (step index {step.step_index})")
        if step.in_spec_summary:
            total = len(step.in_spec_summary)
            good = sum(1 for v in step.in_spec_summary.values() if v)
            lines.append(f"    in spec:  {good}/{total}")
        if step.verdicts_consistent is None:
            lines.append("    verdict cross-check: skipped (no feature definitions supplied)")
        else:
            lines.append(f"    verdict cross-check: {'ok' if step.verdicts_consistent else 'DISAGREES'}")
        for problem in step.problems:
            lines.append(f"    problem: {problem}")
    lines.append(f"  overall: {'VERIFIED' if report.overall_ok else 'NOT VERIFIED'}")
    return "\n".join(lines) + "\n"
