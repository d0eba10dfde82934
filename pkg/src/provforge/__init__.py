"""Tamper-evident quality provenance for machined workpieces.

Measurement evaluation, canonical quality-record documents, authenticated
encryption envelopes, content-addressed blob storage, a hash-chained token
ledger, and the end-to-end publish/mint/verify pipeline tying them
together. The HTTP service lives in provforge.service, the thin client in
provforge.client, and the command line in provforge.cli.
"""

__version__ = "0.1.0"

from . import errors
from .aas import (
    ELEMENT_PREFIX,
    SUBMODEL_ID,
    MetrologyElement,
    QualityRecordDocument,
    build_document,
    element_key,
    parse_document,
    serialize_canonical,
)
from .cid import Cid, compute_cid, format_uri, parse_uri
from .envelope import (
    EncryptedEnvelope,
    SymmetricKey,
    decrypt,
    encrypt,
    generate_key,
    load_key,
    save_key,
)
from .ledger import (
    ZERO_ADDRESS,
    Address,
    LedgerState,
    TokenRecord,
    Transaction,
    TxKind,
    add_token_uri,
    deploy,
    load_ledger,
    mint_token,
    owner_of,
    replay,
    save_ledger,
    token_uris,
    transfer,
    verify_chain,
)
from .provenance import (
    MetadataHeader,
    ProvenanceReport,
    StepVerification,
    append_manufacturing_step,
    build_metadata,
    mint_quality_nft,
    parse_metadata,
    publish_step,
    render_report_text,
    report_to_dict,
    verify_provenance,
)
from .quality import (
    MM_STEP,
    FeatureKind,
    FeatureSpec,
    MeasurementRecord,
    QualityReport,
    WorkpieceDefinition,
    evaluate_feature,
    evaluate_workpiece,
    format_mm,
    load_measurements,
    load_workpiece_definition,
    report_from_json,
    report_to_json,
)
from .store import BlobStore, LocalStore, RemoteStore

__all__ = [
    "__version__",
    "errors",
    # quality
    "MM_STEP",
    "FeatureKind",
    "FeatureSpec",
    "MeasurementRecord",
    "QualityReport",
    "WorkpieceDefinition",
    "evaluate_feature",
    "evaluate_workpiece",
    "format_mm",
    "load_measurements",
    "load_workpiece_definition",
    "report_from_json",
    "report_to_json",
    # documents
    "ELEMENT_PREFIX",
    "SUBMODEL_ID",
    "MetrologyElement",
    "QualityRecordDocument",
    "build_document",
    "element_key",
    "parse_document",
    "serialize_canonical",
    # content addressing
    "Cid",
    "compute_cid",
    "format_uri",
    "parse_uri",
    # encryption
    "EncryptedEnvelope",
    "SymmetricKey",
    "decrypt",
    "encrypt",
    "generate_key",
    "load_key",
    "save_key",
    # storage
    "BlobStore",
    "LocalStore",
    "RemoteStore",
    # ledger
    "ZERO_ADDRESS",
    "Address",
    "LedgerState",
    "TokenRecord",
    "Transaction",
    "TxKind",
    "add_token_uri",
    "deploy",
    "load_ledger",
    "mint_token",
    "owner_of",
    "replay",
    "save_ledger",
    "token_uris",
    "transfer",
    "verify_chain",
    # pipeline
    "MetadataHeader",
    "ProvenanceReport",
    "StepVerification",
    "append_manufacturing_step",
    "build_metadata",
    "mint_quality_nft",
    "parse_metadata",
    "publish_step",
    "render_report_text",
    "report_to_dict",
    "verify_provenance",
]
