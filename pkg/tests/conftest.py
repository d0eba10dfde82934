"""Shared fixtures: sample workpiece, fixed key, stores, a two-step token."""

from __future__ import annotations

from datetime import datetime, timezone
from types import SimpleNamespace

import pytest

from provforge import (
    Address,
    LocalStore,
    MetadataHeader,
    SymmetricKey,
    append_manufacturing_step,
    compute_cid,
    deploy,
    evaluate_workpiece,
    format_uri,
    mint_quality_nft,
    publish_step,
    transfer,
)
from provforge.samples import sample_measurements, sample_workpiece

FIXED_TIME = datetime(2026, 1, 2, 3, 4, 5, tzinfo=timezone.utc)

ADDR_A = Address.parse("0x" + "aa" * 20)
ADDR_B = Address.parse("0x" + "bb" * 20)
ADDR_C = Address.parse("0x" + "cc" * 20)

# Referenced by metadata but deliberately never stored: the ledger and the
# verifier treat the image as an opaque pointer.
IMAGE_URI = format_uri(compute_cid(b"sample workpiece rendering"))

ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


@pytest.fixture(scope="session")
def definition():
    return sample_workpiece()


@pytest.fixture(scope="session")
def specs(definition):
    return list(definition.features)


@pytest.fixture(scope="session")
def actuals():
    return sample_measurements()


@pytest.fixture(scope="session")
def sample_report(definition, actuals):
    return evaluate_workpiece(
        list(definition.features),
        actuals,
        workpiece_id=definition.workpiece_id,
        product_name=definition.product_name,
        created_at=FIXED_TIME,
    )


@pytest.fixture(scope="session")
def key():
    return SymmetricKey(bytes(range(32)), "test-key")


@pytest.fixture
def store(tmp_path):
    return LocalStore(tmp_path / "store")


@pytest.fixture
def header():
    return MetadataHeader(
        name="Proof of quality DiamondCicleSquare product ID 3",
        description="Quality record for a machined demo workpiece",
        image=IMAGE_URI,
    )


@pytest.fixture
def two_step_token(sample_report, specs, key, store, header):
    """Token 3: minted by A with step 1, transferred to B, step 2 appended by B."""
    m1, p1 = publish_step(sample_report, specs, key, store, header, producer="Company A", step_index=1)
    m2, p2 = publish_step(sample_report, specs, key, store, header, producer="Company B", step_index=2)
    state = deploy("DSC Product QualityTest", "DSCQ")
    state = mint_quality_nft(state, ADDR_A, 3, m1)
    state = transfer(state, ADDR_A, ADDR_B, 3)
    state = append_manufacturing_step(state, ADDR_B, 3, m2)
    return SimpleNamespace(
        state=state,
        token_id=3,
        store=store,
        key=key,
        specs_by_step={1: specs, 2: specs},
        metadata_cids=(m1, m2),
        payload_cids=(p1, p2),
    )


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{label}: {'PASS' if ok else 'FAIL'}")
