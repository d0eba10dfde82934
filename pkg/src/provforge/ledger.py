"""Deterministic token ledger with a hash-chained transaction log.

The ledger mirrors an ERC-721-style contract at desk scale: user-defined
token ids, owner-gated append-only URI history, ownership transfer. State
is a pure fold over the log; rejected calls are never logged. Every
transaction hash covers (seq, kind, payload fields, prev_hash), so any
post-hoc edit of the log is detectable by replay.

Canonical transaction encoding (hashed with sha2-256):

    enc(tx) = lp(ascii(seq)) || lp(kind) || lp(field_1) ... || lp(field_n) || lp(prev_hash)
    lp(b)   = 4-byte big-endian length of b, followed by b

Payload fields are canonical text forms in declaration order:

    deploy     collection_name, collection_symbol
    mint       owner, token_id, uri
    append_uri actor, token_id, uri
    transfer   from, to, token_id

Addresses are "0x" + 40 lowercase hex, token ids unsigned decimals without
leading zeros, URIs canonical ipfs://<cid>. A worked hex example lives in
docs/formats.md.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .cid import format_uri, parse_uri
from .errors import (
    InvalidAddress,
    InvalidCollection,
    InvalidRecipient,
    InvalidUri,
    LedgerIntegrityError,
    ProvForgeError,
    TokenExists,
    TokenNotFound,
    Unauthorized,
)

GENESIS_PREV_HASH = b"\x00" * 32

_ADDRESS_RE = re.compile(r"^0x[0-9a-fA-F]{40}$")
_TOKEN_ID_RE = re.compile(r"^(0|[1-9][0-9]*)$")


@dataclass(frozen=True)
class Address:
    raw: bytes

    def __post_init__(self):
        if len(self.raw) != 20:
            raise InvalidAddress(f"address must be 20 bytes, got {len(self.raw)}")

    @property
    def text(self) -> str:
        return "0x" + self.raw.hex()

    @property
    def is_zero(self) -> bool:
        return self.raw == b"\x00" * 20

    @classmethod
    def parse(cls, text: str) -> "Address":
        if not _ADDRESS_RE.match(text):
            raise InvalidAddress(f"{text!r} is not 0x followed by 40 hex characters")
        return cls(bytes.fromhex(text[2:]))

    def __str__(self) -> str:
        return self.text


ZERO_ADDRESS = Address(b"\x00" * 20)


class TxKind(str, Enum):
    DEPLOY = "deploy"
    MINT = "mint"
    APPEND_URI = "append_uri"
    TRANSFER = "transfer"


_FIELD_COUNT = {TxKind.DEPLOY: 2, TxKind.MINT: 3, TxKind.APPEND_URI: 3, TxKind.TRANSFER: 3}


@dataclass(frozen=True)
class Transaction:
    seq: int
    kind: TxKind
    fields: tuple[str, ...]
    prev_hash: bytes
    tx_hash: bytes


@dataclass(frozen=True)
class TokenRecord:
    token_id: int
    owner: Address
    uri_history: tuple[str, ...]
    minted_at_seq: int


@dataclass(frozen=True)
class LedgerState:
    collection_name: str
    collection_symbol: str
    tokens: Mapping[int, TokenRecord]
    log: tuple[Transaction, ...]


def _lp(data: bytes) -> bytes:
    return len(data).to_bytes(4, "big") + data


def encode_transaction(seq: int, kind: TxKind, fields: Iterable[str], prev_hash: bytes) -> bytes:
    parts = [_lp(str(seq).encode("ascii")), _lp(kind.value.encode("ascii"))]
    parts.extend(_lp(f.encode("utf-8")) for f in fields)
    parts.append(_lp(prev_hash))
    return b"".join(parts)


def transaction_hash(seq: int, kind: TxKind, fields: Iterable[str], prev_hash: bytes) -> bytes:
    return hashlib.sha256(encode_transaction(seq, kind, fields, prev_hash)).digest()


def make_transaction(seq: int, kind: TxKind, fields: tuple[str, ...], prev_hash: bytes) -> Transaction:
    return Transaction(
        seq=seq,
        kind=kind,
        fields=fields,
        prev_hash=prev_hash,
        tx_hash=transaction_hash(seq, kind, fields, prev_hash),
    )


# --- canonical field forms -----------------------------------------------------


def _canonical_uri(uri: str) -> str:
    return format_uri(parse_uri(uri))


def _canonical_address(text: str) -> Address:
    addr = Address.parse(text)
    if addr.text != text:
        raise InvalidAddress(f"{text!r} is not in canonical lowercase form")
    return addr


def _parse_token_id(text: str) -> int:
    if not _TOKEN_ID_RE.match(text):
        raise LedgerIntegrityError(f"{text!r} is not a canonical token id")
    return int(text)


def _check_token_id(token_id: int) -> None:
    if not isinstance(token_id, int) or isinstance(token_id, bool) or token_id < 0:
        raise ValueError(f"token_id must be a non-negative integer, got {token_id!r}")


# --- state transitions ----------------------------------------------------------


def _apply(tokens: Mapping[int, TokenRecord], tx: Transaction) -> dict[int, TokenRecord]:
    """Semantic fold step; raises the same domain errors the operations do."""
    if len(tx.fields) != _FIELD_COUNT[tx.kind]:
        raise LedgerIntegrityError(f"{tx.kind.value} carries {len(tx.fields)} fields")
    updated = dict(tokens)
    if tx.kind is TxKind.MINT:
        owner = _canonical_address(tx.fields[0])
        token_id = _parse_token_id(tx.fields[1])
        uri = tx.fields[2]
        if _canonical_uri(uri) != uri:
            raise InvalidUri(f"{uri!r} is not canonical")
        if owner.is_zero:
            raise InvalidRecipient("cannot mint to the zero address")
        if token_id in updated:
            raise TokenExists(token_id)
        updated[token_id] = TokenRecord(
            token_id=token_id, owner=owner, uri_history=(uri,), minted_at_seq=tx.seq
        )
    elif tx.kind is TxKind.APPEND_URI:
        actor = _canonical_address(tx.fields[0])
        token_id = _parse_token_id(tx.fields[1])
        uri = tx.fields[2]
        if _canonical_uri(uri) != uri:
            raise InvalidUri(f"{uri!r} is not canonical")
        if token_id not in updated:
            raise TokenNotFound(token_id)
        record = updated[token_id]
        if actor != record.owner:
            raise Unauthorized(f"{actor} does not own token {token_id}")
        updated[token_id] = TokenRecord(
            token_id=token_id,
            owner=record.owner,
            uri_history=record.uri_history + (uri,),
            minted_at_seq=record.minted_at_seq,
        )
    elif tx.kind is TxKind.TRANSFER:
        sender = _canonical_address(tx.fields[0])
        receiver = _canonical_address(tx.fields[1])
        token_id = _parse_token_id(tx.fields[2])
        if token_id not in updated:
            raise TokenNotFound(token_id)
        record = updated[token_id]
        if sender != record.owner:
            raise Unauthorized(f"{sender} does not own token {token_id}")
        if receiver.is_zero:
            raise InvalidRecipient("cannot transfer to the zero address")
        updated[token_id] = TokenRecord(
            token_id=token_id,
            owner=receiver,
            uri_history=record.uri_history,
            minted_at_seq=record.minted_at_seq,
        )
    else:
        raise LedgerIntegrityError("deploy is only valid as the genesis transaction")
    return updated


def _extend(state: LedgerState, kind: TxKind, fields: tuple[str, ...]) -> LedgerState:
    tx = make_transaction(len(state.log), kind, fields, state.log[-1].tx_hash)
    tokens = _apply(state.tokens, tx)  # raises before anything is logged
    return LedgerState(
        collection_name=state.collection_name,
        collection_symbol=state.collection_symbol,
        tokens=tokens,
        log=state.log + (tx,),
    )


# --- operations -------------------------------------------------------------------


def deploy(collection_name: str, collection_symbol: str) -> LedgerState:
    if not collection_name or not collection_symbol:
        raise InvalidCollection("collection name and symbol must be non-empty")
    tx = make_transaction(0, TxKind.DEPLOY, (collection_name, collection_symbol), GENESIS_PREV_HASH)
    return LedgerState(
        collection_name=collection_name,
        collection_symbol=collection_symbol,
        tokens={},
        log=(tx,),
    )


def mint_token(state: LedgerState, caller: Address, owner: Address, token_id: int, uri: str) -> LedgerState:
    _check_token_id(token_id)
    return _extend(state, TxKind.MINT, (owner.text, str(token_id), _canonical_uri(uri)))


def add_token_uri(state: LedgerState, caller: Address, token_id: int, uri: str) -> LedgerState:
    _check_token_id(token_id)
    return _extend(state, TxKind.APPEND_URI, (caller.text, str(token_id), _canonical_uri(uri)))


def transfer(state: LedgerState, caller: Address, to: Address, token_id: int) -> LedgerState:
    _check_token_id(token_id)
    return _extend(state, TxKind.TRANSFER, (caller.text, to.text, str(token_id)))


def owner_of(state: LedgerState, token_id: int) -> Address:
    if token_id not in state.tokens:
        raise TokenNotFound(token_id)
    return state.tokens[token_id].owner


def token_uris(state: LedgerState, token_id: int) -> tuple[str, ...]:
    if token_id not in state.tokens:
        raise TokenNotFound(token_id)
    return state.tokens[token_id].uri_history


def replay(log: Sequence[Transaction]) -> LedgerState:
    """Rebuilds state from the log, verifying hashes, links and semantics."""
    if not log:
        raise LedgerIntegrityError("log is empty")
    genesis = log[0]
    if genesis.kind is not TxKind.DEPLOY:
        raise LedgerIntegrityError("genesis transaction must be a deploy")
    tokens: dict[int, TokenRecord] = {}
    prev = GENESIS_PREV_HASH
    for i, tx in enumerate(log):
        if tx.seq != i:
            raise LedgerIntegrityError(f"transaction {i} has sequence {tx.seq}")
        if tx.prev_hash != prev:
            raise LedgerIntegrityError(f"transaction {i} does not link to its predecessor")
        if transaction_hash(tx.seq, tx.kind, tx.fields, tx.prev_hash) != tx.tx_hash:
            raise LedgerIntegrityError(f"transaction {i} hash does not recompute")
        if i == 0:
            if len(tx.fields) != 2 or not tx.fields[0] or not tx.fields[1]:
                raise LedgerIntegrityError("deploy must carry a non-empty name and symbol")
        else:
            try:
                tokens = _apply(tokens, tx)
            except LedgerIntegrityError:
                raise
            except ProvForgeError as exc:
                raise LedgerIntegrityError(f"transaction {i} is not a valid transition: {exc}") from exc
        prev = tx.tx_hash
    return LedgerState(
        collection_name=genesis.fields[0],
        collection_symbol=genesis.fields[1],
        tokens=tokens,
        log=tuple(log),
    )


def verify_chain(state: LedgerState) -> bool:
    """True iff hashes recompute, links hold, and the fold reproduces the state."""
    try:
        rebuilt = replay(state.log)
    except LedgerIntegrityError:
        return False
    return (
        rebuilt.collection_name == state.collection_name
        and rebuilt.collection_symbol == state.collection_symbol
        and dict(rebuilt.tokens) == dict(state.tokens)
    )


# --- persistence -------------------------------------------------------------------


def tx_to_dict(tx: Transaction) -> dict:
    return {
        "seq": tx.seq,
        "kind": tx.kind.value,
        "fields": list(tx.fields),
        "prev_hash": tx.prev_hash.hex(),
        "tx_hash": tx.tx_hash.hex(),
    }


def tx_from_dict(obj: dict) -> Transaction:
    try:
        return Transaction(
            seq=int(obj["seq"]),
            kind=TxKind(obj["kind"]),
            fields=tuple(str(f) for f in obj["fields"]),
            prev_hash=bytes.fromhex(obj["prev_hash"]),
            tx_hash=bytes.fromhex(obj["tx_hash"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise LedgerIntegrityError(f"malformed transaction record: {exc}") from exc


def save_ledger(state: LedgerState, path: Path) -> None:
    path = Path(path)
    doc = {"version": 1, "transactions": [tx_to_dict(tx) for tx in state.log]}
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".ledger-")
    with os.fdopen(fd, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    os.replace(tmp, path)


def load_ledger(path: Path) -> LedgerState:
    """Replays and verifies the persisted log; refuses corrupt files."""
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise LedgerIntegrityError(f"ledger file unreadable: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != 1 or "transactions" not in doc:
        raise LedgerIntegrityError("ledger file has an unknown layout")
    if not isinstance(doc["transactions"], list):
        raise LedgerIntegrityError("ledger transactions must be a list")
    return replay([tx_from_dict(obj) for obj in doc["transactions"]])
