"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field

from .ledger import LedgerState, TokenRecord, Transaction, tx_to_dict


class HealthResponse(BaseModel):
    status: str
    version: str


class AddResponse(BaseModel):
    """Upload result, shaped like the public IPFS HTTP API."""

    Name: str
    Hash: str
    Size: str


class PinResponse(BaseModel):
    Pins: list[str]


class DeployRequest(BaseModel):
    name: str = Field(min_length=1)
    symbol: str = Field(min_length=1)


class MintRequest(BaseModel):
    owner: str
    token_id: int = Field(ge=0)
    uri: str


class AppendUriRequest(BaseModel):
    caller: str
    uri: str


class TransferRequest(BaseModel):
    caller: str
    to: str


class TokenResponse(BaseModel):
    token_id: int
    owner: str
    uri_history: list[str]
    minted_at_seq: int

    @classmethod
    def from_record(cls, record: TokenRecord) -> "TokenResponse":
        return cls(
            token_id=record.token_id,
            owner=record.owner.text,
            uri_history=list(record.uri_history),
            minted_at_seq=record.minted_at_seq,
        )


class LedgerInfoResponse(BaseModel):
    name: str
    symbol: str
    token_count: int
    log_length: int

    @classmethod
    def from_state(cls, state: LedgerState) -> "LedgerInfoResponse":
        return cls(
            name=state.collection_name,
            symbol=state.collection_symbol,
            token_count=len(state.tokens),
            log_length=len(state.log),
        )


class TransactionModel(BaseModel):
    seq: int
    kind: str
    fields: list[str]
    prev_hash: str
    tx_hash: str

    @classmethod
    def from_transaction(cls, tx: Transaction) -> "TransactionModel":
        return cls(**tx_to_dict(tx))


class LogResponse(BaseModel):
    version: int
    transactions: list[TransactionModel]


class VerifyResponse(BaseModel):
    chain_ok: bool


class ErrorBody(BaseModel):
    """Machine-readable error detail carried inside HTTP error responses."""

    code: str
    message: str
