"""HTTP service hosting a shared blob store and the token ledger.

The store side speaks the public IPFS HTTP API shape (add/cat/pin/add),
so the remote store adapter and any stock IPFS client can talk to it.
The ledger side exposes the state machine over JSON; clients are expected
to re-verify the hash chain locally from GET /ledger/log rather than
trusting this process. All state lives under one data directory.
"""

from __future__ import annotations

import argparse
import os
import threading
from pathlib import Path

from fastapi import FastAPI, File, HTTPException, Query, UploadFile
from fastapi.responses import Response

from . import __version__, ledger
from .cid import Cid
from .errors import (
    CidFormatError,
    IntegrityViolation,
    InvalidAddress,
    InvalidCollection,
    InvalidRecipient,
    InvalidUri,
    LedgerIntegrityError,
    NotFound,
    ProvForgeError,
    StoreUnavailable,
    TokenExists,
    TokenNotFound,
    Unauthorized,
)
from .ledger import Address, LedgerState, load_ledger, save_ledger, tx_to_dict
from .schemas import (
    AddResponse,
    AppendUriRequest,
    DeployRequest,
    HealthResponse,
    LedgerInfoResponse,
    LogResponse,
    MintRequest,
    PinResponse,
    TokenResponse,
    TransferRequest,
    VerifyResponse,
)
from .store import LocalStore

_ERROR_STATUS = [
    (TokenExists, 409, "token_exists"),
    (TokenNotFound, 404, "token_not_found"),
    (Unauthorized, 403, "unauthorized"),
    (InvalidRecipient, 422, "invalid_recipient"),
    (InvalidAddress, 422, "invalid_address"),
    (InvalidUri, 422, "invalid_uri"),
    (InvalidCollection, 422, "invalid_collection"),
    (LedgerIntegrityError, 500, "ledger_integrity"),
    (StoreUnavailable, 503, "store_unavailable"),
    (IntegrityViolation, 500, "integrity_violation"),
]


def _http_error(exc: ProvForgeError) -> HTTPException:
    for klass, status, code in _ERROR_STATUS:
        if isinstance(exc, klass):
            return HTTPException(status, detail={"code": code, "message": str(exc)})
    return HTTPException(500, detail={"code": "internal", "message": str(exc)})


class _ServiceState:
    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.store = LocalStore(self.data_dir / "store")
        self.ledger_path = self.data_dir / "ledger.json"
        self.lock = threading.Lock()
        self.ledger: LedgerState | None = None
        if self.ledger_path.exists():
            self.ledger = load_ledger(self.ledger_path)  # refuse to serve a corrupt log


def create_app(data_dir: Path | str) -> FastAPI:
    svc = _ServiceState(Path(data_dir))
    app = FastAPI(title="provforge", version=__version__)
    app.state.service = svc

    def _current_ledger(status: int = 409) -> LedgerState:
        if svc.ledger is None:
            raise HTTPException(status, detail={"code": "not_deployed", "message": "no collection deployed"})
        return svc.ledger

    def _commit(state: LedgerState) -> None:
        save_ledger(state, svc.ledger_path)
        svc.ledger = state

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    # --- blob store (IPFS HTTP API shape) ---------------------------------

    @app.post("/api/v0/add", response_model=AddResponse)
    def add_blob(file: UploadFile = File(...)) -> AddResponse:
        data = file.file.read()
        try:
            cid = svc.store.put(data)
        except ProvForgeError as exc:
            raise _http_error(exc) from exc
        return AddResponse(Name=file.filename or cid.text, Hash=cid.text, Size=str(len(data)))

    @app.post("/api/v0/cat")
    def cat_blob(arg: str = Query(...)) -> Response:
        try:
            cid = Cid.parse(arg)
        except CidFormatError as exc:
            raise HTTPException(400, detail={"code": "bad_cid", "message": str(exc)}) from exc
        try:
            data = svc.store.get(cid)
        except NotFound as exc:
            raise HTTPException(404, detail={"code": "not_found", "message": str(exc)}) from exc
        except ProvForgeError as exc:
            raise _http_error(exc) from exc
        return Response(content=data, media_type="application/octet-stream")

    @app.post("/api/v0/pin/add", response_model=PinResponse)
    def pin_blob(arg: str = Query(...)) -> PinResponse:
        try:
            cid = Cid.parse(arg)
        except CidFormatError as exc:
            raise HTTPException(400, detail={"code": "bad_cid", "message": str(exc)}) from exc
        try:
            svc.store.pin(cid)
        except NotFound as exc:
            raise HTTPException(404, detail={"code": "not_found", "message": str(exc)}) from exc
        except ProvForgeError as exc:
            raise _http_error(exc) from exc
        return PinResponse(Pins=[cid.text])

    # --- token ledger -------------------------------------------------------

    @app.post("/ledger/deploy", response_model=LedgerInfoResponse, status_code=201)
    def deploy_collection(req: DeployRequest) -> LedgerInfoResponse:
        with svc.lock:
            if svc.ledger is not None:
                raise HTTPException(
                    409, detail={"code": "already_deployed", "message": "a collection is already deployed"}
                )
            try:
                state = ledger.deploy(req.name, req.symbol)
            except ProvForgeError as exc:
                raise _http_error(exc) from exc
            _commit(state)
            return LedgerInfoResponse.from_state(state)

    @app.get("/ledger", response_model=LedgerInfoResponse)
    def ledger_info() -> LedgerInfoResponse:
        return LedgerInfoResponse.from_state(_current_ledger(status=404))

    @app.post("/ledger/tokens", response_model=TokenResponse, status_code=201)
    def mint_token(req: MintRequest) -> TokenResponse:
        with svc.lock:
            state = _current_ledger()
            try:
                owner = Address.parse(req.owner)
                new_state = ledger.mint_token(state, caller=owner, owner=owner, token_id=req.token_id, uri=req.uri)
            except ProvForgeError as exc:
                raise _http_error(exc) from exc
            _commit(new_state)
            return TokenResponse.from_record(new_state.tokens[req.token_id])

    @app.post("/ledger/tokens/{token_id}/uris", response_model=TokenResponse)
    def append_token_uri(token_id: int, req: AppendUriRequest) -> TokenResponse:
        with svc.lock:
            state = _current_ledger()
            try:
                caller = Address.parse(req.caller)
                new_state = ledger.add_token_uri(state, caller=caller, token_id=token_id, uri=req.uri)
            except ProvForgeError as exc:
                raise _http_error(exc) from exc
            _commit(new_state)
            return TokenResponse.from_record(new_state.tokens[token_id])

    @app.post("/ledger/tokens/{token_id}/transfer", response_model=TokenResponse)
    def transfer_token(token_id: int, req: TransferRequest) -> TokenResponse:
        with svc.lock:
            state = _current_ledger()
            try:
                caller = Address.parse(req.caller)
                to = Address.parse(req.to)
                new_state = ledger.transfer(state, caller=caller, to=to, token_id=token_id)
            except ProvForgeError as exc:
                raise _http_error(exc) from exc
            _commit(new_state)
            return TokenResponse.from_record(new_state.tokens[token_id])

    @app.get("/ledger/tokens/{token_id}", response_model=TokenResponse)
    def get_token(token_id: int) -> TokenResponse:
        state = _current_ledger(status=404)
        if token_id not in state.tokens:
            raise _http_error(TokenNotFound(token_id))
        return TokenResponse.from_record(state.tokens[token_id])

    @app.get("/ledger/log", response_model=LogResponse)
    def get_log() -> LogResponse:
        state = _current_ledger(status=404)
        return LogResponse(version=1, transactions=[tx_to_dict(tx) for tx in state.log])

    @app.get("/ledger/verify", response_model=VerifyResponse)
    def verify_ledger() -> VerifyResponse:
        state = _current_ledger(status=404)
        return VerifyResponse(chain_ok=ledger.verify_chain(state))

    return app


def main(argv: list[str] | None = None) -> None:
    parser = argparse.ArgumentParser(
        prog="provforge-server",
        description="Serve a shared blob store and token ledger over HTTP.",
    )
    parser.add_argument(
        "--data-dir",
        default=os.environ.get("PF_DATA_DIR", "./provforge-data"),
        help="directory holding blobs and the ledger file (env PF_DATA_DIR)",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    args = parser.parse_args(argv)

    import uvicorn

    uvicorn.run(create_app(args.data_dir), host=args.host, port=args.port)


if __name__ == "__main__":
    main()
