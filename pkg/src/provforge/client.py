"""HTTP client for the ledger service.

The service is not trusted: `fetch_state` downloads the full transaction
log and rebuilds the state locally, which re-verifies every hash and
every transition. Mutating calls map the service's machine-readable error
codes back onto the domain exceptions the in-process ledger raises, so
callers behave identically in local and remote mode.
"""

from __future__ import annotations

import httpx

from .errors import (
    InvalidAddress,
    InvalidCollection,
    InvalidRecipient,
    InvalidUri,
    LedgerIntegrityError,
    RemoteError,
    StoreUnavailable,
    TokenExists,
    TokenNotFound,
    Unauthorized,
)
from .ledger import Address, LedgerState, replay, tx_from_dict


class LedgerServiceClient:
    def __init__(self, endpoint: str, client: httpx.Client | None = None):
        self._endpoint = endpoint.rstrip("/")
        self._client = client if client is not None else httpx.Client(timeout=30.0)
        self._owns_client = client is None

    def close(self) -> None:
        if self._owns_client:
            self._client.close()

    def __enter__(self) -> "LedgerServiceClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    # --- transport ------------------------------------------------------------

    def _request(self, method: str, path: str, token_id: int | None = None, **kwargs) -> httpx.Response:
        try:
            response = self._client.request(method, self._endpoint + path, **kwargs)
        except httpx.HTTPError as exc:
            raise StoreUnavailable(f"ledger service unreachable: {exc}") from exc
        if response.is_success:
            return response
        raise self._domain_error(response, token_id)

    @staticmethod
    def _domain_error(response: httpx.Response, token_id: int | None):
        try:
            detail = response.json().get("detail")
        except ValueError:
            detail = None
        if not isinstance(detail, dict) or "code" not in detail:
            return RemoteError(
                f"ledger service returned status {response.status_code}", status=response.status_code
            )
        code = detail["code"]
        message = str(detail.get("message", code))
        if code == "token_exists" and token_id is not None:
            return TokenExists(token_id)
        if code == "token_not_found" and token_id is not None:
            return TokenNotFound(token_id)
        by_code = {
            "unauthorized": Unauthorized,
            "invalid_recipient": InvalidRecipient,
            "invalid_address": InvalidAddress,
            "invalid_uri": InvalidUri,
            "invalid_collection": InvalidCollection,
            "already_deployed": InvalidCollection,
            "not_deployed": InvalidCollection,
            "ledger_integrity": LedgerIntegrityError,
            "store_unavailable": StoreUnavailable,
        }
        if code in by_code:
            return by_code[code](message)
        return RemoteError(message, status=response.status_code)

    # --- operations ---------------------------------------------------------------

    def health(self) -> dict:
        return self._request("GET", "/health").json()

    def is_deployed(self) -> bool:
        try:
            self._request("GET", "/ledger")
        except InvalidCollection:
            return False
        return True

    def deploy(self, name: str, symbol: str) -> dict:
        return self._request("POST", "/ledger/deploy", json={"name": name, "symbol": symbol}).json()

    def mint(self, owner: Address, token_id: int, uri: str) -> dict:
        payload = {"owner": owner.text, "token_id": token_id, "uri": uri}
        return self._request("POST", "/ledger/tokens", token_id=token_id, json=payload).json()

    def append_uri(self, caller: Address, token_id: int, uri: str) -> dict:
        payload = {"caller": caller.text, "uri": uri}
        return self._request("POST", f"/ledger/tokens/{token_id}/uris", token_id=token_id, json=payload).json()

    def transfer(self, caller: Address, to: Address, token_id: int) -> dict:
        payload = {"caller": caller.text, "to": to.text}
        return self._request("POST", f"/ledger/tokens/{token_id}/transfer", token_id=token_id, json=payload).json()

    def fetch_state(self) -> LedgerState:
        """Downloads the full log and replays it locally (trust-nothing path)."""
        body = self._request("GET", "/ledger/log").json()
        transactions = [tx_from_dict(obj) for obj in body.get("transactions", [])]
        return replay(transactions)
