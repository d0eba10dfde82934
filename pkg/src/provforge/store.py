"""Content-addressed blob storage.

Two backends behind one protocol: a local directory (one file per blob,
filename = CID text form, plus a pin manifest) and a remote node speaking
the IPFS HTTP API (/api/v0/add, /api/v0/cat, /api/v0/pin/add). Retrieval
always re-verifies the digest before returning bytes; the local CID
computation is the source of truth and remote answers are cross-checked.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Protocol

import httpx

from .cid import Cid, compute_cid, verify
from .errors import IntegrityViolation, NotFound, RemoteError, StoreUnavailable


class BlobStore(Protocol):
    def put(self, data: bytes) -> Cid: ...

    def get(self, cid: Cid) -> bytes: ...

    def pin(self, cid: Cid) -> None: ...


class LocalStore:
    """Directory-backed store: <root>/blobs/<cid> files and <root>/pins.json."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self._blobs = self.root / "blobs"
        self._pins_path = self.root / "pins.json"
        try:
            self._blobs.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StoreUnavailable(f"cannot create store at {self.root}: {exc}") from exc

    def _blob_path(self, cid: Cid) -> Path:
        return self._blobs / cid.text

    def put(self, data: bytes) -> Cid:
        cid = compute_cid(data)
        path = self._blob_path(cid)
        if not path.exists():
            try:
                # Write-temp-then-rename keeps concurrent identical puts convergent.
                fd, tmp = tempfile.mkstemp(dir=self._blobs, prefix=".tmp-")
                with os.fdopen(fd, "wb") as fh:
                    fh.write(data)
                os.replace(tmp, path)
            except OSError as exc:
                raise StoreUnavailable(f"cannot write blob {cid}: {exc}") from exc
        self._add_pin(cid)
        return cid

    def get(self, cid: Cid) -> bytes:
        try:
            data = self._blob_path(cid).read_bytes()
        except FileNotFoundError:
            raise NotFound(f"no blob stored for {cid}") from None
        except OSError as exc:
            raise StoreUnavailable(f"cannot read blob {cid}: {exc}") from exc
        if not verify(cid, data):
            raise IntegrityViolation(f"stored bytes for {cid} no longer match their digest")
        return data

    def pin(self, cid: Cid) -> None:
        if not self._blob_path(cid).exists():
            raise NotFound(f"no blob stored for {cid}")
        self._add_pin(cid)

    def pins(self) -> set[str]:
        if not self._pins_path.exists():
            return set()
        try:
            return set(json.loads(self._pins_path.read_text()).get("pins", []))
        except (OSError, json.JSONDecodeError) as exc:
            raise StoreUnavailable(f"pin manifest unreadable: {exc}") from exc

    def _add_pin(self, cid: Cid) -> None:
        pins = self.pins()
        if cid.text in pins:
            return
        pins.add(cid.text)
        try:
            self._pins_path.write_text(json.dumps({"pins": sorted(pins)}, indent=2) + "\n")
        except OSError as exc:
            raise StoreUnavailable(f"cannot update pin manifest: {exc}") from exc


class RemoteStore:
    """Client for a node speaking the IPFS HTTP API.

    The node must address blobs by the raw-byte multihash (no chunking or
    DAG wrapping); put() fails loudly when the node's CID disagrees with
    the locally computed one.
    """

    def __init__(self, endpoint: str, client: httpx.Client | None = None):
        self.endpoint = endpoint.rstrip("/")
        self._client = client or httpx.Client(timeout=30.0)

    def close(self) -> None:
        self._client.close()

    def _post(self, path: str, **kwargs) -> httpx.Response:
        try:
            return self._client.post(self.endpoint + path, **kwargs)
        except httpx.HTTPError as exc:
            raise StoreUnavailable(f"remote store unreachable: {exc}") from exc

    def put(self, data: bytes) -> Cid:
        local = compute_cid(data)
        # Ask the node not to chunk or DAG-wrap; nodes that do anyway are
        # caught by the CID cross-check below.
        params = {"chunker": f"size-{max(len(data), 1)}", "pin": "true"}
        resp = self._post(
            "/api/v0/add",
            params=params,
            files={"file": ("blob", data, "application/octet-stream")},
        )
        if resp.status_code != 200:
            raise RemoteError(f"add failed with HTTP {resp.status_code}", status=resp.status_code)
        try:
            remote_text = resp.json()["Hash"]
        except (json.JSONDecodeError, KeyError) as exc:
            raise RemoteError(f"add returned malformed response: {exc}", status=resp.status_code) from exc
        if remote_text != local.text:
            raise RemoteError(
                f"remote node addressed the blob as {remote_text} but the content "
                f"hashes to {local.text}; refusing to trust the remote CID"
            )
        return local

    def get(self, cid: Cid) -> bytes:
        resp = self._post("/api/v0/cat", params={"arg": cid.text})
        if resp.status_code == 404:
            raise NotFound(f"no blob stored for {cid}")
        if resp.status_code != 200:
            raise RemoteError(f"cat failed with HTTP {resp.status_code}", status=resp.status_code)
        data = resp.content
        if not verify(cid, data):
            raise IntegrityViolation(f"remote bytes for {cid} do not match their digest")
        return data

    def pin(self, cid: Cid) -> None:
        resp = self._post("/api/v0/pin/add", params={"arg": cid.text})
        if resp.status_code == 404:
            raise NotFound(f"no blob stored for {cid}")
        if resp.status_code != 200:
            raise RemoteError(f"pin failed with HTTP {resp.status_code}", status=resp.status_code)
