"""Authenticated symmetric encryption of serialized quality documents.

Binary envelope layout (documented with a hex example in docs/formats.md):

    magic   6 bytes   "QAENC1"
    alg     1 byte    0x01 = AES-256-GCM
    kid_len 2 bytes   big-endian length of the key id
    key_id  variable  UTF-8 key label
    nonce   12 bytes  fresh random per message
    body    variable  ciphertext followed by the 16-byte auth tag

The whole header is bound into the AEAD as associated data, so any
single-byte modification of an envelope is rejected on decryption.
"""

from __future__ import annotations

import re
import secrets
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .errors import (
    AuthenticationFailure,
    EnvelopeFormatError,
    InvalidKey,
    KeyGenerationFailure,
    UnsupportedAlgorithm,
)

MAGIC = b"QAENC1"
ALG_AES256GCM = 0x01
KEY_LEN = 32
NONCE_LEN = 12
TAG_LEN = 16

_KEY_HEX_RE = re.compile(r"^[0-9a-f]{64}$")

NonceSource = Callable[[int], bytes]


@dataclass(frozen=True)
class SymmetricKey:
    key_bytes: bytes
    key_id: str

    def __post_init__(self):
        if len(self.key_bytes) != KEY_LEN:
            raise InvalidKey(f"key must be exactly {KEY_LEN} bytes, got {len(self.key_bytes)}")
        if not self.key_id:
            raise InvalidKey("key_id must be non-empty")


@dataclass(frozen=True)
class EncryptedEnvelope:
    key_id: str
    nonce: bytes
    ciphertext_with_tag: bytes
    algorithm_id: int = ALG_AES256GCM

    def to_bytes(self) -> bytes:
        return _header(self.algorithm_id, self.key_id) + self.nonce + self.ciphertext_with_tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncryptedEnvelope":
        if len(data) < len(MAGIC) + 1 + 2:
            raise EnvelopeFormatError("envelope too short for header")
        if data[: len(MAGIC)] != MAGIC:
            raise EnvelopeFormatError("bad magic, not an encrypted envelope")
        alg = data[len(MAGIC)]
        kid_len = int.from_bytes(data[len(MAGIC) + 1 : len(MAGIC) + 3], "big")
        body_at = len(MAGIC) + 3 + kid_len
        if len(data) < body_at + NONCE_LEN + TAG_LEN:
            raise EnvelopeFormatError("envelope truncated")
        try:
            key_id = data[len(MAGIC) + 3 : body_at].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise EnvelopeFormatError("key id is not valid UTF-8") from exc
        return cls(
            key_id=key_id,
            nonce=data[body_at : body_at + NONCE_LEN],
            ciphertext_with_tag=data[body_at + NONCE_LEN :],
            algorithm_id=alg,
        )


def _header(algorithm_id: int, key_id: str) -> bytes:
    kid = key_id.encode("utf-8")
    if len(kid) > 0xFFFF:
        raise EnvelopeFormatError("key id too long")
    return MAGIC + bytes([algorithm_id]) + len(kid).to_bytes(2, "big") + kid


def generate_key(key_id: str) -> SymmetricKey:
    if not key_id:
        raise InvalidKey("key_id must be non-empty")
    try:
        material = secrets.token_bytes(KEY_LEN)
    except Exception as exc:  # pragma: no cover - no entropy source in practice
        raise KeyGenerationFailure(f"secure random source unavailable: {exc}") from exc
    return SymmetricKey(key_bytes=material, key_id=key_id)


def encrypt(plaintext: bytes, key: SymmetricKey, nonce_source: NonceSource = secrets.token_bytes) -> EncryptedEnvelope:
    """Encrypts under a fresh nonce; the header is authenticated as AAD."""
    nonce = nonce_source(NONCE_LEN)
    if len(nonce) != NONCE_LEN:
        raise EnvelopeFormatError(f"nonce source must yield {NONCE_LEN} bytes")
    aad = _header(ALG_AES256GCM, key.key_id)
    body = AESGCM(key.key_bytes).encrypt(nonce, plaintext, aad)
    return EncryptedEnvelope(key_id=key.key_id, nonce=nonce, ciphertext_with_tag=body)


def decrypt(envelope: EncryptedEnvelope, key: SymmetricKey) -> bytes:
    """Returns the plaintext only after the auth tag verifies.

    Wrong key and tampered ciphertext are deliberately indistinguishable.
    """
    if envelope.algorithm_id != ALG_AES256GCM:
        raise UnsupportedAlgorithm(f"unknown algorithm id 0x{envelope.algorithm_id:02x}")
    aad = _header(envelope.algorithm_id, envelope.key_id)
    try:
        return AESGCM(key.key_bytes).decrypt(envelope.nonce, envelope.ciphertext_with_tag, aad)
    except InvalidTag as exc:
        raise AuthenticationFailure("wrong key or tampered ciphertext") from exc


# --- key files ---------------------------------------------------------------
#
# A key file is a single line of 64 lowercase hex characters. The key id
# lives in a sidecar file at <path>.id; without a sidecar it defaults to
# the key file's stem.


def save_key(key: SymmetricKey, path: Path) -> None:
    path = Path(path)
    path.write_text(key.key_bytes.hex() + "\n")
    path.chmod(0o600)
    Path(str(path) + ".id").write_text(key.key_id + "\n")


def load_key(path: Path) -> SymmetricKey:
    path = Path(path)
    try:
        text = path.read_text().strip()
    except OSError as exc:
        raise InvalidKey(f"cannot read key file {path}: {exc}") from exc
    if not _KEY_HEX_RE.match(text):
        raise InvalidKey(f"key file {path} must hold exactly 64 lowercase hex characters")
    sidecar = Path(str(path) + ".id")
    key_id = sidecar.read_text().strip() if sidecar.exists() else path.stem
    return SymmetricKey(key_bytes=bytes.fromhex(text), key_id=key_id)
