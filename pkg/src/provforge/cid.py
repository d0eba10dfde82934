"""Content identifiers: sha2-256 multihash, base58btc text form, ipfs:// URIs."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .errors import CidFormatError, InvalidUri

B58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
_B58_INDEX = {c: i for i, c in enumerate(B58_ALPHABET)}

MULTIHASH_PREFIX = b"\x12\x20"  # sha2-256, 32-byte digest
MULTIHASH_LEN = 34

URI_SCHEME = "ipfs://"
# Nonstandard synonym that appears in the wild; accepted on input only.
_URI_SCHEMES = (URI_SCHEME, "ipfs_hash://")


def b58encode(raw: bytes) -> str:
    num = int.from_bytes(raw, "big")
    encoded = ""
    while num > 0:
        num, rem = divmod(num, 58)
        encoded = B58_ALPHABET[rem] + encoded
    pad = len(raw) - len(raw.lstrip(b"\x00"))
    return "1" * pad + encoded


def b58decode(text: str) -> bytes:
    num = 0
    for char in text:
        if char not in _B58_INDEX:
            raise CidFormatError(f"invalid base58 character {char!r}")
        num = num * 58 + _B58_INDEX[char]
    body = num.to_bytes((num.bit_length() + 7) // 8, "big")
    pad = len(text) - len(text.lstrip("1"))
    return b"\x00" * pad + body


@dataclass(frozen=True)
class Cid:
    """sha2-256 multihash of a byte payload; text form always starts with Qm."""

    multihash: bytes

    def __post_init__(self):
        if len(self.multihash) != MULTIHASH_LEN or not self.multihash.startswith(MULTIHASH_PREFIX):
            raise CidFormatError("multihash must be 0x12 0x20 followed by a 32-byte digest")

    @property
    def digest(self) -> bytes:
        return self.multihash[2:]

    @property
    def text(self) -> str:
        return b58encode(self.multihash)

    @classmethod
    def parse(cls, text: str) -> "Cid":
        raw = b58decode(text)
        if len(raw) != MULTIHASH_LEN or not raw.startswith(MULTIHASH_PREFIX):
            raise CidFormatError(f"{text!r} does not decode to a sha2-256 multihash")
        return cls(raw)

    def __str__(self) -> str:
        return self.text


def compute_cid(data: bytes) -> Cid:
    """Content identifier of the exact bytes (no chunking, no wrapping)."""
    return Cid(MULTIHASH_PREFIX + hashlib.sha256(data).digest())


def verify(cid: Cid, data: bytes) -> bool:
    return compute_cid(data) == cid


def format_uri(cid: Cid) -> str:
    return URI_SCHEME + cid.text


def parse_uri(uri: str) -> Cid:
    """Accepts ipfs:// and the ipfs_hash:// synonym; rejects anything else."""
    for scheme in _URI_SCHEMES:
        if uri.startswith(scheme):
            try:
                return Cid.parse(uri[len(scheme):])
            except CidFormatError as exc:
                raise InvalidUri(f"bad content identifier in {uri!r}: {exc}") from exc
    raise InvalidUri(f"URI must use the {URI_SCHEME} scheme, got {uri!r}")
