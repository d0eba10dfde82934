"""Exception hierarchy shared by all provforge modules."""

from __future__ import annotations


class ProvForgeError(Exception):
    """Base class for every error raised by this package."""


# --- feature evaluation -----------------------------------------------------

class InvalidSpec(ProvForgeError):
    """A feature specification violates its invariants."""


class InvalidMeasurement(ProvForgeError):
    """A measured value is unusable for the feature kind."""


class MissingMeasurement(ProvForgeError):
    """A specified feature has no measured value."""

    def __init__(self, feature_id: str):
        super().__init__(f"no measurement for feature {feature_id!r}")
        self.feature_id = feature_id


class UnknownFeature(ProvForgeError):
    """A measurement names a feature absent from the workpiece definition."""

    def __init__(self, feature_id: str):
        super().__init__(f"measurement for unknown feature {feature_id!r}")
        self.feature_id = feature_id


# --- quality-record documents -----------------------------------------------

class SpecReportMismatch(ProvForgeError):
    """Report and feature specifications do not cover the same feature set."""


class ParseError(ProvForgeError):
    """Input bytes are not well-formed for the expected format."""


class SchemaError(ProvForgeError):
    """Well-formed input violates the documented schema."""


# --- encryption envelopes ---------------------------------------------------

class EnvelopeFormatError(ProvForgeError):
    """Envelope bytes do not follow the documented binary layout."""


class UnsupportedAlgorithm(ProvForgeError):
    """Envelope names an algorithm id this build does not implement."""


class AuthenticationFailure(ProvForgeError):
    """Decryption failed: wrong key or tampered ciphertext (indistinguishable)."""


class KeyGenerationFailure(ProvForgeError):
    """The secure random source could not produce key material."""


class InvalidKey(ProvForgeError):
    """Key material or key id violates the key format."""


# --- content addressing and storage ------------------------------------------

class CidFormatError(ProvForgeError):
    """Text is not a valid base58btc sha2-256 content identifier."""


class NotFound(ProvForgeError):
    """No blob is stored under the requested content identifier."""


class IntegrityViolation(ProvForgeError):
    """Stored bytes no longer hash to their content identifier."""


class StoreUnavailable(ProvForgeError):
    """The blob store cannot be reached or written."""


class RemoteError(ProvForgeError):
    """The remote store answered with an unexpected failure."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


# --- token ledger -------------------------------------------------------------

class InvalidAddress(ProvForgeError):
    """Text is not a 20-byte 0x-prefixed hex address."""


class InvalidCollection(ProvForgeError):
    """Collection name or symbol is empty."""


class TokenExists(ProvForgeError):
    """A token with this id has already been minted."""

    def __init__(self, token_id: int):
        super().__init__(f"token {token_id} already exists")
        self.token_id = token_id


class TokenNotFound(ProvForgeError):
    """No token with this id exists."""

    def __init__(self, token_id: int):
        super().__init__(f"token {token_id} not found")
        self.token_id = token_id


class InvalidUri(ProvForgeError):
    """URI is not of the form ipfs://<valid cid>."""


class Unauthorized(ProvForgeError):
    """Caller is not the current owner of the token."""


class InvalidRecipient(ProvForgeError):
    """Transfer target is the zero address."""


class LedgerIntegrityError(ProvForgeError):
    """Persisted ledger log fails hash-chain or replay verification."""
