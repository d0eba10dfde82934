"""Authenticated encryption: envelope byte layout and tamper rejection."""

import json
import os
import secrets

import pytest
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from hypothesis import given, settings
from hypothesis import strategies as st

from provforge.envelope import (
    ALG_AES256GCM,
    KEY_LEN,
    MAGIC,
    NONCE_LEN,
    TAG_LEN,
    EncryptedEnvelope,
    SymmetricKey,
    decrypt,
    encrypt,
    generate_key,
    load_key,
    save_key,
)
from provforge.errors import (
    AuthenticationFailure,
    EnvelopeFormatError,
    InvalidKey,
    UnsupportedAlgorithm,
)


def _fixed_nonce(n):
    assert n == NONCE_LEN
    return bytes(range(NONCE_LEN))


def test_round_trip(key):
    plaintext = b'{"hello": "world"}'
    env = encrypt(plaintext, key)
    assert decrypt(env, key) == plaintext
    again = EncryptedEnvelope.from_bytes(env.to_bytes())
    assert again == env
    assert decrypt(again, key) == plaintext


def test_byte_layout_built_by_hand(key):
    # independently assemble the envelope bytes and compare
    plaintext = b"layout check"
    env = encrypt(plaintext, key, nonce_source=_fixed_nonce)
    kid = key.key_id.encode("utf-8")
    header = MAGIC + bytes([ALG_AES256GCM]) + len(kid).to_bytes(2, "big") + kid
    body = AESGCM(key.key_bytes).encrypt(_fixed_nonce(NONCE_LEN), plaintext, header)
    assert env.to_bytes() == header + _fixed_nonce(NONCE_LEN) + body
    assert env.nonce == _fixed_nonce(NONCE_LEN)
    assert env.ciphertext_with_tag == body


def test_overhead_formula(key):
    for size in (0, 1, 100, 4096):
        env = encrypt(b"\x00" * size, key)
        overhead = len(env.to_bytes()) - size
        assert overhead == len(MAGIC) + 1 + 2 + len(key.key_id.encode()) + NONCE_LEN + TAG_LEN


def test_ciphertext_is_not_cleartext_json(key):
    plaintext = json.dumps({"AssetId": "DCS-0001"}).encode()
    env = encrypt(plaintext, key, nonce_source=_fixed_nonce)
    raw = env.to_bytes()
    assert plaintext not in raw
    with pytest.raises((UnicodeDecodeError, json.JSONDecodeError)):
        json.loads(raw)


def test_fresh_nonce_per_message(key):
    a = encrypt(b"same plaintext", key)
    b = encrypt(b"same plaintext", key)
    assert a.nonce != b.nonce
    assert a.ciphertext_with_tag != b.ciphertext_with_tag


def test_wrong_key_rejected(key):
    env = encrypt(b"secret", key)
    other = SymmetricKey(os.urandom(KEY_LEN), "other")
    with pytest.raises(AuthenticationFailure):
        decrypt(env, other)


def test_single_bit_flips_in_body_rejected(key):
    env = encrypt(b"tamper me", key, nonce_source=_fixed_nonce)
    body = env.ciphertext_with_tag
    for i in range(len(body)):
        for bit in (0x01, 0x80):
            mutated = bytearray(body)
            mutated[i] ^= bit
            bad = EncryptedEnvelope(env.key_id, env.nonce, bytes(mutated))
            with pytest.raises(AuthenticationFailure):
                decrypt(bad, key)


def test_nonce_and_key_id_are_authenticated(key):
    env = encrypt(b"tamper me", key, nonce_source=_fixed_nonce)
    flipped_nonce = bytes([env.nonce[0] ^ 1]) + env.nonce[1:]
    with pytest.raises(AuthenticationFailure):
        decrypt(EncryptedEnvelope(env.key_id, flipped_nonce, env.ciphertext_with_tag), key)
    with pytest.raises(AuthenticationFailure):
        decrypt(EncryptedEnvelope("test-kez", env.nonce, env.ciphertext_with_tag), key)


def test_every_envelope_byte_mutation_rejected(key):
    """Whole-envelope sweep: each single-byte change must fail parse or decrypt."""
    env = encrypt(b"sweep", key, nonce_source=_fixed_nonce)
    raw = env.to_bytes()
    for i in range(len(raw)):
        mutated = bytearray(raw)
        mutated[i] ^= 0x01
        with pytest.raises((EnvelopeFormatError, UnsupportedAlgorithm, AuthenticationFailure)):
            decrypt(EncryptedEnvelope.from_bytes(bytes(mutated)), key)


def test_bad_magic(key):
    env = encrypt(b"x", key)
    raw = b"XXENC1" + env.to_bytes()[len(MAGIC):]
    with pytest.raises(EnvelopeFormatError):
        EncryptedEnvelope.from_bytes(raw)


def test_unknown_algorithm(key):
    env = encrypt(b"x", key)
    raw = bytearray(env.to_bytes())
    raw[len(MAGIC)] = 0x02
    parsed = EncryptedEnvelope.from_bytes(bytes(raw))
    assert parsed.algorithm_id == 0x02
    with pytest.raises(UnsupportedAlgorithm):
        decrypt(parsed, key)


@pytest.mark.parametrize(
    "raw",
    [
        b"",
        MAGIC,
        MAGIC + b"\x01",
        MAGIC + b"\x01\x00\x08short",  # kid_len beyond the data
        MAGIC + b"\x01\x00\x00" + b"\x00" * (NONCE_LEN + TAG_LEN - 1),  # one byte short
        MAGIC + b"\x01\x00\x02\xff\xff" + b"\x00" * (NONCE_LEN + TAG_LEN),  # kid not UTF-8
    ],
)
def test_truncated_or_malformed(raw):
    with pytest.raises(EnvelopeFormatError):
        EncryptedEnvelope.from_bytes(raw)


def test_bad_nonce_source(key):
    with pytest.raises(EnvelopeFormatError):
        encrypt(b"x", key, nonce_source=lambda n: b"\x00" * (n - 1))


def test_key_validation():
    with pytest.raises(InvalidKey):
        SymmetricKey(b"\x00" * 31, "short")
    with pytest.raises(InvalidKey):
        SymmetricKey(b"\x00" * 32, "")
    with pytest.raises(InvalidKey):
        generate_key("")


def test_generate_key_is_random():
    a, b = generate_key("a"), generate_key("a")
    assert a.key_bytes != b.key_bytes
    assert len(a.key_bytes) == KEY_LEN


def test_key_file_round_trip(tmp_path):
    key = generate_key("press-7")
    path = tmp_path / "press.key"
    save_key(key, path)
    assert oct(path.stat().st_mode & 0o777) == oct(0o600)
    assert path.read_text().strip() == key.key_bytes.hex()
    assert (tmp_path / "press.key.id").read_text().strip() == "press-7"
    assert load_key(path) == key


def test_key_file_without_sidecar_uses_stem(tmp_path):
    key = generate_key("whatever")
    path = tmp_path / "press.key"
    save_key(key, path)
    (tmp_path / "press.key.id").unlink()
    loaded = load_key(path)
    assert loaded.key_bytes == key.key_bytes
    assert loaded.key_id == "press"


@pytest.mark.parametrize(
    "content",
    ["", "zz" * 32, "00" * 31, "00" * 33, ("AB" * 32), "00" * 32 + " trailing junk"],
)
def test_load_key_rejects_malformed(tmp_path, content):
    path = tmp_path / "bad.key"
    path.write_text(content + "\n")
    with pytest.raises(InvalidKey):
        load_key(path)


def test_load_key_missing_file(tmp_path):
    with pytest.raises(InvalidKey):
        load_key(tmp_path / "nope.key")


@settings(max_examples=50, deadline=None)
@given(plaintext=st.binary(max_size=2048), kid=st.text(min_size=1, max_size=40))
def test_round_trip_property(plaintext, kid):
    key = SymmetricKey(secrets.token_bytes(KEY_LEN), kid)
    env = EncryptedEnvelope.from_bytes(encrypt(plaintext, key).to_bytes())
    assert env.key_id == kid
    assert decrypt(env, key) == plaintext
