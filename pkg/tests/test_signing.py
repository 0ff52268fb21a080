import random

import pytest

from aidchain.crypto import (
    InvalidPointError,
    KeyPair,
    Signature,
    derive_address,
    keccak256,
    sign_digest,
    sign_tx,
    verify_digest,
    verify_tx,
)
from aidchain.crypto import curve, signing
from reference_keccak import keccak256_oracle


@pytest.fixture(scope="module")
def keypair():
    return KeyPair.from_seed(b"signing-tests")


def test_sign_verify_roundtrip(keypair):
    digest = keccak256(b"round trip")
    sig = sign_digest(keypair, digest)
    assert verify_digest(sig, digest)


def test_wrong_key_rejected(keypair):
    other = KeyPair.from_seed(b"other")
    digest = keccak256(b"payload")
    sig = sign_digest(keypair, digest)
    forged = Signature(sig.r, sig.s, other.public_key)
    assert not verify_digest(forged, digest)


def test_signature_deterministic(keypair):
    digest = keccak256(b"same input")
    assert sign_digest(keypair, digest) == sign_digest(keypair, digest)


def test_low_s_always(keypair):
    rng = random.Random(3)
    for _ in range(50):
        sig = sign_digest(keypair, keccak256(rng.randbytes(16)))
        assert 1 <= sig.s <= curve.N // 2


def test_high_s_twin_rejected(keypair):
    digest = keccak256(b"malleability")
    sig = sign_digest(keypair, digest)
    twin = Signature(sig.r, curve.N - sig.s, sig.public_key)
    assert not verify_digest(twin, digest)


def test_tx_bit_flips_all_rejected(keypair):
    tx_bytes = b"\x01\x02short transaction body\xff"
    sig = sign_tx(keypair, tx_bytes)
    sender = keypair.address
    assert verify_tx(sig, tx_bytes, sender)
    for byte_index in range(len(tx_bytes)):
        for bit in range(8):
            mutated = bytearray(tx_bytes)
            mutated[byte_index] ^= 1 << bit
            assert not verify_tx(sig, bytes(mutated), sender)


def test_verify_tx_requires_matching_sender(keypair):
    tx_bytes = b"bound to sender"
    sig = sign_tx(keypair, tx_bytes)
    assert verify_tx(sig, tx_bytes, keypair.address)
    assert not verify_tx(sig, tx_bytes, b"\x00" * 20)


def test_random_tamper_never_verifies(keypair):
    rng = random.Random(11)
    digest = keccak256(b"tamper target")
    sig = sign_digest(keypair, digest)
    for _ in range(10_000):
        r, s, pk = sig.r, sig.s, sig.public_key
        which = rng.randrange(3)
        if which == 0:
            r ^= 1 << rng.randrange(256)
        elif which == 1:
            s ^= 1 << rng.randrange(256)
        else:
            mutated = bytearray(pk)
            mutated[rng.randrange(64)] ^= 1 << rng.randrange(8)
            pk = bytes(mutated)
        assert not verify_digest(Signature(r, s, pk), digest)


def test_pure_verify_agrees_with_selected_backend(keypair):
    rng = random.Random(5)
    for _ in range(25):
        digest = keccak256(rng.randbytes(20))
        sig = sign_digest(keypair, digest)
        assert signing._verify_pure(sig.r, sig.s, sig.public_key, digest)
        bad = Signature(sig.r, (sig.s + 1) % curve.N, sig.public_key)
        if 1 <= bad.s <= curve.N // 2:
            assert not signing._verify_pure(bad.r, bad.s, bad.public_key, digest)


def test_rfc6979_matches_openssl_deterministic_ecdsa(keypair):
    """Independent RFC 6979 oracle: OpenSSL's deterministic ECDSA."""
    cryptography = pytest.importorskip("cryptography")
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric import ec
    from cryptography.hazmat.primitives.asymmetric.utils import (
        Prehashed,
        decode_dss_signature,
    )

    try:
        algo = ec.ECDSA(Prehashed(hashes.SHA256()), deterministic_signing=True)
        priv = ec.derive_private_key(keypair.secret, ec.SECP256K1())
        digest = keccak256(b"cross-implementation nonce check")
        der = priv.sign(digest, algo)
    except (TypeError, ValueError) as exc:  # pragma: no cover
        pytest.skip(f"deterministic signing unavailable: {exc}")
    r, s = decode_dss_signature(der)
    if s > curve.N // 2:
        s = curve.N - s
    mine = sign_digest(keypair, digest)
    assert (mine.r, mine.s) == (r, s)


def test_openssl_accepts_our_signatures(keypair):
    cryptography = pytest.importorskip("cryptography")
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric import ec
    from cryptography.hazmat.primitives.asymmetric.utils import (
        Prehashed,
        encode_dss_signature,
    )

    digest = keccak256(b"outbound interop")
    sig = sign_digest(keypair, digest)
    pub = ec.EllipticCurvePublicKey.from_encoded_point(
        ec.SECP256K1(), b"\x04" + keypair.public_key
    )
    pub.verify(
        encode_dss_signature(sig.r, sig.s),
        digest,
        ec.ECDSA(Prehashed(hashes.SHA256())),
    )


class TestAddressDerivation:
    def test_deterministic(self):
        kp = KeyPair.from_seed(b"addr")
        assert derive_address(kp.public_key) == derive_address(kp.public_key)

    def test_length_and_suffix_rule(self):
        rng = random.Random(9)
        for _ in range(20):
            kp = KeyPair.from_seed(rng.randbytes(8))
            addr = derive_address(kp.public_key)
            assert len(addr) == 20
            assert addr == keccak256_oracle(kp.public_key)[-20:]

    def test_known_convention_anchor(self):
        # secret scalar 1 gives the generator point; its address is a
        # widely published constant under this derivation convention
        kp = KeyPair.from_secret(1)
        assert kp.address.hex() == "7e5f4552091a69125d5dfcb7b8c2659029395bdf"

    def test_invalid_point_rejected(self):
        with pytest.raises(InvalidPointError):
            derive_address(b"\x01" * 64)
        with pytest.raises(InvalidPointError):
            derive_address(b"\x01" * 63)

    def test_no_collisions_in_generated_set(self):
        seen = set()
        for i in range(200):
            addr = KeyPair.from_seed(i.to_bytes(4, "big")).address
            assert addr not in seen
            seen.add(addr)
