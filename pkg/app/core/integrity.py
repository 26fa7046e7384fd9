"""Payload digests for checkpoint files (SHA-256, constant-time verification)."""
import hashlib
import hmac

DIGEST_SIZE = hashlib.sha256().digest_size


def digest(payload: bytes) -> bytes:
    return hashlib.sha256(payload).digest()


def seal(payload: bytes) -> bytes:
    """Return payload followed by its digest."""
    return payload + digest(payload)


def verify_digest(payload: bytes, expected: bytes) -> bool:
    return hmac.compare_digest(digest(payload), expected)


def unseal(blob: bytes) -> bytes | None:
    """Split a sealed blob; return the payload if the digest matches, else None."""
    if len(blob) < DIGEST_SIZE:
        return None
    payload, sig = blob[:-DIGEST_SIZE], blob[-DIGEST_SIZE:]
    if not verify_digest(payload, sig):
        return None
    return payload
