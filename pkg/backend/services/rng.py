# backend/services/rng.py
import hashlib

import numpy as np


def stream_key(seed: int, label: str, index: int = 0) -> int:
    """64-bit key for the (seed, label, index) stream."""
    digest = hashlib.blake2b(
        f"{int(seed)}|{label}|{int(index)}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Counter-based generator for one named purpose.

    Streams with different labels or indices are independent, and the same
    triple always yields the same sequence regardless of call order.
    """
    return np.random.Generator(np.random.Philox(key=stream_key(seed, label, index)))
