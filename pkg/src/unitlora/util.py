"""Shared helpers: seeded RNG substreams, hashing, count formatting."""

from __future__ import annotations

import hashlib
import math
import zlib
from pathlib import Path

import numpy as np


class NumericalError(RuntimeError):
    """A non-finite value surfaced where finite numbers are required."""


def derive_rng(seed: int, *tags: str | int) -> np.random.Generator:
    """Deterministic RNG substream named by ``tags``.

    Builds a SeedSequence from the master seed plus a stable hash of each
    tag, so the same (seed, tags) pair yields the same stream on any
    platform, independent of call order.
    """
    entropy = [int(seed) & 0xFFFFFFFF]
    for tag in tags:
        if isinstance(tag, (int, np.integer)):
            entropy.append(int(tag) & 0xFFFFFFFF)
        else:
            entropy.append(zlib.crc32(str(tag).encode("utf-8")))
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *tags: str | int) -> int:
    """Stable integer sub-seed for components that take a seed, not an RNG."""
    return int(derive_rng(seed, *tags).integers(2**31))


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_path(path: str | Path) -> str:
    return sha256_bytes(Path(path).read_bytes())


def format_millions(count: int) -> str:
    """Format a parameter count as e.g. ``2.026 M``.

    Counts are rounded up to the next thousand before dividing, so
    2,025,472 prints as "2.026 M" rather than truncating to 2.025.
    """
    return f"{math.ceil(count / 1000) / 1000:.3f} M"


def check_finite(name: str, arr: np.ndarray) -> None:
    if not np.isfinite(arr).all():
        raise NumericalError(f"non-finite values in {name}")
