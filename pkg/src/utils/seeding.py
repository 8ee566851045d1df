"""Deterministic per-dyad random streams."""
from __future__ import annotations

import hashlib

import numpy as np


def _hash_to_u64(text: str) -> int:
    digest = hashlib.sha256(text.encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big", signed=False)


def derive_dyad_seed(master_seed: int, alpha: float, beta: float, dyad_index: int) -> int:
    """Stable 64-bit seed for one dyad; independent of execution order and worker."""
    if dyad_index < 0:
        raise ValueError(f"dyad_index must be non-negative (got {dyad_index})")
    return _hash_to_u64(f"{master_seed}:{float(alpha)!r}:{float(beta)!r}:{dyad_index}")


def dyad_rng(master_seed: int, alpha: float, beta: float, dyad_index: int) -> np.random.Generator:
    return np.random.default_rng(derive_dyad_seed(master_seed, alpha, beta, dyad_index))
