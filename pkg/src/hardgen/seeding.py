"""Deterministic RNG streams derived from structured keys."""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    material = "\x1f".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(material).digest()[:8], "big")


def derive_rng(*parts: object) -> random.Random:
    """A ``random.Random`` that depends only on ``parts``.

    Streams for different keys are independent, so work can be processed in
    any order or in parallel without changing results.
    """
    return random.Random(derive_seed(*parts))
