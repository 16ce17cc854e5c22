"""Seed derivation and random-generator construction.

All randomness in the package flows through counter-based Philox generators
built from explicit integer seeds; there is no global RNG state.  Seeds for
sub-tasks (simulation cells, replications, per-rectangle QMC shifts) are
derived with :func:`derive_seed`, which is order-free: the derived seed
depends only on the parts, never on evaluation order or thread scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _part_to_int(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        return int(part) & _MASK64
    if isinstance(part, bytes):
        digest = hashlib.sha256(part).digest()
        return int.from_bytes(digest[:8], "little")
    if isinstance(part, (str, float, np.floating)):
        return _part_to_int(repr(part).encode() if not isinstance(part, str) else part.encode())
    raise TypeError(f"cannot derive a seed from {type(part).__name__}")


def derive_seed(*parts) -> int:
    """Deterministically mix ``parts`` (ints, floats, strings) into a 64-bit seed."""
    entropy = [_part_to_int(p) for p in parts]
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, np.uint64)[0])


def generator(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator keyed directly by the given seed."""
    return np.random.Generator(np.random.Philox(key=seed & _MASK64))
