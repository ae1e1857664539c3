"""Input-derived random number generators.

Every random choice in the toolkit draws from a generator seeded by the
inputs that identify the piece of work (base seed, dialog id, copy index,
turn index, ...), never by scheduling order, so results are reproducible
for any worker count.
"""

from __future__ import annotations

import hashlib
import random


def derive_seed(*parts: object) -> int:
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big")


def derive_rng(*parts: object) -> random.Random:
    return random.Random(derive_seed(*parts))
