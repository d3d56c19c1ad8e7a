"""Named, independent random substreams derived from a run seed."""
from __future__ import annotations

import hashlib
import random

AVAILABILITY = "availability"
VOTING = "voting"
JITTER = "jitter"


def derive_seed(seed: int, name: str) -> int:
    digest = hashlib.blake2b(f"{seed}:{name}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def substream(seed: int, name: str) -> random.Random:
    """A generator that depends only on ``(seed, name)``.

    Toggling one factor never perturbs another factor's draws because each
    consumer owns its own stream.
    """
    return random.Random(derive_seed(seed, name))


def stable_hash(*parts: object) -> int:
    """Process-independent 64-bit hash (``hash()`` is salted per interpreter)."""
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "big")
