"""Named, independent random streams derived from one run seed."""

import hashlib
import random

SEED_MASK = (1 << 64) - 1


def substream_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed & SEED_MASK}/{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class Streams:
    """Lazily created ``random.Random`` instances keyed by consumer name.

    Each stream is seeded from (seed, name) only, so adding or removing
    draws on one stream never shifts another.
    """

    def __init__(self, seed: int):
        self.seed = seed & SEED_MASK
        self._streams: dict[str, random.Random] = {}

    def __getitem__(self, name: str) -> random.Random:
        rng = self._streams.get(name)
        if rng is None:
            rng = self._streams[name] = random.Random(substream_seed(self.seed, name))
        return rng
