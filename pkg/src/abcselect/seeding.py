"""Deterministic, counter-based random streams for parallel Monte Carlo runs.

Every random draw in the package is tied to a (master_seed, stream_id) pair
mapped onto a Philox counter-based generator, so results are byte-identical
for any worker count or scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["SeedSpec", "DrawStreams", "derive_seed"]

_U64 = np.uint64
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    """Identifies one independent random stream.

    ``master_seed`` names the experiment; ``stream_id`` names the draw or
    worker within it. Distinct pairs give statistically independent streams.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) <= _MASK64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator for this stream."""
        key = np.array([self.master_seed, self.stream_id], dtype=_U64)
        return np.random.Generator(np.random.Philox(key=key))


def _splitmix64(x: int) -> int:
    # Standard splitmix64 finalizer; pure integer ops, platform independent.
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(master_seed: int, *fields: int) -> int:
    """Mix a master seed with integer tags into a fresh 64-bit master seed.

    Used to give each (purpose, dataset, ...) combination its own seed space
    so stream ids never collide across independent procedures.
    """
    x = _splitmix64(int(master_seed) & _MASK64)
    for f in fields:
        x = _splitmix64(x ^ (int(f) & _MASK64))
    return x


class DrawStreams:
    """Cheap per-draw generators sharing one master seed.

    ``generator(i)`` returns a generator whose output is identical to
    ``SeedSpec(master_seed, i).generator()`` but reuses a single Philox
    instance by resetting its state (roughly 7x faster, which matters at
    1e6 draws). Not thread-safe; use one instance per worker.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed)
        self._bitgen = np.random.Philox(key=np.zeros(2, dtype=_U64))
        self._gen = np.random.Generator(self._bitgen)
        self._state = {
            "bit_generator": "Philox",
            "state": {"counter": np.zeros(4, dtype=_U64), "key": np.zeros(2, dtype=_U64)},
            "buffer": np.zeros(4, dtype=_U64),
            "buffer_pos": 4,
            "has_uint32": 0,
            "uinteger": 0,
        }

    def generator(self, stream_id: int) -> np.random.Generator:
        st = self._state
        st["state"]["counter"] = np.zeros(4, dtype=_U64)
        st["state"]["key"] = np.array([self.master_seed, stream_id], dtype=_U64)
        self._bitgen.state = st
        return self._gen
