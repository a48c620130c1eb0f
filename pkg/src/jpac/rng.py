"""Seedable, splittable random streams.

Every stochastic operation in the package takes a seed (an int or an
already-derived ``SeedRecord``) and derives a counter-based Philox stream
from it.  Substreams are split off a root seed by spawn keys, so parallel
Monte-Carlo runs get independent, reproducible streams regardless of
scheduling order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SeedLike = "int | SeedRecord"


@dataclass(frozen=True)
class SeedRecord:
    """Root entropy plus the spawn key identifying one derived stream."""

    entropy: int
    spawn_key: tuple[int, ...] = field(default_factory=tuple)

    def child(self, *key: int) -> "SeedRecord":
        return SeedRecord(self.entropy, self.spawn_key + tuple(int(k) for k in key))

    def to_json(self) -> dict:
        return {"entropy": self.entropy, "spawn_key": list(self.spawn_key)}

    @staticmethod
    def from_json(doc: dict) -> "SeedRecord":
        return SeedRecord(int(doc["entropy"]), tuple(int(k) for k in doc["spawn_key"]))


def as_seed_record(seed) -> SeedRecord:
    if isinstance(seed, SeedRecord):
        return seed
    if isinstance(seed, (int, np.integer)):
        return SeedRecord(int(seed))
    raise TypeError(f"seed must be an int or SeedRecord, got {type(seed).__name__}")


def make_rng(seed) -> np.random.Generator:
    """Philox generator for the stream identified by ``seed``."""
    rec = as_seed_record(seed)
    ss = np.random.SeedSequence(entropy=rec.entropy, spawn_key=rec.spawn_key)
    return np.random.Generator(np.random.Philox(ss))


def substream(seed, *key: int) -> np.random.Generator:
    """Generator for the child stream ``key`` split off ``seed``."""
    return make_rng(as_seed_record(seed).child(*key))
