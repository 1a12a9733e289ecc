"""Seeded random streams.

A single master seed is expanded into independent, named generators so that
coupled chains can share exactly the draws they are meant to share (momentum,
mass matrix, Metropolis uniforms) while everything else stays separate.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

STREAM_NAMES = ("momentum", "mass", "uniform", "init")


def _name_key(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def child_seed(master: int, *path: str | int) -> np.random.SeedSequence:
    """Derive a seed sequence from a master seed and a path of labels.

    Strings are hashed with CRC-32 and integers used as-is; the resulting
    entropy tuple is distinct for distinct paths, so cells such as
    ``(master, "a-hmc", 3)`` never share a stream with ``(master, "hmc", 3)``.
    """
    words = [int(master)]
    for part in path:
        if isinstance(part, str):
            # tag strings so that "3" and 3 map to different words
            words.extend((1, _name_key(part)))
        else:
            words.extend((0, int(part)))
    return np.random.SeedSequence(words)


@dataclass
class Streams:
    """Bundle of named generators derived from one seed."""

    seed: int | np.random.SeedSequence
    generators: dict[str, np.random.Generator] = field(init=False, repr=False)

    def __post_init__(self):
        if isinstance(self.seed, np.random.SeedSequence):
            base = self.seed
        else:
            base = np.random.SeedSequence(int(self.seed))
        self.generators = {}
        for name in STREAM_NAMES:
            ss = np.random.SeedSequence(
                base.entropy,
                spawn_key=tuple(base.spawn_key) + (_name_key(name),),
            )
            self.generators[name] = np.random.Generator(np.random.PCG64(ss))

    @property
    def momentum(self) -> np.random.Generator:
        return self.generators["momentum"]

    @property
    def mass(self) -> np.random.Generator:
        return self.generators["mass"]

    @property
    def uniform(self) -> np.random.Generator:
        return self.generators["uniform"]

    @property
    def init(self) -> np.random.Generator:
        return self.generators["init"]
