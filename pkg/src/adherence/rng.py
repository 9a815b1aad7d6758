"""Named random sub-streams derived from one root seed.

Every stage (generation, folds, resampler, model) draws from its own stream so
stages can be re-run independently while the whole pipeline stays reproducible.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_entropy(label: object) -> int:
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_sequence(seed: int, *path: object) -> np.random.SeedSequence:
    """SeedSequence for the sub-stream named by ``path`` under ``seed``."""
    entropy = [seed & _MASK64] + [_label_entropy(p) for p in path]
    return np.random.SeedSequence(entropy)


def substream(seed: int, *path: object) -> np.random.Generator:
    """Independent generator for the named sub-stream; stable across platforms."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *path)))


def substream_seed(seed: int, *path: object) -> int:
    """Plain integer seed for components that are themselves seed-rooted."""
    return int(seed_sequence(seed, *path).generate_state(1)[0])
