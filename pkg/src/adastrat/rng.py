"""Named, reproducible random substreams.

A campaign owns one master seed. Every consumer of randomness (preliminary
draws, the surrogate-sample pool, candidate searches per iteration, ...)
derives its own named substream, so changing how much randomness one consumer
uses never perturbs the draws another one sees.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        return int(label) & _MASK64
    digest = hashlib.blake2b(str(label).encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def substream(master_seed: int, *labels) -> np.random.Generator:
    """Return the generator for the substream named by ``labels``.

    The same (seed, labels) pair always yields the same stream, on any
    platform; distinct label tuples yield statistically independent streams.
    """
    entropy = [int(master_seed) & _MASK64] + [_label_key(lab) for lab in labels]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
