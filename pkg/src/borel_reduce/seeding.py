"""Reproducible seed derivation and train/test splitting.

Trial ``t`` of a run with master seed ``s`` uses ``s XOR splitmix64(t)``.
Arms of an experiment that share trial indices therefore share splits,
which makes their accuracies directly comparable trial by trial.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """The splitmix64 finalizer, a bijective 64-bit integer mixer."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial_index: int) -> int:
    return (int(master_seed) & _MASK) ^ splitmix64(int(trial_index))


def substream(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & _MASK, *[int(t) for t in tags]])


def split_indices(n_rows, split_fraction, rng):
    """Shuffle ``range(n_rows)`` and cut it into (train, test) index arrays."""
    if not 0.0 < split_fraction < 1.0:
        raise ParameterError(f"split_fraction must be in (0, 1), got {split_fraction}")
    if n_rows < 2:
        raise ParameterError("need at least two rows to split")
    n_train = int(round(split_fraction * n_rows))
    n_train = min(max(n_train, 1), n_rows - 1)
    perm = rng.permutation(n_rows)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])
