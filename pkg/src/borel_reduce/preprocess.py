"""Per-column min-max scaling onto the unit interval."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError

__all__ = ["NormalizerModel", "fit", "apply", "invert"]


@dataclass(frozen=True)
class NormalizerModel:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        mins = np.array(self.mins, dtype=np.float64).reshape(-1)
        maxs = np.array(self.maxs, dtype=np.float64).reshape(-1)
        if mins.shape != maxs.shape:
            raise ParameterError("mins and maxs must have the same length")
        if np.any(mins > maxs):
            raise ParameterError("every column needs x_min <= x_max")
        mins.setflags(write=False)
        maxs.setflags(write=False)
        object.__setattr__(self, "mins", mins)
        object.__setattr__(self, "maxs", maxs)

    @property
    def n_features(self):
        return self.mins.size

    @property
    def degenerate(self):
        """Boolean mask of constant columns."""
        return self.mins == self.maxs


def _as_matrix(features):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ParameterError(f"features must be 2-D, got shape {X.shape}")
    return X


def fit(features) -> NormalizerModel:
    """Record the column-wise minimum and maximum of ``features``."""
    X = _as_matrix(features)
    if X.shape[0] == 0 or X.shape[1] == 0:
        raise ParameterError("cannot fit a normalizer on an empty matrix")
    if not np.all(np.isfinite(X)):
        raise DataError("features contain NaN or infinite values")
    return NormalizerModel(X.min(axis=0), X.max(axis=0))


def apply(model: NormalizerModel, features) -> np.ndarray:
    """Map each column onto ``[0, 1]`` with ``(x - min) / (max - min)``.

    Values outside the fitted range are clamped; constant columns map to 0.5.
    """
    X = _as_matrix(features)
    if X.shape[1] != model.n_features:
        raise ParameterError(
            f"model was fitted on {model.n_features} columns, got {X.shape[1]}"
        )
    span = model.maxs - model.mins
    degenerate = span == 0
    safe = np.where(degenerate, 1.0, span)
    with np.errstate(over="ignore"):  # huge ratios are clamped below anyway
        out = (X - model.mins) / safe
    np.clip(out, 0.0, 1.0, out=out)
    out[:, degenerate] = 0.5
    return out


def invert(model: NormalizerModel, unit) -> np.ndarray:
    """Map unit-interval values back to the original scale."""
    U = _as_matrix(unit)
    return model.mins + U * (model.maxs - model.mins)
