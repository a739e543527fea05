"""Digit-interleaving reduction of the unit cube.

A point of ``[0, 1]^n`` is mapped to ``[0, 1]^m`` by splitting the ``n``
coordinates into ``m`` ordered groups and, within each group, writing out the
base-``b`` digits of every member in turn: first digit of member 1, first
digit of member 2, ..., then the second digits, and so on.  With base 10,
``(0.437, 0.982)`` becomes ``0.493872``.

Digits are kept as integer arrays (:class:`DigitMatrix`) so that the map is
exactly invertible at a fixed precision.  The final float embedding produced
by :func:`to_value` is lossy once the interleaved expansion is longer than a
double can resolve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "DigitMatrix",
    "ReductionPlan",
    "quantize",
    "interleave",
    "deinterleave",
    "to_value",
    "make_plan",
    "reduce_row",
    "reduce_matrix",
    "reduce_digits",
    "GROUPING_MODES",
]

GROUPING_MODES = ("strided", "contiguous")

# b**P must be exactly representable as a double for floor(x * b**P) to be exact.
_MAX_SCALE = 2**53


def _check_base(base):
    if int(base) != base or base < 2:
        raise ParameterError(f"base must be an integer >= 2, got {base!r}")


def _check_precision(precision):
    if int(precision) != precision or precision < 1:
        raise ParameterError(f"precision must be an integer >= 1, got {precision!r}")


@dataclass(frozen=True)
class DigitMatrix:
    """Base-``b`` digits of ``n`` coordinates, ``precision`` digits each.

    ``digits[j, i]`` is the ``(i+1)``-th digit after the radix point of
    coordinate ``j``.
    """

    base: int
    precision: int
    digits: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_base(self.base)
        _check_precision(self.precision)
        d = np.array(self.digits, dtype=np.int64)
        if d.ndim != 2:
            raise ParameterError(f"digits must be 2-D (rows x precision), got shape {d.shape}")
        if d.shape[0] < 1:
            raise ParameterError("a DigitMatrix needs at least one row")
        if d.shape[1] != self.precision:
            raise ParameterError(
                f"ragged digits: expected {self.precision} per row, got {d.shape[1]}"
            )
        if d.size and (d.min() < 0 or d.max() > self.base - 1):
            raise ParameterError(f"digits must lie in [0, {self.base - 1}]")
        d.setflags(write=False)
        object.__setattr__(self, "digits", d)

    @property
    def rows(self):
        return self.digits.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DigitMatrix):
            return NotImplemented
        return (
            self.base == other.base
            and self.precision == other.precision
            and np.array_equal(self.digits, other.digits)
        )

    def __hash__(self):
        return hash((self.base, self.precision, self.digits.tobytes()))


def quantize(x, base, precision):
    """Return the first ``precision`` base-``base`` digits of ``x``.

    ``x`` may be a scalar or an array; the digit axis is appended last.
    Digits come from the integer ``floor(x * base**precision)`` written out
    in base ``base``.  ``x == 1`` is treated as ``0.(b-1)(b-1)...``.

    >>> quantize(0.437, 10, 3).tolist()
    [4, 3, 7]
    """
    _check_base(base)
    _check_precision(precision)
    scale = base**precision
    if scale > _MAX_SCALE:
        raise ParameterError(
            f"base**precision = {base}**{precision} exceeds 2**53; lower the precision"
        )
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError("quantize expects values in [0, 1]")
    ints = np.minimum(np.floor(arr * float(scale)).astype(np.int64), scale - 1)
    powers = base ** np.arange(precision - 1, -1, -1, dtype=np.int64)
    return (ints[..., None] // powers) % base


def interleave(digits):
    """Interleave the digit rows of one group into a single digit sequence.

    Position ``g*i + j`` of the output (0-based) holds digit ``i`` of member
    ``j``, where ``g`` is the number of rows.  Arrays with extra leading axes
    ``(..., g, P)`` are handled batch-wise and give ``(..., g*P)``.
    """
    if isinstance(digits, DigitMatrix):
        d = digits.digits
    else:
        try:
            d = np.asarray(digits)
        except ValueError as exc:
            raise ParameterError("ragged digit rows") from exc
        if d.ndim < 2 or d.dtype == object:
            raise ParameterError("ragged digit rows")
    return np.swapaxes(d, -1, -2).reshape(*d.shape[:-2], -1)


def deinterleave(digits, group_size, base=None):
    """Invert :func:`interleave`.

    A 1-D sequence with ``base`` given yields a :class:`DigitMatrix`;
    otherwise the digits come back as a ``(..., group_size, L / group_size)``
    array.
    """
    s = np.asarray(digits)
    if s.ndim == 0:
        s = s.reshape(1)
    length = s.shape[-1]
    if group_size < 1 or length % group_size:
        raise ParameterError(
            f"sequence of length {length} is not divisible by group size {group_size}"
        )
    rows = np.swapaxes(s.reshape(*s.shape[:-1], length // group_size, group_size), -1, -2)
    if base is None or s.ndim > 1:
        return rows
    return DigitMatrix(base, rows.shape[1], rows)


def to_value(digits, base):
    """Embed digit sequences as reals, ``sum(d_k * base**-k)``.

    Works along the last axis, so a ``(rows, L)`` array yields ``rows``
    values.  Terms are accumulated most significant first; weights that
    underflow to zero are dropped.
    """
    d = np.asarray(digits)
    if d.shape[-1:] == (0,) or d.ndim == 0:
        return 0.0 if d.ndim <= 1 else np.zeros(d.shape[:-1])
    total = np.zeros(d.shape[:-1], dtype=np.float64)
    weight = 1.0
    for k in range(d.shape[-1]):
        weight /= base
        if weight == 0.0:
            break
        total += d[..., k] * weight
    return float(total) if total.ndim == 0 else total


@dataclass(frozen=True)
class ReductionPlan:
    """How ``source_dims`` columns are merged into ``target_dims`` columns.

    ``groups[t]`` lists the (0-based) source columns interleaved into target
    column ``t``; earlier members contribute the more significant digit in
    each round.
    """

    source_dims: int
    target_dims: int
    base: int
    precision: int
    groups: tuple
    grouping_mode: str = "strided"
    column_order: tuple = ()

    def __post_init__(self):
        _check_base(self.base)
        _check_precision(self.precision)
        if not 1 <= self.target_dims <= self.source_dims:
            raise ParameterError(
                f"target_dims must be in [1, {self.source_dims}], got {self.target_dims}"
            )
        flat = [c for g in self.groups for c in g]
        if len(self.groups) != self.target_dims or any(len(g) == 0 for g in self.groups):
            raise ParameterError("need exactly target_dims non-empty groups")
        if sorted(flat) != list(range(self.source_dims)):
            raise ParameterError("groups must partition the source columns")

    @property
    def is_identity(self):
        return all(len(g) == 1 for g in self.groups)


def make_plan(n, m, base=3, precision=8, grouping_mode="strided", column_order=None):
    """Build a :class:`ReductionPlan` merging ``n`` columns into ``m``.

    ``column_order`` ranks the source columns (``column_order[0]`` is the
    best); it defaults to the natural order.  In ``strided`` mode the column
    of rank ``r`` (0-based) goes to group ``r % m`` at position ``r // m``;
    in ``contiguous`` mode ranks are cut into consecutive blocks, the first
    ``n % m`` blocks taking one extra column.
    """
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}")
    if not 1 <= m <= n:
        raise ParameterError(f"target dims m={m} must satisfy 1 <= m <= n={n}")
    if grouping_mode not in GROUPING_MODES:
        raise ParameterError(f"unknown grouping mode {grouping_mode!r}")
    order = tuple(range(n)) if column_order is None else tuple(int(c) for c in column_order)
    if sorted(order) != list(range(n)):
        raise ParameterError("column_order must be a permutation of range(n)")

    if grouping_mode == "strided":
        groups = tuple(order[t::m] for t in range(m))
    else:
        size, extra = divmod(n, m)
        groups, start = [], 0
        for t in range(m):
            stop = start + size + (1 if t < extra else 0)
            groups.append(order[start:stop])
            start = stop
        groups = tuple(groups)
    return ReductionPlan(n, m, base, precision, groups, grouping_mode, order)


def _as_unit_matrix(X, n):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != n:
        raise ParameterError(f"expected a 2-D array with {n} columns, got shape {X.shape}")
    if not np.all(np.isfinite(X)) or np.any(X < 0.0) or np.any(X > 1.0):
        raise DomainError("reduction input must lie in [0, 1]; normalize first")
    return X


def reduce_digits(X, plan):
    """Interleaved digit sequences per target column.

    Returns a list with one ``(rows, len(group) * precision)`` integer array
    per group.  This is the exact (lossless) form of the reduction.
    """
    X = _as_unit_matrix(X, plan.source_dims)
    digits = quantize(X, plan.base, plan.precision)  # rows x n x P
    out = []
    for group in plan.groups:
        out.append(interleave(digits[:, list(group), :]))
    return out


def reduce_matrix(X, plan):
    """Apply the reduction to every row of ``X`` (values in ``[0, 1]``)."""
    seqs = reduce_digits(X, plan)
    return np.column_stack([to_value(s, plan.base) for s in seqs])


def reduce_row(row: Sequence[float], plan: ReductionPlan) -> np.ndarray:
    return reduce_matrix(np.asarray(row, dtype=np.float64)[None, :], plan)[0]
