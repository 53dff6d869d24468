"""Validated vector types over a token vocabulary and the information
functionals built on them.

Everything downstream manipulates two kinds of vectors: raw per-token
scores (logits) and points of the probability simplex

    Delta(V) = { q : q(v) >= 0 for all v,  sum_v q(v) = 1 }.

Types in this module validate once at construction and are immutable
afterwards, so they can be shared freely across threads.
"""

from __future__ import annotations

import math

import numpy as np

# Absolute tolerance on |sum(q) - 1|.  Double-precision accumulation over
# vocabularies up to 2**17 stays well inside this.
DEFAULT_SUM_TOL = 1e-9

# Reference probabilities of exactly zero are floored at this value before
# any log, keeping KL-style quantities finite (the 0*log 0 = 0 convention
# handles the other operand).
DEFAULT_REFERENCE_FLOOR = 1e-30


class DecodeError(Exception):
    """Base class for every error raised by this package."""


class NonFiniteEntry(DecodeError):
    def __init__(self, index: int):
        super().__init__(f"non-finite entry at index {index}")
        self.index = index


class NegativeEntry(DecodeError):
    def __init__(self, index: int):
        super().__init__(f"negative entry at index {index}")
        self.index = index


class SumOutOfTolerance(DecodeError):
    def __init__(self, actual: float):
        super().__init__(f"entries sum to {actual!r}, not 1 within tolerance")
        self.actual = actual


class AllZero(DecodeError):
    def __init__(self):
        super().__init__("cannot normalise a vector of all zeros")


class DimensionMismatch(DecodeError):
    def __init__(self, left: int, right: int):
        super().__init__(f"vocabulary sizes differ: {left} vs {right}")
        self.left = left
        self.right = right


class EmptyMask(DecodeError):
    def __init__(self):
        super().__init__("support mask must include at least one token")


def _as_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError(f"{name} must be non-empty")
    return arr.copy()


def _check_finite(arr: np.ndarray) -> None:
    bad = np.flatnonzero(~np.isfinite(arr))
    if bad.size:
        raise NonFiniteEntry(int(bad[0]))


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


class ScoreVector:
    """Finite real-valued per-token scores (logits)."""

    __slots__ = ("values",)

    def __init__(self, values):
        arr = _as_vector(values, "scores")
        _check_finite(arr)
        self.values = _freeze(arr)

    @property
    def vocab_size(self) -> int:
        return self.values.size

    def __repr__(self) -> str:
        return f"ScoreVector(n={self.vocab_size})"


class SimplexDistribution:
    """A validated point of the probability simplex.

    Construction rejects (rather than repairs) invalid input: entries must
    be finite and nonnegative, and the total mass must be 1 within
    ``sum_tol`` absolute.  Use :func:`normalize` to build one from
    unnormalised nonnegative weights.
    """

    __slots__ = ("probs",)

    def __init__(self, probs, *, sum_tol: float = DEFAULT_SUM_TOL):
        arr = _as_vector(probs, "probs")
        _check_finite(arr)
        neg = np.flatnonzero(arr < 0.0)
        if neg.size:
            raise NegativeEntry(int(neg[0]))
        total = math.fsum(arr.tolist())
        if abs(total - 1.0) > sum_tol:
            raise SumOutOfTolerance(total)
        self.probs = _freeze(arr)

    @property
    def vocab_size(self) -> int:
        return self.probs.size

    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs))

    def __repr__(self) -> str:
        return f"SimplexDistribution(n={self.vocab_size})"


class SupportMask:
    """A nonempty subset of the vocabulary, as a boolean inclusion vector."""

    __slots__ = ("included",)

    def __init__(self, included):
        arr = np.asarray(included)
        if arr.dtype != np.bool_:
            raise ValueError("support mask entries must be booleans")
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("support mask must be a non-empty vector")
        if not arr.any():
            raise EmptyMask()
        self.included = _freeze(arr.copy())

    @classmethod
    def from_indices(cls, vocab_size: int, indices) -> "SupportMask":
        arr = np.zeros(vocab_size, dtype=bool)
        arr[np.asarray(indices, dtype=np.intp)] = True
        return cls(arr)

    @property
    def vocab_size(self) -> int:
        return self.included.size

    @property
    def cardinality(self) -> int:
        return int(np.count_nonzero(self.included))

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.included)

    def __repr__(self) -> str:
        return f"SupportMask({self.cardinality}/{self.vocab_size})"


class ReferenceDistribution:
    """A model/reference distribution with a floor for zero entries.

    The floor is applied wherever a log of the reference is taken; it is
    never applied to the stored probabilities themselves and no
    renormalisation happens.
    """

    __slots__ = ("probs", "floor")

    def __init__(self, probs: SimplexDistribution, floor: float = DEFAULT_REFERENCE_FLOOR):
        if not isinstance(probs, SimplexDistribution):
            probs = SimplexDistribution(probs)
        if not (0.0 < floor < 1.0):
            raise ValueError(f"floor must be in (0, 1), got {floor!r}")
        self.probs = probs
        self.floor = float(floor)

    @property
    def vocab_size(self) -> int:
        return self.probs.vocab_size

    @property
    def values(self) -> np.ndarray:
        return self.probs.probs

    def floored(self) -> np.ndarray:
        return np.maximum(self.probs.probs, self.floor)

    def __repr__(self) -> str:
        return f"ReferenceDistribution(n={self.vocab_size}, floor={self.floor:g})"


def validate_simplex(v, tol: float = DEFAULT_SUM_TOL) -> SimplexDistribution:
    """Check that ``v`` lies on the simplex and wrap it; never renormalises.

    Raises :class:`NonFiniteEntry`, :class:`NegativeEntry` or
    :class:`SumOutOfTolerance` on violation.
    """
    return SimplexDistribution(v, sum_tol=tol)


def normalize(v) -> SimplexDistribution:
    """Scale a nonnegative, not-all-zero vector to unit mass."""
    arr = _as_vector(v, "weights")
    _check_finite(arr)
    neg = np.flatnonzero(arr < 0.0)
    if neg.size:
        raise NegativeEntry(int(neg[0]))
    total = math.fsum(arr.tolist())
    if total == 0.0:
        raise AllZero()
    return SimplexDistribution(arr / total)


def entropy(q: SimplexDistribution) -> float:
    """Shannon entropy -sum q log q in nats, with 0 log 0 = 0.

    Lies in [0, log n]; the maximum is attained exactly at uniform.
    """
    p = q.probs
    pos = p[p > 0.0]
    return -math.fsum((pos * np.log(pos)).tolist())


def kl_divergence(q: SimplexDistribution, p: ReferenceDistribution) -> float:
    """KL(q || p) = sum q log(q/p) in nats.

    Terms with q(v) = 0 contribute 0; p is floored before the log so the
    result stays finite.  Nonnegative by Gibbs' inequality; round-off
    below zero is clamped.
    """
    if q.vocab_size != p.vocab_size:
        raise DimensionMismatch(q.vocab_size, p.vocab_size)
    qa = q.probs
    pf = p.floored()
    sel = qa > 0.0
    val = math.fsum((qa[sel] * np.log(qa[sel] / pf[sel])).tolist())
    return max(0.0, val)
