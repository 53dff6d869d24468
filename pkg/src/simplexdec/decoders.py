"""Closed-form decoders.

Every routine here is the exact maximiser of

    max_{q in Delta(V)}  <q, s> - lam * Omega(q)     (s.t. optional support set)

for a specific regulariser Omega and support constraint:

* ``greedy_decode``      -- lam = 0 (degenerate argmax distribution)
* ``softmax_decode``     -- Omega = negative Shannon entropy
* ``restricted_softmax`` -- same, on a sub-simplex (Top-K / Top-P supports)
* ``sparsemax_decode``   -- Omega = (1/2)||q||_2^2 (boundary-reaching, sparse)

All ties (argmax, Top-K boundary, nucleus boundary) break toward the lowest
token index so outputs are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DecodeError,
    ReferenceDistribution,
    ScoreVector,
    SimplexDistribution,
    SupportMask,
)


class NonPositiveLambda(DecodeError):
    def __init__(self, value: float):
        super().__init__(f"regulariser weight must be > 0, got {value!r}")
        self.value = value


class KOutOfRange(DecodeError):
    def __init__(self, k, vocab_size: int | None = None):
        bound = "vocab size" if vocab_size is None else str(vocab_size)
        super().__init__(f"k={k!r} outside [1, {bound}]")
        self.k = k
        self.vocab_size = vocab_size


class POutOfRange(DecodeError):
    def __init__(self, p):
        super().__init__(f"p={p!r} outside (0, 1]")
        self.p = p


DECODER_KINDS = ("greedy", "softmax", "topk", "topp", "sparsemax", "bok")


@dataclass(frozen=True)
class DecoderConfig:
    """Decoder selection plus hyperparameters.

    ``lam`` is the regulariser weight; for the softmax family it plays
    exactly the role of the sampling temperature.  Ties always break
    toward the lowest token index.
    """

    kind: str
    lam: float = 1.0
    k: int | None = None
    p: float | None = None

    def __post_init__(self):
        if self.kind not in DECODER_KINDS:
            raise ValueError(f"unknown decoder kind {self.kind!r}")
        if self.kind != "greedy" and not self.lam > 0.0:
            raise NonPositiveLambda(self.lam)
        if self.kind == "topk" and (self.k is None or self.k < 1):
            raise KOutOfRange(self.k)
        if self.kind == "topp" and (self.p is None or not (0.0 < self.p <= 1.0)):
            raise POutOfRange(self.p)


def _descending_order(values: np.ndarray) -> np.ndarray:
    # Stable sort of the negated values: descending, ties by lowest index.
    return np.argsort(-values, kind="stable")


def greedy_decode(s: ScoreVector) -> SimplexDistribution:
    """All mass on the highest-scoring token (lowest index on ties)."""
    q = np.zeros(s.vocab_size)
    q[int(np.argmax(s.values))] = 1.0
    return SimplexDistribution(q)


def softmax_decode(s: ScoreVector, lam: float) -> SimplexDistribution:
    """q(v) proportional to exp(s(v)/lam), computed with max-subtraction."""
    if not lam > 0.0:
        raise NonPositiveLambda(lam)
    z = (s.values - s.values.max()) / lam
    e = np.exp(z)
    return SimplexDistribution(e / math.fsum(e.tolist()))


def select_topk_support(s: ScoreVector, k: int) -> SupportMask:
    """Mask of the k highest-scoring tokens; boundary ties by lowest index."""
    if not 1 <= k <= s.vocab_size:
        raise KOutOfRange(k, s.vocab_size)
    order = _descending_order(s.values)
    return SupportMask.from_indices(s.vocab_size, order[:k])


def select_nucleus(p_model: ReferenceDistribution, p: float) -> SupportMask:
    """Smallest descending-probability prefix with cumulative mass >= p.

    Tokens are ordered by decreasing model probability (ties by lowest
    index).  Zero-mass tokens are never included: if rounding leaves the
    total positive mass just short of ``p`` we stop at the last positive
    token instead of padding with zeros.
    """
    if not (0.0 < p <= 1.0):
        raise POutOfRange(p)
    probs = p_model.values
    order = _descending_order(probs)
    sorted_probs = probs[order]
    cum = np.cumsum(sorted_probs)
    m = int(np.searchsorted(cum, p, side="left"))
    if m >= probs.size:
        m = probs.size - 1
    while m > 0 and sorted_probs[m] == 0.0:
        m -= 1
    return SupportMask.from_indices(probs.size, order[: m + 1])


def restricted_softmax(s: ScoreVector, mask: SupportMask, lam: float) -> SimplexDistribution:
    """Softmax over the masked tokens only; exactly zero elsewhere."""
    if not lam > 0.0:
        raise NonPositiveLambda(lam)
    idx = mask.indices()
    sub = s.values[idx]
    e = np.exp((sub - sub.max()) / lam)
    q = np.zeros(s.vocab_size)
    q[idx] = e / math.fsum(e.tolist())
    return SimplexDistribution(q)


def sparsemax_threshold(s: ScoreVector, lam: float) -> tuple[float, int]:
    """Threshold eta and active-set size k* of the quadratic-regularised decoder.

    With scores sorted descending and prefix sums A_k, the candidate
    threshold for an active set of size k is eta_k = (A_k - lam)/k; the
    valid k satisfies s^(k) > eta_k and s^(k+1) <= eta_k (s^(n+1) = -inf).
    The scan returns the first such k, which keeps degenerate (tied)
    instances deterministic.
    """
    if not lam > 0.0:
        raise NonPositiveLambda(lam)
    sorted_s = np.sort(s.values)[::-1]
    ks = np.arange(1, s.vocab_size + 1, dtype=np.float64)
    eta = (np.cumsum(sorted_s) - lam) / ks
    next_s = np.append(sorted_s[1:], -np.inf)
    valid = np.flatnonzero((sorted_s > eta) & (next_s <= eta))
    if valid.size:
        k_star = int(valid[0]) + 1
    else:
        # Float-degenerate fallback: largest k with s^(k) > eta_k, which
        # always exists for lam > 0 (k = 1 satisfies it).
        k_star = int(np.flatnonzero(sorted_s > eta)[-1]) + 1
    return float(eta[k_star - 1]), k_star


def sparsemax_decode(s: ScoreVector, lam: float) -> SimplexDistribution:
    """q(v) = max(0, (s(v) - eta)/lam) with eta from sparsemax_threshold."""
    eta, _ = sparsemax_threshold(s, lam)
    return SimplexDistribution(np.maximum(s.values - eta, 0.0) / lam)
