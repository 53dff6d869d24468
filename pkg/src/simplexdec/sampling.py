"""Deterministic seeded sampling and Monte-Carlo coverage estimation.

Randomness comes from the counter-based Philox4x64-10 generator keyed
directly with (seed, stream_id), so a stream is a pure value: the same
pair yields the same draw sequence on every platform, with no global
state.  Uniform doubles are (u64 >> 11) * 2**-53.

Tokens are drawn by inverse CDF over a compensated (Kahan) cumulative sum
of q; the final cell absorbs residual rounding mass so the last token
stays reachable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatch, SimplexDistribution
from .bok import WeightVector

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """A splittable random stream identified by (seed, stream_id).

    Operations materialise the stream from its beginning; calling the same
    operation twice with the same stream value repeats the same draws.
    Concurrent consumers should use distinct stream_ids.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name, value in (("seed", self.seed), ("stream_id", self.stream_id)):
            if not 0 <= value < _U64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer, got {value!r}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))

    def substream(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


@dataclass(frozen=True)
class CoverageEstimate:
    mean: float
    std_error: float
    trials: int

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.std_error < 0.0:
            raise ValueError("std_error must be >= 0")


def compensated_cdf(q: np.ndarray) -> np.ndarray:
    """Kahan running sum of q with the last cell pinned to 1.0."""
    out = np.empty(q.size)
    total = 0.0
    comp = 0.0
    for i in range(q.size):
        y = q[i] - comp
        t = total + y
        comp = (t - total) - y
        total = t
        out[i] = total
    out[-1] = 1.0
    return out


def _draw_indices(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    # First index with cdf > u; u < 1 = cdf[-1] keeps this in range, and
    # zero-mass tokens (repeated cdf values) are skipped.
    return np.searchsorted(cdf, u, side="right")


def sample_token(q: SimplexDistribution, rng: RngStream) -> int:
    """One token index distributed per q, from a single uniform draw."""
    cdf = compensated_cdf(q.probs)
    u = rng.generator().random()
    return int(_draw_indices(cdf, np.asarray(u)))


def sample_k(q: SimplexDistribution, K: int, rng: RngStream) -> np.ndarray:
    """K i.i.d. draws (with replacement) from q."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K!r}")
    cdf = compensated_cdf(q.probs)
    u = rng.generator().random(K)
    return _draw_indices(cdf, u)


def estimate_coverage(
    q: SimplexDistribution,
    w: WeightVector,
    K: int,
    trials: int,
    rng: RngStream,
) -> CoverageEstimate:
    """Monte-Carlo estimate of the weighted K-coverage.

    Each trial draws K tokens and scores sum of w(v) over the distinct
    tokens seen; the estimate is the trial mean with its standard error.
    """
    if q.vocab_size != w.vocab_size:
        raise DimensionMismatch(q.vocab_size, w.vocab_size)
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K!r}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials!r}")

    cdf = compensated_cdf(q.probs)
    gen = rng.generator()
    idx = _draw_indices(cdf, gen.random((trials, K)))
    idx.sort(axis=1)
    fresh = np.ones_like(idx, dtype=bool)
    fresh[:, 1:] = idx[:, 1:] != idx[:, :-1]
    per_trial = np.where(fresh, w.weights[idx], 0.0).sum(axis=1)

    mean = float(per_trial.mean())
    if trials == 1:
        std_error = 0.0
    else:
        std_error = float(per_trial.std(ddof=1) / np.sqrt(trials))
    return CoverageEstimate(mean=mean, std_error=std_error, trials=trials)
