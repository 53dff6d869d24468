"""The coverage-seeking multi-sample decoder.

When K i.i.d. tokens are drawn from q, token v shows up at least once with
probability 1 - (1 - q(v))^K.  Weighting by nonnegative importances w and
summing gives the K-coverage utility

    U_K(q) = sum_v w(v) * (1 - (1 - q(v))^K),

a concave, diminishing-returns reward for spreading mass over tokens worth
seeing at least once.  The decoder maximises

    f(q) = <q, s> - lam * KL(q || p) + beta_bar * U_K(q)

over the simplex: score plus coverage, anchored to the model distribution
p.  No closed form exists, but the gradient does:

    df/dq(v) = s(v) - lam * (log(q(v)/p(v)) + 1)
               + beta_bar * w(v) * K * (1 - q(v))^(K-1),

so one decoding step is a handful of mirror-ascent updates warm-started at
q0 = p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DecodeError,
    DimensionMismatch,
    ReferenceDistribution,
    ScoreVector,
    SimplexDistribution,
    kl_divergence,
    validate_simplex,
)
from .solvers import SolveDiagnostics, SolverConfig, mirror_solve

WEIGHT_SCHEME_KINDS = ("uniform", "model_prob", "top_m_indicator", "rank_softened")


class OutOfRange(DecodeError):
    def __init__(self, what: str, value):
        super().__init__(f"{what} out of range: {value!r}")
        self.value = value


class InvalidSchemeParam(DecodeError):
    def __init__(self, message: str):
        super().__init__(message)


class ZeroProbabilityEntry(DecodeError):
    def __init__(self, index: int):
        super().__init__(f"gradient requires q({index}) > 0")
        self.index = index


@dataclass(frozen=True)
class WeightScheme:
    """How per-token importance weights are derived from scores / model probs."""

    kind: str
    m: int | None = None
    gamma: float | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_SCHEME_KINDS:
            raise InvalidSchemeParam(f"unknown weight scheme {self.kind!r}")
        if self.kind == "top_m_indicator" and (self.m is None or self.m < 1):
            raise InvalidSchemeParam(f"top_m_indicator needs M >= 1, got {self.m!r}")
        if self.kind == "rank_softened" and (self.gamma is None or not self.gamma > 0.0):
            raise InvalidSchemeParam(f"rank_softened needs gamma > 0, got {self.gamma!r}")

    @classmethod
    def uniform(cls) -> "WeightScheme":
        return cls("uniform")

    @classmethod
    def model_prob(cls) -> "WeightScheme":
        return cls("model_prob")

    @classmethod
    def top_m_indicator(cls, m: int) -> "WeightScheme":
        return cls("top_m_indicator", m=m)

    @classmethod
    def rank_softened(cls, gamma: float) -> "WeightScheme":
        return cls("rank_softened", gamma=gamma)


class WeightVector:
    """Nonnegative per-token importance weights."""

    __slots__ = ("weights",)

    def __init__(self, weights):
        arr = np.asarray(weights, dtype=np.float64).copy()
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError("weights must be finite")
        if np.any(arr < 0.0):
            raise ValueError("weights must be nonnegative")
        arr.flags.writeable = False
        self.weights = arr

    @property
    def vocab_size(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class BokConfig:
    """Sample budget K, anchoring weight lam, coverage weight beta_bar.

    beta_bar is the coverage weight after scaling by lam (beta_bar =
    lam * beta); K defaults to 8 and the weight scheme to the model
    probabilities.
    """

    K: int = 8
    lam: float = 1.0
    beta_bar: float = 1.0
    weight_scheme: WeightScheme = field(default_factory=WeightScheme.model_prob)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if self.K < 1:
            raise OutOfRange("K", self.K)
        if not self.lam > 0.0:
            raise OutOfRange("lam", self.lam)
        if self.beta_bar < 0.0:
            raise OutOfRange("beta_bar", self.beta_bar)

    @classmethod
    def preset(cls, beta: float, lam: float, **kwargs) -> "BokConfig":
        """Config from the unscaled pair (beta, lam): beta_bar = lam * beta."""
        kwargs.setdefault("solver", SolverConfig(max_iters=5))
        return cls(lam=lam, beta_bar=lam * beta, **kwargs)


# The (beta, lam) operating points used for experiment sweeps, with the
# 5-step solver budget they were run at.
PRESETS: dict[str, BokConfig] = {
    "b0.01-l0.1": BokConfig.preset(0.01, 0.1),
    "b0.02-l0.2": BokConfig.preset(0.02, 0.2),
    "b0.05-l0.5": BokConfig.preset(0.05, 0.5),
}


def hit_probability(qv: float, K: int) -> float:
    """Chance that a token of probability qv appears at least once in K draws."""
    if not 0.0 <= qv <= 1.0:
        raise OutOfRange("qv", qv)
    if K < 1:
        raise OutOfRange("K", K)
    return 1.0 - (1.0 - qv) ** K


def coverage_utility(q: SimplexDistribution, w: WeightVector, K: int) -> float:
    """Weighted K-coverage U_K(q) = sum_v w(v) * (1 - (1 - q(v))^K)."""
    if q.vocab_size != w.vocab_size:
        raise DimensionMismatch(q.vocab_size, w.vocab_size)
    if K < 1:
        raise OutOfRange("K", K)
    return math.fsum((w.weights * (1.0 - (1.0 - q.probs) ** K)).tolist())


def make_weights(
    scheme: WeightScheme,
    s: ScoreVector | None = None,
    p: ReferenceDistribution | None = None,
) -> WeightVector:
    """Materialise a weight scheme against scores s and/or model probs p.

    uniform needs either input for its length; model_prob needs p;
    top_m_indicator and rank_softened need s (ranks break ties by lowest
    index, rank 1 = best).
    """
    if scheme.kind == "uniform":
        n = s.vocab_size if s is not None else (p.vocab_size if p is not None else None)
        if n is None:
            raise InvalidSchemeParam("uniform weights need s or p for the vocabulary size")
        return WeightVector(np.ones(n))
    if scheme.kind == "model_prob":
        if p is None:
            raise InvalidSchemeParam("model_prob weights need the model distribution p")
        return WeightVector(p.values)
    if s is None:
        raise InvalidSchemeParam(f"{scheme.kind} weights need the score vector s")
    order = np.argsort(-s.values, kind="stable")
    if scheme.kind == "top_m_indicator":
        if scheme.m > s.vocab_size:
            raise InvalidSchemeParam(f"M={scheme.m} exceeds vocab size {s.vocab_size}")
        w = np.zeros(s.vocab_size)
        w[order[: scheme.m]] = 1.0
        return WeightVector(w)
    ranks = np.empty(s.vocab_size)
    ranks[order] = np.arange(1, s.vocab_size + 1)
    return WeightVector(1.0 / ranks**scheme.gamma)


def _objective_arr(
    q: np.ndarray,
    s: np.ndarray,
    p_floored: np.ndarray,
    w: np.ndarray,
    lam: float,
    beta_bar: float,
    K: int,
) -> float:
    sel = q > 0.0
    kl = math.fsum((q[sel] * np.log(q[sel] / p_floored[sel])).tolist())
    score = math.fsum((q * s).tolist())
    cov = math.fsum((w * (1.0 - (1.0 - q) ** K)).tolist())
    return score - lam * kl + beta_bar * cov


def _gradient_arr(
    q: np.ndarray,
    s: np.ndarray,
    p_floored: np.ndarray,
    w: np.ndarray,
    lam: float,
    beta_bar: float,
    K: int,
) -> np.ndarray:
    # Coordinates that underflowed to exactly zero are dead for the
    # multiplicative update (it cannot revive them), so their gradient
    # value is irrelevant; report 0 there instead of -inf so extreme score
    # ranges do not abort the solve.
    with np.errstate(divide="ignore"):
        g = s - lam * (np.log(q / p_floored) + 1.0) + beta_bar * w * K * (1.0 - q) ** (K - 1)
    dead = q == 0.0
    if dead.any():
        g[dead] = 0.0
    return g


def bok_objective(
    q: SimplexDistribution,
    s: ScoreVector,
    p: ReferenceDistribution,
    w: WeightVector,
    lam: float,
    beta_bar: float,
    K: int,
) -> float:
    """f(q) = <q, s> - lam * KL(q||p) + beta_bar * U_K(q)."""
    if not (q.vocab_size == s.vocab_size == p.vocab_size == w.vocab_size):
        raise DimensionMismatch(q.vocab_size, s.vocab_size)
    score = math.fsum((q.probs * s.values).tolist())
    return score - lam * kl_divergence(q, p) + beta_bar * coverage_utility(q, w, K)


def bok_gradient(
    q: SimplexDistribution,
    s: ScoreVector,
    p: ReferenceDistribution,
    w: WeightVector,
    lam: float,
    beta_bar: float,
    K: int,
) -> np.ndarray:
    """Closed-form gradient of :func:`bok_objective`; q must be interior."""
    if not (q.vocab_size == s.vocab_size == p.vocab_size == w.vocab_size):
        raise DimensionMismatch(q.vocab_size, s.vocab_size)
    zeros = np.flatnonzero(q.probs == 0.0)
    if zeros.size:
        raise ZeroProbabilityEntry(int(zeros[0]))
    return _gradient_arr(q.probs, s.values, p.floored(), w.weights, lam, beta_bar, K)


def bok_decode(
    s: ScoreVector,
    p: ReferenceDistribution,
    cfg: BokConfig,
) -> tuple[SimplexDistribution, SolveDiagnostics]:
    """One decoding step: mirror ascent on the coverage objective from q0 = p.

    The objective value is tracked, which also arms the solver's
    halving-on-decrease step-size safeguard.
    """
    if s.vocab_size != p.vocab_size:
        raise DimensionMismatch(s.vocab_size, p.vocab_size)
    w = make_weights(cfg.weight_scheme, s=s, p=p)
    pf = p.floored()
    sv = s.values

    def grad(q: np.ndarray) -> np.ndarray:
        return _gradient_arr(q, sv, pf, w.weights, cfg.lam, cfg.beta_bar, cfg.K)

    def objective(q: np.ndarray) -> float:
        return _objective_arr(q, sv, pf, w.weights, cfg.lam, cfg.beta_bar, cfg.K)

    q0 = validate_simplex(pf if np.any(p.values == 0.0) else p.values)
    return mirror_solve(grad, q0, cfg.solver, objective=objective)
