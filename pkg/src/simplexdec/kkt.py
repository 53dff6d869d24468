"""First-order optimality certificates on the simplex.

A candidate q maximises <q, s> - lam * Omega(q) over Delta(V) iff there is
a multiplier eta with

    q(v) > 0  =>  s(v) - lam * dOmega/dq(v) = eta      (active)
    q(v) = 0  =>  s(v) - lam * dOmega/dq(v) <= eta     (inactive)

:func:`kkt_residual` estimates eta from the support and reports how badly
each condition is violated.  For decoders defined on a sub-simplex
(Top-K / Top-P) pass the support constraint as ``domain``; coordinates
outside it are clamped by construction, not by this optimality system,
and are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DecodeError,
    ReferenceDistribution,
    ScoreVector,
    SimplexDistribution,
    SupportMask,
)

REGULARIZER_KINDS = ("negative_entropy", "quadratic", "kl_to_reference", "bok")

# Default certificate tolerances: closed forms satisfy the conditions to
# round-off; iterative solutions carry step-size-limited error.
CLOSED_FORM_CERT_TOL = 1e-8
SOLVER_CERT_TOL = 1e-6

# Coordinates above this are treated as support; separates true boundary
# points from solver round-off.
DEFAULT_SUPPORT_EPS = 1e-12


class ZeroProbabilityUnderLogGradient(DecodeError):
    def __init__(self, index: int):
        super().__init__(
            f"log-gradient requested at q({index}) = 0; the entropy/KL "
            "gradient diverges there"
        )
        self.index = index


class EmptySupport(DecodeError):
    def __init__(self):
        super().__init__("no coordinate above support_eps; cannot estimate eta")


@dataclass(frozen=True)
class BokParams:
    """Coverage-regulariser parameters.

    ``beta`` is the coverage weight as it appears inside Omega, i.e. the
    scaled weight beta_bar divided by lam.
    """

    K: int
    beta: float
    weights: np.ndarray

    def __post_init__(self):
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.beta < 0.0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise ValueError("weights must be a finite nonnegative vector")
        object.__setattr__(self, "weights", w)


@dataclass(frozen=True)
class RegularizerSpec:
    """Which Omega(q) is in force.

    kinds and their gradients (per coordinate):

        negative_entropy   1 + log q
        quadratic          q
        kl_to_reference    log(q/p) + 1
        bok                log(q/p) + 1 - beta * w * K * (1 - q)^(K-1)
    """

    kind: str
    reference: ReferenceDistribution | None = None
    bok_params: BokParams | None = None

    def __post_init__(self):
        if self.kind not in REGULARIZER_KINDS:
            raise ValueError(f"unknown regulariser kind {self.kind!r}")
        needs_ref = self.kind in ("kl_to_reference", "bok")
        if needs_ref and self.reference is None:
            raise ValueError(f"{self.kind} requires a reference distribution")
        if not needs_ref and self.reference is not None:
            raise ValueError(f"{self.kind} takes no reference distribution")
        if (self.kind == "bok") != (self.bok_params is not None):
            raise ValueError("bok_params must be given iff kind == 'bok'")

    @classmethod
    def negative_entropy(cls) -> "RegularizerSpec":
        return cls("negative_entropy")

    @classmethod
    def quadratic(cls) -> "RegularizerSpec":
        return cls("quadratic")

    @classmethod
    def kl_to_reference(cls, reference: ReferenceDistribution) -> "RegularizerSpec":
        return cls("kl_to_reference", reference=reference)

    @classmethod
    def bok(
        cls,
        reference: ReferenceDistribution,
        K: int,
        beta: float,
        weights,
    ) -> "RegularizerSpec":
        return cls(
            "bok",
            reference=reference,
            bok_params=BokParams(K=K, beta=beta, weights=np.asarray(weights, dtype=np.float64)),
        )


@dataclass(frozen=True)
class KktReport:
    """Residuals of the optimality conditions for one candidate.

    ``active_residual`` is max over the support of |s - lam*dOmega - eta|;
    ``inactive_violation`` is max over zero-mass coordinates of the
    positive part of s - lam*dOmega - eta.  Both are ~0 at an optimum.
    """

    eta_hat: float
    active_residual: float
    inactive_violation: float
    support: SupportMask

    def certified(self, tol: float = SOLVER_CERT_TOL) -> bool:
        return self.active_residual <= tol and self.inactive_violation <= tol


def _gradient_unchecked(spec: RegularizerSpec, q: np.ndarray) -> np.ndarray:
    """dOmega/dq per coordinate; -inf where a log kind meets q = 0."""
    if spec.kind == "quadratic":
        return q.copy()
    with np.errstate(divide="ignore"):
        log_q = np.log(q)
    if spec.kind == "negative_entropy":
        return 1.0 + log_q
    pf = spec.reference.floored()
    base = log_q - np.log(pf) + 1.0
    if spec.kind == "kl_to_reference":
        return base
    bp = spec.bok_params
    coverage = bp.beta * bp.weights * bp.K * (1.0 - q) ** (bp.K - 1)
    return base - coverage


def regularizer_gradient(spec: RegularizerSpec, q: SimplexDistribution) -> np.ndarray:
    """Per-coordinate gradient of Omega at q.

    For the log-bearing kinds every evaluated coordinate must be strictly
    positive; otherwise :class:`ZeroProbabilityUnderLogGradient` is raised.
    """
    if spec.kind != "quadratic":
        zeros = np.flatnonzero(q.probs == 0.0)
        if zeros.size:
            raise ZeroProbabilityUnderLogGradient(int(zeros[0]))
    if spec.reference is not None and spec.reference.vocab_size != q.vocab_size:
        raise ValueError("reference and q vocabulary sizes differ")
    return _gradient_unchecked(spec, q.probs)


def kkt_residual(
    s: ScoreVector,
    q: SimplexDistribution,
    lam: float,
    spec: RegularizerSpec,
    support_eps: float = DEFAULT_SUPPORT_EPS,
    domain: SupportMask | None = None,
) -> KktReport:
    """Evaluate the optimality conditions of q for scores s and weight lam.

    eta is estimated as the support mean of s - lam*dOmega, which minimises
    the reported active residual in the least-squares sense.  ``lam`` may
    be 0 (the unregularised / greedy objective); the gradient term then
    drops out entirely.
    """
    if s.vocab_size != q.vocab_size:
        raise ValueError("scores and q vocabulary sizes differ")
    in_domain = np.ones(q.vocab_size, dtype=bool) if domain is None else domain.included
    active = in_domain & (q.probs > support_eps)
    if not active.any():
        raise EmptySupport()

    if lam == 0.0:
        g = s.values.astype(np.float64, copy=True)
    else:
        g = s.values - lam * _gradient_unchecked(spec, q.probs)

    eta_hat = float(np.mean(g[active]))
    active_residual = float(np.max(np.abs(g[active] - eta_hat)))
    inactive = in_domain & ~active
    if inactive.any():
        inactive_violation = float(np.max(np.maximum(g[inactive] - eta_hat, 0.0)))
    else:
        inactive_violation = 0.0
    return KktReport(
        eta_hat=eta_hat,
        active_residual=active_residual,
        inactive_violation=inactive_violation,
        support=SupportMask(active),
    )
