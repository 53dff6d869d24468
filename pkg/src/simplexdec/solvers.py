"""Iterative maximisers over the simplex for objectives with no closed form.

Two geometries:

* :func:`pga_solve` -- projected gradient ascent; each step is the exact
  Euclidean projection of q + eta*grad back onto the simplex.
* :func:`mirror_solve` -- entropic mirror ascent; each step is the
  multiplicative update q * exp(eta*grad), renormalised, which respects
  simplex geometry and preserves feasibility by construction.

Both take a caller-supplied gradient oracle operating on raw float64
arrays.  The stopping rule is the L-infinity change between successive
iterates; the update never revives an exactly-zero coordinate of a mirror
iterate (multiplicative updates cannot), so callers who need full support
must start from a strictly positive q0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DecodeError, SimplexDistribution

GradientFn = Callable[[np.ndarray], np.ndarray]
ObjectiveFn = Callable[[np.ndarray], float]

# Halving-on-decrease safeguard: retry a step with halved eta at most this
# many times when the objective would drop.
MAX_HALVINGS = 10

# A drop is only treated as a decrease beyond this relative slack, so
# round-off wobble near an optimum cannot trigger halving storms.
_DECREASE_SLACK = 1e-15


class NonFiniteGradient(DecodeError):
    def __init__(self, iteration: int):
        super().__init__(f"gradient oracle returned a non-finite value at iteration {iteration}")
        self.iteration = iteration


class AllMassVanished(DecodeError):
    def __init__(self):
        super().__init__("every term of the multiplicative update underflowed to zero")


@dataclass(frozen=True)
class SolverConfig:
    """Step size eta, iteration budget J, and stopping tolerance."""

    step_size: float = 0.5
    max_iters: int = 200
    stop_tol: float = 1e-8
    stabilize: bool = True

    def __post_init__(self):
        if not self.step_size > 0.0:
            raise ValueError(f"step_size must be > 0, got {self.step_size!r}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters!r}")
        if self.stop_tol < 0.0:
            raise ValueError(f"stop_tol must be >= 0, got {self.stop_tol!r}")


@dataclass(frozen=True)
class SolveDiagnostics:
    iters_used: int
    final_delta: float
    converged: bool
    objective_trace: tuple[float, ...] | None = None


def project_simplex_l2(y) -> SimplexDistribution:
    """Euclidean projection argmin_{q in Delta} (1/2)||q - y||^2.

    Sort-and-threshold: find theta with sum(max(y - theta, 0)) = 1 and clip.
    """
    arr = np.asarray(y, dtype=np.float64)
    u = np.sort(arr)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, arr.size + 1)
    rho = int(np.flatnonzero(u - css / ind > 0.0)[-1])
    theta = css[rho] / (rho + 1)
    return SimplexDistribution(np.maximum(arr - theta, 0.0))


def _mirror_step_arr(q: np.ndarray, g: np.ndarray, eta: float, stabilize: bool) -> np.ndarray:
    z = eta * g
    support = q > 0.0
    w = np.zeros_like(q)
    if stabilize:
        # Shift by the support max so the largest surviving exponent is 0;
        # off-support coordinates stay exactly zero either way.
        shift = np.max(z[support])
        w[support] = q[support] * np.exp(z[support] - shift)
    else:
        w[support] = q[support] * np.exp(z[support])
    total = math.fsum(w.tolist())
    if total == 0.0 or not np.isfinite(total):
        raise AllMassVanished()
    return w / total


def mirror_step(
    q: SimplexDistribution, g, eta: float, stabilize: bool = True
) -> SimplexDistribution:
    """One multiplicative update q * exp(eta*g) / ||q * exp(eta*g)||_1.

    Invariant to adding a constant to g; zero entries of q remain exactly
    zero.  With stabilisation on, the exponent is shifted by its maximum
    over the support of q, so the update cannot underflow entirely.
    """
    g = np.asarray(g, dtype=np.float64)
    return SimplexDistribution(_mirror_step_arr(q.probs, g, eta, stabilize))


def _solve_loop(
    step,
    grad: GradientFn,
    q0: SimplexDistribution,
    cfg: SolverConfig,
    objective: ObjectiveFn | None,
) -> tuple[SimplexDistribution, SolveDiagnostics]:
    q = q0.probs.astype(np.float64, copy=True)
    eta = cfg.step_size
    trace = None
    f_cur = math.nan
    if objective is not None:
        f_cur = float(objective(q))
        trace = [f_cur]

    iters = 0
    delta = math.inf
    for j in range(cfg.max_iters):
        g = np.asarray(grad(q), dtype=np.float64)
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient(j)
        q_next = step(q, g, eta)
        if objective is not None:
            f_next = float(objective(q_next))
            halvings = 0
            slack = _DECREASE_SLACK * max(1.0, abs(f_cur))
            while f_next < f_cur - slack and halvings < MAX_HALVINGS:
                eta *= 0.5
                halvings += 1
                q_next = step(q, g, eta)
                f_next = float(objective(q_next))
            f_cur = f_next
            trace.append(f_next)
        delta = float(np.max(np.abs(q_next - q)))
        q = q_next
        iters = j + 1
        if delta <= cfg.stop_tol:
            break

    diag = SolveDiagnostics(
        iters_used=iters,
        final_delta=delta,
        converged=delta <= cfg.stop_tol,
        objective_trace=None if trace is None else tuple(trace),
    )
    return SimplexDistribution(q), diag


def pga_solve(
    grad: GradientFn,
    q0: SimplexDistribution,
    cfg: SolverConfig,
    objective: ObjectiveFn | None = None,
) -> tuple[SimplexDistribution, SolveDiagnostics]:
    """Projected gradient ascent q <- proj(q + eta*grad(q)).

    If ``objective`` is supplied its trace is recorded and the
    halving-on-decrease safeguard is active: a step that would lower the
    objective is retried with eta halved (at most MAX_HALVINGS times; eta
    stays halved for subsequent iterations).
    """

    def step(q, g, eta):
        return project_simplex_l2(q + eta * g).probs

    return _solve_loop(step, grad, q0, cfg, objective)


def mirror_solve(
    grad: GradientFn,
    q0: SimplexDistribution,
    cfg: SolverConfig,
    objective: ObjectiveFn | None = None,
) -> tuple[SimplexDistribution, SolveDiagnostics]:
    """Entropic mirror ascent by repeated :func:`mirror_step`.

    Solves q_{j+1} = argmax_q eta*<grad(q_j), q> - KL(q || q_j); the same
    safeguard and diagnostics conventions as :func:`pga_solve` apply.
    """

    def step(q, g, eta):
        return _mirror_step_arr(q, g, eta, cfg.stabilize)

    return _solve_loop(step, grad, q0, cfg, objective)
