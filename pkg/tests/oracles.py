"""Independent brute-force oracles the test suite checks the library against.

Everything here deliberately avoids the code paths under test: supports are
enumerated exhaustively, expectations come from Monte-Carlo, and derivative
checks use finite differences.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def brute_force_sparsemax(s: np.ndarray, lam: float) -> np.ndarray:
    """Solve max <q,s> - (lam/2)||q||^2 over the simplex by trying every
    non-empty support: solve the equality-constrained system on the support
    and keep the candidate whose KKT conditions hold."""
    n = s.size
    for size in range(1, n + 1):
        for support in itertools.combinations(range(n), size):
            idx = list(support)
            eta = (math.fsum(s[idx]) - lam) / len(idx)
            q = np.zeros(n)
            q[idx] = (s[idx] - eta) / lam
            if np.any(q[idx] <= 0.0):
                continue
            off = np.setdiff1d(np.arange(n), idx)
            if off.size and np.any(s[off] > eta + 1e-12):
                continue
            return q
    raise AssertionError("no support satisfied the optimality conditions")


def grid_search_projection(y: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Dense grid search for argmin_{q in simplex} 0.5*||q-y||^2, n = 2 only."""
    assert y.size == 2
    t = np.arange(0.0, 1.0 + step, step)
    candidates = np.stack([t, 1.0 - t], axis=1)
    cost = 0.5 * np.sum((candidates - y) ** 2, axis=1)
    return candidates[int(np.argmin(cost))]


def mc_hit_probability(qv: float, K: int, trials: int, seed: int) -> tuple[float, float]:
    """Monte-Carlo estimate of P(success in K Bernoulli(qv) draws >= 1)."""
    rng = np.random.default_rng(seed)
    hits = (rng.random((trials, K)) < qv).any(axis=1)
    mean = hits.mean()
    stderr = hits.std(ddof=1) / np.sqrt(trials)
    return float(mean), float(stderr)


def mc_coverage(
    q: np.ndarray, w: np.ndarray, K: int, trials: int, seed: int
) -> tuple[float, float]:
    """Monte-Carlo weighted K-coverage, independent of the library sampler."""
    rng = np.random.default_rng(seed)
    idx = rng.choice(q.size, size=(trials, K), p=q / q.sum())
    idx.sort(axis=1)
    fresh = np.ones_like(idx, dtype=bool)
    fresh[:, 1:] = idx[:, 1:] != idx[:, :-1]
    per_trial = np.where(fresh, w[idx], 0.0).sum(axis=1)
    return float(per_trial.mean()), float(per_trial.std(ddof=1) / np.sqrt(trials))


def tangent_fd_gradient(objective, q: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of a simplex objective along tangent
    directions (e_i - e_0); returns the gradient relative to coordinate 0,
    i.e. g_i - g_0 for i >= 1 (entry 0 is 0)."""
    out = np.zeros(q.size)
    for i in range(1, q.size):
        d = np.zeros(q.size)
        d[i] = 0.5 * h
        d[0] = -0.5 * h
        out[i] = (objective(q + d) - objective(q - d)) / h
    return out
