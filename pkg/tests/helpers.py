"""Random instance generators shared across test modules."""

import numpy as np

from simplexdec import ReferenceDistribution, ScoreVector, validate_simplex


def random_simplex(gen, n, interior: float = 0.0):
    """A random simplex point; interior > 0 mixes in uniform mass to keep
    every coordinate at least interior/n."""
    q = gen.dirichlet(np.ones(n))
    if interior:
        q = (1.0 - interior) * q + interior / n
    return validate_simplex(q / q.sum())


def random_scores(gen, n, scale=2.0):
    return ScoreVector(gen.normal(0.0, scale, n))


def reference_from(gen, n, interior: float = 1e-3):
    return ReferenceDistribution(random_simplex(gen, n, interior=interior))
