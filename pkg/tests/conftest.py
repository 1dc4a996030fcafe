"""Shared test utilities: exact binomial polynomial oracles and
vectorized experiment simulation."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest


# ---------------------------------------------------------------------------
# exact polynomials over Fraction, coefficient lists in ascending powers


def poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def poly_add(a, b):
    n = max(len(a), len(b))
    out = [Fraction(0)] * n
    for i, x in enumerate(a):
        out[i] += x
    for i, y in enumerate(b):
        out[i] += y
    return out


def poly_scale(a, c):
    return [c * x for x in a]


def poly_pow(a, k):
    out = [Fraction(1)]
    for _ in range(k):
        out = poly_mul(out, a)
    return out


def poly_trim(a):
    while len(a) > 1 and a[-1] == 0:
        a = a[:-1]
    return a


def binomial_pmf_poly(K: int, y: int):
    """P(Y=y) for Y ~ Binomial(K, P), as an exact polynomial in P."""
    # C(K,y) P^y (1-P)^(K-y)
    base = [Fraction(0)] * y + [Fraction(math.comb(K, y))]
    return poly_mul(base, poly_pow([Fraction(1), Fraction(-1)], K - y))


def binomial_expectation_poly(K: int, values):
    """E[f(Y)] as a polynomial in P, for per-outcome exact values f(y)."""
    acc = [Fraction(0)]
    for y in range(K + 1):
        acc = poly_add(acc, poly_scale(binomial_pmf_poly(K, y), Fraction(values[y])))
    return poly_trim(acc)


def e_in_p_poly():
    """E = 2P - 1 as a polynomial in P."""
    return [Fraction(-1), Fraction(2)]


# ---------------------------------------------------------------------------
# vectorized simulation of the randomized-measurement experiment
# (statistical oracle; independent of the package's record machinery)


def uniform_directions(rng, shape):
    """Uniform Bloch directions; shape is the leading shape, output (+ (3,))."""
    z = rng.uniform(-1.0, 1.0, shape)
    phi = rng.uniform(0.0, 2.0 * math.pi, shape)
    st = np.sqrt(1.0 - z * z)
    return np.stack([st * np.cos(phi), st * np.sin(phi), z], axis=-1)


def ghz_correlations(dirs):
    """Analytic GHZ correlation over a (..., n, 3) direction array."""
    n = dirs.shape[-2]
    z = np.clip(dirs[..., 2], -1.0, 1.0)
    st = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = np.arctan2(dirs[..., 1], dirs[..., 0])
    e = np.prod(st, axis=-1) * np.cos(np.sum(phi, axis=-1))
    if n % 2 == 0:
        e = e + np.prod(z, axis=-1)
    return e


def product_zero_correlations(dirs):
    """Correlation of |0...0>: the product of the z components."""
    return np.prod(dirs[..., 2], axis=-1)


def e2_hat(y, K):
    """Vectorized unbiased estimator of E^2 from +1 counts."""
    y = np.asarray(y, dtype=float)
    return 4.0 * y * (y - 1.0) / (K * (K - 1.0)) - 4.0 * y / K + 1.0


def simulate_r2_estimates(rng, corr_fn, n, M, K, reps):
    """R~^(2) over `reps` simulated experiments; returns (reps,) array."""
    dirs = uniform_directions(rng, (reps, M, n))
    e = corr_fn(dirs)
    p = np.clip((1.0 + e) / 2.0, 0.0, 1.0)
    y = rng.binomial(K, p)
    return e2_hat(y, K).mean(axis=1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
