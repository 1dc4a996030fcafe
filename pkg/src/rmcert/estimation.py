"""Unbiased finite-statistics estimators of the moments and their variance.

Per measurement setting, the correlation sample X = prod_i r_i is +1
with probability P = (1 + E)/2.  From the +1 count Y out of K shots,
the falling-factorial ratios

    P~_k = Y (Y-1) ... (Y-k+1) / [K (K-1) ... (K-k+1)]

are unbiased for P^k, and E~_t = (-1)^t sum_k (-2)^k C(t,k) P~_k is
unbiased for E^t.  Averaging E~_t over M settings gives the moment
estimator R~^(t).

The second-moment estimator satisfies the exact binomial identity
E[E~_2^2] = A(K) E^4 + B(K) E^2 + C(K) with

    A(K) = (K-2)(K-3) / (K(K-1))
    B(K) = 4(K-2) / (K(K-1))
    C(K) = 2 / (K(K-1)),

verified exhaustively as a polynomial identity in the tests.  (A simpler
closed form A = (K-2)/K circulates; the K=3 enumeration gives
(A, B, C) = (0, 2/3, 1/3) and settles the matter in favor of the
coefficients above.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .bounds import (
    Criterion,
    FULL_SEP,
    K_SEP,
    M_PRODUCIBLE,
    GHZ_R4_CONJECTURE,
    fullsep_bounds,
    global_r4_bound,
    ksep_bound_r2,
    ksep_bound_r4,
    mprod_bound_r2,
    wclass_bound_r2,
)
from .errors import ValidationError
from .moments import ghz_moment_closed

GLOBAL_HYPOTHESIS = "global"
WCLASS_R4_FALLBACK = "no fourth-moment bound for the W class; using the global R^(4) cap"
MPROD_R4_FALLBACK = (
    "no proven fourth-moment bound for producibility classes; using the global R^(4) cap"
)


@dataclass(frozen=True)
class SettingStats:
    """Sufficient statistics of one setting: K shots, y of them with X=+1."""

    k_shots: int
    y: int

    def __post_init__(self):
        if self.k_shots < 1:
            raise ValidationError("k_shots must be >= 1")
        if not (0 <= self.y <= self.k_shots):
            raise ValidationError(f"y={self.y} outside 0..{self.k_shots}")


@dataclass(frozen=True)
class MomentEstimate:
    """R~^(t) with its sufficient statistics and variance information."""

    order: int
    value: float
    n_settings: int
    k_shots: int
    per_setting: np.ndarray
    n_qubits: int | None = None
    variance_estimate: float | None = None
    variance_source: str | None = None

    def __post_init__(self):
        arr = np.asarray(self.per_setting, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "per_setting", arr)


def correlation_sample(outcomes, subset=None) -> int:
    """Product of the selected +-1 outcomes (all of them by default).

    ``subset`` holds 0-based qubit indices; they must be distinct and in
    range.
    """
    arr = np.asarray(outcomes)
    if not np.all(np.isin(arr, (-1, 1))):
        raise ValidationError("outcomes must be +-1")
    if subset is None:
        return int(np.prod(arr))
    idx = list(subset)
    if len(set(idx)) != len(idx):
        raise ValidationError("subset indices must be distinct")
    if any(i < 0 or i >= arr.shape[0] for i in idx):
        raise ValidationError(f"subset index outside 0..{arr.shape[0] - 1}")
    return int(np.prod(arr[idx]))


def stats_from_outcomes(outcomes, subset=None) -> SettingStats:
    """Reduce a (K, n) outcome block to the +1 count of X = prod r_i."""
    arr = np.asarray(outcomes)
    if arr.ndim != 2:
        raise ValidationError("outcomes must be a (K, n) array")
    if subset is not None:
        idx = list(subset)
        if len(set(idx)) != len(idx):
            raise ValidationError("subset indices must be distinct")
        arr = arr[:, idx]
    x = np.prod(arr, axis=1)
    return SettingStats(k_shots=arr.shape[0], y=int(np.sum(x == 1)))


def p_hat_k(stats: SettingStats, k: int) -> float:
    """Unbiased estimator of P^k from Y ~ Binomial(K, P); needs K >= k."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    if stats.k_shots < k:
        raise ValidationError(
            f"insufficient shots for order {k}: K={stats.k_shots}"
        )
    num = 1
    den = 1
    for j in range(k):
        num *= stats.y - j
        den *= stats.k_shots - j
    return num / den


def e_hat_t(stats: SettingStats, t: int) -> float:
    """Unbiased estimator of E^t via E = 2P - 1; needs K >= t."""
    if t < 1:
        raise ValidationError("t must be >= 1")
    if stats.k_shots < t:
        raise ValidationError(f"insufficient shots for order {t}: K={stats.k_shots}")
    total = 1.0  # k = 0 term
    for k in range(1, t + 1):
        total += (-2.0) ** k * math.comb(t, k) * p_hat_k(stats, k)
    return (-1) ** t * total


def _e2_from_counts(y: np.ndarray, k_shots: int) -> np.ndarray:
    """Vectorized E~_2: 4 y(y-1)/(K(K-1)) - 4 y/K + 1."""
    y = np.asarray(y, dtype=float)
    return 4.0 * y * (y - 1.0) / (k_shots * (k_shots - 1.0)) - 4.0 * y / k_shots + 1.0


def variance_coefficients(K: int) -> tuple[Fraction, Fraction, Fraction]:
    """(A, B, C) with E[E~_2^2] = A E^4 + B E^2 + C for fixed setting."""
    if K < 2:
        raise ValidationError("K must be >= 2")
    denom = K * (K - 1)
    return (
        Fraction((K - 2) * (K - 3), denom),
        Fraction(4 * (K - 2), denom),
        Fraction(2, denom),
    )


def variance_r2_estimator(r2: float, r4: float, M: int, K: int) -> float:
    """Variance of R~^(2): (1/M)[A R^(4) + B R^(2) + C - (R^(2))^2]."""
    if M < 1:
        raise ValidationError("M must be >= 1")
    A, B, C = variance_coefficients(K)
    return (float(A) * r4 + float(B) * r2 + float(C) - r2 * r2) / M


def bernstein_single_setting_cap(K: int) -> float:
    """Worst-case binomial variance of E~_2 over P: 2(K-1)/(K(2K-3))."""
    if K < 2:
        raise ValidationError("K must be >= 2")
    return 2.0 * (K - 1) / (K * (2 * K - 3))


@dataclass(frozen=True)
class VarianceBound:
    """Per-setting bound A r4 + B r2 + C under a hypothesis class.

    Divide by M for the variance bound of R~^(2).  The -(R^(2))^2 term
    is dropped, so this is always an upper bound.
    """

    value: float
    hypothesis: str
    k_shots: int
    r2_bound: Fraction
    r4_bound: Fraction
    assumptions: tuple[str, ...] = ()
    fallback_warning: bool = False


def _hypothesis_moment_bounds(n: int, hypothesis) -> tuple[Fraction, Fraction, tuple[str, ...], bool]:
    if hypothesis == GLOBAL_HYPOTHESIS or hypothesis is None:
        r4, notes = global_r4_bound(n)
        return ghz_moment_closed(n, 2), r4, notes, False
    if not isinstance(hypothesis, Criterion):
        raise ValidationError(f"unknown hypothesis {hypothesis!r}")
    if hypothesis.kind == FULL_SEP:
        r2, r4 = fullsep_bounds(n)
        return r2, r4, (), False
    if hypothesis.kind == K_SEP:
        return (
            ksep_bound_r2(n, hypothesis.param),
            ksep_bound_r4(n, hypothesis.param),
            (GHZ_R4_CONJECTURE,),
            False,
        )
    if hypothesis.kind == M_PRODUCIBLE:
        # no proven class-specific R^(4) cap: a single block may sit
        # anywhere below its size cap without any product structure, so
        # only the global cap is safe for a significance statement
        r2, _ = mprod_bound_r2(n, hypothesis.param)
        r4, notes = global_r4_bound(n)
        return r2, r4, notes + (MPROD_R4_FALLBACK,), True
    # W class: likewise only the global fourth-moment cap applies
    r4, notes = global_r4_bound(n)
    return wclass_bound_r2(n), r4, notes + (WCLASS_R4_FALLBACK,), True


def variance_upper_bound(n: int, K: int, hypothesis=GLOBAL_HYPOTHESIS) -> VarianceBound:
    """State-independent per-setting variance cap under a hypothesis.

    ``hypothesis`` is either the string "global" (GHZ-maximum moments)
    or a :class:`Criterion`, in which case the class's own moment caps
    are substituted; refuting that class then only requires controlling
    the variance under it.
    """
    A, B, C = variance_coefficients(K)
    r2b, r4b, notes, warn = _hypothesis_moment_bounds(n, hypothesis)
    value = float(A * r4b + B * r2b + C)
    label = hypothesis if isinstance(hypothesis, str) else hypothesis.label
    return VarianceBound(
        value=value,
        hypothesis=label,
        k_shots=K,
        r2_bound=r2b,
        r4_bound=r4b,
        assumptions=notes,
        fallback_warning=warn,
    )


def moment_estimate(records, t: int, n_qubits: int | None = None,
                    hypothesis=GLOBAL_HYPOTHESIS) -> MomentEstimate:
    """R~^(t) from per-setting statistics sharing a single K.

    The attached variance estimate (t=2 only) uses plug-in moments when
    K >= 4 allows estimating R~^(4) from the same records; otherwise it
    falls back to the hypothesis/global upper bound, which requires
    ``n_qubits``.
    """
    records = list(records)
    if not records:
        raise ValidationError("need at least one setting record")
    K = records[0].k_shots
    if any(r.k_shots != K for r in records):
        raise ValidationError("all settings must share the same shot count K")
    if K < t:
        raise ValidationError(f"insufficient shots for order {t}: K={K}")
    per = np.array([e_hat_t(r, t) for r in records])
    value = float(per.mean())
    M = len(records)
    var_est = None
    var_src = None
    if t == 2:
        if K >= 4:
            r4 = float(np.mean([e_hat_t(r, 4) for r in records]))
            var_est = max(0.0, variance_r2_estimator(value, r4, M, K))
            var_src = "plug-in"
        elif n_qubits is not None:
            vb = variance_upper_bound(n_qubits, K, hypothesis)
            var_est = vb.value / M
            var_src = f"upper-bound:{vb.hypothesis}"
    return MomentEstimate(
        order=t,
        value=value,
        n_settings=M,
        k_shots=K,
        per_setting=per,
        n_qubits=n_qubits,
        variance_estimate=var_est,
        variance_source=var_src,
    )
