"""Rigorous error bars from concentration inequalities.

Three routes turn variance information about the per-setting estimator
E~_2 into two-sided error bars for R~^(2) at confidence gamma:

* Chebyshev-Cantelli: needs only the variance of the whole estimator;
  delta = sqrt(((1+gamma)/(1-gamma)) Var).
* Bernstein (range form): treats the M settings as independent bounded
  variables with the worst-case single-setting variance cap; no moment
  assumptions beyond the estimator range.
* Chernoff (moment-generating-function route): delta =
  sqrt(2 L Var / M) with L = |ln((1-gamma)/2)|, strictly better than
  Cantelli for gamma > 1/2 but only valid above a minimal M; below it
  the variance bound is inflated by a factor eta > 1 (delta grows by
  sqrt(eta)).  A Bernstein-with-variance variant is valid for any M at
  the cost of a slightly wider bar.

Exponential one-sided tails use the per-side budget (1-gamma)/2 for the
two-sided bars (union bound).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .estimation import bernstein_single_setting_cap

CANTELLI_TWO_SIDED = "cantelli-two-sided"
CANTELLI_ONE_SIDED = "cantelli-one-sided"
BERNSTEIN_RANGE = "bernstein-range"
CHERNOFF_VARIANCE = "chernoff-variance"
BERNSTEIN_VARIANCE = "bernstein-variance"

ETA_SEARCH_CAP = 1e6
ETA_TOL = 1e-6


@dataclass(frozen=True)
class ErrorBar:
    method: str
    gamma: float
    delta: float
    valid: bool = True
    eta: float = 1.0
    m_threshold: float | None = None
    variance_bound: float | None = None
    notes: tuple[str, ...] = ()


def _check_gamma(gamma: float) -> None:
    if not (0.0 < gamma < 1.0):
        raise ValidationError(f"confidence gamma={gamma} outside (0, 1)")


def _log_budget(gamma: float) -> float:
    """L = |ln((1-gamma)/2)|, the per-side exponential budget."""
    return abs(math.log((1.0 - gamma) / 2.0))


def range_halfwidth(K: int) -> float:
    """mu = 1 + 1/(K-1): a bound on |E~_2 - <E~_2>| given
    E~_2 in [-1/(K-1), 1] and a mean in [-1, 1]."""
    if K < 2:
        raise ValidationError("K must be >= 2")
    return 1.0 + 1.0 / (K - 1.0)


def cantelli_two_sided(variance: float, gamma: float) -> float:
    """Minimal two-sided half-width at confidence gamma from the
    two-sided Cantelli tail 2 Var / (Var + delta^2)."""
    _check_gamma(gamma)
    if variance < 0.0:
        raise ValidationError("variance must be >= 0")
    return math.sqrt((1.0 + gamma) / (1.0 - gamma) * variance)


def cantelli_one_sided_tail(variance: float, delta: float) -> float:
    """One-sided Cantelli tail Var / (Var + delta^2) for an upward
    deviation of at least delta."""
    if variance < 0.0:
        raise ValidationError("variance must be >= 0")
    if delta <= 0.0:
        raise ValidationError("delta must be > 0")
    return variance / (variance + delta * delta)


def bernstein_error_bar(M: int, K: int, gamma: float) -> float:
    """Two-sided half-width from the Bernstein inequality with the
    worst-case single-setting variance cap.

    Inverts exp(-M d^2 / (2 s^2 + (2/3) c d)) = (1-gamma)/2 per side,
    with s^2 = 2(K-1)/(K(2K-3)) and range constant c = 1 + 1/(K-1):
    d = (cL/(3M)) (1 + sqrt(1 + 18 M s^2 / (c^2 L))).
    """
    _check_gamma(gamma)
    if M < 1:
        raise ValidationError("M must be >= 1")
    L = _log_budget(gamma)
    s2 = bernstein_single_setting_cap(K)
    c = range_halfwidth(K)
    return (c * L / (3.0 * M)) * (1.0 + math.sqrt(1.0 + 18.0 * M * s2 / (c * c * L)))


def bernstein_one_sided_tail(M: int, K: int, delta: float) -> float:
    """One-sided Bernstein tail with the worst-case variance cap."""
    if delta <= 0.0:
        raise ValidationError("delta must be > 0")
    s2 = bernstein_single_setting_cap(K)
    c = range_halfwidth(K)
    return math.exp(-M * delta * delta / (2.0 * s2 + (2.0 / 3.0) * c * delta))


def chernoff_error_bar(M: int, K: int, gamma: float, variance_bound: float) -> ErrorBar:
    """Chernoff-route half-width sqrt(2 L Vb / M), with the validity
    condition M >= 8 mu / (delta Vb).

    When the condition fails, the variance bound is inflated by the
    minimal eta > 1 restoring it (delta picks up sqrt(eta)); the
    returned bar is then valid by construction, with eta recorded.
    """
    _check_gamma(gamma)
    if M < 1:
        raise ValidationError("M must be >= 1")
    if variance_bound <= 0.0:
        raise ValidationError("variance bound must be > 0")
    L = _log_budget(gamma)
    mu = range_halfwidth(K)
    delta0 = math.sqrt(2.0 * L * variance_bound / M)
    threshold = 8.0 * mu / (delta0 * variance_bound)
    if M >= threshold:
        return ErrorBar(
            method=CHERNOFF_VARIANCE, gamma=gamma, delta=delta0, valid=True,
            m_threshold=threshold, variance_bound=variance_bound,
        )
    # inflating Vb by eta multiplies delta by sqrt(eta) and divides the
    # threshold by eta^(3/2); bisect the smallest admissible eta
    def deficit(eta: float) -> float:
        return M - 8.0 * mu / (math.sqrt(eta) * delta0 * eta * variance_bound)

    lo, hi = 1.0, 2.0
    while deficit(hi) < 0.0:
        hi *= 2.0
        if hi > ETA_SEARCH_CAP:
            raise ValidationError(
                f"no eta <= {ETA_SEARCH_CAP:g} validates the Chernoff bar at M={M}"
            )
    while hi - lo > ETA_TOL:
        mid = 0.5 * (lo + hi)
        if deficit(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    eta = hi
    return ErrorBar(
        method=CHERNOFF_VARIANCE, gamma=gamma, delta=math.sqrt(eta) * delta0,
        valid=True, eta=eta, m_threshold=threshold, variance_bound=variance_bound,
        notes=(f"variance bound inflated by eta={eta:.6f} to validate M={M}",),
    )


def chernoff_one_sided_tail(M: int, K: int, delta: float, variance_bound: float) -> tuple[float, bool]:
    """One-sided Chernoff tail exp(-M delta^2 / (2 Vb)) for a given delta.

    If the validity condition M >= 8 mu / (delta Vb) fails, the variance
    constant is raised to 8 mu / (delta M), which always restores it.
    Returns (tail, condition_held).
    """
    if delta <= 0.0:
        raise ValidationError("delta must be > 0")
    if variance_bound <= 0.0:
        raise ValidationError("variance bound must be > 0")
    mu = range_halfwidth(K)
    v_eff = variance_bound
    held = M * delta * variance_bound >= 8.0 * mu
    if not held:
        v_eff = 8.0 * mu / (delta * M)
    return math.exp(-M * delta * delta / (2.0 * v_eff)), held


def bernstein_variance_error_bar(M: int, K: int, gamma: float, variance_bound: float) -> float:
    """Bernstein half-width with an explicit variance bound: valid for
    any M, always above the Chernoff bar sqrt(2 L Vb / M).

    d = (mu L / (3M)) (1 + sqrt(1 + 18 M Vb / (mu^2 L))).
    """
    _check_gamma(gamma)
    if M < 1:
        raise ValidationError("M must be >= 1")
    if variance_bound < 0.0:
        raise ValidationError("variance bound must be >= 0")
    L = _log_budget(gamma)
    mu = range_halfwidth(K)
    return (mu * L / (3.0 * M)) * (1.0 + math.sqrt(1.0 + 18.0 * M * variance_bound / (mu * mu * L)))


def bernstein_variance_one_sided_tail(M: int, K: int, delta: float, variance_bound: float) -> float:
    """One-sided Bernstein tail with an explicit variance bound."""
    if delta <= 0.0:
        raise ValidationError("delta must be > 0")
    mu = range_halfwidth(K)
    return math.exp(-M * delta * delta / (2.0 * variance_bound + (2.0 / 3.0) * mu * delta))


def two_sided_error_bar(method: str, M: int, K: int, gamma: float,
                        variance_bound: float | None = None) -> ErrorBar:
    """Uniform front end over the two-sided bar constructions.

    ``variance_bound`` is the per-setting bound on Var(E~_2); the
    estimator variance Var(R~^(2)) = variance_bound / M is formed here
    where a method needs it.
    """
    if method == CANTELLI_TWO_SIDED:
        if variance_bound is None:
            raise ValidationError("the Cantelli bar needs a variance bound")
        return ErrorBar(
            method=method, gamma=gamma,
            delta=cantelli_two_sided(variance_bound / M, gamma),
            variance_bound=variance_bound,
        )
    if method == BERNSTEIN_RANGE:
        return ErrorBar(method=method, gamma=gamma, delta=bernstein_error_bar(M, K, gamma))
    if method == CHERNOFF_VARIANCE:
        if variance_bound is None:
            raise ValidationError("the Chernoff bar needs a variance bound")
        return chernoff_error_bar(M, K, gamma, variance_bound)
    if method == BERNSTEIN_VARIANCE:
        if variance_bound is None:
            raise ValidationError("the Bernstein-variance bar needs a variance bound")
        return ErrorBar(
            method=method, gamma=gamma,
            delta=bernstein_variance_error_bar(M, K, gamma, variance_bound),
            variance_bound=variance_bound,
        )
    raise ValidationError(f"unknown error-bar method {method!r}")
