"""Exact-arithmetic bounds on the moments for separability classes.

Every bound is carried as a ``fractions.Fraction``; floats are produced
only at the statistics boundary.  The fourth-moment bounds for n > 4
rest on the conjecture that the GHZ state maximizes R^(4); outputs that
depend on it carry an explicit assumption string.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ValidationError
from .moments import bell_product_r4, ghz_moment_closed
from .states import BELL, GHZ, SINGLE, BlockProduct

GHZ_R4_CONJECTURE = "assumes the GHZ state maximizes R^(4) for n > 4 (numerical evidence only)"
PRODUCIBILITY_R4_NOTE = (
    "R^(4) cap for the producibility class derived from per-block maxima "
    "(block factorization + convexity), not an independently proven bound"
)

FULL_SEP = "full-sep"
W_CLASS = "w-class"
K_SEP = "k-sep"
M_PRODUCIBLE = "m-producible"


@dataclass(frozen=True)
class Criterion:
    """A separability/producibility hypothesis class to be refuted."""

    kind: str
    param: int | None = None

    def __post_init__(self):
        if self.kind in (FULL_SEP, W_CLASS):
            if self.param is not None:
                raise ValidationError(f"{self.kind} takes no parameter")
        elif self.kind == K_SEP:
            if self.param is None or self.param < 2:
                raise ValidationError("k-sep needs k >= 2")
        elif self.kind == M_PRODUCIBLE:
            if self.param is None or self.param < 1:
                raise ValidationError("m-producible needs m >= 1")
        else:
            raise ValidationError(f"unknown criterion kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.param is None:
            return self.kind
        return f"{self.kind}({self.param})"


FULLSEP = Criterion(FULL_SEP)
WCLASS = Criterion(W_CLASS)


def ksep(k: int) -> Criterion:
    return Criterion(K_SEP, k)


def mproducible(m: int) -> Criterion:
    return Criterion(M_PRODUCIBLE, m)


@dataclass(frozen=True)
class CriterionBound:
    criterion: Criterion
    n_qubits: int
    order: int
    value: Fraction
    saturator: BlockProduct | None = None
    assumptions: tuple[str, ...] = ()


def _admissible_k_range(n: int) -> tuple[int, int]:
    return 2, (n - 1) // 2


def _check_k(n: int, k: int) -> None:
    lo, hi = _admissible_k_range(n)
    if hi < lo:
        if n == 4:
            raise ValidationError(
                "no admissible k for n=4: the biseparable maximum equals the "
                "global second-moment maximum there, so the criterion is vacuous"
            )
        raise ValidationError(
            f"no admissible k for n={n}: partial-separability tests need n >= 5"
        )
    if not (lo <= k <= hi):
        raise ValidationError(f"k={k} outside the admissible range {lo}..{hi} for n={n}")


def _check_k_formula(n: int, k: int) -> None:
    """Range check for the raw bound formulas.

    The biseparability bound is well defined at n=4 (where it equals the
    global maximum, so the criterion is vacuous there); the stricter
    admissibility check in :func:`criterion_bound` still rejects it.
    """
    if n == 4 and k == 2:
        return
    _check_k(n, k)


def ksep_bound_r2(n: int, k: int) -> Fraction:
    """Largest R^(2) attainable by k-separable n-qubit states.

    (2^(n-(2k-1)) + [n even]) / 3^(n-k+1), attained by the block product
    Bell^(k-1) x GHZ_(n-2(k-1)).
    """
    _check_k_formula(n, k)
    return Fraction(2 ** (n - (2 * k - 1)) + (1 if n % 2 == 0 else 0), 3 ** (n - k + 1))


def ksep_saturator(n: int, k: int) -> BlockProduct:
    _check_k_formula(n, k)
    return BlockProduct(tuple([(BELL, 2)] * (k - 1) + [(GHZ, n - 2 * (k - 1))]))


def ksep_bound_r4(n: int, k: int) -> Fraction:
    """Largest R^(4) over k-separable states (GHZ-maximization conjecture):
    R^(4)_ghz(n-2(k-1)) / 5^(k-1), same saturating block product."""
    _check_k_formula(n, k)
    return ghz_moment_closed(n - 2 * (k - 1), 4) / 5 ** (k - 1)


def fullsep_bounds(n: int) -> tuple[Fraction, Fraction]:
    """(R^(2), R^(4)) caps for fully separable states: (1/3^n, 1/5^n)."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    return Fraction(1, 3 ** n), Fraction(1, 5 ** n)


def wclass_bound_r2(n: int) -> Fraction:
    """R^(2) cap for the mixed W class: (5 - 4/n) / 3^n."""
    if n < 2:
        raise ValidationError("the W-class bound needs n >= 2")
    return Fraction(5 * n - 4, n * 3 ** n)


def _mprod_table(n: int, m: int, block_value) -> list[list[Fraction | None]]:
    """DP over (minimum block size, remaining qubits).

    best[i][r] = max product of block_value(size) over blocks of size in
    [i, m] covering r qubits; None where infeasible.
    """
    best: list[list[Fraction | None]] = [[None] * (n + 1) for _ in range(m + 2)]
    best[m + 1][0] = Fraction(1)
    for i in range(m, 0, -1):
        vi = block_value(i)
        for r in range(n + 1):
            cand = None
            power = Fraction(1)
            for c in range(r // i + 1):
                rest = best[i + 1][r - c * i]
                if rest is not None:
                    val = power * rest
                    if cand is None or val > cand:
                        cand = val
                power *= vi
            best[i][r] = cand
    return best


def _mprod_optimize(n: int, m: int, block_value) -> tuple[Fraction, tuple[int, ...]]:
    """Maximize prod block_value(size_j) over partitions of n into blocks
    of size <= m; returns the optimum and the lexicographically smallest
    optimal assignment (k_1, ..., k_m) with sum i*k_i = n."""
    best = _mprod_table(n, m, block_value)
    target = best[1][n]
    assert target is not None
    assignment = []
    remaining = n
    for i in range(1, m + 1):
        vi = block_value(i)
        chosen = None
        power = Fraction(1)
        for c in range(remaining // i + 1):
            rest = best[i + 1][remaining - c * i]
            if rest is not None and power * rest == target:
                chosen = c
                break
            power *= vi
        assert chosen is not None
        assignment.append(chosen)
        target /= block_value(i) ** chosen
        remaining -= chosen * i
    return best[1][n], tuple(assignment)


def mprod_bound_r2(n: int, m: int) -> tuple[Fraction, tuple[int, ...]]:
    """Largest R^(2) over m-producible n-qubit states, with an optimal
    block-count assignment.

    Maximizes prod_i R^(2)_ghz(i)^(k_i) over nonnegative k_i with
    sum i*k_i = n and i <= m (each block's moment is capped by its GHZ
    state, and moments factorize over blocks).  Ties are broken toward
    the lexicographically smallest (k_1, ..., k_m).
    """
    if not (1 <= m <= n):
        raise ValidationError(f"m={m} outside 1..{n}")
    return _mprod_optimize(n, m, lambda i: ghz_moment_closed(i, 2))


def four_qubit_r4_cap() -> Fraction:
    """Global R^(4) cap at n=4: the Bell-pair product beats GHZ_4."""
    return max(ghz_moment_closed(4, 4), bell_product_r4(4))


def global_r4_bound(n: int) -> tuple[Fraction, tuple[str, ...]]:
    """State-independent R^(4) cap with its assumption trail."""
    if n == 4:
        return four_qubit_r4_cap(), (GHZ_R4_CONJECTURE,)
    if n > 4:
        return ghz_moment_closed(n, 4), (GHZ_R4_CONJECTURE,)
    return ghz_moment_closed(n, 4), ()


def _r4_block_cap(i: int) -> Fraction:
    return global_r4_bound(i)[0]


def mprod_bound_r4(n: int, m: int) -> tuple[Fraction, tuple[str, ...]]:
    """R^(4) cap over m-producible states via per-block maxima.

    Prefers the k-separability cap when the m-producibility R^(2) bound
    coincides with a k-separability bound (the optimum is then reached
    by a Bell^(k-1) x GHZ block structure and the k-separable class
    contains the optimizer); otherwise maximizes the per-block R^(4)
    caps over all admissible assignments.
    """
    if not (1 <= m <= n):
        raise ValidationError(f"m={m} outside 1..{n}")
    r2_value, _ = mprod_bound_r2(n, m)
    lo, hi = _admissible_k_range(n)
    for k in range(lo, hi + 1):
        if ksep_bound_r2(n, k) == r2_value:
            return ksep_bound_r4(n, k), (GHZ_R4_CONJECTURE,)
    value, _ = _mprod_optimize(n, m, _r4_block_cap)
    return value, (GHZ_R4_CONJECTURE, PRODUCIBILITY_R4_NOTE)


def noise_threshold(n: int, k: int) -> float:
    """Largest white-noise fraction p* at which the noisy GHZ state still
    violates the k-separability criterion.

    p* = 1 - f(n,k) (3/4)^((k-1)/2), with f = 1 for odd n and
    f = sqrt((4^k + 2^(n+1)) / (4 + 2^(n+1))) for even n.  Solves
    (1-p*)^2 R^(2)_ghz(n) = ksep_bound_r2(n, k) exactly.
    """
    _check_k_formula(n, k)
    if n % 2 == 1:
        f = 1.0
    else:
        f = math.sqrt((4 ** k + 2 ** (n + 1)) / (4 + 2 ** (n + 1)))
    return 1.0 - f * (3.0 / 4.0) ** ((k - 1) / 2.0)


def asymptotic_noise_threshold(k: int) -> float:
    """Large-n limit of the threshold: 1 - (3/4)^((k-1)/2)."""
    if k < 2:
        raise ValidationError("k must be >= 2")
    return 1.0 - (3.0 / 4.0) ** ((k - 1) / 2.0)


def depth_implication(n: int, criterion: Criterion) -> int | None:
    """Entanglement-depth lower bound implied by violating a criterion.

    k-separability: depth >= ceil(n / (k-1)); m-producibility: depth
    >= m+1; full separability: depth >= 2.  The W-class criterion
    carries no depth statement.
    """
    if criterion.kind == K_SEP:
        _check_k(n, criterion.param)
        return math.ceil(n / (criterion.param - 1))
    if criterion.kind == M_PRODUCIBLE:
        return criterion.param + 1
    if criterion.kind == FULL_SEP:
        return 2
    return None


def criterion_bound(criterion: Criterion, n: int, order: int = 2) -> CriterionBound:
    """Bundle a criterion's moment bound with its saturator and assumptions."""
    if order == 2:
        if criterion.kind == FULL_SEP:
            value = fullsep_bounds(n)[0]
            sat = BlockProduct(tuple([(SINGLE, 1)] * n))
            return CriterionBound(criterion, n, 2, value, sat)
        if criterion.kind == W_CLASS:
            return CriterionBound(criterion, n, 2, wclass_bound_r2(n))
        if criterion.kind == K_SEP:
            _check_k(n, criterion.param)  # vacuous n=4 case is rejected here
            value = ksep_bound_r2(n, criterion.param)
            return CriterionBound(criterion, n, 2, value, ksep_saturator(n, criterion.param))
        value, assignment = mprod_bound_r2(n, criterion.param)
        sat = _assignment_to_blocks(assignment)
        return CriterionBound(criterion, n, 2, value, sat)
    if order == 4:
        if criterion.kind == FULL_SEP:
            value = fullsep_bounds(n)[1]
            return CriterionBound(criterion, n, 4, value)
        if criterion.kind == K_SEP:
            value = ksep_bound_r4(n, criterion.param)
            return CriterionBound(
                criterion, n, 4, value, ksep_saturator(n, criterion.param),
                assumptions=(GHZ_R4_CONJECTURE,),
            )
        if criterion.kind == M_PRODUCIBLE:
            value, notes = mprod_bound_r4(n, criterion.param)
            return CriterionBound(criterion, n, 4, value, assumptions=notes)
        raise ValidationError(f"no fourth-moment bound for {criterion.label}")
    raise ValidationError(f"bounds exist for orders 2 and 4, got {order}")


def _assignment_to_blocks(assignment: tuple[int, ...]) -> BlockProduct:
    blocks: list[tuple[str, int]] = []
    for i, count in enumerate(assignment, start=1):
        for _ in range(count):
            if i == 1:
                blocks.append((GHZ, 1))
            elif i == 2:
                blocks.append((BELL, 2))
            else:
                blocks.append((GHZ, i))
    return BlockProduct(tuple(blocks))


def search_r4_counterexample(n: int, trials: int, rng) -> float:
    """Random-state stress test of the GHZ-maximization conjecture.

    Samples Haar-random pure states (n <= 6), evaluates R^(4) by design
    sum and returns the largest value found; anything above the global
    cap would falsify the conjecture.
    """
    from .moments import moment_design
    from .states import DenseState

    if n > 6:
        raise ValidationError("the falsification harness is capped at n=6")
    dim = 2 ** n
    worst = 0.0
    for _ in range(trials):
        z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        z /= np.linalg.norm(z)
        worst = max(worst, moment_design(DenseState(n, z), 4))
    return worst
