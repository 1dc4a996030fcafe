"""End-to-end certification: records -> estimate -> verdicts.

Each applicable criterion is tested one-sided: the null hypothesis is
"the state belongs to the class", under which both the second moment
and the estimator variance are bounded by the class caps.  A criterion
is Violated when the observed excess over its bound is positive and the
hypothesis-variance tail probability leaves confidence >= gamma;
a positive excess without enough confidence is Inconclusive.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .bounds import (
    Criterion,
    FULLSEP,
    WCLASS,
    criterion_bound,
    depth_implication,
    ksep,
    mproducible,
)
from .confidence import (
    BERNSTEIN_VARIANCE,
    CANTELLI_ONE_SIDED,
    CHERNOFF_VARIANCE,
    bernstein_variance_one_sided_tail,
    cantelli_one_sided_tail,
    chernoff_one_sided_tail,
)
from .errors import ValidationError
from .estimation import (
    MomentEstimate,
    SettingStats,
    moment_estimate,
    stats_from_outcomes,
    variance_upper_bound,
)
from .sampling import MODE_COMPACT

VIOLATED = "violated"
NOT_VIOLATED = "not-violated"
INCONCLUSIVE = "inconclusive"

N4_KSEP_NOTE = (
    "k-separability tests need n >= 5: at n = 4 the biseparable maximum "
    "of the second moment coincides with the global maximum"
)

VERDICT_METHODS = (CANTELLI_ONE_SIDED, CHERNOFF_VARIANCE, BERNSTEIN_VARIANCE)


@dataclass(frozen=True)
class Verdict:
    criterion: Criterion
    n_qubits: int
    bound: Fraction
    observed: float
    delta_obs: float
    method: str
    tail: float
    confidence: float
    verdict: str
    depth: int | None
    variance_bound: float
    assumptions: tuple[str, ...] = ()


@dataclass(frozen=True)
class CertificationReport:
    verdicts: tuple[Verdict, ...]
    depth: int | None
    notes: tuple[str, ...] = ()


def applicable_criteria(n: int) -> list[Criterion]:
    """All criteria testable at a given qubit count, strongest first.

    k-separability entries require n >= 5 (none exist at n = 4); the
    producibility ladder runs m = 2..n-1 (m = 1 is full separability,
    m = n can never be violated).
    """
    crits: list[Criterion] = []
    for k in range(2, (n - 1) // 2 + 1):
        crits.append(ksep(k))
    for m in range(n - 1, 1, -1):
        crits.append(mproducible(m))
    if n >= 2:
        crits.append(WCLASS)
    crits.append(FULLSEP)
    return crits


def _one_sided_tail(method: str, n: int, K: int, M: int, delta: float,
                    criterion: Criterion) -> tuple[float, float, tuple[str, ...]]:
    vb = variance_upper_bound(n, K, criterion)
    notes = vb.assumptions
    if method == CANTELLI_ONE_SIDED:
        tail = cantelli_one_sided_tail(vb.value / M, delta)
    elif method == CHERNOFF_VARIANCE:
        tail, held = chernoff_one_sided_tail(M, K, delta, vb.value)
        if not held:
            notes = notes + ("Chernoff validity condition failed; variance constant raised",)
    elif method == BERNSTEIN_VARIANCE:
        tail = bernstein_variance_one_sided_tail(M, K, delta, vb.value)
    else:
        raise ValidationError(f"unknown verdict method {method!r}")
    return tail, vb.value, notes


def test_criterion(estimate: MomentEstimate, criterion: Criterion, gamma: float,
                   method: str = CANTELLI_ONE_SIDED) -> Verdict:
    """One-sided hypothesis test of a single criterion."""
    if estimate.order != 2:
        raise ValidationError("criterion tests run on second-moment estimates")
    if estimate.n_qubits is None:
        raise ValidationError("the estimate must carry its qubit count")
    if not (0.0 < gamma < 1.0):
        raise ValidationError(f"confidence gamma={gamma} outside (0, 1)")
    n = estimate.n_qubits
    cb = criterion_bound(criterion, n)  # raises for inapplicable criteria
    bound = cb.value
    delta_obs = estimate.value - float(bound)
    if delta_obs <= 0.0:
        return Verdict(
            criterion=criterion, n_qubits=n, bound=bound, observed=estimate.value,
            delta_obs=delta_obs, method=method, tail=1.0, confidence=0.0,
            verdict=NOT_VIOLATED, depth=None, variance_bound=float("nan"),
            assumptions=cb.assumptions,
        )
    tail, vb_value, notes = _one_sided_tail(
        method, n, estimate.k_shots, estimate.n_settings, delta_obs, criterion
    )
    confidence = 1.0 - tail
    ok = confidence >= gamma
    return Verdict(
        criterion=criterion, n_qubits=n, bound=bound, observed=estimate.value,
        delta_obs=delta_obs, method=method, tail=tail, confidence=confidence,
        verdict=VIOLATED if ok else INCONCLUSIVE,
        depth=depth_implication(n, criterion) if ok else None,
        variance_bound=vb_value,
        assumptions=tuple(dict.fromkeys(cb.assumptions + notes)),
    )


def estimate_from_records(records, n_qubits: int) -> MomentEstimate:
    """Second-moment estimate from shot records (any mode)."""
    stats = []
    for rec in records:
        if rec.mode == MODE_COMPACT:
            stats.append(SettingStats(k_shots=rec.k_shots, y=rec.x_count))
        else:
            stats.append(stats_from_outcomes(rec.outcomes))
    return moment_estimate(stats, t=2, n_qubits=n_qubits)


def certify_all(records, n_qubits: int, gamma: float,
                method: str = CANTELLI_ONE_SIDED) -> CertificationReport:
    """Test every applicable criterion on one set of records.

    Returns the verdicts sorted strongest-claim-first and the summary
    entanglement depth (the largest depth implied by any Violated
    criterion, or None).
    """
    records = list(records)
    if not records:
        raise ValidationError("no records to certify")
    estimate = estimate_from_records(records, n_qubits)
    notes: list[str] = []
    if n_qubits == 4:
        notes.append(N4_KSEP_NOTE)
    verdicts = [
        test_criterion(estimate, crit, gamma, method)
        for crit in applicable_criteria(n_qubits)
    ]
    verdicts.sort(
        key=lambda v: (
            -(v.depth if v.depth is not None else depth_implication(n_qubits, v.criterion) or 0),
            -float(v.bound),
        )
    )
    depths = [v.depth for v in verdicts if v.verdict == VIOLATED and v.depth is not None]
    return CertificationReport(
        verdicts=tuple(verdicts),
        depth=max(depths) if depths else None,
        notes=tuple(notes),
    )


def verdict_document(report: CertificationReport, gamma: float, reproducible: bool = False) -> dict:
    """JSON-ready rendering of a certification report."""
    import datetime
    import math

    doc = {
        "gamma": gamma,
        "summary_depth": report.depth,
        "notes": list(report.notes),
        "verdicts": [
            {
                "criterion": v.criterion.label,
                "bound": f"{v.bound.numerator}/{v.bound.denominator}",
                "bound_float": float(v.bound),
                "observed": v.observed,
                "delta_obs": v.delta_obs,
                "method": v.method,
                "tail": v.tail,
                "confidence": v.confidence,
                "verdict": v.verdict,
                "depth": v.depth,
                "variance_bound": None if math.isnan(v.variance_bound) else v.variance_bound,
                "assumptions": list(v.assumptions),
            }
            for v in report.verdicts
        ],
    }
    if not reproducible:
        doc["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return doc
