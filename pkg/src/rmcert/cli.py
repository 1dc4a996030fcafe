"""Command-line interface.

Commands: bounds, ghz-moments, threshold, plan, simulate, estimate,
certify.  Structured JSON goes to stdout (or --out); sweep tables can be
emitted as CSV with --csv.  Exit codes: 0 success, 2 usage, 3
validation, 4 resource limit, 5 ingestion.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import sys
from fractions import Fraction

from . import __version__
from .bounds import (
    Criterion,
    FULLSEP,
    WCLASS,
    asymptotic_noise_threshold,
    criterion_bound,
    ksep,
    ksep_bound_r2,
    ksep_bound_r4,
    mprod_bound_r2,
    mproducible,
    noise_threshold,
    wclass_bound_r2,
    fullsep_bounds,
)
from .certify import certify_all, verdict_document
from .confidence import BERNSTEIN_RANGE, BERNSTEIN_VARIANCE, CANTELLI_TWO_SIDED
from .errors import (
    IngestionError,
    InfeasiblePlanError,
    ResourceLimitError,
    RmcertError,
    ValidationError,
)
from .estimation import stats_from_outcomes, moment_estimate
from .moments import ghz_moment_closed, noisy_ghz_r2
from .planner import certification_budget, min_total_budget, optimal_k, required_m
from .sampling import MODE_COMPACT, MODE_FULL, read_records, simulate_to_file
from .states import fidelity_to_p, make_noisy_ghz

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RESOURCE = 4
EXIT_INGESTION = 5

PLAN_METHODS = {
    "cantelli": CANTELLI_TWO_SIDED,
    "bernstein": BERNSTEIN_RANGE,
    "bernstein-variance": BERNSTEIN_VARIANCE,
}


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _emit(doc, args) -> None:
    text = json.dumps(doc, indent=2)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _emit_csv(rows, fieldnames, args) -> None:
    out = open(args.out, "w", newline="", encoding="utf-8") if getattr(args, "out", None) else sys.stdout
    try:
        w = csv.DictWriter(out, fieldnames=fieldnames)
        w.writeheader()
        for row in rows:
            w.writerow(row)
    finally:
        if out is not sys.stdout:
            out.close()


def _stamp(doc: dict, args) -> dict:
    if not getattr(args, "reproducible", False):
        doc["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return doc


def _parse_criterion(text: str) -> Criterion:
    t = text.strip().lower()
    if t in ("full-sep", "fullsep"):
        return FULLSEP
    if t in ("w-class", "wclass"):
        return WCLASS
    for prefix, maker in (("k-sep:", ksep), ("ksep:", ksep),
                          ("m-producible:", mproducible), ("mprod:", mproducible)):
        if t.startswith(prefix):
            return maker(int(t[len(prefix):]))
    raise ValidationError(
        f"cannot parse criterion {text!r}; use full-sep, w-class, k-sep:K or m-producible:M"
    )


def _target_r2_from_args(n: int, args) -> tuple[float, str]:
    """Planning target for a noisy-GHZ state from --p or --fidelity.

    With --fidelity F the target is F^2 R^(2)_ghz (the convention the
    reference budgets use; the 2^-n overlap correction is far below
    planning tolerance).  With --p it is (1-p)^2 R^(2)_ghz.
    """
    if args.p is not None and args.fidelity is not None:
        raise ValidationError("give exactly one of --p / --fidelity")
    if args.p is not None:
        return noisy_ghz_r2(n, args.p), f"p={args.p}"
    if args.fidelity is not None:
        return args.fidelity ** 2 * float(ghz_moment_closed(n, 2)), f"fidelity={args.fidelity}"
    raise ValidationError("criterion planning needs --p or --fidelity")


# ---------------------------------------------------------------------------
# subcommands


def cmd_bounds(args) -> int:
    n = args.n
    rows = []
    if args.full_sep or args.all:
        r2, r4 = fullsep_bounds(n)
        rows.append({"criterion": "full-sep", "order": 2, "bound": _frac_str(r2),
                     "bound_float": float(r2), "assignment": None})
        rows.append({"criterion": "full-sep", "order": 4, "bound": _frac_str(r4),
                     "bound_float": float(r4), "assignment": None})
    if args.w_class or args.all:
        v = wclass_bound_r2(n)
        rows.append({"criterion": "w-class", "order": 2, "bound": _frac_str(v),
                     "bound_float": float(v), "assignment": None})
    notes = []
    ks: list[int] = []
    if args.k == "all" or args.all:
        ks = list(range(2, (n - 1) // 2 + 1))
    elif args.k is not None:
        ks = [int(args.k)]
    if n == 4 and (ks or args.k is not None):
        notes.append("genuine multiparticle entanglement is not detectable from the "
                     "full second moment at n=4: the biseparable maximum equals the "
                     "global maximum")
    for k in ks:
        v2 = ksep_bound_r2(n, k)
        v4 = ksep_bound_r4(n, k)
        sat = f"bell^{k-1} x ghz_{n - 2*(k-1)}"
        rows.append({"criterion": f"k-sep({k})", "order": 2, "bound": _frac_str(v2),
                     "bound_float": float(v2), "assignment": sat})
        rows.append({"criterion": f"k-sep({k})", "order": 4, "bound": _frac_str(v4),
                     "bound_float": float(v4), "assignment": sat})
    ms: list[int] = []
    if args.m_producible == "all" or (args.all and args.m_producible is None):
        ms = list(range(2, min(n, 10) + 1))
    elif args.m_producible is not None:
        ms = [int(args.m_producible)]
    for m in ms:
        v, assignment = mprod_bound_r2(n, m)
        rows.append({"criterion": f"m-producible({m})", "order": 2, "bound": _frac_str(v),
                     "bound_float": float(v),
                     "assignment": "(" + ",".join(str(c) for c in assignment) + ")"})
    if not rows:
        raise ValidationError("nothing selected; use --all or one of --k/--m-producible/...")
    if args.csv:
        _emit_csv(rows, ["criterion", "order", "bound", "bound_float", "assignment"], args)
    else:
        _emit(_stamp({"n_qubits": n, "bounds": rows, "notes": notes}, args), args)
    return EXIT_OK


def cmd_ghz_moments(args) -> int:
    rows = []
    ns = range(args.n, args.n + 1) if args.sweep_n is None else _parse_span(args.sweep_n)
    for n in ns:
        for t in (2, 4):
            v = ghz_moment_closed(n, t)
            rows.append({"n": n, "order": t, "value": _frac_str(v), "value_float": float(v)})
    if args.csv:
        _emit_csv(rows, ["n", "order", "value", "value_float"], args)
    else:
        _emit(_stamp({"ghz_moments": rows}, args), args)
    return EXIT_OK


def cmd_threshold(args) -> int:
    if args.sweep:
        rows = []
        for n in _parse_span(args.sweep):
            for k in range(2, (n - 1) // 2 + 1):
                rows.append({"n": n, "k": k, "p_star": noise_threshold(n, k)})
        _emit_csv(rows, ["n", "k", "p_star"], args)
        return EXIT_OK
    if args.n == "odd-asymptotic":
        p = asymptotic_noise_threshold(args.k)
        _emit(_stamp({"n": "odd-asymptotic", "k": args.k, "p_star": p}, args), args)
        return EXIT_OK
    n = int(args.n)
    _emit(_stamp({"n": n, "k": args.k, "p_star": noise_threshold(n, args.k)}, args), args)
    return EXIT_OK


def _parse_span(text: str) -> list[int]:
    lo, _, hi = text.partition(":")
    return list(range(int(lo), int(hi) + 1))


def _plan_doc(plan) -> dict:
    return {
        "n_qubits": plan.n_qubits,
        "purpose": plan.purpose,
        "gamma": plan.gamma,
        "delta": plan.delta,
        "delta_rel": plan.delta_rel,
        "method": plan.method,
        "k_shots": plan.k_shots,
        "n_settings": plan.n_settings,
        "m_total": plan.m_total,
        "achieved_delta": plan.achieved_delta(),
        "assumptions": list(plan.assumptions),
    }


def cmd_plan(args) -> int:
    method = PLAN_METHODS[args.method]
    if args.criterion is not None:
        crit = _parse_criterion(args.criterion)
        if args.sweep_p is not None:
            lo, hi, step = (float(x) for x in args.sweep_p.split(":"))
            rows = []
            p = lo
            while p <= hi + 1e-12:
                target = noisy_ghz_r2(args.n, p)
                try:
                    plan = certification_budget(args.n, crit, target, args.gamma)
                    rows.append({"p": round(p, 12), "m_settings": plan.n_settings,
                                 "k_shots": plan.k_shots, "m_total": plan.m_total})
                except InfeasiblePlanError:
                    rows.append({"p": round(p, 12), "m_settings": "", "k_shots": "",
                                 "m_total": "inf"})
                p += step
            _emit_csv(rows, ["p", "m_settings", "k_shots", "m_total"], args)
            return EXIT_OK
        target, desc = _target_r2_from_args(args.n, args)
        plan = certification_budget(args.n, crit, target, args.gamma)
        doc = _plan_doc(plan)
        doc["target_r2"] = target
        doc["target_state"] = f"noisy-ghz({desc})"
        _emit(_stamp(doc, args), args)
        return EXIT_OK
    delta_rel = _delta_rel_from_args(args)
    if args.sweep_n is not None:
        rows = []
        for n in _parse_span(args.sweep_n):
            plan = min_total_budget(n, args.gamma, delta_rel, method)
            row = {"n": n, "k_opt": plan.k_shots, "m_settings": plan.n_settings,
                   "m_total": plan.m_total}
            if args.k is not None:
                row["m_at_fixed_k"] = required_m(n, args.k, args.gamma, delta_rel, method)
            rows.append(row)
        fields = ["n", "k_opt", "m_settings", "m_total"]
        if args.k is not None:
            fields.append("m_at_fixed_k")
        _emit_csv(rows, fields, args)
        return EXIT_OK
    if args.sweep_gamma is not None:
        lo, hi, step = (float(x) for x in args.sweep_gamma.split(":"))
        rows = []
        g = lo
        while g <= hi + 1e-12:
            plan = min_total_budget(args.n, g, delta_rel, method)
            rows.append({"gamma": round(g, 12), "k_opt": plan.k_shots,
                         "m_settings": plan.n_settings, "m_total": plan.m_total})
            g += step
        _emit_csv(rows, ["gamma", "k_opt", "m_settings", "m_total"], args)
        return EXIT_OK
    if args.k is not None:
        m = required_m(args.n, args.k, args.gamma, delta_rel, method)
        doc = {"n_qubits": args.n, "purpose": "estimate-only", "gamma": args.gamma,
               "delta_rel": delta_rel, "method": method, "k_shots": args.k,
               "n_settings": m, "m_total": m * args.k,
               "k_opt_continuous": optimal_k(args.n)}
        _emit(_stamp(doc, args), args)
        return EXIT_OK
    plan = min_total_budget(args.n, args.gamma, delta_rel, method)
    doc = _plan_doc(plan)
    doc["k_opt_continuous"] = optimal_k(args.n)
    _emit(_stamp(doc, args), args)
    return EXIT_OK


def _delta_rel_from_args(args) -> float:
    if (args.delta_rel is None) == (args.delta_abs is None):
        raise ValidationError("give exactly one of --delta-rel / --delta-abs")
    if args.delta_rel is not None:
        return args.delta_rel
    return args.delta_abs / float(ghz_moment_closed(args.n, 2))


def cmd_simulate(args) -> int:
    if args.state != "noisy-ghz":
        raise ValidationError(f"unknown state family {args.state!r}")
    if (args.p is None) == (args.fidelity is None):
        raise ValidationError("give exactly one of --p / --fidelity")
    p = args.p if args.p is not None else fidelity_to_p(args.n, args.fidelity)
    state = make_noisy_ghz(args.n, p)
    simulate_to_file(state, args.m, args.k, args.seed, args.out,
                     mode=args.mode, threads=args.threads)
    return EXIT_OK


def cmd_estimate(args) -> int:
    header, records = read_records(args.infile)
    n = int(header["n_qubits"])
    if args.marginal is not None:
        subset = [int(i) for i in args.marginal.split(",")]
        if header["mode"] != MODE_FULL:
            raise ValidationError("marginal moments need a full-mode record file")
        stats = [stats_from_outcomes(r.outcomes, subset=subset) for r in records]
        est = moment_estimate(stats, t=args.t, n_qubits=len(subset))
        label = f"marginal({args.marginal})"
    else:
        from .certify import estimate_from_records

        if args.t == 2:
            est = estimate_from_records(records, n)
        else:
            from .estimation import SettingStats

            stats = [
                SettingStats(k_shots=r.k_shots, y=r.x_count) if r.mode == MODE_COMPACT
                else stats_from_outcomes(r.outcomes)
                for r in records
            ]
            est = moment_estimate(stats, t=args.t, n_qubits=n)
        label = "full"
    doc = {
        "order": est.order,
        "scope": label,
        "value": est.value,
        "n_settings": est.n_settings,
        "k_shots": est.k_shots,
        "n_qubits": est.n_qubits,
        "variance_estimate": est.variance_estimate,
        "variance_source": est.variance_source,
        "source_file": str(args.infile),
        "state_descriptor": header["state_descriptor"],
    }
    if args.gamma is not None and est.variance_estimate is not None:
        from .confidence import cantelli_two_sided

        doc["error_bar"] = {
            "method": "cantelli-two-sided",
            "gamma": args.gamma,
            "delta": cantelli_two_sided(est.variance_estimate, args.gamma),
        }
    _emit(_stamp(doc, args), args)
    return EXIT_OK


def cmd_certify(args) -> int:
    header, records = read_records(args.infile)
    n = int(header["n_qubits"])
    report = certify_all(records, n, args.gamma)
    doc = verdict_document(report, args.gamma, reproducible=args.reproducible)
    doc["source_file"] = str(args.infile)
    doc["state_descriptor"] = header["state_descriptor"]
    _emit(doc, args)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write output to a file instead of stdout")
    p.add_argument("--csv", action="store_true", help="emit sweep tables as CSV")
    p.add_argument("--reproducible", action="store_true",
                   help="suppress timestamps for byte-stable output")
    p.add_argument("--config", help="JSON file with default argument values")
    p.add_argument("--threads", type=int, default=1, help="worker cap for simulation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rmcert",
        description="Certify multiparticle entanglement from locally randomized measurements.",
    )
    ap.add_argument("--version", action="version", version=f"rmcert {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="exact moment bounds for separability classes")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", help="k-separability parameter, or 'all'")
    p.add_argument("--m-producible", dest="m_producible", help="producibility order, or 'all'")
    p.add_argument("--w-class", dest="w_class", action="store_true")
    p.add_argument("--full-sep", dest="full_sep", action="store_true")
    p.add_argument("--all", action="store_true", help="every applicable bound")
    _add_common(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("ghz-moments", help="closed-form GHZ moments")
    p.add_argument("--n", type=int)
    p.add_argument("--sweep-n", dest="sweep_n", help="range LO:HI")
    _add_common(p)
    p.set_defaults(func=cmd_ghz_moments)

    p = sub.add_parser("threshold", help="noise thresholds of the k-separability tests")
    p.add_argument("--n", help="qubit count, or 'odd-asymptotic'")
    p.add_argument("--k", type=int)
    p.add_argument("--sweep", help="emit all (n, k, p*) rows for n in LO:HI")
    _add_common(p)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("plan", help="measurement budgets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--delta-rel", dest="delta_rel", type=float)
    p.add_argument("--delta-abs", dest="delta_abs", type=float)
    p.add_argument("--method", choices=sorted(PLAN_METHODS), default="cantelli")
    p.add_argument("--k", type=int, help="fixed shots per setting")
    p.add_argument("--criterion", help="full-sep | w-class | k-sep:K | m-producible:M")
    p.add_argument("--p", type=float, help="noisy-GHZ noise fraction of the target state")
    p.add_argument("--fidelity", type=float, help="GHZ fidelity of the target state")
    p.add_argument("--sweep-n", dest="sweep_n", help="range LO:HI")
    p.add_argument("--sweep-gamma", dest="sweep_gamma", help="range LO:HI:STEP")
    p.add_argument("--sweep-p", dest="sweep_p", help="range LO:HI:STEP")
    _add_common(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("simulate", help="generate randomized-measurement shot records")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--state", default="noisy-ghz")
    p.add_argument("--p", type=float)
    p.add_argument("--fidelity", type=float)
    p.add_argument("--m", type=int, required=True, help="number of settings")
    p.add_argument("--k", type=int, required=True, help="shots per setting")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=[MODE_COMPACT, MODE_FULL], default=MODE_COMPACT)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="moment estimates from a record file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--marginal", help="comma-separated qubit subset (full mode only)")
    p.add_argument("--gamma", type=float, help="attach a Cantelli error bar")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("certify", help="test every applicable criterion on a record file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--gamma", type=float, default=0.9)
    _add_common(p)
    p.set_defaults(func=cmd_certify)

    return ap


def _apply_config(args: argparse.Namespace) -> None:
    """Fill unset optional values from a JSON config file (flags win)."""
    if not getattr(args, "config", None):
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) in (None, False):
            setattr(args, attr, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config(args)
        return args.func(args)
    except IngestionError as exc:
        print(f"rmcert: ingestion error: {exc}", file=sys.stderr)
        return EXIT_INGESTION
    except ResourceLimitError as exc:
        print(f"rmcert: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValidationError, InfeasiblePlanError) as exc:
        print(f"rmcert: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except RmcertError as exc:
        print(f"rmcert: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
