"""Command line entry point: ``kmpp-lb <subcommand> ...`` or ``python -m kmpp_lowerbound``.

Exit codes: 0 ok, 2 bad parameters, 3 schedule invalid, 4 budget exceeded, 5 I/O.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path
from statistics import NormalDist

import numpy as np

from . import chain as chainmod
from .errors import KmppError, ParameterError, ScheduleError
from .evaluation import (approximation_ratio, coverage_state, lemma_bound_report,
                         min_covered_for_alpha, potential, split_potential)
from .instance import (Instance, InstanceParams, build_instance, dumps, points_from_dict)
from .oracle import (brute_force_optimal, exact_seeding_distribution,
                     first_center_distribution, seeding_marginals)
from .rng import RngStream
from .seeding import CSV_COLUMNS, TrialRecord, kmeanspp_seed, run_trials

log = logging.getLogger("kmpp_lowerbound")

Z95 = NormalDist().inv_cdf(0.975)
DEFAULT_DELTA_EXP = 0.008
REPORT_COLUMNS = ("k", "delta", "delta_exp", "alpha", "trials", "successes", "p_success",
                  "wilson_lo", "wilson_hi", "p_xi", "s_star", "dp_hitting",
                  "theorem_bound", "theorem_valid")


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    if n <= 0:
        raise ParameterError("n must be positive")
    ph = successes / n
    den = 1.0 + z * z / n
    mid = (ph + z * z / (2 * n)) / den
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den
    # the exact endpoints at 0 and n successes are 0 and 1; avoid roundoff there
    lo = 0.0 if successes == 0 else max(0.0, mid - half)
    hi = 1.0 if successes == n else min(1.0, mid + half)
    return lo, hi


def fmt_float(v: float) -> str:
    return "%.17g" % v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


def records_to_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_COLUMNS)
    for rec in records:
        wr.writerow([_cell(getattr(rec, c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def _parse_bool(s: str):
    return {"true": True, "false": False, "": None}[s]


def records_from_csv(text: str) -> list[TrialRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if tuple(rows[0]) != CSV_COLUMNS:
        raise ParameterError("unexpected trial CSV header")
    types = TrialRecord.__dataclass_fields__
    out = []
    for row in rows[1:]:
        vals = {}
        for name, cell in zip(CSV_COLUMNS, row):
            t = types[name].type
            if t == "int":
                vals[name] = int(cell)
            elif t == "float":
                vals[name] = float(cell)
            else:
                vals[name] = _parse_bool(cell)
        out.append(TrialRecord(**vals))
    return out


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        return
    Path(out).parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        f.write(text)


def _json(obj) -> str:
    def clean(v):
        if isinstance(v, float) and not math.isfinite(v):
            return None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        if isinstance(v, np.integer):
            return int(v)
        if isinstance(v, np.floating):
            return clean(float(v))
        if isinstance(v, np.bool_):
            return bool(v)
        return v
    return json.dumps(clean(obj), indent=1) + "\n"


def _load_json(path: str):
    with open(path) as f:
        return json.load(f)


def _load_points(path: str):
    return points_from_dict(_load_json(path))


def _geom_delta(args, k: int) -> float:
    if getattr(args, "delta_from_schedule", False):
        sc = chainmod.schedule(k - 1, args.delta_exp)
        if not sc.valid:
            raise ScheduleError(f"schedule-derived delta needs alpha > 1 at k = {k}")
        return sc.delta_sched
    if args.delta is not None:
        return args.delta
    return 2.0 ** min(k, 20)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    params = InstanceParams(args.k, args.m, args.r, _geom_delta(args, args.k))
    _write(dumps(build_instance(params)), args.out)
    return 0


def cmd_seed(args) -> int:
    pts = _load_points(args.instance)
    k = args.k if args.k is not None else (pts.params.k if isinstance(pts, Instance) else None)
    if k is None:
        raise ParameterError("--k is required for generic point sets")
    centers, trace = kmeanspp_seed(pts, k, RngStream(args.seed, args.trial))
    out = {
        "seed": args.seed,
        "trial": args.trial,
        "centers": centers,
        "xi": trace.xi,
        "potential": potential(pts, centers),
        "trace": [asdict(st) for st in trace.steps],
    }
    if isinstance(pts, Instance) and pts.params.k >= 2:
        out["ratio"] = approximation_ratio(pts, centers)
    _write(_json(out), args.out)
    return 0


def cmd_evaluate(args) -> int:
    pts = _load_points(args.instance)
    centers = _load_json(args.centers)
    if centers and isinstance(centers[0], list):
        centers = np.array(centers, dtype=np.float64)
    out = {"potential": potential(pts, centers)}
    if isinstance(pts, Instance):
        if pts.params.k >= 2:
            out["ratio"] = approximation_ratio(pts, centers)
        if not isinstance(centers, np.ndarray):
            st = coverage_state(pts, centers)
            phi_c, phi_u, phi_0 = split_potential(pts, centers)
            out["coverage"] = {"covered_groups": sorted(st.covered_groups), "s": st.s, "t": st.t, "xi": st.xi}
            out["phi_c"], out["phi_u"], out["phi_0"] = phi_c, phi_u, phi_0
            if st.xi and st.t <= pts.params.k - 1:
                out["lemma_report"] = asdict(lemma_bound_report(pts, centers))
    _write(_json(out), args.out)
    return 0


def cmd_oracle(args) -> int:
    pts = _load_points(args.instance)
    k = args.k if args.k is not None else (pts.params.k if isinstance(pts, Instance) else None)
    if k is None:
        raise ParameterError("--k is required for generic point sets")
    res = brute_force_optimal(pts, k, args.max_locations)
    out = {
        "k": k,
        "optimal_cost": res.cost,
        "partition": list(res.partition),
        "centers": res.centers.tolist(),
        "first_center_distribution": first_center_distribution(pts).tolist(),
    }
    if args.exact_seeding:
        dist = exact_seeding_distribution(pts, k, args.max_sequences)
        out["sequences"] = len(dist)
        out["total_probability"] = sum(dist.values())
        if isinstance(pts, Instance) and pts.params.k >= 2:
            mg = seeding_marginals(pts, dist, args.alpha)
            out["alpha"] = args.alpha
            out["p_xi"] = mg.p_xi
            out["p_covered_at_least"] = {str(c): v for c, v in mg.p_covered_at_least.items()}
            out["p_ratio_at_most_alpha"] = mg.p_ratio_at_most
    _write(_json(out), args.out)
    return 0


def chain_report(kbar: float, delta_exp: float, geom_delta: float | None = None, alpha: float | None = None,
                 steps: int | None = None, dp: bool = False, mc: int = 0, check_ineq: bool = False,
                 seed: int = 0) -> dict:
    sc = chainmod.schedule(kbar, delta_exp)
    out: dict = {"schedule": sc.as_dict()}
    a = sc.alpha if alpha is None else alpha
    delta = sc.delta_sched if geom_delta is None else geom_delta
    out["alpha_used"], out["delta_used"] = a, delta
    if check_ineq:
        out["inequalities"] = chainmod.check_inequalities(kbar, delta_exp).as_dict()
    if sc.valid:
        out["hoeffding_bound"] = chainmod.hoeffding_bound(kbar, delta_exp)
    if float(kbar).is_integer() and kbar >= 1:
        tb = chainmod.theorem_bound(int(kbar) + 1, delta_exp)
        out["theorem_bound"], out["theorem_valid"] = tb.value, tb.valid
    if dp or mc:
        if not float(kbar).is_integer():
            raise ParameterError("--dp/--mc need an integer kbar")
        params = chainmod.chain_params(int(kbar), delta, a)
        n_steps = int(kbar) if steps is None else steps
        out["s_star"], out["steps"] = params.s_star, n_steps
        ex, ey = chainmod.expected_steps(params)
        out["expected_x"], out["expected_y"] = ex, ey
        if dp:
            out["dp"] = chainmod.hitting_probability_dp(params, n_steps)
        if mc:
            hit, _ = chainmod.simulate_walks(params, n_steps, mc, seed)
            ph = float(hit.mean())
            out["mc"] = {"walks": mc, "estimate": ph, "stderr": math.sqrt(ph * (1 - ph) / mc)}
    return out


def cmd_chain(args) -> int:
    out = chain_report(args.kbar, args.delta, args.geom_delta, args.alpha, args.steps,
                       args.dp, args.mc, args.check_ineq, args.seed)
    _write(_json(out), args.out)
    return 0


def summarize(instance: Instance, records: list[TrialRecord], alpha: float, delta_exp: float) -> dict:
    p = instance.params
    n = len(records)
    succ = sum(r.success for r in records)
    nxi = sum(r.xi for r in records)
    kbar = p.k - 1
    s_star = min_covered_for_alpha(kbar, p.delta_geom, alpha)
    params = chainmod.chain_params(kbar, p.delta_geom, alpha)
    tb = chainmod.theorem_bound(p.k, delta_exp)
    viol = {name: sum(1 for r in records if getattr(r, name) is False)
            for name in ("lemma11_ok", "lemma12_ok", "lemma13_ok", "psbound_ok")}
    lo, hi = wilson_interval(succ, n)
    xlo, xhi = wilson_interval(nxi, n)
    cond = [r for r in records if r.xi]
    return {
        "k": p.k, "m": p.m, "r": p.r, "delta": p.delta_geom, "delta_exp": delta_exp,
        "alpha": alpha, "trials": n, "successes": succ, "p_success": succ / n,
        "wilson_lo": lo, "wilson_hi": hi,
        "p_xi": nxi / n, "p_xi_wilson": [xlo, xhi],
        "exact_p_xi": float(first_center_distribution(instance)[instance.origin_index]),
        "violations": viol,
        "coverage_lemma_violations": sum(1 for r in records if r.success and r.covered < s_star),
        "s_star": s_star,
        "p_cover_s_star_given_xi": (sum(r.covered >= s_star for r in cond) / len(cond)) if cond else None,
        "dp_hitting": chainmod.hitting_probability_dp(params, kbar),
        "theorem_bound": tb.value, "theorem_valid": tb.valid,
    }


def cmd_experiment(args) -> int:
    ks = list(args.k) if args.k_range is None else list(range(args.k_range[0], args.k_range[1] + 1))
    if args.trials < 1:
        raise ParameterError("--trials must be >= 1")
    if getattr(args, "delta_from_schedule", False) and not 0 < args.delta_exp <= 1 / 120:
        raise ParameterError("--delta-exp must lie in (0, 1/120]")
    outdir = Path(args.out or "results")
    threads = args.threads or os.cpu_count() or 1
    for k in ks:
        inst = build_instance(InstanceParams(k, args.m, args.r, _geom_delta(args, k)))
        alpha = args.alpha if args.alpha is not None else args.delta_exp * math.log(k)
        log.info("k=%d delta=%g alpha=%g trials=%d", k, inst.params.delta_geom, alpha, args.trials)
        recs = run_trials(inst, args.trials, args.seed, alpha, threads=threads)
        _write(records_to_csv(recs), str(outdir / f"trials_k{k}.csv"))
        _write(_json(summarize(inst, recs, alpha, args.delta_exp)), str(outdir / f"summary_k{k}.json"))
    return 0


def report_rows(summaries: list[dict]) -> list[dict]:
    rows = []
    for s in summaries:
        missing = [c for c in REPORT_COLUMNS if c not in s]
        if missing:
            raise ParameterError(f"summary is missing fields {missing}")
        rows.append({c: s[c] for c in REPORT_COLUMNS})
    return sorted(rows, key=lambda r: r["k"])


def cmd_report(args) -> int:
    rows = report_rows([_load_json(p) for p in args.inputs])
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(REPORT_COLUMNS)
    for r in rows:
        wr.writerow([_cell(r[c]) for c in REPORT_COLUMNS])
    _write(buf.getvalue(), args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit base seed")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("--out", default=None, help="output file or directory ('-' for stdout)")
    common.add_argument("--config", default=None, help="JSON file of flag defaults")

    ap = argparse.ArgumentParser(prog="kmpp-lb", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def geometry(p):
        p.add_argument("--m", type=float, default=1.0)
        p.add_argument("--r", type=float, default=1.0)
        p.add_argument("--delta", type=float, default=None,
                       help="instance spacing multiplier (default 2**min(k, 20))")
        p.add_argument("--delta-from-schedule", action="store_true",
                       help="take the spacing from the schedule at kbar = k - 1")
        p.add_argument("--delta-exp", type=float, default=DEFAULT_DELTA_EXP)

    p = sub.add_parser("gen", parents=[common], help="write an instance JSON")
    p.add_argument("--k", type=int, required=True)
    geometry(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("seed", parents=[common], help="one k-means++ run with its trace")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--trial", type=int, default=0, help="stream index")
    p.set_defaults(func=cmd_seed)

    p = sub.add_parser("evaluate", parents=[common], help="potential, coverage and bound report")
    p.add_argument("--instance", required=True)
    p.add_argument("--centers", required=True, help="JSON list of indices or [x, y] pairs")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("oracle", parents=[common], help="brute-force optimum and exact seeding law")
    p.add_argument("--instance", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--max-locations", type=int, default=16)
    p.add_argument("--exact-seeding", action="store_true")
    p.add_argument("--max-sequences", type=int, default=10**6)
    p.add_argument("--alpha", type=float, default=2.0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("chain", parents=[common], help="schedule, inequalities, chain DP and bounds")
    p.add_argument("--kbar", type=float, required=True)
    p.add_argument("--delta", type=float, default=DEFAULT_DELTA_EXP, help="delta exponent in (0, 1/120]")
    p.add_argument("--geom-delta", type=float, default=None, help="use this spacing instead of the schedule's")
    p.add_argument("--alpha", type=float, default=None, help="override alpha = delta * log kbar")
    p.add_argument("--steps", type=int, default=None, help="step budget (default kbar)")
    p.add_argument("--dp", action="store_true")
    p.add_argument("--mc", type=int, default=0, metavar="N")
    p.add_argument("--check-ineq", action="store_true")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("experiment", parents=[common], help="batched trials, CSV + summary per k")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--k", type=int, nargs="+")
    g.add_argument("--k-range", type=int, nargs=2, metavar=("LO", "HI"))
    geometry(p)
    p.add_argument("--alpha", type=float, default=None, help="override alpha = delta_exp * log k")
    p.add_argument("--trials", type=int, default=1000)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("report", parents=[common], help="merge summaries into one CSV sorted by k")
    p.add_argument("inputs", nargs="+")
    p.set_defaults(func=cmd_report)
    return ap


def parse_args(argv=None) -> argparse.Namespace:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        # config supplies defaults; anything given on the command line wins
        cfg = {k.replace("-", "_"): v for k, v in _load_json(args.config).items()}
        sub = ap._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**cfg)
        args = ap.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 5
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except KmppError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
