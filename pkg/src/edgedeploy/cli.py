"""Command-line front end.

Exit status: 0 success, 2 usage error, 3 validation error, 4 runtime or
oracle-guard error. Output files go to ``--out``, defaulting to
``$EDGEDEPLOY_OUT`` or the current directory.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .catalog import (DEFAULT_EDGE, PROFILE_FIELDS, REFERENCE_RANGES, CostWeights, EdgeConfig, Scenario,
                      ScenarioError, load_scenario, sample_catalog, scenario_to_dict)
from .engine import POLICIES, compare, run, summary_rows, write_slot_csv, write_summary_json
from .solvers import (BRUTE_FORCE_MAX_M, GaParams, OracleGuardError, SolverError, brute_force_decide,
                      ga_decide, sample_context)
from .workload import (derive_rng, derive_seed, generate_trace, load_trace, trace_json, uniform_rates,
                       zipf_rates)

log = logging.getLogger("edgedeploy")

EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4
SWEEP_AXES = ("storage_gb", "gpu_gb", "t_slots", "total_rate")
GAP_EPS = 1e-9


class UsageError(Exception):
    pass


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _csv_list(conv):
    def parse(text):
        return [conv(x) for x in text.split(",") if x.strip()]
    return parse


def _range_override(text):
    name, _, span = text.partition("=")
    lo, _, hi = span.partition(":")
    if name not in PROFILE_FIELDS or not lo or not hi:
        raise argparse.ArgumentTypeError(f"expected FIELD=LO:HI with FIELD in {PROFILE_FIELDS}")
    return name, (float(lo), float(hi))


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get("EDGEDEPLOY_OUT", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_edge_flags(p, defaults=True):
    d = DEFAULT_EDGE if defaults else {k: None for k in DEFAULT_EDGE}
    p.add_argument("--storage", type=float, default=d["storage_gb"], help="storage capacity C (GB)")
    p.add_argument("--gpu", type=float, default=d["gpu_gb"], help="GPU memory G (GB)")
    p.add_argument("--energy", type=float, default=d["energy_kw"], help="power budget E (kW)")
    p.add_argument("--static", type=float, default=d["static_kw"], help="static power (kW)")
    p.add_argument("--bandwidth", type=float, default=d["bandwidth_gbps"], help="cloud-edge rate B (Gbps)")


def _add_weight_flags(p):
    p.add_argument("--w", type=float, default=None, help="GPU-vs-storage resource weight")
    p.add_argument("--mu-l", type=float, default=None, help="switching-cost weight")
    p.add_argument("--mu-r", type=float, default=None, help="resource-cost weight")


def _add_ga_flags(p):
    d = GaParams()
    p.add_argument("--population", type=int, default=d.population_k)
    p.add_argument("--generations", type=int, default=d.max_generations_n)
    p.add_argument("--p1", type=float, default=d.crossover_p1, help="crossover probability")
    p.add_argument("--p2", type=float, default=d.mutation_p2, help="per-gene mutation probability")
    p.add_argument("--patience", type=int, default=d.patience)
    p.add_argument("--ga-seed", type=int, default=d.seed)


def _add_workload_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--zipf", type=float, default=None, metavar="S", help="Zipf popularity exponent")
    g.add_argument("--uniform", action="store_true", help="same rate for every model")
    g.add_argument("--rates", type=_csv_list(float), default=None, help="explicit per-model rates")
    p.add_argument("--total-rate", type=float, default=5.0, help="expected requests per slot, all models")


def _ga_params(args) -> GaParams:
    return GaParams(args.population, args.generations, args.p1, args.p2, args.patience, args.ga_seed)


def _edge_overrides(args) -> dict:
    pairs = dict(storage_gb=args.storage, gpu_gb=args.gpu, energy_kw=args.energy,
                 static_kw=args.static, bandwidth_gbps=args.bandwidth)
    return {k: v for k, v in pairs.items() if v is not None}


def _weight_overrides(args) -> dict:
    pairs = dict(w=args.w, mu_l=args.mu_l, mu_r=args.mu_r)
    return {k: v for k, v in pairs.items() if v is not None}


def _rates(args, m: int, scenario: Scenario | None = None, total_rate: float | None = None):
    total = args.total_rate if total_rate is None else total_rate
    if args.rates is not None:
        if len(args.rates) != m:
            raise UsageError(f"--rates needs {m} values, got {len(args.rates)}")
        return tuple(args.rates)
    if args.uniform:
        return uniform_rates(m, total)
    if args.zipf is not None:
        return zipf_rates(m, total, args.zipf)
    if scenario is not None and scenario.arrival_rates is not None and total_rate is None:
        return scenario.arrival_rates
    return zipf_rates(m, total, 1.0)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _print_table(rows: list[dict], columns: list[str]) -> None:
    widths = [max(len(c), *(len(_fmt(r[c])) for r in rows)) for c in columns]
    print("  ".join(c.ljust(w) for c, w in zip(columns, widths)))
    for r in rows:
        print("  ".join(_fmt(r[c]).ljust(w) for c, w in zip(columns, widths)))


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


# -- gen ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    ranges = dict(REFERENCE_RANGES)
    ranges.update(dict(args.range or []))
    catalog = sample_catalog(args.models, ranges, derive_seed(args.seed, 0))
    edge = EdgeConfig(**_edge_overrides(args))
    weights = CostWeights(**_weight_overrides(args))
    rates = _rates(args, args.models)
    scenario = Scenario(catalog, edge, weights, rates, args.slot_s)
    trace = generate_trace(rates, args.slots, derive_seed(args.seed, 1))

    out = _out_dir(args)
    scenario_bytes = _dump(scenario_to_dict(scenario)).encode()
    trace_bytes = trace_json(trace).encode()
    (out / f"{args.prefix}scenario.json").write_bytes(scenario_bytes)
    (out / f"{args.prefix}trace.json").write_bytes(trace_bytes)
    digest = hashlib.sha256(scenario_bytes + trace_bytes).hexdigest()
    print(f"scenario  {out / f'{args.prefix}scenario.json'}")
    print(f"trace     {out / f'{args.prefix}trace.json'}  ({trace.t_slots} slots, {trace.n_requests} requests)")
    print(f"digest    {digest}")
    return 0


# -- run ---------------------------------------------------------------------

def _load_inputs(args):
    out = _out_dir(args)
    scenario_path = Path(args.scenario or out / "scenario.json")
    trace_path = Path(args.trace or out / "trace.json")
    for p in (scenario_path, trace_path):
        if not p.exists():
            raise FileNotFoundError(f"missing input file {p}")
    scenario = load_scenario(scenario_path).replace(**_edge_overrides(args), **_weight_overrides(args))
    return scenario, load_trace(trace_path), out


def cmd_run(args) -> int:
    scenario, trace, out = _load_inputs(args)
    runs = compare(scenario, trace, args.policies, _ga_params(args), args.seed,
                   beta_mode=args.beta_mode, force_admit_missed=args.force_admit_missed)
    csv_path = write_slot_csv(runs, out / f"{args.prefix}slots.csv")
    json_path = write_summary_json(runs, out / f"{args.prefix}summary.json")
    rows = summary_rows(runs)
    if args.json:
        print(_dump(rows), end="")
    else:
        _print_table(rows, ["policy", "avg_cost", "miss_rate", "avg_service_delay_s", "evictions", "admissions"])
        print(f"wrote {csv_path} and {json_path}")
    return 0


# -- sweep -------------------------------------------------------------------

def _sweep_point(task):
    scenario, rates, t_slots, trace_seed, policy, params, run_seed, beta_mode, force = task
    trace = generate_trace(rates, t_slots, trace_seed)
    return run(scenario, trace, policy, params, run_seed, beta_mode=beta_mode, force_admit_missed=force).metrics


def cmd_sweep(args) -> int:
    values = args.values
    if not values:
        raise UsageError("--values must not be empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise UsageError("--values must be strictly increasing")
    if args.axis == "t_slots" and any(v != int(v) or v < 1 for v in values):
        raise UsageError("t_slots values must be positive integers")

    if args.scenario:
        base = load_scenario(args.scenario)
    else:
        base = Scenario(sample_catalog(args.models, seed=derive_seed(args.seed, 0)), EdgeConfig(**DEFAULT_EDGE))
    base = base.replace(**_edge_overrides(args), **_weight_overrides(args))
    m = len(base.catalog)
    params = _ga_params(args)

    tasks, keys = [], []
    for v in values:
        scenario, t_slots, total = base, args.slots, None
        if args.axis in ("storage_gb", "gpu_gb"):
            scenario = base.replace(**{args.axis: v})
        elif args.axis == "t_slots":
            t_slots = int(v)
        else:
            total = v
        rates = _rates(args, m, base, total)
        for rep in range(args.repeats):
            seed = derive_seed(args.seed, 2, rep)
            for policy in args.policies:
                tasks.append((scenario, rates, t_slots, seed, policy, params, seed, args.beta_mode,
                              args.force_admit_missed))
                keys.append((v, policy, seed))

    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            metrics = list(pool.map(_sweep_point, tasks))
    else:
        metrics = [_sweep_point(t) for t in tasks]

    rows = [
        {"axis": args.axis, "value": v, "policy": p, "seed": s, "avg_cost": r.avg_cost,
         "miss_rate": r.miss_rate, "avg_service_delay_s": r.avg_service_delay_s}
        for (v, p, s), r in zip(keys, metrics)
    ]
    rows.sort(key=lambda r: (r["value"], r["policy"], r["seed"]))
    agg = aggregate_sweep(rows)

    out = _out_dir(args)
    raw_path = _write_csv(rows, out / f"{args.prefix}sweep_{args.axis}.csv")
    agg_path = _write_csv(agg, out / f"{args.prefix}sweep_{args.axis}_agg.csv")
    if args.json:
        print(_dump({"rows": rows, "aggregate": agg}), end="")
    else:
        _print_table(agg, ["value", "policy", "n", "avg_cost_mean", "avg_cost_std", "miss_rate_mean"])
        print(f"wrote {raw_path} and {agg_path}")
    return 0


def aggregate_sweep(rows: list[dict]) -> list[dict]:
    """Mean and sample standard deviation per (value, policy)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        groups.setdefault((r["value"], r["policy"]), []).append(r)
    out = []
    for (v, p), grp in sorted(groups.items()):
        row = {"axis": grp[0]["axis"], "value": v, "policy": p, "n": len(grp)}
        for metric in ("avg_cost", "miss_rate", "avg_service_delay_s"):
            x = np.array([g[metric] for g in grp])
            row[f"{metric}_mean"] = float(x.mean())
            row[f"{metric}_std"] = float(x.std(ddof=1)) if len(x) > 1 else 0.0
        out.append(row)
    return out


def _write_csv(rows: list[dict], path: Path) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    return path


# -- oracle-gap ----------------------------------------------------------------

def oracle_gaps(scenario: Scenario, contexts: int, seed: int, params: GaParams,
                prev=None, beta=None) -> list[dict]:
    """GA versus exhaustive optimum on random decision contexts."""
    rows = []
    for i in range(contexts):
        rng = derive_rng(seed, 3, i)
        ctx = sample_context(rng, scenario.catalog, scenario.edge, scenario.weights, a_prev=prev, beta=beta)
        _, brute = brute_force_decide(ctx)
        _, ga, gens = ga_decide(ctx, GaParams(**{**params.__dict__, "seed": derive_seed(params.seed, i)}))
        rows.append({"context": i, "brute_total": brute.total, "ga_total": ga.total,
                     "gap": (ga.total - brute.total) / max(brute.total, GAP_EPS), "generations": gens})
    return rows


def cmd_oracle_gap(args) -> int:
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        scenario = Scenario(sample_catalog(args.models, seed=derive_seed(args.seed, 0)), EdgeConfig(**DEFAULT_EDGE))
    scenario = scenario.replace(**_edge_overrides(args), **_weight_overrides(args))
    if len(scenario.catalog) > BRUTE_FORCE_MAX_M:
        raise OracleGuardError(f"oracle gap limited to {BRUTE_FORCE_MAX_M} models")
    prev = None
    if args.prev is not None:
        prev = [int(c) for c in args.prev]
    rows = oracle_gaps(scenario, args.contexts, args.seed, _ga_params(args), prev, args.beta)

    gaps = np.array([r["gap"] for r in rows])
    summary = {
        "contexts": len(rows),
        "threshold": args.threshold,
        "frac_within_threshold": float((gaps <= args.threshold).mean()),
        "min_gap": float(gaps.min()),
        "median_gap": float(np.median(gaps)),
        "p95_gap": float(np.quantile(gaps, 0.95)),
        "max_gap": float(gaps.max()),
    }
    out = _out_dir(args)
    path = _write_csv(rows, out / f"{args.prefix}oracle_gap.csv")
    if args.json:
        print(_dump({"summary": summary, "rows": rows}), end="")
    else:
        for k, v in summary.items():
            print(f"{k:24s}{_fmt(v)}")
        print(f"wrote {path}")
    return 0


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edgedeploy", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--prefix", default="", help="prefix for output file names")
        p.add_argument("--seed", type=int, default=0, help="master seed")
        p.add_argument("--json", action="store_true", help="print JSON instead of a table")

    p = sub.add_parser("gen", help="sample a scenario and a request trace")
    common(p)
    p.add_argument("--models", type=_positive_int, default=10)
    p.add_argument("--table1-ranges", "--reference-ranges", dest="reference_ranges", action="store_true",
                   help="sample profiles from the reference ranges (the default)")
    p.add_argument("--range", type=_range_override, action="append", help="override one range: FIELD=LO:HI")
    p.add_argument("--slots", type=_positive_int, default=100)
    p.add_argument("--slot-s", type=float, default=None, help="slot length in seconds (metadata only)")
    _add_workload_flags(p)
    _add_edge_flags(p)
    _add_weight_flags(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="compare policies on a scenario and trace")
    common(p)
    p.add_argument("--scenario", default=None)
    p.add_argument("--trace", default=None)
    p.add_argument("--policies", type=_csv_list(str), default=list(POLICIES))
    p.add_argument("--beta-mode", choices=("estimated", "oracle"), default="estimated")
    p.add_argument("--force-admit-missed", action="store_true")
    _add_edge_flags(p, defaults=False)
    _add_weight_flags(p)
    _add_ga_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one axis and aggregate over seeds")
    common(p)
    p.add_argument("--axis", choices=SWEEP_AXES, required=True)
    p.add_argument("--values", type=_csv_list(float), required=True)
    p.add_argument("--repeats", type=_positive_int, default=3)
    p.add_argument("--policies", type=_csv_list(str), default=["ga", "rand", "fifo", "lru", "lfu"])
    p.add_argument("--scenario", default=None, help="base scenario; sampled when omitted")
    p.add_argument("--models", type=_positive_int, default=10)
    p.add_argument("--slots", type=_positive_int, default=100)
    p.add_argument("--beta-mode", choices=("estimated", "oracle"), default="estimated")
    p.add_argument("--force-admit-missed", action="store_true")
    p.add_argument("--jobs", type=_positive_int, default=1)
    _add_workload_flags(p)
    _add_edge_flags(p, defaults=False)
    _add_weight_flags(p)
    _add_ga_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-gap", help="GA versus exhaustive search on random decision contexts")
    common(p)
    p.add_argument("--scenario", default=None)
    p.add_argument("--models", type=_positive_int, default=10)
    p.add_argument("--contexts", type=_positive_int, default=200)
    p.add_argument("--threshold", type=float, default=0.02)
    p.add_argument("--prev", default=None, help="pin the incumbent decision, e.g. 11")
    p.add_argument("--beta", type=_csv_list(float), default=None, help="pin the active cycles")
    _add_edge_flags(p, defaults=False)
    _add_weight_flags(p)
    _add_ga_flags(p)
    p.set_defaults(func=cmd_oracle_gap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "policies", None):
        bad = [p for p in args.policies if p not in POLICIES]
        if bad:
            parser.error(f"unknown policies {bad}; choose from {POLICIES}")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, ValueError) as e:
        print(f"validation error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OracleGuardError, SolverError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
