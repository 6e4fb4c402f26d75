"""Command line interface.

Subcommands: solve (enumerate credal-set vertices per exogenous variable),
bound (turn the vertices into a query interval), oracle-check (compare the
enumeration interval against the exact LP optimum), and experiment (the
seeded multi-instance harness).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .evidence import load_evidence
from .experiment import ExperimentConfig, rewrite_regime, run_experiment
from .model import build_canonical_markovian, extract_domain, load_model
from .oracle import InfeasibleSystemError, oracle_interval
from .queries import NotComputableError, bound_query, parse_query
from .search import SearchConfig, _regime_systems, solve_credal
from .systems import dump_system_csv
from .transforms import build_state_mapping, dump_state_mapping_csv

ORACLE_TOL = 1e-7


def _search_config(args: argparse.Namespace) -> SearchConfig:
    lowprob = getattr(args, "lowprob", None)
    kwargs = dict(mode=args.mode)
    if getattr(args, "coverage", False):
        kwargs["coverage"] = True
    if lowprob:
        try:
            k, cap = (int(s) for s in lowprob.split(","))
        except ValueError:
            raise SystemExit(f"--lowprob expects k,cap (got {lowprob!r})")
        kwargs.update(
            low_probability=True,
            low_probability_rows=k,
            low_probability_budget=cap,
        )
    return SearchConfig(**kwargs)


def _load_pair(args: argparse.Namespace):
    model = load_model(args.model)
    evidence = load_evidence(args.evidence, model)
    return model, evidence


def _solved_for(args: argparse.Namespace):
    model, evidence = _load_pair(args)
    solved_model, solved_evidence, inner, spec = rewrite_regime(
        model, evidence, args.regime
    )
    config = _search_config(args)
    solutions = solve_credal(solved_model, solved_evidence, inner, config, args.jobs)
    return model, solved_model, solved_evidence, inner, spec, solutions


def _cmd_solve(args: argparse.Namespace) -> int:
    model, solved_model, solved_evidence, inner, spec, solutions = _solved_for(args)
    doc = {
        "regime": args.regime,
        "mode": args.mode,
        "exogenous": {
            eid: {
                "complete": sol.complete,
                "n_points": sol.n_points,
                "points": [[float(v) for v in p.probabilities] for p in sol.points],
            }
            for eid, sol in solutions.items()
        },
    }
    if spec is not None:
        doc["merged_variable"] = spec.merged_variable_id
        doc["merged_exogenous"] = spec.merged_exogenous_id
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")

    if args.mapping_csv:
        if spec is None:
            raise SystemExit("--mapping-csv requires --regime mm-o")
        semi_domain = extract_domain(model, spec.exogenous_id)
        merged_domain = build_canonical_markovian(spec.merged_variable_id, solved_model)
        mapping = build_state_mapping(semi_domain, merged_domain)
        dump_state_mapping_csv(mapping, args.mapping_csv)
    if args.dump_systems:
        out_dir = Path(args.dump_systems)
        out_dir.mkdir(parents=True, exist_ok=True)
        for eid, system in _regime_systems(solved_model, solved_evidence, inner).items():
            dump_system_csv(system, out_dir / f"{eid}.csv")
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    model, solved_model, _, _, spec, solutions = _solved_for(args)
    query = parse_query(args.query)
    doc = {
        "query": args.query,
        "regime": args.regime,
        "complete": all(s.complete for s in solutions.values()),
        "n_vertices": {eid: s.n_points for eid, s in solutions.items()},
    }
    empty = [eid for eid, s in solutions.items() if s.n_points == 0]
    if empty:
        doc["status"] = "infeasible"
    else:
        try:
            interval = bound_query(solutions, solved_model, query)
            doc["status"] = "ok"
            doc["lower"] = interval.lower
            doc["upper"] = interval.upper
        except NotComputableError as exc:
            doc["status"] = "not_computable"
            doc["reason"] = str(exc)
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(json.dumps(doc))
    return 0


def _cmd_oracle_check(args: argparse.Namespace) -> int:
    model, evidence = _load_pair(args)
    solved_model, solved_evidence, inner, _ = rewrite_regime(
        model, evidence, args.regime
    )
    query = parse_query(args.query)
    config = _search_config(args)
    try:
        solutions = solve_credal(solved_model, solved_evidence, inner, config, args.jobs)
        enumerated = bound_query(solutions, solved_model, query)
        exact = oracle_interval(solved_model, solved_evidence, inner, query, config)
    except (NotComputableError, InfeasibleSystemError, ValueError) as exc:
        print(f"oracle-check: {exc}")
        return 2
    gap = max(
        abs(enumerated.lower - exact.lower), abs(enumerated.upper - exact.upper)
    )
    ok = gap <= ORACLE_TOL
    print(f"enumeration: [{enumerated.lower:.12f}, {enumerated.upper:.12f}]")
    print(f"exact lp:    [{exact.lower:.12f}, {exact.upper:.12f}]")
    print(f"max endpoint gap {gap:.3e} -> {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def _cmd_experiment(args: argparse.Namespace) -> int:
    config = ExperimentConfig(
        n_models=args.n,
        seed=args.seed,
        regimes=tuple(s.strip() for s in args.regimes.split(",") if s.strip()),
        queries=tuple(s.strip() for s in args.queries.split(",") if s.strip()),
        output_path=args.out,
        raw_tables=args.raw_tables,
        mode=args.mode,
        jobs=args.jobs,
    )
    paths = run_experiment(config)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def _add_common_solve_args(p: argparse.ArgumentParser, with_regimes: str) -> None:
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--evidence", required=True, help="evidence JSON file")
    p.add_argument("--regime", required=True, help=f"evidence regime: {with_regimes}")
    p.add_argument(
        "--mode",
        default="exhaustive",
        choices=("exhaustive", "heuristic"),
        help="support iteration: every support, or group-pruned with optional heuristics",
    )
    p.add_argument("--coverage", action="store_true", help="enable the coverage heuristic (heuristic mode)")
    p.add_argument("--lowprob", default=None, metavar="K,CAP", help="cap columns on the K smallest-probability rows (heuristic mode)")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for the support search")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="cfbounds",
        description="Bound counterfactual probabilities by credal-set vertex enumeration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="enumerate credal-set vertices per exogenous variable")
    _add_common_solve_args(p_solve, "s-o|s-oe|s-e|markov|mm-o|ms-o")
    p_solve.add_argument("--out", required=True, help="output JSON path")
    p_solve.add_argument("--mapping-csv", default=None, help="write the merged-state correspondence CSV (mm-o only)")
    p_solve.add_argument("--dump-systems", default=None, metavar="DIR", help="also write each constraint system as CSV")
    p_solve.set_defaults(func=_cmd_solve)

    p_bound = sub.add_parser("bound", help="aggregate vertices into a query interval")
    _add_common_solve_args(p_bound, "s-o|s-oe|s-e|markov|mm-o|ms-o")
    p_bound.add_argument("--query", required=True, help="pns:<cause>:<effect>[:x,x',y,y']")
    p_bound.add_argument("--out", required=True, help="output JSON path")
    p_bound.set_defaults(func=_cmd_bound)

    p_oracle = sub.add_parser("oracle-check", help="compare enumerated interval against the exact LP")
    _add_common_solve_args(p_oracle, "s-o|s-oe|s-e|markov|mm-o|ms-o")
    p_oracle.add_argument("--query", required=True, help="pns:<cause>:<effect>[:x,x',y,y']")
    p_oracle.set_defaults(func=_cmd_oracle_check)

    p_exp = sub.add_parser("experiment", help="run the seeded multi-instance harness")
    p_exp.add_argument("--n", type=int, default=500, help="number of instances")
    p_exp.add_argument("--seed", type=int, default=7, help="root seed")
    p_exp.add_argument("--regimes", default=",".join(("s-o", "s-oe", "s-e", "mm-o", "ms-o")))
    p_exp.add_argument("--queries", default="pns:X:Y1,pns:X:Y2,pns:Y1:Y2")
    p_exp.add_argument("--out", default="results", help="output directory")
    p_exp.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_exp.add_argument("--raw-tables", action="store_true", help="draw conditional tables directly instead of a consistent true model")
    p_exp.add_argument("--mode", default="exhaustive", choices=("exhaustive", "heuristic"))
    p_exp.set_defaults(func=_cmd_experiment)

    args = parser.parse_args(argv)
    return int(args.func(args))


if __name__ == "__main__":
    sys.exit(main())
