"""Desk-scale experiment harness over the binary confounded chain.

Each instance samples a fully specified chain model X -> Y1 -> Y2 with a
shared confounder behind Y1 and Y2, derives observational and experimental
evidence exactly from it (so every regime is jointly consistent by
construction), solves the chosen regimes, bounds the chosen queries, and
writes per-row results plus summary tables as CSV. A --raw-tables variant
draws the conditional tables directly instead, which can make the combined
regime infeasible; those rows are recorded and the run continues.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .evidence import Evidence, ObservationalTable, ExperimentalTable, derive_evidence_from_model
from .model import (
    PartialSCM,
    StructuralEquation,
    Variable,
    canonical_table,
    chain_tables,
)
from .queries import NotComputableError, bound_query, parse_query
from .search import SearchConfig, SolutionSet, solve_credal
from .transforms import (
    MergeSpec,
    endogenous_merge,
    exogenous_split,
    merged_evidence,
    split_evidence,
)

DEFAULT_REGIMES = ("s-o", "s-oe", "s-e", "mm-o", "ms-o")
DEFAULT_QUERIES = ("pns:X:Y1", "pns:X:Y2", "pns:Y1:Y2")
CONTAINMENT_TOL = 1e-9

RMSE_HEADER_COMMENT = (
    "# rmse per (instance, method, query): "
    "sqrt(((lower_method-lower_s-o)^2 + (upper_method-upper_s-o)^2) / 2)"
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Run shape: how many seeded instances, which regimes and queries, where
    the CSVs go, and how the per-variable searches run."""

    n_models: int = 500
    seed: int = 7
    regimes: tuple[str, ...] = DEFAULT_REGIMES
    queries: tuple[str, ...] = DEFAULT_QUERIES
    output_path: str = "results"
    raw_tables: bool = False
    mode: str = "exhaustive"
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_models < 1:
            raise ValueError("n_models must be at least 1")
        if not self.queries:
            raise ValueError("queries must be nonempty")
        object.__setattr__(self, "regimes", tuple(r.lower() for r in self.regimes))
        object.__setattr__(self, "queries", tuple(self.queries))
        for q in self.queries:
            parse_query(q)


@dataclass(frozen=True)
class ExperimentRow:
    """One (instance, regime, query) outcome. status is "ok",
    "not_computable" (query undefined under the regime's model rewrite) or
    "infeasible" (no distribution satisfies the evidence)."""

    model_index: int
    regime: str
    query: str
    status: str
    lower: float | None
    upper: float | None
    wallclock_ms: float
    n_vertices: int
    complete: bool

    @property
    def length(self) -> float | None:
        if self.lower is None or self.upper is None:
            return None
        return self.upper - self.lower


@dataclass(frozen=True)
class RegimeSolution:
    """What a regime solve produced: the solution sets, the model they are
    expressed over (a rewritten one for the approximation regimes), and the
    merge bookkeeping when applicable."""

    solutions: dict[str, SolutionSet]
    model: PartialSCM
    merge_spec: MergeSpec | None = None


# ---------------------------------------------------------------------------
# instance generation
# ---------------------------------------------------------------------------


def chain_model() -> PartialSCM:
    """The binary confounded chain skeleton: X -> Y1 -> Y2, with a 2-state
    exogenous parent for X and one 16-state confounder behind Y1 and Y2."""
    t1, t2 = chain_tables((2,), 2, 2)
    return PartialSCM(
        variables=(
            Variable("X", "endogenous", 2),
            Variable("Y1", "endogenous", 2),
            Variable("Y2", "endogenous", 2),
            Variable("U_0", "exogenous", 2),
            Variable("U", "exogenous", 16),
        ),
        equations=(
            StructuralEquation("X", ("U_0",), canonical_table((), 2)),
            StructuralEquation("Y1", ("X", "U"), t1),
            StructuralEquation("Y2", ("Y1", "U"), t2),
        ),
    )


def sample_true_model(seed) -> PartialSCM:
    """A fully specified chain instance with flat-Dirichlet priors (the
    2-state prior is drawn first, then the 16-state one)."""
    rng = np.random.default_rng(seed)
    px = rng.dirichlet(np.ones(2))
    pu = rng.dirichlet(np.ones(16))
    skeleton = chain_model()
    return PartialSCM(
        skeleton.variables,
        skeleton.equations,
        {"U_0": tuple(float(v) for v in px), "U": tuple(float(v) for v in pu)},
    )


def generate_instance(seed, raw_tables: bool = False) -> tuple[PartialSCM, Evidence]:
    """One experiment instance.

    Default: sample a true model and derive all evidence tables from it
    exactly, so observational and experimental regimes are consistent with
    a common witness. raw_tables=True instead draws each conditional table
    independently (P(X), P(Y1,Y2|X), P(Y1|do X), P(Y2|do Y1), in that
    order); the returned model is then the bare skeleton.
    """
    if not raw_tables:
        true_model = sample_true_model(seed)
        evidence = derive_evidence_from_model(
            true_model,
            observational=[(("Y1", "Y2"), ("X",)), (("X",), ())],
            experimental=[("Y1", "X"), ("Y2", "Y1")],
        )
        return true_model, evidence

    rng = np.random.default_rng(seed)
    px = rng.dirichlet(np.ones(2))
    joint = np.stack([rng.dirichlet(np.ones(4)).reshape(2, 2) for _ in range(2)], axis=-1)
    do_x = np.stack([rng.dirichlet(np.ones(2)) for _ in range(2)], axis=-1)
    do_y1 = np.stack([rng.dirichlet(np.ones(2)) for _ in range(2)], axis=-1)
    evidence = Evidence(
        observational=(
            ObservationalTable(("Y1", "Y2"), ("X",), joint),
            ObservationalTable(("X",), (), px),
        ),
        experimental=(
            ExperimentalTable("Y1", "X", do_x),
            ExperimentalTable("Y2", "Y1", do_y1),
        ),
    )
    return chain_model(), evidence


# ---------------------------------------------------------------------------
# regime dispatch
# ---------------------------------------------------------------------------


def _confounder_id(model: PartialSCM) -> str:
    shared = [
        v.id for v in model.exogenous() if len(model.children_of(v.id)) >= 2
    ]
    if len(shared) != 1:
        raise ValueError(
            f"expected exactly one confounded exogenous variable, found {shared}"
        )
    return shared[0]


def rewrite_regime(
    model: PartialSCM, evidence: Evidence, regime: str
) -> tuple[PartialSCM, Evidence, str, MergeSpec | None]:
    """Map an approximation regime onto the model and evidence it actually
    solves: mm-o merges the confounded children and ms-o splits the
    confounder, both continuing as plain Markovian solves; the s-* regimes
    pass through unchanged."""
    regime = regime.lower()
    if regime in ("s-o", "s-oe", "s-e", "markov"):
        return model, evidence, regime, None
    if regime == "mm-o":
        merged, spec = endogenous_merge(model, _confounder_id(model))
        return merged, merged_evidence(evidence, spec), "markov", spec
    if regime == "ms-o":
        exo = _confounder_id(model)
        return exogenous_split(model, exo), split_evidence(evidence, model, exo), "markov", None
    raise ValueError(f"unknown regime {regime!r}")


def solve_regime(
    model: PartialSCM,
    evidence: Evidence,
    regime: str,
    config: SearchConfig | None = None,
    n_workers: int = 1,
) -> RegimeSolution:
    """Solve one evidence regime, applying the model rewrite for the two
    approximation regimes (mm-o merges the confounded children, ms-o splits
    the confounder)."""
    config = config or SearchConfig()
    solved_model, solved_evidence, inner, spec = rewrite_regime(model, evidence, regime)
    return RegimeSolution(
        solve_credal(solved_model, solved_evidence, inner, config, n_workers),
        solved_model,
        spec,
    )


# ---------------------------------------------------------------------------
# per-instance work
# ---------------------------------------------------------------------------


def _instance_rows(
    index: int, config: ExperimentConfig
) -> list[ExperimentRow]:
    model, evidence = generate_instance([config.seed, index], config.raw_tables)
    search = SearchConfig(mode=config.mode)
    rows: list[ExperimentRow] = []
    for regime in config.regimes:
        t0 = time.perf_counter()
        try:
            solved = solve_regime(model, evidence, regime, search)
            solve_ms = (time.perf_counter() - t0) * 1000.0
            infeasible = any(s.n_points == 0 for s in solved.solutions.values())
        except Exception:
            solved = None
            solve_ms = (time.perf_counter() - t0) * 1000.0
            infeasible = True
        if solved is not None and not infeasible:
            n_vertices = int(
                np.prod([s.n_points for s in solved.solutions.values()])
            )
            complete = all(s.complete for s in solved.solutions.values())
        else:
            n_vertices = 0
            complete = False
        for qtext in config.queries:
            t1 = time.perf_counter()
            status = "ok"
            lower = upper = None
            if infeasible:
                status = "infeasible"
            else:
                try:
                    interval = bound_query(
                        solved.solutions, solved.model, parse_query(qtext)
                    )
                    lower, upper = interval.lower, interval.upper
                except NotComputableError:
                    status = "not_computable"
            bound_ms = (time.perf_counter() - t1) * 1000.0
            rows.append(
                ExperimentRow(
                    model_index=index,
                    regime=regime,
                    query=qtext,
                    status=status,
                    lower=lower,
                    upper=upper,
                    wallclock_ms=solve_ms + bound_ms,
                    n_vertices=n_vertices,
                    complete=complete,
                )
            )
    return rows


def _instance_worker(args: tuple[int, ExperimentConfig]) -> list[ExperimentRow]:
    return _instance_rows(*args)


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(x)
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def _containment_category(
    a: tuple[float, float], b: tuple[float, float], tol: float = CONTAINMENT_TOL
) -> str:
    equal = abs(a[0] - b[0]) <= tol and abs(a[1] - b[1]) <= tol
    if equal:
        return "equal"
    a_in_b = b[0] - tol <= a[0] and a[1] <= b[1] + tol
    b_in_a = a[0] - tol <= b[0] and b[1] <= a[1] + tol
    if a_in_b:
        return "a_in_b"
    if b_in_a:
        return "b_in_a"
    return "none"


def summarize_lengths(rows: Sequence[ExperimentRow]) -> list[dict]:
    seen_keys: list[tuple[str, str]] = []
    groups: dict[tuple[str, str], list[float]] = {}
    for r in rows:
        key = (r.regime, r.query)
        if key not in groups:
            groups[key] = []
            seen_keys.append(key)
        if r.status == "ok":
            groups[key].append(r.length)
    out = []
    for key in seen_keys:
        vals = groups[key]
        out.append(
            {
                "regime": key[0],
                "query": key[1],
                "n": len(vals),
                "mean_length": (sum(vals) / len(vals)) if vals else None,
            }
        )
    return out


def summarize_containment(
    rows: Sequence[ExperimentRow], regimes: Sequence[str]
) -> list[dict]:
    by_key: dict[tuple[int, str, str], ExperimentRow] = {
        (r.model_index, r.regime, r.query): r for r in rows
    }
    queries: list[str] = []
    indices: list[int] = []
    for r in rows:
        if r.query not in queries:
            queries.append(r.query)
        if r.model_index not in indices:
            indices.append(r.model_index)
    out = []
    for i, ra in enumerate(regimes):
        for rb in regimes[i + 1 :]:
            for q in queries:
                counts = {"equal": 0, "a_in_b": 0, "b_in_a": 0, "none": 0}
                n = 0
                for idx in indices:
                    a = by_key.get((idx, ra, q))
                    b = by_key.get((idx, rb, q))
                    if a is None or b is None or a.status != "ok" or b.status != "ok":
                        continue
                    n += 1
                    counts[
                        _containment_category((a.lower, a.upper), (b.lower, b.upper))
                    ] += 1
                pct = {
                    k: (100.0 * v / n) if n else None for k, v in counts.items()
                }
                out.append(
                    {
                        "regime_a": ra,
                        "regime_b": rb,
                        "query": q,
                        "n": n,
                        "pct_equal": pct["equal"],
                        "pct_a_in_b": pct["a_in_b"],
                        "pct_b_in_a": pct["b_in_a"],
                        "pct_none": pct["none"],
                    }
                )
    return out


def summarize_rmse(rows: Sequence[ExperimentRow]) -> list[dict]:
    """Endpoint RMSE of each approximation regime against s-o, one row per
    (instance, method, query) where both intervals exist."""
    by_key = {(r.model_index, r.regime, r.query): r for r in rows}
    methods = []
    for r in rows:
        if r.regime in ("mm-o", "ms-o") and r.regime not in methods:
            methods.append(r.regime)
    queries: list[str] = []
    indices: list[int] = []
    for r in rows:
        if r.query not in queries:
            queries.append(r.query)
        if r.model_index not in indices:
            indices.append(r.model_index)
    out = []
    for idx in indices:
        for method in methods:
            for q in queries:
                truth = by_key.get((idx, "s-o", q))
                approx = by_key.get((idx, method, q))
                if (
                    truth is None
                    or approx is None
                    or truth.status != "ok"
                    or approx.status != "ok"
                ):
                    continue
                rmse = math.sqrt(
                    (
                        (approx.lower - truth.lower) ** 2
                        + (approx.upper - truth.upper) ** 2
                    )
                    / 2.0
                )
                out.append(
                    {
                        "model_index": idx,
                        "method": method,
                        "query": q,
                        "rmse": rmse,
                    }
                )
    return out


# ---------------------------------------------------------------------------
# run + write
# ---------------------------------------------------------------------------


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence], comment: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if comment:
            fh.write(comment + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def run_experiment(config: ExperimentConfig) -> dict[str, Path]:
    """Run every instance, write rows.csv and the three summary CSVs, and
    return the paths. Instance results are computed (possibly in parallel)
    and always written in instance order."""
    out_dir = Path(config.output_path)
    out_dir.mkdir(parents=True, exist_ok=True)

    tasks = [(i, config) for i in range(config.n_models)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            per_instance = list(pool.map(_instance_worker, tasks, chunksize=4))
    else:
        per_instance = [_instance_worker(t) for t in tasks]
    rows = [r for chunk in per_instance for r in chunk]

    paths = {
        "rows": out_dir / "rows.csv",
        "lengths": out_dir / "summary_lengths.csv",
        "containment": out_dir / "summary_containment.csv",
        "rmse": out_dir / "summary_rmse.csv",
    }

    _write_csv(
        paths["rows"],
        [
            "model_index",
            "regime",
            "query",
            "status",
            "lower",
            "upper",
            "length",
            "wallclock_ms",
            "n_vertices",
            "complete",
        ],
        [
            (
                r.model_index,
                r.regime,
                r.query,
                r.status,
                r.lower,
                r.upper,
                r.length,
                round(r.wallclock_ms, 3),
                r.n_vertices,
                r.complete,
            )
            for r in rows
        ],
    )
    _write_csv(
        paths["lengths"],
        ["regime", "query", "n", "mean_length"],
        [
            (d["regime"], d["query"], d["n"], d["mean_length"])
            for d in summarize_lengths(rows)
        ],
    )
    _write_csv(
        paths["containment"],
        [
            "regime_a",
            "regime_b",
            "query",
            "n",
            "pct_equal",
            "pct_a_in_b",
            "pct_b_in_a",
            "pct_none",
        ],
        [
            (
                d["regime_a"],
                d["regime_b"],
                d["query"],
                d["n"],
                d["pct_equal"],
                d["pct_a_in_b"],
                d["pct_b_in_a"],
                d["pct_none"],
            )
            for d in summarize_containment(rows, config.regimes)
        ],
    )
    _write_csv(
        paths["rmse"],
        ["model_index", "method", "query", "rmse"],
        [
            (d["model_index"], d["method"], d["query"], d["rmse"])
            for d in summarize_rmse(rows)
        ],
        comment=RMSE_HEADER_COMMENT,
    )
    return paths
