"""Vertex enumeration for credal constraint systems.

Every vertex of the feasible polytope {A p = rhs, sum p = 1, p >= 0} is a
basic feasible solution, so iterating candidate supports of size equal to
the system rank and solving each reduced square system finds them all. The
search runs exhaustively over all supports or over a pruned stream that
skips supports containing two columns with identical coefficient vectors
(such columns are linearly dependent, so no full-rank support ever holds
both), optionally narrowed further by two heuristics.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .evidence import Evidence
from .model import PartialSCM, extract_domain
from .systems import (
    STATUS_OK,
    ConstraintSystem,
    ExtremePoint,
    build_markovian_system,
    build_semimarkovian_combined,
    build_semimarkovian_experimental,
    build_semimarkovian_observational,
    solve_supports_batch,
)

BATCH_SIZE = 4096


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the support iteration.

    mode "exhaustive" tries every support; "heuristic" uses the pruned
    stream. low_probability_rows is how many smallest-rhs rows are capped,
    low_probability_budget the per-row cap on selected columns.
    """

    mode: str = "exhaustive"
    support_size: int | None = None
    coverage: bool = False
    low_probability: bool = False
    low_probability_rows: int = 2
    low_probability_budget: int = 1
    max_solutions: int | None = None
    max_supports: int = 10_000_000
    seed: int = 0


@dataclass(frozen=True)
class SolutionSet:
    """Deduplicated vertex list for one exogenous variable. complete means
    the enumeration provably visited every vertex of the polytope."""

    exogenous_id: str
    points: tuple[ExtremePoint, ...]
    complete: bool

    @property
    def n_points(self) -> int:
        return len(self.points)


# ---------------------------------------------------------------------------
# support streams
# ---------------------------------------------------------------------------


def _colex_combinations(pool: Sequence[int], r: int) -> Iterator[tuple[int, ...]]:
    """Size-r combinations in colexicographic order of the sorted pool."""
    pool = sorted(pool)
    if r == 0:
        yield ()
        return
    if r > len(pool):
        return

    def rec(upper: int, k: int) -> Iterator[tuple[int, ...]]:
        if k == 0:
            yield ()
            return
        for last in range(k - 1, upper):
            for rest in rec(last, k - 1):
                yield rest + (pool[last],)

    yield from rec(len(pool), r)


def _grouped_supports(groups: Sequence[Sequence[int]], r: int) -> Iterator[tuple[int, ...]]:
    """Supports holding at most one column per group, one group choice at a
    time, in colex order over group positions."""
    for combo in _colex_combinations(range(len(groups)), r):
        members = [groups[g] for g in combo]
        for pick in itertools.product(*members):
            yield tuple(sorted(pick))


def _batches(stream: Iterator[tuple[int, ...]], limit: int) -> Iterator[tuple[np.ndarray, bool]]:
    """Chunk the stream; the flag on the last batch says the limit bit."""
    taken = 0
    while True:
        chunk = list(itertools.islice(stream, BATCH_SIZE))
        if not chunk:
            return
        taken += len(chunk)
        if taken > limit:
            keep = len(chunk) - (taken - limit)
            if keep > 0:
                yield np.asarray(chunk[:keep], dtype=np.intp), True
            else:
                yield np.zeros((0, 0), dtype=np.intp), True
            return
        yield np.asarray(chunk, dtype=np.intp), False


# ---------------------------------------------------------------------------
# heuristics
# ---------------------------------------------------------------------------


def _heuristic_mask(
    system: ConstraintSystem, supports: np.ndarray, config: SearchConfig
) -> np.ndarray:
    """True where a support survives the enabled heuristics."""
    keep = np.ones(len(supports), dtype=bool)
    if supports.size == 0:
        return keep
    sel = system.matrix[:, supports]  # (rows, m, r)
    counts = sel.sum(axis=2)  # selected columns hitting each row
    if config.coverage:
        keep &= (counts > 0).all(axis=0)
    if config.low_probability:
        k = min(config.low_probability_rows, system.n_rows)
        low_rows = np.argsort(system.rhs, kind="stable")[:k]
        keep &= (counts[low_rows] <= config.low_probability_budget).all(axis=0)
    return keep


# ---------------------------------------------------------------------------
# search drivers
# ---------------------------------------------------------------------------


def _drain(
    system: ConstraintSystem,
    stream: Iterator[tuple[int, ...]],
    config: SearchConfig,
    n_workers: int,
    filter_heuristics: bool,
) -> tuple[list[ExtremePoint], bool]:
    """Run the solve kernel over a support stream. Returns (points, truncated).

    Batches may be solved concurrently but results merge in stream order, so
    the outcome does not depend on the worker count.
    """
    truncated = False
    dedup: dict[bytes, ExtremePoint] = {}

    def solve_batch(batch: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if filter_heuristics:
            mask = _heuristic_mask(system, batch, config)
            batch = batch[mask]
        if batch.size == 0:
            return np.zeros((0, system.n_states)), np.zeros(0, dtype=np.int8)
        return solve_supports_batch(system, batch)

    def consume(points: np.ndarray, status: np.ndarray, hit_limit: bool) -> bool:
        """Merge one batch result; True means stop (solution budget hit)."""
        nonlocal truncated
        if hit_limit:
            truncated = True
        for i in np.flatnonzero(status == STATUS_OK):
            pt = ExtremePoint(system.exogenous_id, points[i])
            dedup.setdefault(pt.key(), pt)
            if config.max_solutions is not None and len(dedup) >= config.max_solutions:
                truncated = True
                return True
        return False

    batches = _batches(stream, config.max_supports)
    if n_workers <= 1:
        for batch, flag in batches:
            pts, status = solve_batch(batch)
            if consume(pts, status, flag):
                break
    else:
        # Batches are solved concurrently but results merge strictly in
        # stream order, so the vertex set and any truncation point match
        # the serial run.
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            window: list = []
            exhausted = False
            stop = False
            while not stop:
                while len(window) < 2 * n_workers and not exhausted:
                    try:
                        batch, flag = next(batches)
                    except StopIteration:
                        exhausted = True
                        break
                    window.append((pool.submit(solve_batch, batch), flag))
                if not window:
                    break
                future, flag = window.pop(0)
                pts, status = future.result()
                stop = consume(pts, status, flag)

    points = sorted(dedup.values(), key=lambda p: tuple(np.round(p.probabilities, 9)))
    if config.max_solutions is not None:
        points = points[: config.max_solutions]
    return points, truncated


def exhaustive_search(
    system: ConstraintSystem, config: SearchConfig | None = None, n_workers: int = 1
) -> SolutionSet:
    """Try every support of the target size; complete when the stream was not
    cut short by a budget."""
    config = config or SearchConfig()
    r = config.support_size if config.support_size is not None else system.rank
    if r > system.n_cols:
        raise ValueError(f"support size {r} exceeds {system.n_cols} columns")
    stream = _colex_combinations(range(system.n_cols), r)
    points, truncated = _drain(system, stream, config, n_workers, filter_heuristics=False)
    return SolutionSet(system.exogenous_id, tuple(points), complete=not truncated)


def group_indistinguishable(system: ConstraintSystem) -> list[tuple[int, ...]]:
    """Partition column positions by identical coefficient vectors, ordered
    by first occurrence."""
    seen: dict[bytes, list[int]] = {}
    for j in range(system.n_cols):
        seen.setdefault(system.matrix[:, j].tobytes(), []).append(j)
    return [tuple(v) for v in seen.values()]


def pruned_search(
    system: ConstraintSystem, config: SearchConfig | None = None, n_workers: int = 1
) -> SolutionSet:
    """Iterate only supports with at most one column per indistinguishability
    group, optionally filtered by the coverage and low-probability
    heuristics.

    Group pruning alone loses nothing: identical columns are linearly
    dependent, so every full-rank support already respects the groups. The
    result is therefore still complete unless a heuristic or budget was
    active.
    """
    config = config or SearchConfig()
    r = config.support_size if config.support_size is not None else system.rank
    if r > system.n_cols:
        raise ValueError(f"support size {r} exceeds {system.n_cols} columns")
    groups = group_indistinguishable(system)
    stream = _grouped_supports(groups, r) if r <= len(groups) else iter(())
    use_heuristics = config.coverage or config.low_probability
    points, truncated = _drain(system, stream, config, n_workers, filter_heuristics=use_heuristics)
    return SolutionSet(
        system.exogenous_id, tuple(points), complete=not truncated and not use_heuristics
    )


def run_search(
    system: ConstraintSystem, config: SearchConfig | None = None, n_workers: int = 1
) -> SolutionSet:
    config = config or SearchConfig()
    if config.mode == "exhaustive":
        return exhaustive_search(system, config, n_workers)
    if config.mode == "heuristic":
        return pruned_search(system, config, n_workers)
    raise ValueError(f"unknown search mode {config.mode!r}")


# ---------------------------------------------------------------------------
# regime dispatch
# ---------------------------------------------------------------------------

REGIME_OBSERVATIONAL = "s-o"
REGIME_COMBINED = "s-oe"
REGIME_EXPERIMENTAL = "s-e"
REGIME_MARKOVIAN = "markov"

_CHAIN_REGIMES = {REGIME_OBSERVATIONAL, REGIME_COMBINED, REGIME_EXPERIMENTAL}


def _empty_system(model: PartialSCM, exo_id: str) -> ConstraintSystem:
    """No evidence rows: only normalization constrains the variable, so the
    vertices are the unit point masses."""
    n = model.variable(exo_id).domain_size
    return ConstraintSystem(
        np.zeros((0, n), dtype=np.int8),
        np.zeros(0),
        (),
        tuple(range(n)),
        exo_id,
        n,
        (),
    )


def _regime_systems(
    model: PartialSCM, evidence: Evidence, regime: str
) -> dict[str, ConstraintSystem]:
    """One constraint system per exogenous variable under the given evidence
    regime."""
    regime = regime.lower()
    if regime == "markovian":
        regime = REGIME_MARKOVIAN
    if regime not in _CHAIN_REGIMES | {REGIME_MARKOVIAN}:
        raise ValueError(f"unknown regime {regime!r}")

    confounders = {
        v.id for v in model.exogenous() if len(model.children_of(v.id)) >= 2
    }
    if regime == REGIME_MARKOVIAN and confounders:
        raise ValueError(
            f"regime 'markov' needs one child per exogenous variable; "
            f"{sorted(confounders)[0]!r} has several"
        )
    if regime in _CHAIN_REGIMES and len(confounders) != 1:
        raise ValueError(
            f"regime {regime!r} expects exactly one confounded exogenous variable"
        )

    out: dict[str, ConstraintSystem] = {}
    for v in model.exogenous():
        if v.id in confounders:
            domain = extract_domain(model, v.id)
            if domain.composed is None:
                raise ValueError(
                    "confounded topology is not the supported two-child chain"
                )
            if regime == REGIME_OBSERVATIONAL:
                out[v.id] = build_semimarkovian_observational(domain, evidence)
            elif regime == REGIME_EXPERIMENTAL:
                out[v.id] = build_semimarkovian_experimental(domain, evidence)
            else:
                out[v.id] = build_semimarkovian_combined(domain, evidence)
        elif regime == REGIME_EXPERIMENTAL:
            out[v.id] = _empty_system(model, v.id)
        else:
            out[v.id] = build_markovian_system(extract_domain(model, v.id), evidence)
    return out


def solve_credal(
    model: PartialSCM,
    evidence: Evidence,
    regime: str,
    config: SearchConfig | None = None,
    n_workers: int = 1,
) -> dict[str, SolutionSet]:
    """Enumerate the credal-set vertices of every exogenous variable.

    Regimes: "s-o" uses the joint observational table of the confounded
    chain, "s-e" the post-intervention tables, "s-oe" both, and "markov"
    treats every exogenous variable as a single-child mechanism set with
    observational evidence. Identified variables come out as singleton
    solution sets through the same search path.
    """
    config = config or SearchConfig()
    systems = _regime_systems(model, evidence, regime)
    return {
        v.id: run_search(systems[v.id], config, n_workers)
        for v in model.exogenous()
    }
