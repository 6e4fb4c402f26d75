"""Independent verification of enumerated bounds.

A small dense simplex solver over exact rational arithmetic computes the
true min and max of a linear functional over {p >= 0, A p = rhs, sum p = 1}
directly, with no support enumeration involved. Agreement between these
optima and the vertex-aggregation intervals is the main correctness check
of the whole pipeline.

The float rhs is rationalized at denominator 10^12 and repaired per block
(the last row of each block is rewritten as one minus the others) so each
conditional slice stays exactly normalized. Residual cross-block
inconsistency of order 1e-12 is absorbed by accepting a phase-1 optimum
up to 1e-9 as feasible, with leftover artificial variables frozen out of
the entering-candidate set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

try:
    from gmpy2 import mpq as _ratio
except ImportError:  # pragma: no cover - gmpy2 is an optional speedup
    from fractions import Fraction as _ratio

from .evidence import Evidence
from .model import PartialSCM
from .queries import Query, QueryInterval, indicator_tensor
from .search import SearchConfig, SolutionSet, _regime_systems, run_search
from .systems import ConstraintSystem, ExtremePoint

RHS_DENOMINATOR = 10**12
PHASE1_TOL = 1e-9
SAMPLE_TOL = 1e-7


class InfeasibleSystemError(Exception):
    """The rationalized system admits no nonnegative solution."""


@dataclass(frozen=True)
class LinearFunctional:
    """Dense objective coefficients over one exogenous variable's states."""

    coefficients: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.coefficients, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "coefficients", arr)


# ---------------------------------------------------------------------------
# rational simplex
# ---------------------------------------------------------------------------


def _rationalize_rhs(system: ConstraintSystem) -> list:
    """Round each rhs entry to denominator 10^12, then rewrite the last row
    of every block so the block still sums exactly to one."""
    vals = [_ratio(round(float(v) * RHS_DENOMINATOR), RHS_DENOMINATOR) for v in system.rhs]
    blocks: dict[int, list[int]] = {}
    for i, b in enumerate(system.row_blocks):
        blocks.setdefault(b, []).append(i)
    for rows in blocks.values():
        head = rows[:-1]
        vals[rows[-1]] = _ratio(1) - sum((vals[i] for i in head), _ratio(0))
    return vals


def _pivot(tableau: list[list], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    for r, line in enumerate(tableau):
        if r != row and line[col] != 0:
            factor = line[col]
            tableau[r] = [a - factor * b for a, b in zip(line, tableau[row])]
    basis[row] = col


def _run_simplex(
    tableau: list[list], basis: list[int], costs: list, allowed: Sequence[bool]
) -> None:
    """Minimize with Bland's rule. tableau rows are the m constraint rows
    (last entry rhs); costs is the full cost vector; allowed marks columns
    permitted to enter."""
    m = len(tableau)
    n = len(costs)
    while True:
        # reduced costs: c_j - c_B . column_j on the current tableau
        cb = [costs[b] for b in basis]
        entering = -1
        for j in range(n):
            if not allowed[j] or j in basis:
                continue
            red = costs[j] - sum(cb[i] * tableau[i][j] for i in range(m))
            if red < 0:
                entering = j
                break
        if entering < 0:
            return
        leaving = -1
        best = None
        for i in range(m):
            a = tableau[i][entering]
            if a > 0:
                ratio = tableau[i][-1] / a
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leaving]
                ):
                    best = ratio
                    leaving = i
        if leaving < 0:
            raise RuntimeError("unbounded linear program over a probability polytope")
        _pivot(tableau, basis, leaving, entering)


def _solve_lp(
    matrix: np.ndarray, rhs: list, costs_float: Sequence[float], sense: str
) -> tuple:
    """Exact two-phase simplex for min/max of costs over {A x = rhs, x >= 0}.
    Returns (value, x) as rationals."""
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    m, n = matrix.shape
    sign = 1 if sense == "min" else -1
    costs = [
        sign * _ratio(round(float(c) * RHS_DENOMINATOR), RHS_DENOMINATOR)
        for c in costs_float
    ]

    rows = []
    b = list(rhs)
    for i in range(m):
        line = [_ratio(int(matrix[i, j])) for j in range(n)]
        if b[i] < 0:
            line = [-v for v in line]
            b[i] = -b[i]
        rows.append(line)

    # phase 1: artificial basis, minimize artificial mass
    total_cols = n + m
    tableau = [rows[i] + [_ratio(1) if j == i else _ratio(0) for j in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    phase1_costs = [_ratio(0)] * n + [_ratio(1)] * m
    allowed = [True] * n + [False] * m  # artificials never (re-)enter
    _run_simplex(tableau, basis, phase1_costs, allowed)
    infeas = sum(
        (tableau[i][-1] for i in range(m) if basis[i] >= n), _ratio(0)
    )
    if float(infeas) > PHASE1_TOL:
        raise InfeasibleSystemError(
            f"system infeasible (phase-1 optimum {float(infeas):.3e})"
        )

    # phase 2 on the same tableau; artificial columns stay excluded
    phase2_costs = costs + [_ratio(0)] * m
    _run_simplex(tableau, basis, phase2_costs, allowed)
    x = [_ratio(0)] * n
    for i, bv in enumerate(basis):
        if bv < n:
            x[bv] = tableau[i][-1]
    value = sum((costs[j] * x[j] for j in range(n)), _ratio(0))
    return sign * value, x


def lp_bound(
    system: ConstraintSystem,
    objective: LinearFunctional | np.ndarray | Sequence[float],
    sense: str,
) -> float:
    """Exact optimum of a linear objective over the system's polytope."""
    coeffs = (
        objective.coefficients
        if isinstance(objective, LinearFunctional)
        else np.asarray(objective, dtype=float)
    )
    if coeffs.shape != (system.n_cols,):
        # a functional over the full state space applies to restricted
        # systems through the column labels
        full = np.asarray(coeffs, dtype=float)
        if full.shape == (system.n_states,):
            coeffs = full[list(system.col_labels)]
        else:
            raise ValueError(
                f"objective length {full.shape} fits neither the {system.n_cols} "
                f"columns nor the {system.n_states} states"
            )
    rhs = _rationalize_rhs(system)
    matrix = np.vstack(
        [system.matrix, np.ones((1, system.n_cols), dtype=np.int8)]
    )
    rhs = rhs + [_ratio(1)]
    value, _ = _solve_lp(matrix, rhs, coeffs, sense)
    return float(value)


def lp_membership(
    vertices: Sequence[ExtremePoint] | Sequence[np.ndarray] | SolutionSet,
    point: np.ndarray | Sequence[float],
    tol: float = PHASE1_TOL,
) -> bool:
    """Whether point is a convex combination of the vertices (within the
    rationalization tolerance)."""
    if isinstance(vertices, SolutionSet):
        vecs = [p.probabilities for p in vertices.points]
    else:
        vecs = [
            v.probabilities if isinstance(v, ExtremePoint) else np.asarray(v, dtype=float)
            for v in vertices
        ]
    if not vecs:
        raise ValueError("no vertices to combine")
    point = np.asarray(point, dtype=float)
    k = len(vecs)
    n = point.shape[0]

    def rat(x: float):
        return _ratio(round(float(x) * RHS_DENOMINATOR), RHS_DENOMINATOR)

    m = n + 1
    rows = []
    b = []
    for i in range(n):
        rows.append([rat(vecs[j][i]) for j in range(k)])
        b.append(rat(point[i]))
    rows.append([_ratio(1)] * k)
    b.append(_ratio(1))

    # minimize the L1 deviation with elastic variables on both sides; the
    # vertex matrix is itself rationalized floats, so a one-sided artificial
    # basis would overstate the distance for nearly feasible systems
    tableau = []
    for i in range(m):
        line = list(rows[i])
        rhs_v = b[i]
        if rhs_v < 0:
            line = [-v for v in line]
            rhs_v = -rhs_v
        plus = [_ratio(1) if j == i else _ratio(0) for j in range(m)]
        minus = [-v for v in plus]
        tableau.append(line + plus + minus + [rhs_v])
    basis = [k + i for i in range(m)]
    costs = [_ratio(0)] * k + [_ratio(1)] * (2 * m)
    allowed = [True] * (k + 2 * m)
    _run_simplex(tableau, basis, costs, allowed)
    infeas = sum(
        (tableau[i][-1] for i in range(m) if basis[i] >= k), _ratio(0)
    )
    return float(infeas) <= tol


def sample_feasible(
    system: ConstraintSystem,
    vertices: Sequence[ExtremePoint] | SolutionSet,
    n: int,
    seed: int = 0,
) -> list[np.ndarray]:
    """Random convex combinations of enumerated vertices; each sample is
    checked against the system within 1e-7."""
    if isinstance(vertices, SolutionSet):
        vecs = [p.probabilities for p in vertices.points]
    else:
        vecs = [p.probabilities for p in vertices]
    if not vecs:
        raise ValueError("no vertices to combine")
    stack = np.stack(vecs)
    rng = np.random.default_rng(seed)
    out = []
    full = np.vstack([system.matrix.astype(float), np.ones((1, system.n_cols))])
    target = np.concatenate([system.rhs, [1.0]])
    dense_cols = list(system.col_labels)
    for _ in range(int(n)):
        w = rng.dirichlet(np.ones(len(vecs)))
        sample = w @ stack
        resid = np.abs(full @ sample[dense_cols] - target).max()
        if resid > SAMPLE_TOL:
            raise RuntimeError(f"sampled point violates the system by {resid:.3e}")
        out.append(sample)
    return out


# ---------------------------------------------------------------------------
# end-to-end oracle comparison
# ---------------------------------------------------------------------------


def query_functional(
    model: PartialSCM,
    query: Query,
    target_exo: str,
    pinned: Mapping[str, np.ndarray],
) -> LinearFunctional:
    """Reduce the query indicator to a linear functional over one exogenous
    variable's states by contracting every other axis with a pinned
    distribution."""
    tensor = indicator_tensor(model, query)
    exo = model.exogenous()
    matches = [i for i, v in enumerate(exo) if v.id == target_exo]
    if not matches:
        raise KeyError(f"unknown exogenous variable {target_exo!r}")
    moved = np.moveaxis(tensor, matches[0], -1)
    for i, v in enumerate(exo):
        if v.id == target_exo:
            continue
        if v.id not in pinned:
            raise KeyError(f"no pinned distribution for {v.id!r}")
        vec = np.asarray(pinned[v.id], dtype=float)
        moved = np.tensordot(vec, moved, axes=([0], [0]))
    return LinearFunctional(moved)


def oracle_interval(
    model: PartialSCM,
    evidence: Evidence,
    regime: str,
    query: Query,
    config: SearchConfig | None = None,
) -> QueryInterval:
    """Exact query interval via the LP: all exogenous variables except the
    largest are pinned at each of their (few) vertices in turn; the LP
    optimizes over the remaining polytope for every pinning."""
    systems = _regime_systems(model, evidence, regime)
    exo_ids = [v.id for v in model.exogenous()]
    target = max(exo_ids, key=lambda eid: systems[eid].n_states)
    others = [eid for eid in exo_ids if eid != target]

    pinned_sets: dict[str, list[np.ndarray]] = {}
    for eid in others:
        sol = run_search(systems[eid], config or SearchConfig())
        if sol.n_points == 0:
            raise InfeasibleSystemError(f"no feasible distribution for {eid!r}")
        pinned_sets[eid] = [p.probabilities for p in sol.points]

    lo, hi = np.inf, -np.inf
    for combo in itertools.product(*[pinned_sets[eid] for eid in others]):
        pinned = dict(zip(others, combo))
        functional = query_functional(model, query, target, pinned)
        lo = min(lo, lp_bound(systems[target], functional, "min"))
        hi = max(hi, lp_bound(systems[target], functional, "max"))
    # the exact optima are probabilities; the rationalization slack can
    # push the floats out of [0, 1] by well under any comparison tolerance
    lo = min(max(float(lo), 0.0), 1.0)
    hi = min(max(float(hi), 0.0), 1.0)
    return QueryInterval(
        lower=lo,
        upper=hi,
        arg_lower=(),
        arg_upper=(),
        exogenous_ids=tuple(exo_ids),
    )
