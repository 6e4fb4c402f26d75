"""Linear constraint systems over exogenous state probabilities.

Each system is a 0/1 coefficient matrix whose columns are exogenous states
and whose rows are evidence cells: an entry is 1 when the state's mechanism
produces the row's outcome. Together with nonnegativity and normalization,
the feasible set is a polytope whose vertices are the solutions of reduced
square systems (basic feasible solutions).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .evidence import Evidence
from .model import CanonicalDomain

RESIDUAL_TOL = 1e-7
NEGATIVITY_TOL = 1e-9
DEDUP_DECIMALS = 9

STATUS_OK = 0
STATUS_RANK_DEFICIENT = 1
STATUS_INCONSISTENT = 2
STATUS_NEGATIVE = 3

REASONS = {
    STATUS_RANK_DEFICIENT: "rank-deficient",
    STATUS_INCONSISTENT: "inconsistent",
    STATUS_NEGATIVE: "negative",
}


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConstraintSystem:
    """0/1 equality system A p = rhs over one exogenous variable's states.

    col_labels gives each column's position in the dense n_states vector
    that solved points live in (these differ from 0..n_cols-1 once columns
    have been restricted). row_blocks groups rows that belong to the same
    conditional slice; each block's rhs sums to 1. rank is exact and
    includes the implied normalization row.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    row_labels: tuple[str, ...]
    col_labels: tuple[int, ...]
    exogenous_id: str
    n_states: int
    row_blocks: tuple[int, ...]
    rank: int = field(init=False)

    def __post_init__(self) -> None:
        mat = np.ascontiguousarray(np.asarray(self.matrix, dtype=np.int8))
        rhs = np.asarray(self.rhs, dtype=float)
        if mat.ndim != 2 or rhs.ndim != 1 or mat.shape[0] != rhs.shape[0]:
            raise ValueError("matrix and rhs shapes do not agree")
        if mat.size and not np.isin(mat, (0, 1)).all():
            raise ValueError("constraint coefficients must be 0 or 1")
        if len(self.row_labels) != mat.shape[0] or len(self.row_blocks) != mat.shape[0]:
            raise ValueError("row labels/blocks do not match the matrix")
        if len(self.col_labels) != mat.shape[1]:
            raise ValueError("column labels do not match the matrix")
        for b in sorted(set(self.row_blocks)):
            total = rhs[[i for i, rb in enumerate(self.row_blocks) if rb == b]].sum()
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"rhs of block {b} sums to {total}, expected 1")
        mat.flags.writeable = False
        rhs.flags.writeable = False
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "rhs", rhs)
        object.__setattr__(self, "row_labels", tuple(self.row_labels))
        object.__setattr__(self, "col_labels", tuple(int(c) for c in self.col_labels))
        object.__setattr__(self, "row_blocks", tuple(self.row_blocks))
        object.__setattr__(self, "rank", _exact_rank_with_normalization(mat))

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ExtremePoint:
    """A vertex candidate: a distribution over the full exogenous domain."""

    exogenous_id: str
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.probabilities, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "probabilities", arr)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(int(i) for i in np.flatnonzero(self.probabilities > NEGATIVITY_TOL))

    def key(self) -> bytes:
        return (np.round(self.probabilities, DEDUP_DECIMALS) + 0.0).tobytes()


@dataclass(frozen=True)
class Infeasible:
    """Why a support produced no vertex: rank-deficient, inconsistent, or
    negative."""

    reason: str


# ---------------------------------------------------------------------------
# exact rank
# ---------------------------------------------------------------------------


def _exact_rank(rows: list[list[Fraction]]) -> int:
    rank = 0
    n_cols = len(rows[0]) if rows else 0
    col = 0
    r = 0
    while r < len(rows) and col < n_cols:
        pivot = None
        for i in range(r, len(rows)):
            if rows[i][col] != 0:
                pivot = i
                break
        if pivot is None:
            col += 1
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        pv = rows[r][col]
        for i in range(r + 1, len(rows)):
            if rows[i][col] != 0:
                factor = rows[i][col] / pv
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        r += 1
        rank += 1
        col += 1
    return rank


def _exact_rank_with_normalization(matrix: np.ndarray) -> int:
    n_cols = matrix.shape[1]
    rows = [[Fraction(int(v)) for v in row] for row in matrix]
    rows.append([Fraction(1)] * n_cols)
    return _exact_rank(rows)


def exact_rank(system: ConstraintSystem) -> int:
    """Exact rank of the coefficient matrix plus the all-ones normalization
    row, computed over the rationals."""
    return system.rank


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _config_label(names: Sequence[str], sizes: Sequence[int], config: int) -> str:
    parts = []
    rem = config
    for name, size in zip(reversed(names), reversed(sizes)):
        parts.append(f"{name}={rem % size}")
        rem //= size
    return ",".join(reversed(parts))


def build_markovian_system(domain: CanonicalDomain, evidence: Evidence) -> ConstraintSystem:
    """One row per (parent configuration, child state) with the child's
    observational conditional as right-hand side."""
    if len(domain.children) != 1:
        raise ValueError("markovian systems cover a single child")
    child = domain.children[0]
    q = domain.child_sizes[0]
    p = domain.parent_config_counts[0]
    parents, parent_sizes = domain.parent_ids[0], domain.parent_sizes[0]
    table = evidence.conditional((child,), parents)
    if table.shape != (q,) + tuple(parent_sizes):
        raise ValueError(
            f"evidence for {child!r} has shape {table.shape}, expected {(q,) + tuple(parent_sizes)}"
        )
    flat = table.reshape(q, p)
    n_u = domain.size
    matrix = np.zeros((p * q, n_u), dtype=np.int8)
    rhs = np.zeros(p * q)
    labels = []
    blocks = []
    for x in range(p):
        ctx = _config_label(parents, parent_sizes, x) if parents else ""
        for y in range(q):
            r = x * q + y
            for u in range(n_u):
                if domain.functions[u][0][x] == y:
                    matrix[r, u] = 1
            rhs[r] = flat[y, x]
            labels.append(f"P({child}={y}|{ctx})" if ctx else f"P({child}={y})")
            blocks.append(x)
    return ConstraintSystem(
        matrix, rhs, tuple(labels), tuple(range(n_u)), domain.exogenous_id, n_u, tuple(blocks)
    )


def _chain_evidence_shapes(domain: CanonicalDomain) -> tuple[str, str, int, int, int]:
    y1, y2 = domain.children
    q1, q2 = domain.child_sizes
    p1 = domain.parent_config_counts[0]
    return y1, y2, q1, q2, p1


def build_semimarkovian_observational(
    domain: CanonicalDomain, evidence: Evidence
) -> ConstraintSystem:
    """Rows are joint observational cells (x, y1, y2); an entry is 1 when the
    state's first mechanism sends x to y1 and the composed mechanism sends x
    to y2."""
    if domain.composed is None:
        raise ValueError("observational chain system needs a two-child chain domain")
    y1n, y2n, q1, q2, p1 = _chain_evidence_shapes(domain)
    parents, parent_sizes = domain.parent_ids[0], domain.parent_sizes[0]
    table = evidence.conditional((y1n, y2n), parents)
    if table.shape != (q1, q2) + tuple(parent_sizes):
        raise ValueError(f"evidence for ({y1n},{y2n}) has unexpected shape {table.shape}")
    flat = table.reshape(q1, q2, p1)
    n_u = domain.size
    matrix = np.zeros((p1 * q1 * q2, n_u), dtype=np.int8)
    rhs = np.zeros(p1 * q1 * q2)
    labels = []
    blocks = []
    r = 0
    for x in range(p1):
        ctx = _config_label(parents, parent_sizes, x) if parents else ""
        for a in range(q1):
            for b in range(q2):
                for u in range(n_u):
                    if domain.functions[u][0][x] == a and domain.composed[u][x] == b:
                        matrix[r, u] = 1
                rhs[r] = flat[a, b, x]
                cell = f"{y1n}={a},{y2n}={b}"
                labels.append(f"P({cell}|{ctx})" if ctx else f"P({cell})")
                blocks.append(x)
                r += 1
    return ConstraintSystem(
        matrix, rhs, tuple(labels), tuple(range(n_u)), domain.exogenous_id, n_u, tuple(blocks)
    )


def build_semimarkovian_experimental(
    domain: CanonicalDomain, evidence: Evidence
) -> ConstraintSystem:
    """Rows are the post-intervention cells: first the first child under its
    forced parent configurations, then the second child under forced values
    of the first."""
    if domain.composed is None:
        raise ValueError("experimental chain system needs a two-child chain domain")
    y1n, y2n, q1, q2, p1 = _chain_evidence_shapes(domain)
    if len(domain.parent_ids[0]) != 1:
        raise ValueError("experimental chain systems need a single upstream parent")
    parent = domain.parent_ids[0][0]
    t1 = evidence.experimental_table(y1n, parent)
    t2 = evidence.experimental_table(y2n, y1n)
    if t1 is None or t2 is None:
        raise KeyError(f"missing experimental tables for {y1n!r} and {y2n!r}")
    if t1.shape != (q1, p1) or t2.shape != (q2, q1):
        raise ValueError("experimental tables have unexpected shapes")
    n_u = domain.size
    n_rows = p1 * q1 + q1 * q2
    matrix = np.zeros((n_rows, n_u), dtype=np.int8)
    rhs = np.zeros(n_rows)
    labels = []
    blocks = []
    r = 0
    for x in range(p1):
        for a in range(q1):
            for u in range(n_u):
                if domain.functions[u][0][x] == a:
                    matrix[r, u] = 1
            rhs[r] = t1[a, x]
            labels.append(f"P({y1n}={a}|do({parent}={x}))")
            blocks.append(x)
            r += 1
    for a in range(q1):
        for b in range(q2):
            for u in range(n_u):
                if domain.functions[u][1][a] == b:
                    matrix[r, u] = 1
            rhs[r] = t2[b, a]
            labels.append(f"P({y2n}={b}|do({y1n}={a}))")
            blocks.append(p1 + a)
            r += 1
    return ConstraintSystem(
        matrix, rhs, tuple(labels), tuple(range(n_u)), domain.exogenous_id, n_u, tuple(blocks)
    )


def build_semimarkovian_combined(
    domain: CanonicalDomain, evidence: Evidence
) -> ConstraintSystem:
    """Observational rows followed by the second child's post-intervention
    rows; both forms of evidence simultaneously constrain the states."""
    obs = build_semimarkovian_observational(domain, evidence)
    y1n, y2n, q1, q2, p1 = _chain_evidence_shapes(domain)
    t2 = evidence.experimental_table(y2n, y1n)
    if t2 is None:
        raise KeyError(f"missing experimental table for {y2n!r} under do({y1n!r})")
    n_u = domain.size
    extra = np.zeros((q1 * q2, n_u), dtype=np.int8)
    rhs2 = np.zeros(q1 * q2)
    labels2 = []
    blocks2 = []
    base_block = max(obs.row_blocks) + 1 if obs.row_blocks else 0
    r = 0
    for a in range(q1):
        for b in range(q2):
            for u in range(n_u):
                if domain.functions[u][1][a] == b:
                    extra[r, u] = 1
            rhs2[r] = t2[b, a]
            labels2.append(f"P({y2n}={b}|do({y1n}={a}))")
            blocks2.append(base_block + a)
            r += 1
    return ConstraintSystem(
        np.vstack([obs.matrix, extra]),
        np.concatenate([obs.rhs, rhs2]),
        obs.row_labels + tuple(labels2),
        obs.col_labels,
        obs.exogenous_id,
        n_u,
        obs.row_blocks + tuple(blocks2),
    )


def restrict_columns(system: ConstraintSystem, keep_labels: Iterable[int]) -> ConstraintSystem:
    """Drop all columns whose state label is not listed; the full domain size
    is retained so solved points stay embedded in the original coordinates."""
    keep = set(int(k) for k in keep_labels)
    pos = [i for i, lbl in enumerate(system.col_labels) if lbl in keep]
    if not pos:
        raise ValueError("cannot restrict away every column")
    return ConstraintSystem(
        system.matrix[:, pos],
        system.rhs,
        system.row_labels,
        tuple(system.col_labels[i] for i in pos),
        system.exogenous_id,
        system.n_states,
        system.row_blocks,
    )


# ---------------------------------------------------------------------------
# support solving
# ---------------------------------------------------------------------------


def solve_supports_batch(
    system: ConstraintSystem, supports: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Solve many same-size supports at once.

    supports is an (m, r) array of column positions. Returns (points, status)
    where points is (m, n_states) dense distributions (valid only where
    status == STATUS_OK). A support passes when the reduced system plus
    normalization has full column rank, residuals stay within RESIDUAL_TOL,
    and entries are above -NEGATIVITY_TOL (then clamped and renormalized).

    Full column rank is decided through the Gram determinant: the Gram
    matrix is integer valued, so a nonsingular one has determinant >= 1,
    which a 0.5 threshold separates safely at these sizes.
    """
    supports = np.asarray(supports, dtype=np.intp)
    m, r = supports.shape
    a_aug = np.vstack([system.matrix.astype(float), np.ones((1, system.n_cols))])
    b_aug = np.concatenate([system.rhs, [1.0]])

    cols = a_aug[:, supports]  # (n_rows+1, m, r)
    mats = np.moveaxis(cols, 1, 0)  # (m, n_rows+1, r)
    gram = np.einsum("mij,mik->mjk", mats, mats)
    dets = np.abs(np.linalg.det(gram))
    full_rank = dets > 0.5

    status = np.full(m, STATUS_RANK_DEFICIENT, dtype=np.int8)
    points = np.zeros((m, system.n_states))
    if not full_rank.any():
        return points, status

    idx = np.flatnonzero(full_rank)
    rhs_proj = np.einsum("mij,i->mj", mats[idx], b_aug)
    sols = np.linalg.solve(gram[idx], rhs_proj[..., None])[..., 0]
    residual = np.einsum("mij,mj->mi", mats[idx], sols) - b_aug
    consistent = np.abs(residual).max(axis=1) <= RESIDUAL_TOL
    nonnegative = sols.min(axis=1) >= -NEGATIVITY_TOL

    status[idx[~consistent]] = STATUS_INCONSISTENT
    status[idx[consistent & ~nonnegative]] = STATUS_NEGATIVE
    ok = idx[consistent & nonnegative]
    if ok.size:
        vals = np.maximum(sols[consistent & nonnegative], 0.0)
        vals /= vals.sum(axis=1, keepdims=True)
        labels = np.asarray(system.col_labels, dtype=np.intp)
        rows = np.repeat(np.arange(ok.size), r)
        cols_full = labels[supports[ok]].reshape(-1)
        points_ok = np.zeros((ok.size, system.n_states))
        points_ok[rows, cols_full] = vals.reshape(-1)
        points[ok] = points_ok
        status[ok] = STATUS_OK
    return points, status


def solve_support(
    system: ConstraintSystem, support: Sequence[int]
) -> ExtremePoint | Infeasible:
    """Solve one support (column positions, sorted). See solve_supports_batch
    for the acceptance rules."""
    support = tuple(int(s) for s in support)
    if any(s < 0 or s >= system.n_cols for s in support):
        raise IndexError(f"support {support} out of range for {system.n_cols} columns")
    if len(set(support)) != len(support):
        raise ValueError("support indices must be distinct")
    points, status = solve_supports_batch(system, np.asarray([support], dtype=np.intp))
    if status[0] == STATUS_OK:
        return ExtremePoint(system.exogenous_id, points[0])
    return Infeasible(REASONS[int(status[0])])


# ---------------------------------------------------------------------------
# CSV dump
# ---------------------------------------------------------------------------


def dump_system_csv(system: ConstraintSystem, path: str) -> None:
    """Rows are constraints, columns are states, final column is the rhs."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row"] + [f"u{lbl}" for lbl in system.col_labels] + ["rhs"])
        for i, label in enumerate(system.row_labels):
            writer.writerow(
                [label] + [int(v) for v in system.matrix[i]] + [repr(float(system.rhs[i]))]
            )
