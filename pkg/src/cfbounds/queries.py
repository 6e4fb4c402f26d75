"""Counterfactual and interventional queries over solution sets.

A PNS query asks for the probability that the effect responds to the cause
in both directions: the same exogenous state is held fixed while the cause
is forced to x in one world and x' in the other (twin evaluation). Over a
fully specified model this is a number; over per-variable solution sets it
becomes an interval obtained by evaluating every combination of extreme
points and taking the min and max.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .model import PartialSCM, evaluate_full_model
from .search import SolutionSet

COMBINATION_CAP = 10_000_000


class NotComputableError(Exception):
    """The query cannot be evaluated on this model (for instance the cause
    has been fused into a merged variable, so intervening on it alone is no
    longer expressible)."""


@dataclass(frozen=True)
class Query:
    """A counterfactual contrast on one cause-effect pair.

    kind "pns" asks P(effect = y under do(cause = x) AND effect = y' under
    do(cause = x')); kind "interventional" asks P(effect = y | do(cause =
    x)). States default to the binary convention x, y = 1 and x', y' = 0.
    """

    cause: str
    effect: str
    kind: str = "pns"
    x: int = 1
    x_prime: int = 0
    y: int = 1
    y_prime: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("pns", "interventional"):
            raise ValueError(f"unknown query kind {self.kind!r}")
        if self.cause == self.effect:
            raise ValueError("cause and effect must differ")
        if self.x == self.x_prime and self.kind == "pns":
            raise ValueError("the two cause states must differ")
        if self.y == self.y_prime and self.kind == "pns":
            raise ValueError("the two effect states must differ")
        for v in (self.x, self.x_prime, self.y, self.y_prime):
            if v < 0:
                raise ValueError("state indices must be nonnegative")

    def name(self) -> str:
        return f"{self.kind}:{self.cause}:{self.effect}"


@dataclass(frozen=True)
class QueryInterval:
    """Lower and upper bound with the vertex combination attaining each,
    indexed per exogenous variable in exogenous_ids order."""

    lower: float
    upper: float
    arg_lower: tuple[int, ...]
    arg_upper: tuple[int, ...]
    exogenous_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if not (-1e-12 <= self.lower <= self.upper <= 1 + 1e-12):
            raise ValueError(f"invalid interval [{self.lower}, {self.upper}]")

    @property
    def length(self) -> float:
        return self.upper - self.lower


def parse_query(text: str) -> Query:
    """Parse "pns:<cause>:<effect>" with an optional ":x,x',y,y'" suffix."""
    parts = text.split(":")
    if len(parts) not in (3, 4) or parts[0] != "pns":
        raise ValueError(
            f"cannot parse query {text!r}; expected pns:<cause>:<effect>[:x,x',y,y']"
        )
    cause, effect = parts[1], parts[2]
    if len(parts) == 4:
        try:
            x, xp, y, yp = (int(s) for s in parts[3].split(","))
        except ValueError:
            raise ValueError(f"bad state suffix in query {text!r}") from None
        return Query(cause, effect, "pns", x, xp, y, yp)
    return Query(cause, effect)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def _component_extractor(
    model: PartialSCM, vid: str
) -> tuple[str, int, Callable[[int], int]]:
    """Resolve vid to (carrier variable, component size, value extractor).

    A plain variable is its own carrier. A component of a merged product
    variable is read out of the carrier by digit extraction.
    """
    if model.has_variable(vid):
        v = model.variable(vid)
        return vid, v.domain_size, lambda val: val
    for cid, parts in model.composites.items():
        ids = [p for p, _ in parts]
        if vid in ids and model.has_variable(cid):
            i = ids.index(vid)
            sizes = [s for _, s in parts]
            radix = int(np.prod(sizes[i + 1 :]))
            size = sizes[i]
            return cid, size, lambda val, r=radix, s=size: (val // r) % s
    raise KeyError(f"unknown variable {vid!r}")


def _resolve_cause(model: PartialSCM, query: Query) -> str:
    if model.has_variable(query.cause):
        return query.cause
    for cid, parts in model.composites.items():
        if query.cause in [p for p, _ in parts] and model.has_variable(cid):
            raise NotComputableError(
                f"cause {query.cause!r} was merged into {cid!r}; an intervention "
                "on it alone is not expressible in this model"
            )
    raise KeyError(f"unknown variable {query.cause!r}")


def _propagate(
    model: PartialSCM,
    exo_values: Mapping[str, int],
    do: Mapping[str, int],
    order: Sequence[str],
) -> dict[str, int]:
    values: dict[str, int] = dict(exo_values)
    for vid in order:
        if vid in do:
            values[vid] = do[vid]
            continue
        eq = model.equation_for(vid)
        idx = 0
        for p in eq.parents:
            values_p = values[p]
            idx = idx * model.variable(p).domain_size + values_p
        values[vid] = eq.table[idx]
    return values


def indicator_tensor(model: PartialSCM, query: Query) -> np.ndarray:
    """Indicator of the query event as a tensor over the joint exogenous
    states, axes following the model's exogenous variable order.

    The query value under any product distribution over the exogenous
    variables is this tensor contracted with the per-variable probability
    vectors, which is what both point evaluation and interval aggregation
    do.
    """
    cause = _resolve_cause(model, query)
    carrier, eff_size, extract = _component_extractor(model, query.effect)
    if carrier == cause:
        raise ValueError("cause and effect resolve to the same variable")
    cause_size = model.variable(cause).domain_size
    states = (query.x, query.x_prime) if query.kind == "pns" else (query.x,)
    for s in states:
        if s >= cause_size:
            raise ValueError(f"cause state {s} out of range for {cause!r}")
    eff_states = (query.y, query.y_prime) if query.kind == "pns" else (query.y,)
    for s in eff_states:
        if s >= eff_size:
            raise ValueError(f"effect state {s} out of range for {query.effect!r}")

    exo = model.exogenous()
    order = model.topological_order()
    shape = tuple(v.domain_size for v in exo)
    out = np.zeros(shape)
    for joint in itertools.product(*[range(v.domain_size) for v in exo]):
        exo_values = {v.id: s for v, s in zip(exo, joint)}
        w1 = _propagate(model, exo_values, {cause: query.x}, order)
        hit = extract(w1[carrier]) == query.y
        if hit and query.kind == "pns":
            w2 = _propagate(model, exo_values, {cause: query.x_prime}, order)
            hit = extract(w2[carrier]) == query.y_prime
        if hit:
            out[joint] = 1.0
    return out


def _contract(tensor: np.ndarray, vectors: Sequence[np.ndarray]) -> float:
    """Fixed-order contraction of the indicator with one vector per axis;
    every evaluation path funnels through here so repeated evaluations of
    the same combination agree bit for bit."""
    v = tensor
    for vec in vectors:
        v = np.tensordot(vec, v, axes=([0], [0]))
    return float(v)


def evaluate_pns(model: PartialSCM, query: Query) -> float:
    """Twin evaluation of a PNS query on a fully specified model."""
    if query.kind != "pns":
        raise ValueError("evaluate_pns expects a pns query")
    if not model.is_fully_specified():
        raise ValueError("model priors are not fully specified")
    tensor = indicator_tensor(model, query)
    vecs = [np.asarray(model.priors[v.id]) for v in model.exogenous()]
    return _contract(tensor, vecs)


def evaluate_interventional(
    model: PartialSCM, target: str, do: Mapping[str, int]
) -> np.ndarray:
    """P(target | do(...)) on a fully specified model."""
    return evaluate_full_model(model, (target,), do=dict(do))


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


def bound_query(
    solutions: Mapping[str, SolutionSet], model: PartialSCM, query: Query
) -> QueryInterval:
    """Min and max of the query over every combination of extreme points.

    The interval is exact when every solution set is complete: the query is
    linear in each exogenous distribution separately, so the extrema over
    the credal sets are attained at vertex combinations. Ties break toward
    the lowest combination index (model order, last variable fastest).
    """
    exo = model.exogenous()
    missing = [v.id for v in exo if v.id not in solutions]
    if missing:
        raise KeyError(f"missing solution sets for {missing}")
    for v in exo:
        if solutions[v.id].n_points == 0:
            raise ValueError(
                f"infeasible evidence: no extreme points for {v.id!r}"
            )
    counts = [solutions[v.id].n_points for v in exo]
    total = int(np.prod(counts)) if counts else 1
    if total > COMBINATION_CAP:
        raise ValueError(
            f"vertex combination count {total} exceeds the {COMBINATION_CAP} cap"
        )

    tensor = indicator_tensor(model, query)
    stacks = [
        np.stack([p.probabilities for p in solutions[v.id].points]) for v in exo
    ]

    # batched contraction: contract each state axis with its stacked
    # vertices (new vertex axes accumulate in front, reversed at the end)
    v = tensor
    for i, stack in enumerate(stacks):
        v = np.tensordot(stack, v, axes=([1], [i]))
    v = np.transpose(v, axes=tuple(reversed(range(v.ndim))))
    flat = v.reshape(-1)
    arg_lo = int(np.argmin(flat))
    arg_hi = int(np.argmax(flat))
    lo_combo = np.unravel_index(arg_lo, tuple(counts)) if counts else ()
    hi_combo = np.unravel_index(arg_hi, tuple(counts)) if counts else ()

    def exact_value(combo: tuple[int, ...]) -> float:
        vecs = [stacks[i][c] for i, c in enumerate(combo)]
        return _contract(tensor, vecs)

    lower = exact_value(lo_combo)
    upper = exact_value(hi_combo)
    lower, upper = min(lower, upper), max(lower, upper)
    return QueryInterval(
        lower=lower,
        upper=upper,
        arg_lower=tuple(int(c) for c in lo_combo),
        arg_upper=tuple(int(c) for c in hi_combo),
        exogenous_ids=tuple(v.id for v in exo),
    )


def evaluate_combination(
    solutions: Mapping[str, SolutionSet],
    model: PartialSCM,
    query: Query,
    combination: Sequence[int],
) -> float:
    """The query value at one explicit vertex combination (same contraction
    path as bound_query, so the attaining bounds reproduce exactly)."""
    exo = model.exogenous()
    tensor = indicator_tensor(model, query)
    vecs = [
        solutions[v.id].points[c].probabilities for v, c in zip(exo, combination)
    ]
    return _contract(tensor, vecs)
