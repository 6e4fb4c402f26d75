"""Discrete structural causal models with canonical exogenous domains.

A model is a DAG of endogenous variables, each determined by a deterministic
equation of its parents, where every endogenous variable has exactly one
exogenous parent. Exogenous variables are unobserved roots and may carry a
prior. A model without full priors (or with unspecified mechanisms encoded
in the exogenous state) is "partial": it describes a family of fully
specified models.

Canonical exogenous domains index every deterministic mechanism that could
drive a child: for a child with q states and p joint parent configurations
there are q**p mechanisms, and state u_i denotes the mechanism read off the
base-q encoding of i (most significant digit first). For a confounder with
two children arranged in a chain (X -> Y1 -> Y2 with one shared exogenous
parent), states enumerate the Cartesian product of the two per-child
mechanism sets, first child major.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

ENDOGENOUS = "endogenous"
EXOGENOUS = "exogenous"

PRIOR_TOL = 1e-9


# ---------------------------------------------------------------------------
# variables and equations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Variable:
    """A named discrete variable.

    state_labels tracks the identity of each state across reductions: a
    freshly built variable has labels 0..domain_size-1, and removing a state
    keeps the surviving labels so that later removals can still name states
    by their original index.
    """

    id: str
    kind: str
    domain_size: int
    state_labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind not in (ENDOGENOUS, EXOGENOUS):
            raise ValueError(f"unknown kind {self.kind!r} for variable {self.id!r}")
        if self.domain_size < 1:
            raise ValueError(f"variable {self.id!r} needs at least one state")
        if self.state_labels is not None:
            if len(self.state_labels) != self.domain_size:
                raise ValueError(f"variable {self.id!r}: state_labels length mismatch")
            object.__setattr__(self, "state_labels", tuple(int(s) for s in self.state_labels))

    @property
    def labels(self) -> tuple[int, ...]:
        if self.state_labels is not None:
            return self.state_labels
        return tuple(range(self.domain_size))


@dataclass(frozen=True)
class StructuralEquation:
    """Deterministic mechanism for one endogenous child.

    parents lists the endogenous parents first and exactly one exogenous
    parent last. table maps the joint parent configuration index to the
    child state, flat with the last-listed parent varying fastest.
    """

    child: str
    parents: tuple[str, ...]
    table: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "parents", tuple(self.parents))
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))


# ---------------------------------------------------------------------------
# the model
# ---------------------------------------------------------------------------


def _joint_index(sizes: Sequence[int], states: Sequence[int]) -> int:
    # last axis varies fastest
    idx = 0
    for size, state in zip(sizes, states):
        idx = idx * size + state
    return idx


@dataclass(frozen=True)
class PartialSCM:
    """A (possibly partially specified) structural causal model.

    composites records variables built as products of earlier variables,
    mapping a variable id to ordered (component id, component size) pairs so
    that queries can address the original components.
    """

    variables: tuple[Variable, ...]
    equations: tuple[StructuralEquation, ...]
    priors: Mapping[str, tuple[float, ...]] | None = None
    composites: Mapping[str, tuple[tuple[str, int], ...]] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "equations", tuple(self.equations))
        priors = dict(self.priors) if self.priors else {}
        priors = {k: tuple(float(x) for x in v) for k, v in priors.items()}
        object.__setattr__(self, "priors", priors)
        comps = dict(self.composites) if self.composites else {}
        comps = {k: tuple((c, int(s)) for c, s in v) for k, v in comps.items()}
        object.__setattr__(self, "composites", comps)
        self._validate()

    # -- validation ---------------------------------------------------------

    def _validate(self) -> None:
        ids = [v.id for v in self.variables]
        if len(set(ids)) != len(ids):
            raise ValueError("variable ids must be unique")
        by_id = {v.id: v for v in self.variables}

        seen_children: set[str] = set()
        for eq in self.equations:
            if eq.child not in by_id:
                raise ValueError(f"equation child {eq.child!r} is not a variable")
            child = by_id[eq.child]
            if child.kind != ENDOGENOUS:
                raise ValueError(f"equation child {eq.child!r} must be endogenous")
            if eq.child in seen_children:
                raise ValueError(f"duplicate equation for {eq.child!r}")
            seen_children.add(eq.child)
            for p in eq.parents:
                if p not in by_id:
                    raise ValueError(f"equation for {eq.child!r} references unknown parent {p!r}")
            exo = [p for p in eq.parents if by_id[p].kind == EXOGENOUS]
            if len(exo) != 1 or by_id[eq.parents[-1]].kind != EXOGENOUS:
                raise ValueError(
                    f"equation for {eq.child!r} needs exactly one exogenous parent, listed last"
                )
            sizes = [by_id[p].domain_size for p in eq.parents]
            expected = int(np.prod(sizes)) if sizes else 1
            if len(eq.table) != expected:
                raise ValueError(
                    f"equation for {eq.child!r}: table has {len(eq.table)} entries, expected {expected}"
                )
            for v in eq.table:
                if not (0 <= v < child.domain_size):
                    raise ValueError(f"equation for {eq.child!r}: table value {v} out of range")

        # acyclicity over endogenous edges
        self.topological_order()

        for uid, vec in self.priors.items():
            if uid not in by_id or by_id[uid].kind != EXOGENOUS:
                raise ValueError(f"prior given for non-exogenous id {uid!r}")
            if len(vec) != by_id[uid].domain_size:
                raise ValueError(f"prior for {uid!r} has wrong length")
            if min(vec) < -PRIOR_TOL:
                raise ValueError(f"prior for {uid!r} has negative entries")
            if abs(sum(vec) - 1.0) > PRIOR_TOL:
                raise ValueError(f"prior for {uid!r} does not sum to 1")

        for cid, parts in self.composites.items():
            if cid in by_id:
                want = int(np.prod([s for _, s in parts]))
                if by_id[cid].domain_size != want:
                    raise ValueError(f"composite {cid!r}: component sizes do not multiply out")

    # -- structure helpers ----------------------------------------------------

    def variable(self, vid: str) -> Variable:
        for v in self.variables:
            if v.id == vid:
                return v
        raise KeyError(vid)

    def has_variable(self, vid: str) -> bool:
        return any(v.id == vid for v in self.variables)

    def equation_for(self, child: str) -> StructuralEquation:
        for eq in self.equations:
            if eq.child == child:
                return eq
        raise KeyError(f"no equation for {child!r}")

    def endogenous(self) -> tuple[Variable, ...]:
        return tuple(v for v in self.variables if v.kind == ENDOGENOUS)

    def exogenous(self) -> tuple[Variable, ...]:
        return tuple(v for v in self.variables if v.kind == EXOGENOUS)

    def children_of(self, vid: str) -> tuple[str, ...]:
        return tuple(eq.child for eq in self.equations if vid in eq.parents)

    def endogenous_parents(self, child: str) -> tuple[str, ...]:
        eq = self.equation_for(child)
        by_id = {v.id: v for v in self.variables}
        return tuple(p for p in eq.parents if by_id[p].kind == ENDOGENOUS)

    def exogenous_parent(self, child: str) -> str:
        return self.equation_for(child).parents[-1]

    def topological_order(self) -> tuple[str, ...]:
        """Children of structural equations in dependency order; raises on cycles."""
        eqs = {eq.child: eq for eq in self.equations}
        by_id = {v.id: v for v in self.variables}
        indeg: dict[str, int] = {c: 0 for c in eqs}
        out: dict[str, list[str]] = {}
        for child, eq in eqs.items():
            for p in eq.parents:
                if by_id[p].kind == ENDOGENOUS and p in eqs:
                    indeg[child] += 1
                    out.setdefault(p, []).append(child)
        order: list[str] = []
        ready = sorted(c for c, d in indeg.items() if d == 0)
        while ready:
            node = ready.pop(0)
            order.append(node)
            for nxt in sorted(out.get(node, [])):
                indeg[nxt] -= 1
                if indeg[nxt] == 0:
                    ready.append(nxt)
            ready.sort()
        if len(order) != len(eqs):
            raise ValueError("structural equations contain a cycle")
        return tuple(order)

    def is_fully_specified(self) -> bool:
        endo = {v.id for v in self.endogenous()}
        have = {eq.child for eq in self.equations}
        exo = {v.id for v in self.exogenous()}
        return endo == have and exo == set(self.priors)


# ---------------------------------------------------------------------------
# canonical domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CanonicalDomain:
    """Per-state listing of the deterministic mechanisms an exogenous
    variable indexes.

    functions[u][c] is the mechanism table of child c under state u, mapping
    the joint configuration index of that child's endogenous parents to a
    child state. For a two-child chain, composed[u] maps the first child's
    parent configuration through both mechanisms.

    col_labels carries the original state identity (it differs from
    0..size-1 once states have been removed by reduction).
    """

    exogenous_id: str
    children: tuple[str, ...]
    child_sizes: tuple[int, ...]
    parent_config_counts: tuple[int, ...]
    functions: tuple[tuple[tuple[int, ...], ...], ...]
    parent_ids: tuple[tuple[str, ...], ...] = ()
    parent_sizes: tuple[tuple[int, ...], ...] = ()
    composed: tuple[tuple[int, ...], ...] | None = None
    col_labels: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.col_labels is None:
            object.__setattr__(self, "col_labels", tuple(range(len(self.functions))))
        if not self.parent_ids:
            object.__setattr__(self, "parent_ids", tuple(() for _ in self.children))
        if not self.parent_sizes:
            object.__setattr__(self, "parent_sizes", tuple(() for _ in self.children))

    @property
    def size(self) -> int:
        return len(self.functions)

    def state_names(self) -> tuple[str, ...]:
        return tuple(f"u{lbl}" for lbl in self.col_labels)


def base_q_digits(i: int, q: int, p: int) -> tuple[int, ...]:
    """The p base-q digits of i, most significant first."""
    digits = []
    for j in range(p):
        digits.append((i // q ** (p - 1 - j)) % q)
    return tuple(digits)


def digits_to_index(digits: Sequence[int], q: int) -> int:
    """Inverse of base_q_digits."""
    i = 0
    for d in digits:
        i = i * q + d
    return i


def canonical_table(parent_sizes: Sequence[int], child_size: int) -> tuple[int, ...]:
    """Mechanism-indexed equation table for a single child.

    The produced table covers parents (endogenous..., exogenous) with the
    exogenous axis last and of size child_size ** n_configs; entry
    (x, u) is digit x of the base-child_size encoding of u.
    """
    p = int(np.prod(parent_sizes)) if len(parent_sizes) else 1
    q = child_size
    n_u = q**p
    out = []
    for x in range(p):
        shift = q ** (p - 1 - x)
        for u in range(n_u):
            out.append((u // shift) % q)
    return tuple(out)


def build_canonical_markovian(child: str, model: PartialSCM) -> CanonicalDomain:
    """Canonical domain of the exogenous parent of a single endogenous child.

    The model must already hold a canonical equation for the child (the
    exogenous domain has size q**p and the table follows the base-q digit
    convention); a mismatch is reported rather than silently reindexed.
    """
    var = model.variable(child)
    if var.kind != ENDOGENOUS:
        raise ValueError(f"{child!r} is not endogenous")
    eq = model.equation_for(child)
    exo_id = eq.parents[-1]
    exo = model.variable(exo_id)
    if len(model.children_of(exo_id)) != 1:
        raise ValueError(
            f"exogenous {exo_id!r} drives several children; use the chain builder"
        )
    endo_parents = model.endogenous_parents(child)
    parent_sizes = [model.variable(p).domain_size for p in endo_parents]
    p = int(np.prod(parent_sizes)) if parent_sizes else 1
    q = var.domain_size
    if exo.domain_size != q**p:
        raise ValueError(
            f"exogenous {exo_id!r} has {exo.domain_size} states, canonical domain needs {q**p}"
        )
    if eq.table != canonical_table(parent_sizes, q):
        raise ValueError(f"equation for {child!r} is not in canonical form")
    functions = tuple((base_q_digits(u, q, p),) for u in range(q**p))
    return CanonicalDomain(
        exogenous_id=exo_id,
        children=(child,),
        child_sizes=(q,),
        parent_config_counts=(p,),
        functions=functions,
        parent_ids=(endo_parents,),
        parent_sizes=(tuple(parent_sizes),),
    )


def chain_tables(x_sizes: Sequence[int], q1: int, q2: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Equation tables (first child, second child) for a shared exogenous
    parent driving a two-child chain.

    States are ordered first-child-mechanism major: u = f1_idx * q2**q1 + f2_idx.
    """
    p1 = int(np.prod(x_sizes)) if len(x_sizes) else 1
    n1 = q1**p1
    n2 = q2**q1
    n_u = n1 * n2
    t1 = []
    for x in range(p1):
        shift = q1 ** (p1 - 1 - x)
        for u in range(n_u):
            f1 = u // n2
            t1.append((f1 // shift) % q1)
    t2 = []
    for y1 in range(q1):
        shift = q2 ** (q1 - 1 - y1)
        for u in range(n_u):
            f2 = u % n2
            t2.append((f2 // shift) % q2)
    return tuple(t1), tuple(t2)


def build_canonical_semimarkovian_chain(
    children: Sequence[str], model: PartialSCM
) -> CanonicalDomain:
    """Canonical domain of an exogenous parent shared by a two-child chain.

    children must be (Y1, Y2) where Y2's only endogenous parent is Y1 and
    both share the same exogenous parent. The domain also carries the
    composed mechanism (second child as a function of the first child's
    parent configuration).
    """
    if len(children) != 2:
        raise ValueError("the chain builder supports exactly two children")
    y1, y2 = children
    eq1 = model.equation_for(y1)
    eq2 = model.equation_for(y2)
    exo_id = eq1.parents[-1]
    if eq2.parents[-1] != exo_id:
        raise ValueError(f"{y1!r} and {y2!r} do not share an exogenous parent")
    if model.endogenous_parents(y2) != (y1,):
        raise ValueError(f"topology is not the supported chain: {y2!r} must depend on {y1!r} only")
    x_parents = model.endogenous_parents(y1)
    x_sizes = [model.variable(p).domain_size for p in x_parents]
    q1 = model.variable(y1).domain_size
    q2 = model.variable(y2).domain_size
    p1 = int(np.prod(x_sizes)) if x_sizes else 1
    n1, n2 = q1**p1, q2**q1
    exo = model.variable(exo_id)
    if exo.domain_size != n1 * n2:
        raise ValueError(
            f"exogenous {exo_id!r} has {exo.domain_size} states, canonical chain domain needs {n1 * n2}"
        )
    want1, want2 = chain_tables(x_sizes, q1, q2)
    if eq1.table != want1 or eq2.table != want2:
        raise ValueError("chain equations are not in canonical form")
    functions = []
    composed = []
    for u in range(n1 * n2):
        f1 = base_q_digits(u // n2, q1, p1)
        f2 = base_q_digits(u % n2, q2, q1)
        functions.append((f1, f2))
        composed.append(tuple(f2[f1[x]] for x in range(p1)))
    return CanonicalDomain(
        exogenous_id=exo_id,
        children=(y1, y2),
        child_sizes=(q1, q2),
        parent_config_counts=(p1, q1),
        functions=tuple(functions),
        parent_ids=(x_parents, (y1,)),
        parent_sizes=(tuple(x_sizes), (q1,)),
        composed=tuple(composed),
    )


def extract_domain(model: PartialSCM, exogenous_id: str) -> CanonicalDomain:
    """Per-state mechanism listing for an exogenous variable as the model
    actually encodes it (canonical or reduced).

    Children are returned in dependency order; a two-child chain also gets
    its composed mechanism.
    """
    exo = model.variable(exogenous_id)
    if exo.kind != EXOGENOUS:
        raise ValueError(f"{exogenous_id!r} is not exogenous")
    kids = model.children_of(exogenous_id)
    if not kids:
        raise ValueError(f"{exogenous_id!r} has no children")
    topo = model.topological_order()
    kids = tuple(sorted(kids, key=topo.index))
    n_u = exo.domain_size
    child_sizes = []
    config_counts = []
    parent_ids = []
    parent_sizes = []
    per_child_tables = []
    for c in kids:
        eq = model.equation_for(c)
        endo = model.endogenous_parents(c)
        sizes = [model.variable(p).domain_size for p in endo]
        p = int(np.prod(sizes)) if sizes else 1
        child_sizes.append(model.variable(c).domain_size)
        config_counts.append(p)
        parent_ids.append(endo)
        parent_sizes.append(tuple(sizes))
        tables = []
        for u in range(n_u):
            tables.append(tuple(eq.table[x * n_u + u] for x in range(p)))
        per_child_tables.append(tables)
    functions = tuple(
        tuple(per_child_tables[ci][u] for ci in range(len(kids))) for u in range(n_u)
    )
    composed = None
    if len(kids) == 2 and model.endogenous_parents(kids[1]) == (kids[0],):
        composed = tuple(
            tuple(functions[u][1][functions[u][0][x]] for x in range(config_counts[0]))
            for u in range(n_u)
        )
    return CanonicalDomain(
        exogenous_id=exogenous_id,
        children=kids,
        child_sizes=tuple(child_sizes),
        parent_config_counts=tuple(config_counts),
        functions=functions,
        parent_ids=tuple(parent_ids),
        parent_sizes=tuple(parent_sizes),
        composed=composed,
        col_labels=exo.labels,
    )


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------


def reduce_model(model: PartialSCM, states: Iterable[tuple[str, int]]) -> PartialSCM:
    """Remove exogenous states, producing the sub-model where each removed
    state has probability zero.

    States are named by their original labels, so removals compose in any
    order. A prior restricted by the removal survives only if the kept mass
    still sums to 1 (the removed states carried no mass); otherwise the
    variable becomes unspecified.
    """
    removals: dict[str, set[int]] = {}
    for exo_id, label in states:
        removals.setdefault(exo_id, set()).add(int(label))

    by_id = {v.id: v for v in model.variables}
    for exo_id, labels in removals.items():
        if exo_id not in by_id or by_id[exo_id].kind != EXOGENOUS:
            raise ValueError(f"{exo_id!r} is not an exogenous variable")
        have = set(by_id[exo_id].labels)
        missing = labels - have
        if missing:
            raise ValueError(f"{exo_id!r} has no state(s) {sorted(missing)}")
        if labels == have:
            raise ValueError(f"cannot remove every state of {exo_id!r}")

    new_vars = []
    keep_pos: dict[str, list[int]] = {}
    for v in model.variables:
        if v.id in removals:
            labels = v.labels
            pos = [i for i, lbl in enumerate(labels) if lbl not in removals[v.id]]
            keep_pos[v.id] = pos
            new_vars.append(
                Variable(v.id, v.kind, len(pos), tuple(labels[i] for i in pos))
            )
        else:
            new_vars.append(v)

    new_eqs = []
    for eq in model.equations:
        exo_id = eq.parents[-1]
        if exo_id not in removals:
            new_eqs.append(eq)
            continue
        pos = keep_pos[exo_id]
        old_n = by_id[exo_id].domain_size
        n_cfg = len(eq.table) // old_n
        table = []
        for x in range(n_cfg):
            for i in pos:
                table.append(eq.table[x * old_n + i])
        new_eqs.append(StructuralEquation(eq.child, eq.parents, tuple(table)))

    new_priors = {}
    for uid, vec in model.priors.items():
        if uid in removals:
            restricted = tuple(vec[i] for i in keep_pos[uid])
            if abs(sum(restricted) - 1.0) <= PRIOR_TOL:
                new_priors[uid] = restricted
        else:
            new_priors[uid] = vec

    return PartialSCM(tuple(new_vars), tuple(new_eqs), new_priors, model.composites)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def evaluate_full_model(
    model: PartialSCM,
    targets: Sequence[str],
    do: Mapping[str, int] | None = None,
    observe: Mapping[str, int] | None = None,
) -> np.ndarray:
    """Exact distribution of the target variables in a fully specified model.

    Sums the joint exogenous states weighted by their priors and propagates
    the structural equations; do-assignments replace a child's equation by a
    constant, observations condition the result. The returned array has one
    axis per target, in the given order, and sums to 1.
    """
    do = dict(do or {})
    observe = dict(observe or {})
    by_id = {v.id: v for v in model.variables}
    endo_ids = {v.id for v in model.endogenous()}
    missing_eq = endo_ids - {eq.child for eq in model.equations}
    if missing_eq:
        raise ValueError(f"model is not fully specified: no equation for {sorted(missing_eq)}")
    exo = model.exogenous()
    missing_prior = {v.id for v in exo} - set(model.priors)
    if missing_prior:
        raise ValueError(f"model is not fully specified: no prior for {sorted(missing_prior)}")
    for vid in list(do) + list(observe) + list(targets):
        if vid not in by_id:
            raise KeyError(vid)

    topo = model.topological_order()
    eqs = {eq.child: eq for eq in model.equations}
    shape = tuple(by_id[t].domain_size for t in targets)
    out = np.zeros(shape if shape else (1,))
    total = 0.0
    exo_ids = [v.id for v in exo]
    exo_sizes = [v.domain_size for v in exo]
    for joint in itertools.product(*(range(s) for s in exo_sizes)):
        weight = 1.0
        for uid, u in zip(exo_ids, joint):
            weight *= model.priors[uid][u]
        if weight == 0.0:
            continue
        values = dict(zip(exo_ids, joint))
        for child in topo:
            if child in do:
                values[child] = do[child]
                continue
            eq = eqs[child]
            sizes = [by_id[p].domain_size for p in eq.parents]
            states = [values[p] for p in eq.parents]
            values[child] = eq.table[_joint_index(sizes, states)]
        if any(values[k] != v for k, v in observe.items()):
            continue
        total += weight
        idx = tuple(values[t] for t in targets)
        if shape:
            out[idx] += weight
        else:
            out[0] += weight
    if total <= 0.0:
        raise ValueError("conditioning on a zero-probability event")
    out /= total
    return out


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def model_to_dict(model: PartialSCM) -> dict:
    doc: dict = {
        "variables": [
            {
                "id": v.id,
                "kind": v.kind,
                "domain_size": v.domain_size,
                **({"state_labels": list(v.state_labels)} if v.state_labels is not None else {}),
            }
            for v in model.variables
        ],
        "equations": [
            {"child": eq.child, "parents": list(eq.parents), "table": list(eq.table)}
            for eq in model.equations
        ],
    }
    if model.priors:
        doc["priors"] = {k: list(v) for k, v in model.priors.items()}
    if model.composites:
        doc["composites"] = {k: [[c, s] for c, s in v] for k, v in model.composites.items()}
    return doc


def model_from_dict(doc: Mapping) -> PartialSCM:
    variables = tuple(
        Variable(
            d["id"],
            d["kind"],
            int(d["domain_size"]),
            tuple(d["state_labels"]) if "state_labels" in d else None,
        )
        for d in doc["variables"]
    )
    by_id = {v.id: v for v in variables}

    explicit = []
    canonical_entries = []
    for d in doc.get("equations", []):
        if d.get("canonical"):
            canonical_entries.append(d)
        else:
            explicit.append(StructuralEquation(d["child"], tuple(d["parents"]), tuple(d["table"])))

    # canonical entries grouped by their exogenous parent decide the builder
    by_exo: dict[str, list[Mapping]] = {}
    for d in canonical_entries:
        exo_id = d["parents"][-1]
        if exo_id not in by_id or by_id[exo_id].kind != EXOGENOUS:
            raise ValueError(f"canonical equation for {d['child']!r}: last parent must be exogenous")
        by_exo.setdefault(exo_id, []).append(d)

    generated = []
    for exo_id, entries in by_exo.items():
        if len(entries) == 1:
            d = entries[0]
            child = by_id[d["child"]]
            endo = [p for p in d["parents"][:-1]]
            sizes = [by_id[p].domain_size for p in endo]
            table = canonical_table(sizes, child.domain_size)
            generated.append(StructuralEquation(d["child"], tuple(d["parents"]), table))
        elif len(entries) == 2:
            kids = {d["child"]: d for d in entries}
            chain = None
            for a, b in itertools.permutations(kids, 2):
                endo_b = [p for p in kids[b]["parents"][:-1]]
                if endo_b == [a]:
                    chain = (a, b)
            if chain is None:
                raise ValueError(
                    f"canonical children of {exo_id!r} must form a chain (one feeds the other)"
                )
            y1, y2 = chain
            x_parents = [p for p in kids[y1]["parents"][:-1]]
            x_sizes = [by_id[p].domain_size for p in x_parents]
            t1, t2 = chain_tables(x_sizes, by_id[y1].domain_size, by_id[y2].domain_size)
            generated.append(StructuralEquation(y1, tuple(kids[y1]["parents"]), t1))
            generated.append(StructuralEquation(y2, tuple(kids[y2]["parents"]), t2))
        else:
            raise ValueError(f"canonical generation supports at most two children per exogenous variable")

    priors = {k: tuple(v) for k, v in doc.get("priors", {}).items()}
    composites = {
        k: tuple((c, int(s)) for c, s in v) for k, v in doc.get("composites", {}).items()
    }
    return PartialSCM(variables, tuple(explicit) + tuple(generated), priors, composites)


def save_model(model: PartialSCM, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2)
        fh.write("\n")


def load_model(path: str) -> PartialSCM:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
