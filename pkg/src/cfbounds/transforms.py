"""Markovian approximations of confounded models.

Two rewrites remove a shared exogenous parent. The endogenous merge fuses
the confounded children into one product-domain variable with a fresh
canonical exogenous parent; used alone it widens bounds (a conservative
relaxation), and combined with the state mapping below it recovers the
exact confounded vertex set. The exogenous split instead gives each child
its own independent canonical parent, which is cheap but can produce
intervals that miss the true one.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass

import numpy as np

from .evidence import Evidence, ObservationalTable
from .model import (
    ENDOGENOUS,
    EXOGENOUS,
    CanonicalDomain,
    PartialSCM,
    StructuralEquation,
    Variable,
    canonical_table,
    digits_to_index,
)
from .search import SolutionSet
from .systems import NEGATIVITY_TOL, ExtremePoint

CHOICE_CAP = 2**20


@dataclass(frozen=True)
class MergeSpec:
    """What an endogenous merge did: which children were fused (in order),
    the external endogenous parents feeding the merged variable, and the
    exogenous variables the fresh canonical parent replaced."""

    exogenous_id: str
    merged_children: tuple[str, ...]
    merged_domain_size: int
    external_parents: tuple[str, ...]
    replaced_exogenous: tuple[str, ...]
    merged_variable_id: str
    merged_exogenous_id: str


@dataclass(frozen=True)
class StateMapping:
    """Correspondence between merged-domain states and original confounder
    states. forbidden lists merged states no original state realizes;
    groups sends each remaining merged state to the original states whose
    observational behavior is identical."""

    forbidden: frozenset[int]
    groups: dict[int, tuple[int, ...]]
    semi_exogenous_id: str
    semi_size: int
    merged_exogenous_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "forbidden", frozenset(int(f) for f in self.forbidden))
        object.__setattr__(
            self,
            "groups",
            {int(k): tuple(int(m) for m in v) for k, v in self.groups.items()},
        )
        if self.forbidden & set(self.groups):
            raise ValueError("forbidden states cannot also carry groups")


# ---------------------------------------------------------------------------
# endogenous merge
# ---------------------------------------------------------------------------


def _merge_closure(model: PartialSCM, exo_id: str) -> list[str]:
    """The set of endogenous variables that must merge together: the
    confounder's children, anything lying on a directed path between two
    members, and every child of any member's exogenous parent. Returned in
    topological order."""
    members = set(model.children_of(exo_id))
    if not members:
        raise ValueError(f"{exo_id!r} has no endogenous children")

    def ancestors(vid: str) -> set[str]:
        out: set[str] = set()
        stack = [vid]
        while stack:
            v = stack.pop()
            eq = model.equation_for(v)
            if eq is None:
                continue
            for p in model.endogenous_parents(v):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    changed = True
    while changed:
        changed = False
        anc = {v.id: ancestors(v.id) for v in model.variables if v.kind == ENDOGENOUS}
        for v in model.variables:
            if v.kind != ENDOGENOUS or v.id in members:
                continue
            above = [m for m in members if m in anc[v.id]]
            below = [m for m in members if v.id in anc[m]]
            if above and below:
                members.add(v.id)
                changed = True
        for m in list(members):
            exo = model.exogenous_parent(m)
            if exo is not None:
                for c in model.children_of(exo):
                    if c not in members:
                        members.add(c)
                        changed = True
    order = [v for v in model.topological_order() if v in members]
    return order


def endogenous_merge(model: PartialSCM, exo_id: str) -> tuple[PartialSCM, MergeSpec]:
    """Fuse the children of one confounder into a single product-domain
    variable whose mechanism set is the full canonical family.

    The merged model is Markovian by construction. Its exogenous parent
    ranges over every function from the external parents' joint domain to
    the product domain, which strictly contains the functions the original
    confounder could realize.
    """
    exo = model.variable(exo_id)
    if exo.kind != EXOGENOUS:
        raise ValueError(f"{exo_id!r} is not exogenous")
    if len(model.children_of(exo_id)) < 2:
        raise ValueError(
            f"{exo_id!r} has a single child; merging would be a no-op"
        )

    members = _merge_closure(model, exo_id)
    member_set = set(members)
    sizes = [model.variable(m).domain_size for m in members]
    merged_size = int(np.prod(sizes))
    replaced = []
    for m in members:
        p = model.exogenous_parent(m)
        if p is not None and p not in replaced:
            replaced.append(p)

    external: list[str] = []
    for m in members:
        for p in model.endogenous_parents(m):
            if p not in member_set and p not in external:
                external.append(p)
    x_sizes = tuple(model.variable(p).domain_size for p in external)

    taken = {v.id for v in model.variables}
    merged_id = "+".join(members)
    while merged_id in taken:
        merged_id += "'"
    merged_exo_id = exo_id + "*"
    while merged_exo_id in taken or merged_exo_id == merged_id:
        merged_exo_id += "'"

    n_configs = int(np.prod(x_sizes)) if x_sizes else 1
    merged_exo_size = merged_size**n_configs

    # digit radix of each member inside the merged value (row-major: the
    # first member is the most significant digit)
    radix = [int(np.prod(sizes[i + 1 :])) for i in range(len(sizes))]
    digit_of = {m: (radix[i], sizes[i]) for i, m in enumerate(members)}

    new_vars = [
        v
        for v in model.variables
        if v.id not in member_set and v.id not in set(replaced)
    ]
    new_vars.append(Variable(merged_id, ENDOGENOUS, merged_size))
    new_vars.append(Variable(merged_exo_id, EXOGENOUS, merged_exo_size))

    new_eqs: list[StructuralEquation] = []
    for eq in model.equations:
        if eq.child in member_set:
            continue
        if not any(p in member_set for p in eq.parents):
            new_eqs.append(eq)
            continue
        # rewire an outside consumer: member parents collapse to one merged
        # parent (inserted at the first member's slot), values recovered by
        # digit extraction
        old_parents = list(eq.parents)
        new_parents: list[str] = []
        for p in old_parents:
            rep = merged_id if p in member_set else p
            if rep not in new_parents:
                new_parents.append(rep)
        old_sizes = [model.variable(p).domain_size for p in old_parents]
        new_sizes = [
            merged_size if p == merged_id else model.variable(p).domain_size
            for p in new_parents
        ]
        table = []
        for cfg in itertools.product(*[range(s) for s in new_sizes]):
            val = dict(zip(new_parents, cfg))
            old_cfg = []
            for p in old_parents:
                if p in member_set:
                    r, s = digit_of[p]
                    old_cfg.append((val[merged_id] // r) % s)
                else:
                    old_cfg.append(val[p])
            idx = 0
            for s, v in zip(old_sizes, old_cfg):
                idx = idx * s + v
            table.append(eq.table[idx])
        new_eqs.append(StructuralEquation(eq.child, tuple(new_parents), tuple(table)))

    new_eqs.append(
        StructuralEquation(
            merged_id,
            tuple(external) + (merged_exo_id,),
            canonical_table(x_sizes, merged_size),
        )
    )

    new_priors = {k: v for k, v in model.priors.items() if k not in set(replaced)}
    new_composites = dict(model.composites)
    new_composites[merged_id] = tuple((m, model.variable(m).domain_size) for m in members)

    merged = PartialSCM(tuple(new_vars), tuple(new_eqs), new_priors, new_composites)
    spec = MergeSpec(
        exogenous_id=exo_id,
        merged_children=tuple(members),
        merged_domain_size=merged_size,
        external_parents=tuple(external),
        replaced_exogenous=tuple(replaced),
        merged_variable_id=merged_id,
        merged_exogenous_id=merged_exo_id,
    )
    return merged, spec


# ---------------------------------------------------------------------------
# exogenous split
# ---------------------------------------------------------------------------


def exogenous_split(model: PartialSCM, exo_id: str) -> PartialSCM:
    """Replace a two-child confounder with a fresh independent canonical
    exogenous parent per child. The result is Markovian but the confounding
    information is gone, so downstream bounds need not contain the true
    interval."""
    exo = model.variable(exo_id)
    if exo.kind != EXOGENOUS:
        raise ValueError(f"{exo_id!r} is not exogenous")
    children = model.children_of(exo_id)
    if len(children) != 2:
        raise ValueError(
            f"splitting needs exactly 2 children, {exo_id!r} has {len(children)}"
        )

    taken = {v.id for v in model.variables}
    new_ids = []
    for i in range(2):
        nid = f"{exo_id}_{i + 1}"
        while nid in taken:
            nid += "'"
        taken.add(nid)
        new_ids.append(nid)

    new_vars = [v for v in model.variables if v.id != exo_id]
    new_eqs: list[StructuralEquation] = []
    for eq in model.equations:
        if eq.child not in children:
            new_eqs.append(eq)
    for i, child in enumerate(children):
        q = model.variable(child).domain_size
        endo_parents = model.endogenous_parents(child)
        p_sizes = tuple(model.variable(p).domain_size for p in endo_parents)
        n_states = q ** int(np.prod(p_sizes)) if p_sizes else q
        new_vars.append(Variable(new_ids[i], EXOGENOUS, n_states))
        new_eqs.append(
            StructuralEquation(
                child, endo_parents + (new_ids[i],), canonical_table(p_sizes, q)
            )
        )

    new_priors = {k: v for k, v in model.priors.items() if k != exo_id}
    return PartialSCM(tuple(new_vars), tuple(new_eqs), new_priors, model.composites)


# ---------------------------------------------------------------------------
# evidence rewrites
# ---------------------------------------------------------------------------


def merged_evidence(evidence: Evidence, spec: MergeSpec) -> Evidence:
    """Re-index the joint observational table of the merged children onto
    the product variable; marginal tables over untouched variables carry
    over unchanged."""
    table = evidence.conditional(spec.merged_children, spec.external_parents)
    n_children = len(spec.merged_children)
    flat = table.reshape(spec.merged_domain_size, *table.shape[n_children:])
    merged_obs = ObservationalTable(
        targets=(spec.merged_variable_id,),
        context=spec.external_parents,
        table=flat,
    )
    kept = [
        t
        for t in evidence.observational
        if not (set(t.targets) & set(spec.merged_children))
        and not (set(t.context) & set(spec.merged_children))
    ]
    return Evidence(observational=tuple(kept) + (merged_obs,), experimental=())


def split_evidence(evidence: Evidence, model: PartialSCM, exo_id: str) -> Evidence:
    """Per-child conditional tables for the split model: each child gets
    P(child | its endogenous parents), derived from the stored joint."""
    children = model.children_of(exo_id)
    new_tables = []
    for child in children:
        ctx = model.endogenous_parents(child)
        table = evidence.conditional((child,), ctx)
        new_tables.append(ObservationalTable((child,), ctx, table))
    kept = [
        t
        for t in evidence.observational
        if not (set(t.targets) & set(children)) and not (set(t.context) & set(children))
    ]
    return Evidence(observational=tuple(kept) + tuple(new_tables), experimental=())


# ---------------------------------------------------------------------------
# state mapping
# ---------------------------------------------------------------------------


def build_state_mapping(
    semi_domain: CanonicalDomain, merged_domain: CanonicalDomain
) -> StateMapping:
    """Match each merged-domain state to the original confounder states that
    induce the same observable function from the external parents to the
    merged value. Merged states no original state induces are forbidden."""
    if len(merged_domain.children) != 1:
        raise ValueError("merged domain must have a single (product) child")
    merged_q = merged_domain.child_sizes[0]
    p = merged_domain.parent_config_counts[0]

    if len(semi_domain.children) == 1:
        # single-child trivial case: same signature means identical domains
        if (
            semi_domain.child_sizes != merged_domain.child_sizes
            or semi_domain.parent_config_counts != merged_domain.parent_config_counts
        ):
            raise ValueError("domains do not share the same signature")
        groups = {u: (u,) for u in range(semi_domain.size)}
        return StateMapping(
            frozenset(),
            groups,
            semi_domain.exogenous_id,
            semi_domain.size,
            merged_domain.exogenous_id,
        )

    if len(semi_domain.children) != 2 or semi_domain.composed is None:
        raise ValueError("original domain must be the two-child chain")
    q1 = semi_domain.child_sizes[0]
    q2 = semi_domain.child_sizes[1]
    if merged_q != q1 * q2 or p != semi_domain.parent_config_counts[0]:
        raise ValueError("domains do not share the same signature")

    groups: dict[int, list[int]] = {}
    for u in range(semi_domain.size):
        f1 = semi_domain.functions[u][0]
        comp = semi_domain.composed[u]
        digits = tuple(f1[x] * q2 + comp[x] for x in range(p))
        target = digits_to_index(digits, merged_q)
        groups.setdefault(target, []).append(u)
    forbidden = frozenset(range(merged_domain.size)) - set(groups)
    return StateMapping(
        forbidden,
        {k: tuple(v) for k, v in groups.items()},
        semi_domain.exogenous_id,
        semi_domain.size,
        merged_domain.exogenous_id,
    )


def map_extreme_points(merged: SolutionSet, mapping: StateMapping) -> SolutionSet:
    """Send merged-domain vertices back to the original confounder domain.

    Each merged vertex spreads into one original point per choice function
    that picks a member for every active multi-member group; the group's
    mass lands on the chosen member. Requires the merged search to have run
    with forbidden states restricted away (zero mass on all of them)."""
    points: dict[bytes, ExtremePoint] = {}
    capped = False
    for pt in merged.points:
        probs = pt.probabilities
        bad = [f for f in mapping.forbidden if probs[f] > NEGATIVITY_TOL]
        if bad:
            raise ValueError(
                f"merged point carries mass on forbidden state(s) {sorted(bad)}; "
                "run the merged search with forbidden states restricted away"
            )
        active = [u for u in sorted(mapping.groups) if probs[u] > NEGATIVITY_TOL]
        choice_sets = [mapping.groups[u] for u in active]
        n_choices = int(np.prod([len(c) for c in choice_sets])) if choice_sets else 1
        if n_choices > CHOICE_CAP:
            warnings.warn(
                f"group choice count {n_choices} exceeds cap {CHOICE_CAP}; "
                "mapped set truncated",
                RuntimeWarning,
            )
            capped = True
            choice_sets = [c[:1] for c in choice_sets]
        for pick in itertools.product(*choice_sets):
            vec = np.zeros(mapping.semi_size)
            for u_star, member in zip(active, pick):
                vec[member] = probs[u_star]
            mapped = ExtremePoint(mapping.semi_exogenous_id, vec)
            points.setdefault(mapped.key(), mapped)
    ordered = sorted(points.values(), key=lambda p: tuple(np.round(p.probabilities, 9)))
    return SolutionSet(
        mapping.semi_exogenous_id,
        tuple(ordered),
        complete=merged.complete and not capped,
    )


def marginalize_points(
    points: SolutionSet, component_sizes: tuple[int, ...], index: int
) -> SolutionSet:
    """Project joint-domain points onto one component of a product domain
    (the component order matches the joint index, first component most
    significant)."""
    n = int(np.prod(component_sizes))
    out: dict[bytes, ExtremePoint] = {}
    for pt in points.points:
        if pt.probabilities.shape[0] != n:
            raise ValueError("point length does not match the component sizes")
        arr = pt.probabilities.reshape(component_sizes)
        axes = tuple(i for i in range(len(component_sizes)) if i != index)
        marg = arr.sum(axis=axes) if axes else arr
        mapped = ExtremePoint(points.exogenous_id, np.asarray(marg, dtype=float))
        out.setdefault(mapped.key(), mapped)
    ordered = sorted(out.values(), key=lambda p: tuple(np.round(p.probabilities, 9)))
    return SolutionSet(points.exogenous_id, tuple(ordered), points.complete)


def dump_state_mapping_csv(mapping: StateMapping, path: str) -> None:
    """Two-column state correspondence: one row per (merged state, original
    state) pair, forbidden merged states listed with an empty second cell."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["merged_state", "original_state"])
        for u_star in range(
            max(itertools.chain(mapping.groups, mapping.forbidden), default=-1) + 1
        ):
            if u_star in mapping.forbidden:
                writer.writerow([u_star, ""])
            elif u_star in mapping.groups:
                for m in mapping.groups[u_star]:
                    writer.writerow([u_star, m])
