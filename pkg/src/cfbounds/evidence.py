"""Empirical evidence tables: observational conditionals and post-intervention
conditionals, plus the derivations the solvers need.

Tables are stored dense with target axes first and context axes last, in the
declared variable order. Every conditional slice (fixed context / fixed
intervention value) must sum to 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .model import PartialSCM

SLICE_TOL = 1e-9


@dataclass(frozen=True)
class ObservationalTable:
    targets: tuple[str, ...]
    context: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "context", tuple(self.context))
        arr = np.asarray(self.table, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)
        if arr.ndim != len(self.targets) + len(self.context):
            raise ValueError(
                f"table for {self.targets}|{self.context} has wrong number of axes"
            )
        if arr.min() < 0.0:
            raise ValueError("probability tables must be nonnegative")
        sums = arr.sum(axis=tuple(range(len(self.targets))))
        if np.max(np.abs(sums - 1.0)) > SLICE_TOL:
            raise ValueError(
                f"conditional slices of {self.targets}|{self.context} must sum to 1"
            )


@dataclass(frozen=True)
class ExperimentalTable:
    target: str
    do: str
    table: np.ndarray  # axes (target, do-value)

    def __post_init__(self) -> None:
        arr = np.asarray(self.table, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "table", arr)
        if arr.ndim != 2:
            raise ValueError(f"table for {self.target}|do({self.do}) must have axes (target, do)")
        if arr.min() < 0.0:
            raise ValueError("probability tables must be nonnegative")
        sums = arr.sum(axis=0)
        if np.max(np.abs(sums - 1.0)) > SLICE_TOL:
            raise ValueError(f"slices of {self.target}|do({self.do}) must sum to 1")


@dataclass(frozen=True)
class Evidence:
    observational: tuple[ObservationalTable, ...] = ()
    experimental: tuple[ExperimentalTable, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "observational", tuple(self.observational))
        object.__setattr__(self, "experimental", tuple(self.experimental))

    # -- lookups --------------------------------------------------------------

    def observational_table(
        self, targets: Sequence[str], context: Sequence[str]
    ) -> np.ndarray | None:
        """Exact-match lookup, up to reordering of target and context axes."""
        t_want, c_want = tuple(targets), tuple(context)
        for obs in self.observational:
            if set(obs.targets) == set(t_want) and set(obs.context) == set(c_want):
                perm = [obs.targets.index(t) for t in t_want] + [
                    len(obs.targets) + obs.context.index(c) for c in c_want
                ]
                return np.transpose(obs.table, perm)
        return None

    def experimental_table(self, target: str, do: str) -> np.ndarray | None:
        for exp in self.experimental:
            if exp.target == target and exp.do == do:
                return exp.table
        return None

    def conditional(self, targets: Sequence[str], context: Sequence[str]) -> np.ndarray:
        """P(targets | context), looked up directly or derived.

        Derivations supported:
        - marginalizing extra target axes of a stored table over the same
          context;
        - collapsing a stored table's context with its stored marginal to form
          a joint, then conditioning on the requested context.
        """
        direct = self.observational_table(targets, context)
        if direct is not None:
            return direct

        t_want, c_want = tuple(targets), tuple(context)

        # rule A: drop extra target axes
        for obs in self.observational:
            if set(obs.context) == set(c_want) and set(t_want) <= set(obs.targets):
                extra = [i for i, t in enumerate(obs.targets) if t not in t_want]
                reduced = obs.table.sum(axis=tuple(extra)) if extra else obs.table
                kept = [t for t in obs.targets if t in t_want]
                perm = [kept.index(t) for t in t_want] + [
                    len(kept) + obs.context.index(c) for c in c_want
                ]
                return np.transpose(reduced, perm)

        # rule B: collapse the stored context with its marginal, then condition
        needed = set(t_want) | set(c_want)
        for obs in self.observational:
            if not needed <= set(obs.targets):
                continue
            joint = obs.table
            if obs.context:
                marginal = self.observational_table(obs.context, ())
                if marginal is None:
                    continue
                n_t = len(obs.targets)
                joint = joint * marginal[(None,) * n_t]
                joint = joint.sum(axis=tuple(range(n_t, joint.ndim)))
            # joint now spans obs.targets
            drop = [i for i, t in enumerate(obs.targets) if t not in needed]
            if drop:
                joint = joint.sum(axis=tuple(drop))
            names = [t for t in obs.targets if t in needed]
            perm = [names.index(t) for t in t_want] + [names.index(c) for c in c_want]
            joint = np.transpose(joint, perm)
            denom = joint.sum(axis=tuple(range(len(t_want))))
            if np.any(denom <= 0.0):
                raise ValueError(f"conditioning on a zero-probability context {c_want}")
            return joint / denom
        raise KeyError(f"evidence cannot provide P({t_want} | {c_want})")


def derive_evidence_from_model(
    model: PartialSCM,
    observational: Sequence[tuple[Sequence[str], Sequence[str]]] = (),
    experimental: Sequence[tuple[str, str]] = (),
) -> Evidence:
    """Exact evidence tables computed from a fully specified model.

    observational lists (targets, context) pairs, experimental lists
    (target, do-variable) pairs.
    """
    from .model import evaluate_full_model

    obs_tables = []
    for targets, context in observational:
        targets, context = tuple(targets), tuple(context)
        joint = evaluate_full_model(model, list(targets) + list(context))
        if context:
            denom = joint.sum(axis=tuple(range(len(targets))))
            if np.any(denom <= 0.0):
                raise ValueError(f"context {context} has zero-probability cells")
            table = joint / denom
        else:
            table = joint
        obs_tables.append(ObservationalTable(targets, context, table))

    exp_tables = []
    for target, do_var in experimental:
        n_do = model.variable(do_var).domain_size
        cols = []
        for v in range(n_do):
            cols.append(evaluate_full_model(model, [target], do={do_var: v}))
        exp_tables.append(ExperimentalTable(target, do_var, np.stack(cols, axis=1)))

    return Evidence(tuple(obs_tables), tuple(exp_tables))


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------


def evidence_to_dict(evidence: Evidence) -> dict:
    return {
        "observational": [
            {
                "targets": list(o.targets),
                "context": list(o.context),
                "table": [float(x) for x in o.table.reshape(-1)],
            }
            for o in evidence.observational
        ],
        "experimental": [
            {
                "target": e.target,
                "do": e.do,
                "table": [float(x) for x in e.table.reshape(-1)],
            }
            for e in evidence.experimental
        ],
    }


def evidence_from_dict(doc: Mapping, model: PartialSCM) -> Evidence:
    """Parse the flat row-major tables; axis sizes come from the model."""
    obs = []
    for d in doc.get("observational", []):
        targets = tuple(d["targets"])
        context = tuple(d.get("context", []))
        shape = tuple(model.variable(v).domain_size for v in targets + context)
        obs.append(
            ObservationalTable(targets, context, np.asarray(d["table"], dtype=float).reshape(shape))
        )
    exp = []
    for d in doc.get("experimental", []):
        target, do_var = d["target"], d["do"]
        shape = (model.variable(target).domain_size, model.variable(do_var).domain_size)
        exp.append(
            ExperimentalTable(target, do_var, np.asarray(d["table"], dtype=float).reshape(shape))
        )
    return Evidence(tuple(obs), tuple(exp))


def save_evidence(evidence: Evidence, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(evidence_to_dict(evidence), fh, indent=2)
        fh.write("\n")


def load_evidence(path: str, model: PartialSCM) -> Evidence:
    with open(path, "r", encoding="utf-8") as fh:
        return evidence_from_dict(json.load(fh), model)
