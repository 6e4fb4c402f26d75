#!/usr/bin/env python3
"""Worked example: bound an unobservable response distribution from data.

A binary treatment T feeds a binary outcome S. The response of S to T is
governed by a four-state exogenous selector R whose distribution is never
observed directly; the observed conditionals P(S | T) pin it down only to a
line segment. This script builds the model, enumerates the segment's two
endpoints, and turns them into bounds on the probability that the treatment
is both necessary and sufficient for the outcome.
"""

import numpy as np

from cfbounds import (
    Evidence,
    ObservationalTable,
    PartialSCM,
    Query,
    StructuralEquation,
    Variable,
    bound_query,
    canonical_table,
    solve_credal,
)


def build_model():
    return PartialSCM(
        variables=(
            Variable("T", "endogenous", 2),
            Variable("S", "endogenous", 2),
            Variable("Q", "exogenous", 2),
            Variable("R", "exogenous", 4),
        ),
        equations=(
            StructuralEquation("T", ("Q",), canonical_table((), 2)),
            StructuralEquation("S", ("T", "R"), canonical_table((2,), 2)),
        ),
    )


def main():
    model = build_model()
    evidence = Evidence(
        observational=(
            ObservationalTable(("T",), (), np.array([0.337, 0.663])),
            ObservationalTable(
                ("S",), ("T",), np.array([[0.462, 0.323], [0.538, 0.677]])
            ),
        )
    )

    solutions = solve_credal(model, evidence, "markov")
    segment = solutions["R"]
    print(f"selector distribution is pinned to {segment.n_points} extreme points:")
    for point in segment.points:
        rounded = ", ".join(f"{v:.3f}" for v in point.probabilities)
        print(f"  ({rounded})")

    interval = bound_query(solutions, model, Query("T", "S"))
    print(
        "\nprobability that T=1 is necessary and sufficient for S=1: "
        f"[{interval.lower:.3f}, {interval.upper:.3f}]"
    )


if __name__ == "__main__":
    main()
