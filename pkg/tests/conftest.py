"""Shared fixtures: a tiny two-variable worked model plus seeded chain instances."""

import numpy as np
import pytest

from cfbounds import (
    Evidence,
    ObservationalTable,
    PartialSCM,
    StructuralEquation,
    Variable,
    canonical_table,
    chain_model,
    generate_instance,
)


def treated_pair() -> tuple[PartialSCM, Evidence]:
    """Binary T -> S with a 4-state canonical exogenous parent R behind S.

    The evidence pins P(T) exactly and constrains P(R) to a one-dimensional
    polytope with exactly two vertices, which makes every solver layer easy
    to check by hand.
    """
    model = PartialSCM(
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
    evidence = Evidence(
        observational=(
            ObservationalTable(("T",), (), np.array([0.337, 0.663])),
            ObservationalTable(
                ("S",), ("T",), np.array([[0.462, 0.323], [0.538, 0.677]])
            ),
        ),
    )
    return model, evidence


# the two vertices of the treated-pair polytope for P(R)
PAIR_VERTEX_A = (0.323, 0.139, 0.0, 0.538)
PAIR_VERTEX_B = (0.0, 0.462, 0.323, 0.215)


@pytest.fixture(scope="session")
def pair():
    return treated_pair()


@pytest.fixture(scope="session")
def chain():
    return chain_model()


@pytest.fixture(scope="session")
def chain_instance():
    """One fully seeded chain instance with internally consistent evidence."""
    return generate_instance(7)
