import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfbounds import (
    STATUS_NEGATIVE,
    STATUS_OK,
    ConstraintSystem,
    ExtremePoint,
    Infeasible,
    build_markovian_system,
    build_semimarkovian_combined,
    build_semimarkovian_experimental,
    build_semimarkovian_observational,
    derive_evidence_from_model,
    dump_system_csv,
    exact_rank,
    extract_domain,
    generate_instance,
    restrict_columns,
    sample_true_model,
    solve_support,
    solve_supports_batch,
)

from conftest import PAIR_VERTEX_A


def _bits(rows):
    return np.array([[int(c) for c in row] for row in rows], dtype=np.int8)


# frozen coefficient matrices for the binary confounded chain; rows are
# keyed context-outer, target-inner, columns by exogenous state index

SINGLE_LINK_MATRIX = _bits(["1100", "0011", "1010", "0101"])

OBSERVATIONAL_MATRIX = _bits(
    [
        "1100110000000000",  # x=0, y1=0, y2=0
        "0011001100000000",  # x=0, y1=0, y2=1
        "0000000010101010",  # x=0, y1=1, y2=0
        "0000000001010101",  # x=0, y1=1, y2=1
        "1100000011000000",  # x=1, y1=0, y2=0
        "0011000000110000",  # x=1, y1=0, y2=1
        "0000101000001010",  # x=1, y1=1, y2=0
        "0000010100000101",  # x=1, y1=1, y2=1
    ]
)

EXPERIMENTAL_MATRIX = _bits(
    [
        "1111111100000000",  # do(x=0), y1=0
        "0000000011111111",  # do(x=0), y1=1
        "1111000011110000",  # do(x=1), y1=0
        "0000111100001111",  # do(x=1), y1=1
        "1100110011001100",  # do(y1=0), y2=0
        "0011001100110011",  # do(y1=0), y2=1
        "1010101010101010",  # do(y1=1), y2=0
        "0101010101010101",  # do(y1=1), y2=1
    ]
)

COMBINED_MATRIX = np.vstack([OBSERVATIONAL_MATRIX, EXPERIMENTAL_MATRIX[4:]])


@pytest.fixture(scope="module")
def pair_system(pair):
    model, evidence = pair
    return build_markovian_system(extract_domain(model, "R"), evidence)


@pytest.fixture(scope="module")
def chain_systems(chain_instance):
    model, evidence = chain_instance
    dom = extract_domain(model, "U")
    return {
        "obs": build_semimarkovian_observational(dom, evidence),
        "exp": build_semimarkovian_experimental(dom, evidence),
        "both": build_semimarkovian_combined(dom, evidence),
    }


# ---------- coefficient matrices, bit for bit ----------


def test_single_link_matrix(pair_system):
    assert np.array_equal(pair_system.matrix, SINGLE_LINK_MATRIX)
    assert pair_system.rhs == pytest.approx((0.462, 0.538, 0.323, 0.677))
    assert pair_system.col_labels == (0, 1, 2, 3)
    assert pair_system.n_states == 4


def test_observational_matrix(chain_systems):
    assert np.array_equal(chain_systems["obs"].matrix, OBSERVATIONAL_MATRIX)


def test_experimental_matrix(chain_systems):
    assert np.array_equal(chain_systems["exp"].matrix, EXPERIMENTAL_MATRIX)


def test_combined_matrix_stacks_observational_and_downstream_rows(chain_systems):
    assert np.array_equal(chain_systems["both"].matrix, COMBINED_MATRIX)
    assert chain_systems["both"].n_rows == 12
    assert chain_systems["both"].n_cols == 16


def test_experimental_system_is_a_markovian_system_in_disguise(chain_instance):
    # with only post-intervention tables, the chain system coincides with the
    # system of a single 2-state child under a 4-state parent
    from cfbounds import (
        Evidence,
        ObservationalTable,
        PartialSCM,
        StructuralEquation,
        Variable,
        canonical_table,
    )

    model, evidence = chain_instance
    semi = build_semimarkovian_experimental(extract_domain(model, "U"), evidence)

    p_y1_do_x = evidence.experimental_table("Y1", "X")
    p_y2_do_y1 = evidence.experimental_table("Y2", "Y1")
    stacked = np.concatenate([p_y1_do_x, p_y2_do_y1], axis=1)
    flat_model = PartialSCM(
        variables=(
            Variable("C", "endogenous", 2),
            Variable("P", "endogenous", 4),
            Variable("U_P", "exogenous", 4),
            Variable("W", "exogenous", 16),
        ),
        equations=(
            StructuralEquation("P", ("U_P",), canonical_table((), 4)),
            StructuralEquation("C", ("P", "W"), canonical_table((4,), 2)),
        ),
    )
    flat_evidence = Evidence(
        observational=(
            ObservationalTable(("P",), (), np.full(4, 0.25)),
            ObservationalTable(("C",), ("P",), stacked),
        ),
    )
    flat = build_markovian_system(extract_domain(flat_model, "W"), flat_evidence)
    assert np.array_equal(semi.matrix, flat.matrix)
    assert semi.rhs == pytest.approx(flat.rhs)


# ---------- exact rank ----------


def test_ranks_of_the_three_chain_systems(chain_systems):
    assert chain_systems["obs"].rank == 7
    assert chain_systems["exp"].rank == 5
    assert chain_systems["both"].rank == 9


def test_rank_of_the_single_link_system(pair_system):
    assert pair_system.rank == 3
    assert exact_rank(pair_system) == 3


# ---------- construction validation ----------


def test_blocks_must_sum_to_one():
    with pytest.raises(ValueError, match="sums to"):
        ConstraintSystem(
            matrix=np.array([[1, 0], [0, 1]], dtype=np.int8),
            rhs=np.array([0.3, 0.4]),
            row_labels=("a", "b"),
            col_labels=(0, 1),
            exogenous_id="U",
            n_states=2,
            row_blocks=(0, 0),
        )


def test_coefficients_must_be_binary():
    with pytest.raises(ValueError, match="0 or 1"):
        ConstraintSystem(
            matrix=np.array([[2, 0], [0, 1]], dtype=np.int8),
            rhs=np.array([0.5, 0.5]),
            row_labels=("a", "b"),
            col_labels=(0, 1),
            exogenous_id="U",
            n_states=2,
            row_blocks=(0, 0),
        )


# ---------- column restriction ----------


def test_restriction_keeps_dense_positions(pair_system):
    restricted = restrict_columns(pair_system, [0, 2, 3])
    assert restricted.col_labels == (0, 2, 3)
    assert restricted.n_states == 4
    assert restricted.n_cols == 3
    assert np.array_equal(restricted.matrix, pair_system.matrix[:, [0, 2, 3]])


def test_restricted_solutions_embed_into_the_dense_vector(pair_system):
    restricted = restrict_columns(pair_system, [0, 1, 3])
    point = solve_support(restricted, (0, 1, 2))
    assert isinstance(point, ExtremePoint)
    assert point.probabilities == pytest.approx(PAIR_VERTEX_A, abs=1e-9)
    assert point.probabilities.shape == (4,)


# ---------- support solving ----------


@pytest.mark.parametrize(
    "support,reason",
    [
        ((0, 1, 3), None),
        ((1, 2, 3), None),
        ((0, 1, 2), "negative"),
        ((0, 2, 3), "negative"),
        ((0, 1), "inconsistent"),
    ],
)
def test_support_outcomes(pair_system, support, reason):
    result = solve_support(pair_system, support)
    if reason is None:
        assert isinstance(result, ExtremePoint)
    else:
        assert isinstance(result, Infeasible)
        assert result.reason == reason


def test_identical_columns_make_a_support_rank_deficient(chain_systems):
    result = solve_support(chain_systems["obs"], (0, 1, 4, 5, 6, 7, 8))
    assert isinstance(result, Infeasible)
    assert result.reason == "rank-deficient"


def test_batch_agrees_with_single_solves(pair_system):
    supports = np.array([(0, 1, 3), (1, 2, 3), (0, 1, 2), (0, 2, 3)])
    points, status = solve_supports_batch(pair_system, supports)
    assert list(status) == [STATUS_OK, STATUS_OK, STATUS_NEGATIVE, STATUS_NEGATIVE]
    for s, point, st_code in zip(supports, points, status):
        single = solve_support(pair_system, tuple(int(v) for v in s))
        if st_code == STATUS_OK:
            assert isinstance(single, ExtremePoint)
            assert single.probabilities == pytest.approx(point)
        else:
            assert isinstance(single, Infeasible)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(min_value=0, max_value=10_000))
def test_solutions_satisfy_the_system(seed):
    model, evidence = generate_instance(seed)
    system = build_semimarkovian_observational(extract_domain(model, "U"), evidence)
    supports = np.array(
        [
            (0, 2, 4, 6, 8, 10, 12),
            (1, 3, 5, 7, 9, 11, 13),
            (2, 4, 6, 8, 10, 12, 15),
        ]
    )
    points, status = solve_supports_batch(system, supports)
    for dense, code in zip(points, status):
        if code != STATUS_OK:
            continue
        assert dense.sum() == pytest.approx(1.0, abs=1e-9)
        assert dense.min() >= -1e-9
        residual = system.matrix @ dense[list(system.col_labels)] - system.rhs
        assert np.abs(residual).max() <= 1e-7


# ---------- evidence derivation for the system builders ----------


def test_derived_evidence_matches_hand_computed_marginals():
    model = sample_true_model(23)
    evidence = derive_evidence_from_model(
        model,
        observational=[(("Y1", "Y2"), ("X",)), (("X",), ())],
        experimental=[("Y1", "X"), ("Y2", "Y1")],
    )
    joint = evidence.conditional(("Y1", "Y2"), ("X",))
    assert joint.shape == (2, 2, 2)
    assert joint.sum(axis=(0, 1)) == pytest.approx((1.0, 1.0))
    from cfbounds import evaluate_full_model

    full = evaluate_full_model(model, ("Y1", "Y2", "X"))
    marginal_x = full.sum(axis=(0, 1))
    assert joint == pytest.approx(full / marginal_x)


# ---------- CSV dump ----------


def test_system_csv_layout(tmp_path, pair_system):
    path = tmp_path / "system.csv"
    dump_system_csv(pair_system, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0].split(",")[0] == "row"
    assert lines[0].split(",")[1] == "u0"
    assert lines[0].split(",")[-1] == "rhs"
    assert len(lines) == 1 + pair_system.n_rows
