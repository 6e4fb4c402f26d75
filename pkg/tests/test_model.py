import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfbounds import (
    PartialSCM,
    StructuralEquation,
    Variable,
    base_q_digits,
    build_canonical_markovian,
    build_canonical_semimarkovian_chain,
    canonical_table,
    chain_model,
    chain_tables,
    digits_to_index,
    evaluate_full_model,
    extract_domain,
    load_model,
    model_from_dict,
    model_to_dict,
    reduce_model,
    sample_true_model,
    save_model,
)

# ---------- digit encoding ----------


def test_digits_are_most_significant_first():
    assert base_q_digits(6, 2, 4) == (0, 1, 1, 0)
    assert base_q_digits(11, 2, 4) == (1, 0, 1, 1)
    assert base_q_digits(5, 3, 3) == (0, 1, 2)
    assert digits_to_index((0, 1, 1, 0), 2) == 6


@given(
    q=st.integers(min_value=2, max_value=5),
    p=st.integers(min_value=1, max_value=4),
    data=st.data(),
)
def test_digit_round_trip(q, p, data):
    i = data.draw(st.integers(min_value=0, max_value=q**p - 1))
    digits = base_q_digits(i, q, p)
    assert len(digits) == p
    assert all(0 <= d < q for d in digits)
    assert digits_to_index(digits, q) == i


# ---------- canonical mechanism tables ----------


def test_canonical_table_without_parents_is_identity():
    assert canonical_table((), 2) == (0, 1)
    assert canonical_table((), 3) == (0, 1, 2)


def test_canonical_table_single_binary_parent():
    # column u enumerates all functions {0, x, not-x, 1} of the parent,
    # with the value at parent=0 as the high digit
    assert canonical_table((2,), 2) == (0, 0, 1, 1, 0, 1, 0, 1)


def test_canonical_table_general_entry():
    table = canonical_table((2, 2), 2)
    n_states = 16
    for config in range(4):
        for u in range(n_states):
            assert table[config * n_states + u] == base_q_digits(u, 2, 4)[config]


def test_chain_tables_split_the_state_in_two_factors():
    t1, t2 = chain_tables((2,), 2, 2)
    for x in range(2):
        for u in range(16):
            assert t1[x * 16 + u] == base_q_digits(u // 4, 2, 2)[x]
    for y1 in range(2):
        for u in range(16):
            assert t2[y1 * 16 + u] == base_q_digits(u % 4, 2, 2)[y1]


# ---------- domains ----------


def test_markovian_domain_of_single_child(pair):
    model, _ = pair
    dom = extract_domain(model, "R")
    assert dom.size == 4
    assert dom.parent_ids == (("T",),)
    assert dom.parent_sizes == ((2,),)
    assert dom.col_labels == (0, 1, 2, 3)
    assert dom.composed is None


def test_confounded_chain_domain(chain):
    dom = extract_domain(chain, "U")
    assert dom.size == 16
    assert dom.parent_ids == (("X",), ("Y1",))
    # state 5 composes to the identity map, state 14 to the constant 0 map
    assert dom.composed[5] == (0, 1)
    assert dom.composed[14] == (0, 0)
    # first factor of state 14 is the constant 1 map, second negates
    t1, t2 = chain_tables((2,), 2, 2)
    assert (t1[0 * 16 + 14], t1[1 * 16 + 14]) == (1, 1)
    assert (t2[0 * 16 + 14], t2[1 * 16 + 14]) == (1, 0)


def test_chain_builder_matches_extraction(chain):
    built = build_canonical_semimarkovian_chain(("Y1", "Y2"), chain)
    extracted = extract_domain(chain, "U")
    assert built.size == extracted.size
    assert built.composed == extracted.composed


def test_merged_domain_is_an_ordinary_markovian_domain():
    # a 4-state child of a binary parent has 4^2 mechanism states
    model = PartialSCM(
        variables=(
            Variable("X", "endogenous", 2),
            Variable("Y", "endogenous", 4),
            Variable("U_0", "exogenous", 2),
            Variable("W", "exogenous", 16),
        ),
        equations=(
            StructuralEquation("X", ("U_0",), canonical_table((), 2)),
            StructuralEquation("Y", ("X", "W"), canonical_table((2,), 4)),
        ),
    )
    dom = build_canonical_markovian("Y", model)
    assert dom.size == 16
    assert dom.parent_ids == (("X",),)


# ---------- structure ----------


def test_topological_order(chain):
    assert chain.topological_order() == ("X", "Y1", "Y2")


def test_exogenous_parent_is_last_in_every_equation(chain):
    for eq in chain.equations:
        assert chain.variable(eq.parents[-1]).kind == "exogenous"


def test_parent_cycle_is_rejected():
    with pytest.raises(ValueError):
        PartialSCM(
            variables=(
                Variable("A", "endogenous", 2),
                Variable("B", "endogenous", 2),
                Variable("U_A", "exogenous", 4),
                Variable("U_B", "exogenous", 4),
            ),
            equations=(
                StructuralEquation("A", ("B", "U_A"), canonical_table((2,), 2)),
                StructuralEquation("B", ("A", "U_B"), canonical_table((2,), 2)),
            ),
        )


def test_wrong_table_length_is_rejected():
    with pytest.raises(ValueError):
        PartialSCM(
            variables=(
                Variable("A", "endogenous", 2),
                Variable("U_A", "exogenous", 2),
            ),
            equations=(StructuralEquation("A", ("U_A",), (0, 1, 0)),),
        )


# ---------- reduction ----------


def test_reduction_drops_states(chain):
    reduced = reduce_model(chain, [("U", s) for s in range(9)])
    dom = extract_domain(reduced, "U")
    assert dom.size == 7
    assert dom.col_labels == (9, 10, 11, 12, 13, 14, 15)


@settings(max_examples=30, deadline=None)
@given(
    states=st.sets(st.integers(min_value=0, max_value=15), min_size=1, max_size=8),
    data=st.data(),
)
def test_reduction_is_idempotent_and_order_free(states, data):
    chain = chain_model()
    pairs = [("U", s) for s in sorted(states)]
    shuffled = data.draw(st.permutations(pairs))
    once = reduce_model(chain, pairs)
    other = reduce_model(chain, shuffled)
    assert extract_domain(once, "U").col_labels == extract_domain(other, "U").col_labels
    again = reduce_model(once, [])
    assert extract_domain(again, "U").col_labels == extract_domain(once, "U").col_labels


# ---------- full-model evaluation ----------


def test_joint_distribution_sums_to_one():
    model = sample_true_model(3)
    joint = evaluate_full_model(model, ("X", "Y1", "Y2"))
    assert joint.shape == (2, 2, 2)
    assert joint.sum() == pytest.approx(1.0)
    assert evaluate_full_model(model, ("X",)) == pytest.approx(model.priors["U_0"])


def test_intervention_replaces_the_mechanism():
    model = sample_true_model(3)
    pu = np.asarray(model.priors["U"])
    t1, _ = chain_tables((2,), 2, 2)
    for x in range(2):
        expected = sum(pu[u] for u in range(16) if t1[x * 16 + u] == 1)
        got = evaluate_full_model(model, ("Y1",), do={"X": x})[1]
        assert got == pytest.approx(expected)


def test_observation_conditions_the_result():
    model = sample_true_model(5)
    joint = evaluate_full_model(model, ("Y1", "X"))
    conditional = evaluate_full_model(model, ("Y1",), observe={"X": 1})
    assert conditional == pytest.approx(joint[:, 1] / joint[:, 1].sum())


# ---------- serialization ----------


def test_dict_round_trip(chain):
    doc = model_to_dict(chain)
    back = model_from_dict(doc)
    assert back.topological_order() == chain.topological_order()
    for eq in chain.equations:
        assert back.equation_for(eq.child).table == eq.table
        assert back.equation_for(eq.child).parents == eq.parents


def test_file_round_trip_keeps_priors(tmp_path):
    model = sample_true_model(11)
    path = tmp_path / "model.json"
    save_model(model, str(path))
    back = load_model(str(path))
    assert back.priors["U"] == pytest.approx(model.priors["U"])
    assert back.priors["U_0"] == pytest.approx(model.priors["U_0"])


def test_round_trip_keeps_composites(chain):
    merged_doc = model_to_dict(chain)
    assert model_from_dict(merged_doc).composites == chain.composites
