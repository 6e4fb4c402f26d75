import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfbounds import (
    NotComputableError,
    Query,
    QueryInterval,
    SolutionSet,
    bound_query,
    endogenous_merge,
    evaluate_combination,
    evaluate_full_model,
    evaluate_interventional,
    evaluate_pns,
    generate_instance,
    indicator_tensor,
    parse_query,
    sample_true_model,
    solve_credal,
)

# per-state coefficient sets: a twin-world query on the chain reads off a
# fixed subset of exogenous states
CHAIN_COEFFS = {
    ("Y1", "Y2"): (1, 5, 9, 13),
    ("X", "Y1"): (4, 5, 6, 7),
    ("X", "Y2"): (5, 10),
}

MERGED_COEFFS = {
    ("X", "Y1"): (2, 3, 6, 7),
    ("X", "Y2"): (1, 3, 9, 11),
}


# ---------- parsing and validation ----------


def test_parse_round_trip():
    q = parse_query("pns:X:Y2")
    assert (q.kind, q.cause, q.effect) == ("pns", "X", "Y2")
    assert (q.x, q.x_prime, q.y, q.y_prime) == (1, 0, 1, 0)
    assert q.name() == "pns:X:Y2"


def test_parse_explicit_states():
    q = parse_query("pns:A:B:0,1,0,1")
    assert (q.x, q.x_prime, q.y, q.y_prime) == (0, 1, 0, 1)


@pytest.mark.parametrize(
    "text",
    ["pns:X", "what:X:Y", "pns:X:X", "pns:A:B:1,1,1,0"],
)
def test_bad_queries_are_rejected(text):
    with pytest.raises(ValueError):
        parse_query(text)


def test_interval_orders_its_endpoints():
    with pytest.raises(ValueError):
        QueryInterval(0.7, 0.3, (), (), ())


# ---------- twin-world evaluation on fully specified models ----------


@pytest.mark.parametrize("cause,effect", list(CHAIN_COEFFS))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_twin_closed_forms(cause, effect, seed):
    model = sample_true_model(seed)
    pu = np.asarray(model.priors["U"])
    expected = sum(pu[s] for s in CHAIN_COEFFS[(cause, effect)])
    assert evaluate_pns(model, Query(cause, effect)) == pytest.approx(expected)


@pytest.mark.parametrize("seed", [0, 1])
def test_twin_queries_ignore_unrelated_exogenous_noise(seed):
    # the X-prior never enters a PNS involving only downstream mechanisms
    model = sample_true_model(seed)
    tensor = indicator_tensor(model, Query("Y1", "Y2"))
    assert tensor.shape == (2, 16)
    assert np.array_equal(tensor[0], tensor[1])
    hits = np.flatnonzero(tensor[0])
    assert tuple(hits) == CHAIN_COEFFS[("Y1", "Y2")]


def test_point_mass_identity_mechanism():
    # a point mass on the identity mechanism makes the middle link sufficient
    # and necessary at once
    from cfbounds import chain_model, PartialSCM

    skeleton = chain_model()
    pu = [0.0] * 16
    pu[5] = 1.0
    model = PartialSCM(
        skeleton.variables, skeleton.equations, {"U_0": (0.3, 0.7), "U": tuple(pu)}
    )
    assert evaluate_pns(model, Query("Y1", "Y2")) == pytest.approx(1.0)
    assert evaluate_interventional(model, "Y2", {"Y1": 1})[1] == pytest.approx(1.0)
    assert evaluate_interventional(model, "Y2", {"Y1": 0})[1] == pytest.approx(0.0)


def test_interventional_matches_direct_propagation():
    model = sample_true_model(9)
    direct = evaluate_full_model(model, ("Y2",), do={"X": 1})
    assert evaluate_interventional(model, "Y2", {"X": 1}) == pytest.approx(direct)


# ---------- bounding over solution sets ----------


@pytest.fixture(scope="module")
def solved(chain_instance):
    model, evidence = chain_instance
    return model, solve_credal(model, evidence, "s-o")


@pytest.mark.parametrize("cause,effect", list(CHAIN_COEFFS))
def test_bounds_contain_the_generating_model(chain_instance, solved, cause, effect):
    model, _ = chain_instance
    _, solutions = solved
    truth_model = sample_true_model(7)  # the instance generator's witness
    truth = evaluate_pns(truth_model, Query(cause, effect))
    interval = bound_query(solutions, model, Query(cause, effect))
    assert interval.lower - 1e-9 <= truth <= interval.upper + 1e-9
    assert 0.0 <= interval.lower <= interval.upper <= 1.0


@pytest.mark.parametrize("cause,effect", list(CHAIN_COEFFS))
def test_attaining_combinations_reproduce_the_endpoints(solved, cause, effect):
    model, solutions = solved
    query = Query(cause, effect)
    interval = bound_query(solutions, model, query)
    assert evaluate_combination(solutions, model, query, interval.arg_lower) == interval.lower
    assert evaluate_combination(solutions, model, query, interval.arg_upper) == interval.upper


def test_bound_interval_is_the_vertex_min_max(solved):
    model, solutions = solved
    query = Query("Y1", "Y2")
    coeffs = np.zeros(16)
    coeffs[list(CHAIN_COEFFS[("Y1", "Y2")])] = 1.0
    values = [float(coeffs @ p.probabilities) for p in solutions["U"].points]
    interval = bound_query(solutions, model, query)
    assert interval.lower == pytest.approx(min(values), abs=1e-12)
    assert interval.upper == pytest.approx(max(values), abs=1e-12)


def test_missing_solution_set_is_an_error(solved):
    model, solutions = solved
    partial = {"U": solutions["U"]}
    with pytest.raises(KeyError, match="U_0"):
        bound_query(partial, model, Query("X", "Y1"))


def test_empty_solution_set_is_infeasible_evidence(solved):
    model, solutions = solved
    hollow = dict(solutions)
    hollow["U"] = SolutionSet("U", (), complete=True)
    with pytest.raises(ValueError, match="infeasible evidence"):
        bound_query(hollow, model, Query("X", "Y1"))


# ---------- merged-model queries ----------


@pytest.fixture(scope="module")
def merged_solved(chain_instance):
    from cfbounds import merged_evidence, solve_regime

    model, evidence = chain_instance
    solution = solve_regime(model, evidence, "mm-o")
    return solution


def test_merged_closed_forms(merged_solved):
    solution = merged_solved
    model = solution.model
    for (cause, effect), states in MERGED_COEFFS.items():
        coeffs = np.zeros(16)
        coeffs[list(states)] = 1.0
        values = [
            float(coeffs @ p.probabilities)
            for p in solution.solutions["U*"].points
        ]
        interval = bound_query(solution.solutions, model, Query(cause, effect))
        assert interval.lower == pytest.approx(min(values), abs=1e-9)
        assert interval.upper == pytest.approx(max(values), abs=1e-9)


def test_merged_away_cause_is_not_computable(merged_solved):
    solution = merged_solved
    with pytest.raises(NotComputableError, match="merged into"):
        bound_query(solution.solutions, solution.model, Query("Y1", "Y2"))


# ---------- state-range validation ----------


def test_state_out_of_range_is_rejected(chain_instance):
    model, _ = chain_instance
    with pytest.raises(ValueError):
        indicator_tensor(model, Query("X", "Y1", y=2, y_prime=0))


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(min_value=0, max_value=1000))
def test_pns_is_a_probability(seed):
    model = sample_true_model(seed)
    for cause, effect in CHAIN_COEFFS:
        value = evaluate_pns(model, Query(cause, effect))
        assert -1e-12 <= value <= 1.0 + 1e-12
