import numpy as np
import pytest

from groupcast import analytics as an
from groupcast import sharing_lp as slp
from groupcast import simulate as sim
from groupcast.channels import IidChannel
from groupcast.simplex import OPTIMAL


def test_case_probabilities_example():
    probs = slp.case_probabilities((0.2, 0.4, 0.6))
    assert probs[0] == pytest.approx(0.2 * 0.6 * 0.4, abs=1e-15)  # s = (0,1,1)
    assert probs.sum() == pytest.approx(1.0, abs=1e-12)


def test_case_times_fixed_entries():
    times = slp.case_completion_times((0.5, 0.5, 0.5))
    assert times[0].const == 2.0 and not times[0].coeffs
    assert times[1].const == 2.0 and times[3].const == 2.0
    assert times[6].const == 1.0
    assert times[7] is slp.CASE_8_SELF


def test_case_time_three_evaluations():
    # Guaranteed next-slot share finishes case 3 in two slots.
    policy = {name: 0.0 for name in slp.VAR_NAMES}
    policy.update({"p1->3": 0.4, "p2->3": 0.6})
    vals = slp.case_completion_times((0.2, 0.4, 0.6), policy)
    assert vals[2] == pytest.approx(2.0, abs=1e-12)
    # A lone middle holder that always broadcasts finishes in two slots.
    policy["p2->13"] = 1.0
    vals = slp.case_completion_times((0.1, 0.3, 0.8), policy)
    assert vals[4] == pytest.approx(2.0, abs=1e-12)


def test_case_times_require_sorted_input():
    with pytest.raises(ValueError):
        slp.case_completion_times((0.4, 0.2, 0.6))
    with pytest.raises(ValueError):
        slp.build_three_user_lp((0.2, 0.4, 1.0))


def test_lp_shape_counts():
    lp = slp.build_three_user_lp((0.2, 0.4, 0.6))
    assert lp.n_vars == 9
    assert lp.a_eq.shape == (6, 9)
    assert lp.a_ub.shape == (1, 9)
    # Box bounds are implicit on every variable: 2 per variable.
    assert 2 * lp.n_vars == 18
    assert "p1->23" in lp.to_text()


def test_symmetric_triple_is_feasible_and_optimal_at_two():
    sol, policy = slp.solve_three_user((0.5, 0.5, 0.5))
    assert sol.status == OPTIMAL
    assert sol.value == pytest.approx(2.0, abs=1e-9)
    residuals = slp.reciprocity_residuals((0.5, 0.5, 0.5), policy)
    assert np.all(residuals < 1e-9)


@pytest.mark.parametrize("p", [0.2, 0.5, 0.7])
def test_symmetric_lp_matches_uniform_share_formula(p):
    sol, _ = slp.solve_three_user((p, p, p))
    assert sol.value == pytest.approx(an.t_union_n_symmetric(p, 3), abs=1e-9)


def test_lp_policy_satisfies_printed_constraints():
    triple = (0.2, 0.4, 0.6)
    sol, policy = slp.solve_three_user(triple)
    residuals = slp.reciprocity_residuals(triple, policy)
    assert np.all(residuals < 1e-9)
    assert policy["p3->12"] == pytest.approx(1.0, abs=1e-9)
    assert policy["p2->1"] + policy["p3->1"] == pytest.approx(1.0, abs=1e-9)
    assert policy["p1->2"] + policy["p3->2"] == pytest.approx(1.0, abs=1e-9)
    assert policy["p1->3"] + policy["p2->3"] <= 1.0 + 1e-9
    for value in policy.values():
        assert -1e-9 <= value <= 1.0 + 1e-9


def test_lp_value_between_cooperation_and_no_sharing():
    rng = np.random.default_rng(11)
    for _ in range(40):
        triple = tuple(sorted(rng.uniform(0.05, 0.9, size=3)))
        sol, _ = slp.solve_three_user(triple)
        assert sol.value <= an.t_eq_asym(triple) + 1e-9
        # Full cooperation is a lower bound: every partial case takes 2 slots.
        probs = slp.case_probabilities(triple)
        t_full = (probs[7] + 2 * probs[:6].sum() + probs[6]) / (1.0 - probs[7])
        assert sol.value >= t_full - 1e-9


def test_lp_objective_equals_policy_evaluation():
    triple = (0.2, 0.4, 0.6)
    lp = slp.build_three_user_lp(triple)
    sol, policy = slp.solve_three_user(triple)
    times = slp.case_completion_times(triple, policy)
    probs = slp.case_probabilities(triple)
    value = (probs[7] + sum(p * t for p, t in zip(probs[:7], times[:7]))) / (1.0 - probs[7])
    assert sol.value == pytest.approx(value, abs=1e-9)


def test_simulating_lp_policy_reproduces_objective():
    triple = (0.2, 0.4, 0.6)
    sol, policy = slp.solve_three_user(triple)
    cfg = sim.DisseminationConfig(
        channels=tuple(IidChannel(p) for p in triple),
        policy=slp.policy_for_simulation(triple, policy),
        trials=200_000,
        seed=33,
    )
    stats = sim.simulate_completion(cfg)
    assert abs(stats.mean - sol.value) <= 3 * stats.std_error


def test_grouping_time_separate_known_value():
    # Perfect pair channels: the pair is done in one slot, the outsider
    # waits a geometric time, so the separate time is 1/(1-p3).
    t = slp.grouping_time_separate((0.0, 0.0, 0.6))
    assert t == pytest.approx(1.0 / 0.4, abs=1e-9)


def test_grouping_compare_reference_point():
    t_sep, t_grp, ratio = slp.grouping_compare((0.2, 0.4, 0.6))
    # Frozen from the chain solve and the LP, both cross-checked against
    # the Monte Carlo oracle.
    assert t_sep == pytest.approx(2.84260843925671, rel=1e-9)
    assert t_grp == pytest.approx(2.018686421937196, rel=1e-9)
    assert ratio == pytest.approx(1.4081475995310118, rel=1e-9)


def test_grouping_never_hurts_on_small_grid():
    values = (0.1, 0.3, 0.5, 0.7)
    for p1 in values:
        for p2 in values:
            for p3 in values:
                triple = tuple(sorted((p1, p2, p3)))
                _, _, ratio = slp.grouping_compare(triple)
                assert ratio >= 1.0 - 1e-9


def test_grouping_equal_worst_user_ratio_at_least_one():
    _, _, ratio = slp.grouping_compare((0.3, 0.5, 0.5))
    assert ratio >= 1.0 - 1e-9
