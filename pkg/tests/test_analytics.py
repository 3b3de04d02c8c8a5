import math

import numpy as np
import pytest

from groupcast import analytics as an

TOL = 1e-12


# --- two symmetric users --------------------------------------------------


def test_t_eq_two_symmetric_values():
    assert an.t_eq_two_symmetric(0.0) == pytest.approx(1.0, abs=TOL)
    assert an.t_eq_two_symmetric(0.5) == pytest.approx(8.0 / 3.0, abs=TOL)
    assert an.t_eq_two_symmetric(0.9) == pytest.approx(2.8 / 0.19, abs=TOL)
    assert an.t_eq_two_symmetric(1.0) == math.inf


def test_t_neq_two_symmetric_values():
    assert an.t_neq_two_symmetric(0.0) == pytest.approx(2.0, abs=TOL)
    assert an.t_neq_two_symmetric(0.5) == pytest.approx(10.0 / 3.0, abs=TOL)
    assert an.t_neq_two_symmetric(0.5) / an.t_eq_two_symmetric(0.5) == pytest.approx(1.25, abs=TOL)
    assert an.t_neq_two_symmetric(1.0) == math.inf


def test_improvement_ratio_identify_values():
    assert an.improvement_ratio_identify(0.0) == pytest.approx(2.0, abs=TOL)
    assert an.improvement_ratio_identify(1.0) == pytest.approx(1.0, abs=TOL)
    assert an.improvement_ratio_identify(0.25) == pytest.approx(1.5, abs=TOL)


def test_improvement_ratio_identify_decreasing_convex():
    grid = np.arange(0.0, 1.0 + 1e-9, 0.01)
    vals = np.array([an.improvement_ratio_identify(p) for p in grid])
    diffs = np.diff(vals)
    assert np.all(diffs < 0)
    assert np.all(np.diff(diffs) >= -TOL)


def test_t_union_two_symmetric_values():
    assert an.t_union_two_symmetric(0.0) == pytest.approx(1.0, abs=TOL)
    assert an.t_union_two_symmetric(0.5) == pytest.approx(2.0, abs=TOL)
    assert an.t_union_two_symmetric(1.0) == math.inf
    assert an.t_eq_two_symmetric(0.5) / an.t_union_two_symmetric(0.5) == pytest.approx(
        4.0 / 3.0, abs=TOL
    )


def test_two_user_time_ordering_on_grid():
    for p in np.arange(0.0, 1.0, 0.01):
        t_u = an.t_union_two_symmetric(p)
        t_e = an.t_eq_two_symmetric(p)
        t_n = an.t_neq_two_symmetric(p)
        assert t_u <= t_e + TOL <= t_n + 2 * TOL


# --- symmetric groups -----------------------------------------------------


def test_t_eq_n_symmetric_values():
    assert an.t_eq_n_symmetric(0.5, 1) == pytest.approx(2.0, abs=TOL)
    assert an.t_eq_n_symmetric(0.5, 2) == pytest.approx(an.t_eq_two_symmetric(0.5), abs=TOL)
    assert an.t_eq_n_symmetric(0.2, 2) == pytest.approx(an.t_eq_two_symmetric(0.2), abs=TOL)
    assert an.t_eq_n_symmetric(1.0, 3) == math.inf
    with pytest.raises(ValueError):
        an.t_eq_n_symmetric(0.5, 0)


def test_t_eq_asym_consistency():
    assert an.t_eq_asym([0.5] * 4) == pytest.approx(an.t_eq_n_symmetric(0.5, 4), abs=1e-10)
    times, _, _ = an.asym_two_user(0.2, 0.4)
    assert an.t_eq_asym([0.2, 0.4]) == pytest.approx(times.t_eq, abs=1e-10)
    assert an.t_eq_asym([0.3]) == pytest.approx(1.0 / 0.7, abs=TOL)
    assert an.t_eq_asym([0.2, 1.0]) == math.inf


def test_t_union_n_symmetric_values():
    for n in range(1, 21):
        assert an.t_union_n_symmetric(0.5, n) == 2.0
    assert an.t_union_n_symmetric(0.3, 2) == pytest.approx(1.0 + 0.51 / 0.91, abs=TOL)
    assert an.t_union_n_symmetric(1.0, 4) == math.inf


def test_t_union_n_symmetric_monotonicity():
    low = [an.t_union_n_symmetric(0.2, n) for n in range(1, 21)]
    high = [an.t_union_n_symmetric(0.8, n) for n in range(1, 21)]
    assert all(b > a for a, b in zip(low, low[1:]))
    assert all(b < a for a, b in zip(high, high[1:]))
    assert abs(an.t_union_n_symmetric(0.2, 50) - 2.0) < 0.02
    assert abs(an.t_union_n_symmetric(0.8, 50) - 2.0) < 0.02


# --- two asymmetric users -------------------------------------------------


def test_asym_reduces_to_symmetric():
    for p in (0.0, 0.3, 0.7):
        times, p12, p21 = an.asym_two_user(p, p)
        assert p12 == pytest.approx(1.0, abs=TOL)
        assert p21 == 1.0
        assert times.t_union == pytest.approx(an.t_union_two_symmetric(p), abs=TOL)
        assert times.t_eq == pytest.approx(an.t_eq_two_symmetric(p), abs=TOL)


def test_asym_optimal_share_probability():
    _, p12, p21 = an.asym_two_user(0.2, 0.4)
    assert p12 == pytest.approx(0.375, abs=TOL)
    assert p21 == 1.0


def test_asym_rejects_unsorted():
    with pytest.raises(ValueError):
        an.asym_two_user(0.4, 0.2)
    with pytest.raises(ValueError):
        an.optimal_share_prob_asym(0.5, 0.1)


def test_asym_loss_matches_closed_form():
    for p1, p2 in ((0.2, 0.4), (0.1, 0.8), (0.3, 0.3), (0.0, 0.6)):
        times, _, _ = an.asym_two_user(p1, p2)
        assert times.t_union - times.t_full == pytest.approx(
            an.asym_loss_vs_full(p1, p2), abs=1e-10
        )


def test_asym_sandwich_and_loss_monotonicity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        p1, p2 = sorted(rng.uniform(0.02, 0.95, size=2))
        times, _, _ = an.asym_two_user(p1, p2)
        assert times.t_full <= times.t_union + TOL
        assert times.t_union <= times.t_eq + TOL
        if abs(p1 - p2) > 1e-12:
            assert times.t_union > times.t_full
    # Loss grows with the channel gap at fixed worse-channel quality.
    p2 = 0.6
    losses = [an.asym_loss_vs_full(p2 - d, p2) for d in (0.0, 0.1, 0.2, 0.3, 0.4)]
    assert all(b > a for a, b in zip(losses, losses[1:]))


def test_asym_equal_reciprocity_identity():
    for p1, p2 in ((0.2, 0.4), (0.05, 0.9), (0.5, 0.5), (0.3, 0.31)):
        _, p12, p21 = an.asym_two_user(p1, p2)
        assert (1.0 - p2) * p1 * p21 == pytest.approx((1.0 - p1) * p2 * p12, abs=TOL)


def test_asym_degenerate_perfect_channels():
    _, p12, p21 = an.asym_two_user(0.0, 0.0)
    assert (p12, p21) == (1.0, 1.0)
    _, p12, _ = an.asym_two_user(0.0, 0.5)
    assert p12 == 0.0  # the better user never owes anything


# --- Markov channels ------------------------------------------------------


def test_markov_two_symmetric_values():
    t_eq, t_union, ratio = an.markov_two_symmetric(0.5, 0.5)
    assert t_eq == pytest.approx(an.t_eq_two_symmetric(0.5), abs=TOL)
    assert ratio == pytest.approx(4.0 / 3.0, abs=TOL)
    _, _, ratio_fast = an.markov_two_symmetric(1.0, 0.0)
    assert ratio_fast == pytest.approx(1.0, abs=TOL)
    t_eq, t_union, ratio = an.markov_two_symmetric(0.25, 0.25)
    assert (t_eq, t_union, ratio) == (pytest.approx(4.0), pytest.approx(2.0), pytest.approx(2.0))
    # Along the i.i.d. embedding (zeta_01 = 1-p_e, zeta_10 = p_e) the
    # vanishing-recovery limit reproduces the p_e -> 1 ratio of 3.
    _, _, ratio_slow = an.markov_two_symmetric(0.001, 0.999)
    assert abs(ratio_slow - 3.0) < 0.01


def test_markov_absorbing_off_is_infinite():
    t_eq, t_union, ratio = an.markov_two_symmetric(0.0, 0.5)
    assert t_eq == math.inf and t_union == math.inf


# --- lossy local link -----------------------------------------------------


def test_unreliable_local_values():
    for p in (0.1, 0.5, 0.8):
        p_star, t_union, ratio = an.unreliable_local_two_symmetric(p, 0.0)
        assert p_star == 1.0
        assert t_union == pytest.approx(an.t_union_two_symmetric(p), abs=TOL)
    _, _, ratio = an.unreliable_local_two_symmetric(0.5, 0.5)
    assert ratio == pytest.approx(1.0, abs=TOL)
    _, _, ratio = an.unreliable_local_two_symmetric(0.5, 0.25)
    assert ratio == pytest.approx(1.2, abs=TOL)
    p_star, t_union, ratio = an.unreliable_local_two_symmetric(0.3, 0.6)
    assert p_star == 0.0
    assert t_union == pytest.approx(an.t_eq_two_symmetric(0.3), abs=TOL)
    assert ratio == 1.0


# --- per-user utility -----------------------------------------------------


def test_utility_values():
    u2 = an.utility_n_symmetric(0.5, 2)
    assert u2.download == pytest.approx(0.25, abs=TOL)
    assert u2.upload == pytest.approx(0.375, abs=TOL)
    assert u2.ratio == pytest.approx(2.0 / 3.0, abs=TOL)
    u3 = an.utility_n_symmetric(0.5, 3)
    assert u3.download == pytest.approx(0.375, abs=TOL)
    assert u3.upload == pytest.approx(0.29166666666666663, abs=1e-12)
    assert u3.ratio == pytest.approx(9.0 / 7.0, abs=TOL)


def test_utility_degenerate_p_zero():
    u = an.utility_n_symmetric(0.0, 4)
    # The printed accounting keeps a positive upload term even though no
    # transmission can ever be needed; the download side is zero.
    assert u.download == 0.0
    assert u.upload == pytest.approx(0.25, abs=TOL)


def test_utility_upload_closed_sum():
    # The binomial sum telescopes to (1 - p^N) / N.
    for p in (0.3, 0.5, 0.7):
        for n in range(2, 9):
            u = an.utility_n_symmetric(p, n)
            assert u.upload == pytest.approx((1.0 - p**n) / n, abs=1e-12)


# --- scheduler stability bounds -------------------------------------------


def test_stability_bounds_values():
    assert an.stability_bounds_two_symmetric(0.0) == (1.0, 1.0, 1.0)
    c, d, r = an.stability_bounds_two_symmetric(0.5)
    assert (c, d, r) == (pytest.approx(0.75), pytest.approx(0.5), pytest.approx(1.5))
    c, d, r = an.stability_bounds_two_symmetric(1.0)
    assert c == 0.0 and d == 0.0 and r == pytest.approx(1.0)


def test_stability_ratio_peaks_at_half():
    grid = np.arange(0.0, 1.0 + 1e-9, 0.01)
    ratios = [an.stability_bounds_two_symmetric(p)[2] for p in grid]
    assert grid[int(np.argmax(ratios))] == pytest.approx(0.5, abs=1e-9)
