import math

import pytest

import massdeath as md


def test_rows_are_stochastic():
    p = md.ChainParams.from_ratio(2.0, 1.0)
    row = md.transition_row(p, 3, 0.5)
    assert abs(sum(row.weights) + row.tail_mass - 1.0) < 1e-12
    assert md.tail_R(p, md.StateDistribution.point_mass(3), 0, 0.5) == pytest.approx(1.0, abs=1e-12)


def test_equilibrium_is_invariant():
    p = md.ChainParams.from_ratio(1.0, 1.0)
    pi = md.equilibrium(p)
    out = md.propagate(p, pi, 2.0)
    for y in range(6):
        assert out.weight(y) == pytest.approx(md.equilibrium_pmf(p, y), abs=1e-10)


def test_link_and_estimator():
    value, d1, d2 = md.link(0.0)
    assert value == 1.0 and d1 == pytest.approx(0.5)
    assert md.solve_link(md.link(4.0)[0]) == pytest.approx(4.0, rel=1e-9)
    sample = md.sample_magnitudes(4.0, 20000, 5)
    assert sample == md.sample_magnitudes(4.0, 20000, 5)
    r = md.estimate_theta(sample)
    assert abs(r["theta_hat"] - 4.0) < 4 * md.asymptotic_se(4.0, 20000)
    assert md.estimate_theta([1, 1, 1])["se_asymptotic"] is None


def test_bounds_hold():
    p = md.ChainParams.from_ratio(1.0, 2.0)
    tau = md.StateDistribution.point_mass(5)
    for b in (md.kolmogorov_bound(p, tau, 1.0), md.gini_bound(p, tau, 1.0), md.moment_bound(p, tau, 2, 1.0)):
        assert b["holds"]


def test_prediction():
    p = md.ChainParams.from_ratio(1.0, 1.0)
    tau = md.StateDistribution.point_mass(0)
    assert md.tail_unseen(p, tau, [1.0, 2.0], [1, 1], 0) == pytest.approx(1.0)
    total = sum(md.tail_unseen(p, tau, [1.0, 2.0], [1, 1], xi) for xi in range(1, 100))
    assert md.expected_unseen(p, tau, [1.0, 2.0], [1, 1]) == pytest.approx(total, abs=1e-8)
    w, tail = md.weights(p, tau, [1.0, 2.0], [1, 1])
    assert math.isclose(sum(w) + tail, 1.0, abs_tol=1e-10)


def test_errors_map_to_python():
    p = md.ChainParams.from_ratio(3.0, 1.0)
    with pytest.raises(md.NumericalGuardError):
        md.tail_unseen(p, md.StateDistribution.point_mass(0), [0.01], [30], 0)
    with pytest.raises(ValueError):
        md.ChainParams.from_ratio(-1.0, 1.0)
    with pytest.raises(ValueError):
        md.tail_unseen(p, md.StateDistribution.point_mass(0), [2.0, 1.0], [1, 1], 0)


def test_simulation_is_seeded():
    p = md.ChainParams.from_ratio(1.5, 1.0)
    a = md.sample_path(p, md.StateDistribution.point_mass(2), 20.0, 9)
    assert a == md.sample_path(p, md.StateDistribution.point_mass(2), 20.0, 9)
    times, states = a
    assert len(states) == len(times) + 1 and states[0] == 2
