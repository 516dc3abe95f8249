import numpy as np
import pytest

from sseplab import SystemParams, RandomSource
from sseplab import walks
from sseplab.operators import (pair_chain_2d, reflected_pair_chain_2d,
                               reflected_chain_1d, diagonal_indices,
                               pair_states)


def _diag_targets(n):
    return [(x, x + 1) for x in range(1, n - 1)]


@pytest.mark.parametrize("n", [5, 12, 32])
def test_diagonal_occupation_closed_form(n):
    p = SystemParams(n, 0.0, 0.2, 0.8)
    op = pair_chain_2d(p)
    T = walks.occupation_field(op, _diag_targets(n))
    for (x, y) in op.states:
        ref = walks.diagonal_occupation_closed_form(n, x, y)
        assert abs(T[op.index[(x, y)]] - ref) <= 1e-9


def test_occupation_from_absorbed_start_is_zero():
    p = SystemParams(6, 0.0, 0.2, 0.8)
    prob = walks.OccupationProblem(pair_chain_2d(p), _diag_targets(6), (0, 3))
    assert walks.occupation_time(prob) == 0.0


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("n", [5, 12])
def test_damped_occupation_bound(n, theta):
    """Damping can only add n^theta over the unit-rate occupation."""
    p = SystemParams(n, theta, 0.2, 0.8)
    op = pair_chain_2d(p)
    T = walks.occupation_field(op, _diag_targets(n))
    nt = float(n) ** theta
    for (x, y) in op.states:
        bound = walks.diagonal_occupation_closed_form(n, x, y) + nt
        assert T[op.index[(x, y)]] <= bound + 1e-9


def test_occupation_monte_carlo_cross_check():
    n, theta = 5, 1.0
    p = SystemParams(n, theta, 0.2, 0.8)
    op = pair_chain_2d(p)
    prob = walks.OccupationProblem(op, _diag_targets(n), (1, 4))
    exact = walks.occupation_time(prob)
    assert exact <= 1 * (5 - 4) / 4 + 5 + 1e-12
    mean, se = walks.occupation_time_mc(op, (1, 4), _diag_targets(n),
                                        RandomSource(321, 0), 3000)
    assert abs(mean - exact) <= 3 * se


def test_coupling_margin_degenerate_at_unit_rates():
    p = SystemParams(6, 0.0, 0.2, 0.8)
    rep = walks.coupling_bound_check(p, [0.05, 0.5])
    assert rep.margin_general >= -1e-9


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_coupling_occupation_margins_nonnegative(theta):
    """The integrated (occupation) domination holds at every horizon."""
    p = SystemParams(6, theta, 0.2, 0.8)
    rep = walks.coupling_occupation_check(p, [0.01, 0.1, 0.5, 1.0, 2.0])
    assert rep.margin_general >= -1e-9
    assert rep.margin_boundary >= -1e-9


@pytest.mark.parametrize("theta", [1.0, 2.0])
def test_coupling_instantaneous_form_breaks_at_moderate_times(theta):
    """The instantaneous-kernel domination is genuinely violated once the
    unit-rate chain's faster spectral decay takes over; the checker must
    report that honestly (negative margin), and the violation must
    disappear at short horizons."""
    p = SystemParams(6, theta, 0.2, 0.8)
    rep = walks.coupling_bound_check(p, [0.3, 0.5, 1.0])
    assert rep.margin_general < -1e-3
    short = walks.coupling_bound_check(p, [0.001, 0.005, 0.01])
    assert short.margin_general >= -1e-9


def test_reflected_1d_zero_horizon():
    p = SystemParams(8, 2.0, 0.2, 0.8)
    rep = walks.reflected_occupation_bound_1d(p, [0.0])
    assert rep.scaled_sup == 0.0


def test_reflected_1d_envelope_and_value():
    p = SystemParams(8, 2.0, 0.2, 0.8)
    rep = walks.reflected_occupation_bound_1d(p, [1.0])
    assert rep.scaled_sup <= 10.0
    # two boundary sites, each within the quadratic-test-function envelope
    assert rep.per_time_max[0] <= 2 * walks.envelope_reflected_1d(8, 1.0)


def test_reflected_1d_halves_when_n_doubles():
    vals = {}
    for n in (8, 16):
        p = SystemParams(n, 2.0, 0.2, 0.8)
        vals[n] = walks.reflected_occupation_bound_1d(p, [1.0]).per_time_max[0]
    ratio = vals[8] / vals[16]
    assert 1.5 <= ratio <= 2.5


def test_reflected_1d_slope():
    ns = [8, 16, 32, 64]
    vals = []
    for n in ns:
        p = SystemParams(n, 1.0, 0.2, 0.8)
        vals.append(walks.reflected_occupation_bound_1d(p, [1.0]).per_time_max[0])
    slope, _ = walks.fit_loglog(ns, vals)
    assert -1.3 <= slope <= -0.7


def test_reflected_2d_envelope():
    p = SystemParams(8, 2.0, 0.2, 0.8)
    rep = walks.reflected_occupation_bound_2d(p, [1.0])
    assert rep.scaled_sup <= 8 * walks.envelope_reflected_2d(8, 1.0) + 1e-12


def test_reflected_2d_linear_short_time_from_diagonal():
    n = 8
    p = SystemParams(n, 2.0, 0.2, 0.8)
    op = reflected_pair_chain_2d(p)
    t = 1e-4
    J = walks._occupation_integrals(op, diagonal_indices(n, op.index), [t])
    start = op.index[(3, 4)]
    assert J[0, start] == pytest.approx(t, rel=0.05)


def test_reflected_2d_scaled_sup_stable():
    sups = []
    for n in (8, 16, 32):
        p = SystemParams(n, 1.5, 0.2, 0.8)
        sups.append(walks.reflected_occupation_bound_2d(p, [1.0]).scaled_sup)
    assert max(sups) <= 1.3 * min(sups)


def test_reflected_2d_slope():
    ns = [8, 16, 32]
    vals = []
    for n in ns:
        p = SystemParams(n, 1.5, 0.2, 0.8)
        vals.append(walks.reflected_occupation_bound_2d(p, [1.0]).per_time_max[0])
    slope, _ = walks.fit_loglog(ns, vals)
    assert -1.3 <= slope <= -0.7


@pytest.mark.parametrize("theta,floor", [(0.0, 1.4), (2.0, 1.4)])
def test_window_exponent(theta, floor):
    p = SystemParams(32, theta, 0.2, 0.8)
    rep = walks.holder_exponent_check(p)
    assert rep.exponent >= floor


def test_window_exponent_weight_above_three():
    n = 32
    pref = walks.holder_prefactor(n, 3.5)
    assert pref == pytest.approx(float(n) ** (3.0 - 3.5))
    assert pref <= 1.0
    deltas = walks.default_holder_deltas(n)
    for d in deltas:
        val = pref * walks.boundary_double_integral(n, d)
        assert val <= d * d / 2.0 + 1e-18


def test_window_exponent_rejects_theta_one():
    with pytest.raises(ValueError):
        walks.holder_exponent_check(SystemParams(16, 1.0, 0.2, 0.8))


def test_far_boundary_integral_dominated():
    n = 24
    for d in walks.default_holder_deltas(n):
        near = walks.boundary_double_integral(n, d, x=1)
        far = walks.boundary_double_integral(n, d, x=n - 1)
        assert abs(far) <= near + 1e-18


def test_holder_delta_profile():
    assert walks.holder_delta(0.0) == 0.5
    assert walks.holder_delta(0.5) == 0.25
    assert walks.holder_delta(2.0) == 0.5
    assert walks.holder_delta(3.5) == 1.0


def test_fit_loglog_recovers_power():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    slope, inter = walks.fit_loglog(x, 3.0 * x ** 2)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert np.exp(inter) == pytest.approx(3.0, rel=1e-12)
