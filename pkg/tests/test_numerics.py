import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm

from sseplab import SystemParams
from sseplab import numerics as nm
from sseplab import oracle
from sseplab.operators import absorbed_chain_1d


# ---------------------------------------------------------------------------
# stationary closed forms
# ---------------------------------------------------------------------------

def test_stationary_profile_values():
    p = SystemParams(4, 0.0, 0.2, 0.8)
    assert nm.stationary_profile(p).interior() == pytest.approx([0.35, 0.5, 0.65])
    p = SystemParams(4, 1.0, 0.2, 0.8)
    assert nm.stationary_profile(p).interior() == pytest.approx([0.44, 0.5, 0.56])
    p = SystemParams(7, 2.0, 0.3, 0.3)
    assert nm.stationary_profile(p).interior() == pytest.approx([0.3] * 6)


def test_stationary_correlation_values():
    assert nm.stationary_correlation(SystemParams(4, 0.0, 0.2, 0.8)).phi(1, 2) \
        == pytest.approx(-0.015)
    assert nm.stationary_correlation(SystemParams(4, 1.0, 0.2, 0.8)).phi(1, 2) \
        == pytest.approx(-0.008)
    fl = nm.stationary_correlation(SystemParams(6, 0.7, 0.4, 0.4))
    assert fl.max_abs() == 0.0


def test_stationary_correlation_needs_n4():
    with pytest.raises(ValueError):
        nm.stationary_correlation(SystemParams(3, 0.0, 0.2, 0.8))


def test_correlation_field_boundary_convention():
    fl = nm.stationary_correlation(SystemParams(5, 0.0, 0.2, 0.8))
    assert fl.phi(0, 3) == 0.0
    assert fl.phi(2, 5) == 0.0
    with pytest.raises(ValueError):
        fl.phi(3, 2)
    assert np.all(np.abs(fl.values) <= 0.25)


@pytest.mark.parametrize("theta", [0.0, 0.5, 1.0, 2.0, 3.0])
@pytest.mark.parametrize("n", [4, 8, 16, 64])
def test_stationarity_residuals(n, theta):
    p = SystemParams(n, theta, 0.2, 0.8)
    assert nm.stationary_profile_residual(p) <= 1e-9
    assert nm.stationary_correlation_residual(p) <= 1e-7


# ---------------------------------------------------------------------------
# hydrodynamic stationary profile
# ---------------------------------------------------------------------------

def test_hydro_profile_regimes():
    assert nm.hydro_stationary_profile(0.0, 0.5, 0.2, 0.8) == pytest.approx(0.2)
    assert nm.hydro_stationary_profile(0.37, 2.0, 0.2, 0.8) == pytest.approx(0.5)
    assert nm.hydro_stationary_profile(1.0, 1.0, 0.2, 0.8) \
        == pytest.approx(0.6 / 3 + 0.2 + 0.6 / 3)


def _hydro_gap(n, theta):
    p = SystemParams(n, theta, 0.2, 0.8)
    ss = nm.stationary_profile(p).interior()
    target = nm.hydro_stationary_profile(np.arange(1, n) / n, theta, 0.2, 0.8)
    return float(np.max(np.abs(ss - target)))


def test_lattice_profile_equals_hydro_at_unit_rates():
    # with undamped reservoirs the lattice stationary profile is exactly
    # the linear macroscopic one
    for n in (8, 64, 512):
        assert _hydro_gap(n, 0.0) == 0.0


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_lattice_profile_converges_to_hydro(theta):
    gaps = [_hydro_gap(n, theta) for n in (8, 64, 512)]
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < gaps[0] / 2.5


# ---------------------------------------------------------------------------
# profile evolution
# ---------------------------------------------------------------------------

def test_evolve_profile_fixed_point():
    for theta in (0.0, 1.0, 2.5):
        p = SystemParams(6, theta, 0.2, 0.8)
        ss = nm.stationary_profile(p)
        for t in (0.3, 2.0):
            out = nm.evolve_profile(ss, p, t)
            assert np.max(np.abs(out.values - ss.values)) <= 1e-8


def test_evolve_profile_flat_equilibrium():
    p = SystemParams(8, 1.0, 0.4, 0.4)
    rho0 = nm.make_profile(p, np.full(7, 0.4))
    out = nm.evolve_profile(rho0, p, 1.3)
    assert out.values == pytest.approx(np.full(9, 0.4))


def test_evolve_profile_matches_master_equation():
    p = SystemParams(3, 0.0, 0.2, 0.8)
    rho0 = nm.make_profile(p, [1.0, 0.0])
    state0 = oracle.product_state(p, np.array([1.0, 0.0]))
    for t in (0.1, 1.0):
        mine = nm.evolve_profile(rho0, p, t).interior()
        ref = oracle.evolve_distribution(state0, p, t)
        marg = oracle.exact_observables(ref)[0].values[1:-1]
        assert np.max(np.abs(mine - marg)) <= 1e-6


def test_evolve_profile_maximum_principle():
    rng = np.random.default_rng(7)
    p = SystemParams(10, 0.5, 0.3, 0.7)
    inter = rng.uniform(0.05, 0.95, size=9)
    rho0 = nm.make_profile(p, inter)
    lo = min(inter.min(), p.alpha, p.beta)
    hi = max(inter.max(), p.alpha, p.beta)
    for t in (0.05, 0.4, 2.0):
        out = nm.evolve_profile(rho0, p, t).interior()
        assert np.all(out >= lo - 1e-9)
        assert np.all(out <= hi + 1e-9)


def test_evolve_profile_rejects_bad_boundary():
    p = SystemParams(5, 0.0, 0.2, 0.8)
    bad = np.linspace(0, 1, 6)
    with pytest.raises(ValueError):
        nm.evolve_profile(bad, p, 0.1)


# ---------------------------------------------------------------------------
# correlation evolution
# ---------------------------------------------------------------------------

def test_evolve_correlation_flat_stays_zero():
    p = SystemParams(6, 1.0, 0.5, 0.5)
    phi0 = nm.CorrelationField.zeros(p.n)
    out = nm.evolve_correlation(phi0, nm.stationary_path(p), p, 0.8)
    assert out.max_abs() <= 1e-12


def test_evolve_correlation_fixed_point():
    for theta in (0.0, 1.0):
        p = SystemParams(6, theta, 0.2, 0.8)
        phi0 = nm.stationary_correlation(p)
        out = nm.evolve_correlation(phi0, nm.stationary_path(p), p, 0.6)
        assert np.max(np.abs(out.values - phi0.values)) <= 1e-7


def test_evolve_correlation_matches_master_equation():
    p = SystemParams(4, 0.0, 0.2, 0.8)
    prof_ss = nm.stationary_profile(p)
    phi0 = nm.CorrelationField.zeros(p.n)
    t = 0.5
    mine = nm.evolve_correlation(phi0, nm.stationary_path(p), p, t)
    state0 = oracle.product_state(p, prof_ss.interior())
    ref_state = oracle.evolve_distribution(state0, p, t)
    ref = oracle.exact_observables(ref_state)[1]
    assert np.max(np.abs(mine.values - ref.values)) <= 1e-6


def test_joint_and_path_routes_agree():
    p = SystemParams(8, 1.0, 0.2, 0.8)
    rho0 = nm.make_profile(p, 0.1 + 3.2 * (np.arange(1, 8) / 8) * (1 - np.arange(1, 8) / 8))
    phi0 = nm.CorrelationField.zeros(p.n)
    t = 0.4
    path = nm.profile_path(rho0, p, t)
    via_path = nm.evolve_correlation(phi0, path, p, t)
    _, joint = nm.evolve_profile_and_correlation(rho0, phi0, p, [t])
    assert np.max(np.abs(via_path.values - joint[0].values)) <= 1e-7


def test_evolve_correlation_rejects_short_path():
    p = SystemParams(5, 0.0, 0.2, 0.8)
    rho0 = nm.stationary_profile(p)
    path = nm.profile_path(rho0, p, 0.2)
    with pytest.raises(ValueError):
        nm.evolve_correlation(nm.CorrelationField.zeros(p.n), path, p, 0.5)


# ---------------------------------------------------------------------------
# spectral kernel, psi and identities
# ---------------------------------------------------------------------------

def test_heat_kernel_delta_at_zero():
    n = 9
    for x in (1, 4, 8):
        for y in range(1, n):
            val = nm.heat_kernel_dirichlet(x, y, 0.0, n)
            assert val == pytest.approx(1.0 if x == y else 0.0, abs=1e-12)


def test_heat_kernel_substochastic_decreasing():
    n = 8
    masses = [nm.dirichlet_kernel_matrix(n, t).sum(axis=1).max()
              for t in (0.01, 0.05, 0.2, 1.0)]
    assert all(m <= 1.0 + 1e-12 for m in masses)
    assert all(a > b for a, b in zip(masses, masses[1:]))


def test_heat_kernel_symmetry():
    n = 11
    P = nm.dirichlet_kernel_matrix(n, 0.13)
    assert np.max(np.abs(P - P.T)) <= 1e-12


@pytest.mark.parametrize("n", [6, 17])
def test_heat_kernel_vs_ode(n):
    p = SystemParams(n, 0.0, 0.5, 0.5)
    times = [0.02, 0.3]
    mats = nm.absorbed_kernel_ode(p, times)
    for t, M in zip(times, mats):
        assert np.max(np.abs(M - nm.dirichlet_kernel_matrix(n, t))) <= 1e-8


def test_psi_values():
    assert nm.psi(0.0) == pytest.approx(0.5, abs=1e-15)
    assert nm.psi(1.0) == pytest.approx(np.exp(-1.0), rel=1e-14)
    us = np.geomspace(1e-8, 50.0, 200)
    vals = nm.psi(us)
    assert np.all(np.diff(vals) < 0)
    assert np.all(vals <= 0.5)
    with pytest.raises(ValueError):
        nm.psi(-1.0)


def test_psi_relative_accuracy_everywhere():
    """High-precision oracle across both branches and the crossover."""
    import mpmath
    mpmath.mp.dps = 40
    for u in np.geomspace(1e-10, 80.0, 120):
        ref = float((mpmath.exp(-mpmath.mpf(u)) - 1 + mpmath.mpf(u))
                    / mpmath.mpf(u) ** 2)
        assert nm.psi(float(u)) == pytest.approx(ref, rel=1e-12)


def test_double_time_integral_vs_quadrature():
    """Independent route: collapse the iterated integral to
    int_0^t (t - tau) P_tau(x, 1) d tau with the kernel from expm."""
    n, t = 6, 0.7
    p = SystemParams(n, 0.0, 0.5, 0.5)
    G = absorbed_chain_1d(p).matrix.toarray()

    for x in (1, n - 1):
        def h(tau):
            return expm(G * tau)[x - 1, 0]

        ref, _ = quad(lambda tau: (t - tau) * h(tau), 0.0, t,
                      epsabs=1e-11, limit=200)
        assert nm.double_time_integral(x, t, n) == pytest.approx(ref, abs=1e-9)


@pytest.mark.parametrize("n", [8, 16, 32, 64])
def test_double_time_integral_envelope(n):
    for t in (0.5, 1.0, 2.0):
        for x in (1, n - 1):
            assert nm.double_time_integral(x, t, n) <= 2.0 * t / n ** 2


def test_cosine_sum_small_cases():
    assert nm.cosine_sum_check(2) == pytest.approx(0.0, abs=1e-15)
    assert nm.cosine_sum_check(5) == pytest.approx(0.0, abs=1e-12)
    assert nm.cosine_sum_check(64) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("theta,target", [(0.0, -1.0), (0.5, -1.0),
                                          (2.0, -2.0)])
def test_stationary_correlation_order(theta, target):
    """max |phi_ss| decays like 1/max(n, n^theta): fitted log-log slope
    within 0.3 of -max(1, theta)."""
    ns = [8, 16, 32, 64]
    vals = [nm.stationary_correlation(SystemParams(n, theta, 0.2, 0.8)).max_abs()
            for n in ns]
    lx, ly = np.log(ns), np.log(vals)
    slope = np.polyfit(lx, ly, 1)[0]
    assert abs(slope - target) <= 0.3


# ---------------------------------------------------------------------------
# discrete gradient scan
# ---------------------------------------------------------------------------

def test_gradient_flat_zero():
    p = SystemParams(12, 0.3, 0.4, 0.4)
    rho0 = nm.make_profile(p, np.full(11, 0.4))
    assert nm.discrete_gradient_check(p, rho0, [0.2, 1.0]) <= 1e-10


def test_gradient_stationary_bound():
    for n in (8, 32):
        for theta in (0.0, 1.0, 2.0):
            p = SystemParams(n, theta, 0.2, 0.8)
            got = nm.discrete_gradient_check(p, nm.stationary_profile(p), [0.5])
            assert got == pytest.approx(n * abs(nm.profile_slope(p)), rel=1e-7)
            assert got <= (p.beta - p.alpha) * n / (n - 2) + 1e-12


def test_gradient_smooth_start_uniformly_bounded():
    vals = []
    for n in (16, 32, 64):
        p = SystemParams(n, 0.5, 0.2, 0.8)
        u = np.arange(1, n) / n
        rho0 = nm.make_profile(p, 0.1 + 3.2 * u * (1 - u))
        vals.append(nm.discrete_gradient_check(p, rho0, [0.0, 0.1, 0.5, 1.0]))
    assert max(vals) <= 1.2 * vals[0]
