"""Exact-rate continuous-time Monte Carlo for the slow-reservoir exclusion
process, with ensemble estimators of profile, two-point correlations and
fluctuation-field covariances.

Events are generated by the next-event (Gillespie) scheme with the exact
macroscopic-clock rates: a discrepant bulk bond fires at rate n**2 and
swaps its two occupations, the boundary sites flip at rate
n**(2-theta) * [alpha (1-eta) + (1-alpha) eta] (and the beta analogue), so
there is no time-discretisation error.  Replicas are independent; replica
r uses stream id r of the given seed, making every estimate reproducible
bit-for-bit and independent of how replicas are batched.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .params import SystemParams, chi
from .rng import RandomSource
from .numerics import (ProfileVector, evolve_profile, make_profile,
                       stationary_profile)
from .operators import pair_states


@dataclass
class Configuration:
    """Occupation vector over the bulk sites 1..n-1 (entries 0 or 1)."""

    eta: np.ndarray

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=np.uint8)
        if self.eta.ndim != 1:
            raise ValueError("configuration must be a flat vector")
        if not np.all((self.eta == 0) | (self.eta == 1)):
            raise ValueError("occupations must be 0 or 1")

    def copy(self):
        return Configuration(self.eta.copy())

    @property
    def n_particles(self):
        return int(self.eta.sum())


@dataclass
class RateTable:
    """Event rates of a configuration on the macroscopic clock."""

    bond: np.ndarray        # bond x joins sites x, x+1; x = 1..n-2
    left_flip: float
    right_flip: float

    @property
    def total(self):
        return float(self.bond.sum() + self.left_flip + self.right_flip)


@dataclass
class Trajectory:
    """Event log of one run: (time, kind, site) with strictly increasing
    macroscopic times.  A "swap" at site x acts on bond (x, x+1); a "flip"
    acts at site 1 or n-1."""

    params: SystemParams
    events: list
    final_state: Configuration


def event_rates(config, params):
    """Exact rate table for a configuration.

    Bulk bond x carries rate n**2 iff the occupations at x and x+1
    differ; the two boundary flips never vanish, so the total is > 0.
    """
    eta = config.eta if isinstance(config, Configuration) else np.asarray(config)
    if len(eta) != params.n_sites:
        raise ValueError("configuration size does not match n")
    bond = np.where(eta[:-1] != eta[1:], params.bulk_rate, 0.0)
    return RateTable(bond,
                     params.flip_rate_left(bool(eta[0])),
                     params.flip_rate_right(bool(eta[-1])))


class _StepState:
    """Python mirror of the compiled stepping loop (same draw order and
    same discrepant-bond bookkeeping, so trajectories agree bit-for-bit
    with the compiled engine for an equal random stream)."""

    def __init__(self, eta, params):
        self.params = params
        self.eta = np.array(eta, dtype=np.uint8)
        nb = params.n_bonds
        self.pos = np.empty(nb, dtype=np.int64)
        self.loc = np.full(nb, -1, dtype=np.int64)
        self.D = 0
        for b in range(nb):
            if self.eta[b] != self.eta[b + 1]:
                self.pos[self.D] = b
                self.loc[b] = self.D
                self.D += 1

    def _toggle(self, b):
        if self.eta[b] != self.eta[b + 1]:
            if self.loc[b] < 0:
                self.pos[self.D] = b
                self.loc[b] = self.D
                self.D += 1
        elif self.loc[b] >= 0:
            j = self.loc[b]
            last = self.pos[self.D - 1]
            self.pos[j] = last
            self.loc[last] = j
            self.loc[b] = -1
            self.D -= 1

    def step(self, rng):
        """One exact event; returns (waiting time, kind, site)."""
        p = self.params
        m = p.n_sites
        lr = p.flip_rate_left(bool(self.eta[0]))
        rr = p.flip_rate_right(bool(self.eta[-1]))
        bulk = self.D * p.bulk_rate
        tot = bulk + lr + rr
        dt = -math.log(rng.uniform()) / tot
        u = rng.uniform() * tot
        if u < bulk:
            b = int(self.pos[int(u / p.bulk_rate)])
            self.eta[b], self.eta[b + 1] = self.eta[b + 1], self.eta[b]
            if b - 1 >= 0:
                self._toggle(b - 1)
            if b + 1 < p.n_bonds:
                self._toggle(b + 1)
            return dt, "swap", b + 1
        site = 0 if u - bulk < lr else m - 1
        self.eta[site] = 1 - self.eta[site]
        b = 0 if site == 0 else p.n_bonds - 1
        if 0 <= b < p.n_bonds:
            self._toggle(b)
        return dt, "flip", 1 if site == 0 else p.n - 1


def gillespie_step(config, params, rng):
    """One exact event from a configuration.

    The waiting time is exponential with the total rate and the event is
    chosen proportionally to its rate; returns (new configuration,
    elapsed macroscopic time).
    """
    st = _StepState(config.eta if isinstance(config, Configuration) else config,
                    params)
    dt, _, _ = st.step(rng)
    return Configuration(st.eta), dt


def trajectory(config0, params, t_end, rng):
    """Run to macroscopic time t_end keeping the full event log."""
    st = _StepState(config0.eta, params)
    t = 0.0
    events = []
    while True:
        snapshot = st.eta.copy()
        dt, kind, site = st.step(rng)
        if t + dt > t_end:
            return Trajectory(params, events, Configuration(snapshot))
        t += dt
        events.append((t, kind, site))


def simulate_until(config0, params, t_end, rng):
    """State at macroscopic time t_end (compiled engine; exact rates)."""
    if t_end < 0:
        raise ValueError("t_end must be >= 0")
    if t_end == 0.0:
        return config0.copy()
    eta = config0.eta.copy()
    out = np.empty((1, params.n_sites), dtype=np.uint8)
    _kernels._run_one(eta, params.n, params.theta, params.alpha, params.beta,
                      rng.state, 0.0, np.array([t_end]), out)
    return Configuration(out[0])


# ---------------------------------------------------------------------------
# initial conditions and ensemble driver
# ---------------------------------------------------------------------------

@dataclass
class DeterministicStart:
    """Every replica starts from the same configuration."""

    eta: np.ndarray


@dataclass
class BernoulliStart:
    """Product start: site x occupied with probability profile(x/n)
    (local-equilibrium initial state; two-point correlations vanish).
    profile may be a callable on [0, 1] or an array over sites 1..n-1."""

    profile: object


@dataclass
class StationaryStart:
    """Product start at the exact stationary profile followed by a burn-in
    run of the given macroscopic length (default 10 * max(1, n**(theta-1)),
    covering the slow-boundary mixing time).  The burn-in used is reported
    by every estimator."""

    burn_in: float = None


def default_burn_in(params):
    return 10.0 * max(1.0, float(params.n) ** (params.theta - 1.0))


def _resolve_start(start, params):
    m = params.n_sites
    if isinstance(start, DeterministicStart):
        eta = np.asarray(start.eta, dtype=np.uint8)
        if len(eta) != m or not np.all((eta == 0) | (eta == 1)):
            raise ValueError("bad deterministic start")
        return 0, np.zeros(m), eta, 0.0
    if isinstance(start, BernoulliStart):
        prof = start.profile
        if callable(prof):
            prof = np.array([prof(x / params.n) for x in range(1, params.n)])
        prof = np.asarray(prof, dtype=float)
        if len(prof) != m or np.any(prof < 0) or np.any(prof > 1):
            raise ValueError("bad Bernoulli profile")
        return 1, prof, np.zeros(m, dtype=np.uint8), 0.0
    if isinstance(start, StationaryStart):
        burn = default_burn_in(params) if start.burn_in is None else float(start.burn_in)
        return 1, stationary_profile(params).interior().copy(), \
            np.zeros(m, dtype=np.uint8), burn
    raise TypeError(f"unknown start {start!r}")


def sample_states(params, start, times, replicas, seed):
    """States of `replicas` independent runs at the given macroscopic
    times (sorted ascending), as a (replicas, len(times), n-1) array.

    Replica r is driven by stream id r of `seed`; identical arguments give
    bit-identical output.  Returns (states, burn_in_used): observation
    times are measured after the burn-in of the start condition.
    """
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be sorted ascending")
    mode, prof, eta, burn = _resolve_start(start, params)
    out = np.empty((int(replicas), len(times), params.n_sites), dtype=np.uint8)
    _kernels._run_ensemble(params.n, params.theta, params.alpha, params.beta,
                           np.uint64(seed), mode, prof, eta, times + burn, out)
    return out, burn


def compensated_column_sums(arr):
    """Kahan-compensated sums over axis 0, processed in fixed-size blocks
    so that any block-wise merge reproduces the same result to <= 1e-12
    relative."""
    arr = np.asarray(arr, dtype=float)
    total = np.zeros(arr.shape[1:])
    comp = np.zeros_like(total)
    for i in range(0, arr.shape[0], 256):
        block = arr[i:i + 256].sum(axis=0)
        y = block - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


def _mean_and_se(samples):
    """Column means and standard errors over replicas (axis 0)."""
    r = samples.shape[0]
    mean = compensated_column_sums(samples) / r
    var = compensated_column_sums((samples - mean) ** 2) / max(r - 1, 1)
    return mean, np.sqrt(var / r)


@dataclass
class ProfileEstimate:
    """Monte Carlo profile with per-site standard errors; entries 0 and n
    carry the reservoir convention values with zero error."""

    values: np.ndarray
    stderr: np.ndarray
    time: float
    replicas: int
    burn_in: float = 0.0

    def interior(self):
        return self.values[1:-1]


@dataclass
class CorrelationEstimate:
    """Monte Carlo two-point field over V_n, centered with the
    same-ensemble profile estimate (bias O(1/replicas))."""

    n: int
    values: np.ndarray
    stderr: np.ndarray
    time: float
    replicas: int
    burn_in: float = 0.0
    _index: dict = field(default=None, repr=False)

    def _idx(self, x, y):
        if self._index is None:
            object.__setattr__(self, "_index",
                               {p: i for i, p in enumerate(pair_states(self.n))})
        return self._index[(x, y)]

    def phi(self, x, y):
        if x == 0 or y == self.n:
            return 0.0
        return float(self.values[self._idx(x, y)])

    def stderr_of(self, x, y):
        if x == 0 or y == self.n:
            return 0.0
        return float(self.stderr[self._idx(x, y)])


@dataclass
class CovarianceReport:
    """Monte Carlo estimate of E[Y_s(f) Y_t(g)] for the density
    fluctuation field Y_t(f) = n**(-1/2) sum_x f(x/n) (eta_t(x) - rho_t(x)),
    with its standard error, replica count and centering description."""

    value: float
    stderr: float
    s: float
    t: float
    replicas: int
    centering: str
    burn_in: float = 0.0


def estimate_profile(params, start, t, replicas, seed):
    """Ensemble-mean occupation profile at macroscopic time t."""
    states, burn = sample_states(params, start, [t], replicas, seed)
    mean, se = _mean_and_se(states[:, 0, :].astype(float))
    vals = np.empty(params.n + 1)
    errs = np.zeros(params.n + 1)
    vals[0], vals[-1] = params.alpha, params.beta
    vals[1:-1] = mean
    errs[1:-1] = se
    return ProfileEstimate(vals, errs, t, int(replicas), burn)


def estimate_two_point(params, start, t, replicas, seed):
    """Ensemble two-point field at time t, centered with the ensemble
    profile; boundary entries are zero by convention."""
    states, burn = sample_states(params, start, [t], replicas, seed)
    eta = states[:, 0, :].astype(float)
    rho_hat = compensated_column_sums(eta) / replicas
    centered = eta - rho_hat
    prods = np.stack([centered[:, x - 1] * centered[:, y - 1]
                      for (x, y) in pair_states(params.n)], axis=1)
    mean, se = _mean_and_se(prods)
    return CorrelationEstimate(params.n, mean, se, t, int(replicas), burn)


def _sample_test_function(f, n):
    if callable(f):
        return np.array([f(x / n) for x in range(1, n)], dtype=float)
    arr = np.asarray(f, dtype=float)
    if len(arr) != n - 1:
        raise ValueError("test function array must have n-1 entries")
    return arr


def _centering_profiles(params, start, times, centering):
    if isinstance(centering, dict):
        missing = [t for t in times if t not in centering]
        if missing:
            raise ValueError(f"centering profile unavailable for times {missing}")
        return [np.asarray(centering[t], float)[1:-1] for t in times], "supplied"
    if centering == "exact":
        if isinstance(start, StationaryStart):
            ss = stationary_profile(params).interior()
            return [ss.copy() for _ in times], "exact-stationary"
        if isinstance(start, BernoulliStart):
            _, prof, _, _ = _resolve_start(start, params)
        else:
            prof = _resolve_start(start, params)[2].astype(float)
        rho0 = make_profile(params, prof)
        profs = evolve_profile(rho0, params, max(times), t_eval=sorted(set(times)))
        lut = {p.time: p.interior() for p in profs}
        return [lut[t] for t in times], "exact-evolved"
    if centering == "oracle":
        from . import oracle
        mode, prof, eta, burn = _resolve_start(start, params)
        state0 = oracle.product_state(params, prof if mode == 1 else eta.astype(float))
        out = []
        for t in times:
            st = oracle.evolve_distribution(state0, params, t + burn)
            out.append(oracle.exact_observables(st)[0].interior())
        return out, "oracle"
    raise ValueError(f"unknown centering {centering!r}")


def estimate_field_covariance(params, start, times, f, g, replicas, seed,
                              centering="exact"):
    """Monte Carlo covariance E[Y_s(f) Y_t(g)] of the fluctuation field.

    times = (s, t); f and g are sampled at x/n over the bulk sites; the
    centering profile is the exact solved profile ("exact"), the
    brute-force master-equation marginal ("oracle", small n), or a dict
    {time: full profile array} which must cover both requested times.
    """
    s, t = times
    order = [s, t] if s <= t else [t, s]
    states, burn = sample_states(params, start, order, replicas, seed)
    rho_list, label = _centering_profiles(params, start, [s, t], centering)
    fv = _sample_test_function(f, params.n)
    gv = _sample_test_function(g, params.n)
    i_s, i_t = (0, 1) if s <= t else (1, 0)
    ys = (states[:, i_s, :] - rho_list[0]) @ fv / np.sqrt(params.n)
    yt = (states[:, i_t, :] - rho_list[1]) @ gv / np.sqrt(params.n)
    prod = ys * yt
    mean, se = _mean_and_se(prod[:, None])
    return CovarianceReport(float(mean[0]), float(se[0]), s, t,
                            int(replicas), label, burn)


def bernoulli_field_variance(params, profile, f):
    """Exact Var Y_0(f) under a product start: (1/n) sum f(x/n)^2 chi(rho_0(x))."""
    fv = _sample_test_function(f, params.n)
    prof = _sample_test_function(profile, params.n) if callable(profile) \
        else np.asarray(profile, float)
    return float(np.sum(fv ** 2 * chi(prof)) / params.n)
