"""Continuum side: boundary regimes, eigenbases, heat semigroups and the
Gaussian-field covariance predictors.

The boundary regime is dictated by the slowdown exponent: absorbing
(Dirichlet) data for theta < 1, the mixed slope condition
f'(0) = mu f(0), f'(1) = -mu f(1) at theta = 1 (mu = 1 in the
hydrodynamic normalisation; general mu > 0 is supported because the
lattice approximations need it), and insulating (Neumann) data for
theta > 1.  Test functions are finite combinations of the regime's
eigenmodes, so smoothness and the boundary compatibility conditions hold
by construction and every derivative has a closed form.

The centered density field converges to a Gaussian process whose
covariance is the semigroup-evolved initial covariance plus a dynamical
integral of the gradient inner product weighted by 2 chi(rho); both
pieces are evaluated here by adaptive quadrature with closed-form
derivatives (no numerical differentiation).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .params import SystemParams, chi
from .numerics import hydro_stationary_profile

_QUAD_ABS = 1e-10
_QUAD_LIMIT = 400


def _quad01(fn, epsabs=_QUAD_ABS):
    val, _ = quad(fn, 0.0, 1.0, epsabs=epsabs, epsrel=1e-12, limit=_QUAD_LIMIT)
    return val


@dataclass(frozen=True)
class BoundaryRegime:
    """Boundary condition family: 'dirichlet', 'robin' (with slope mu > 0)
    or 'neumann'."""

    kind: str
    mu: float = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "robin", "neumann"):
            raise ValueError(f"unknown regime {self.kind}")
        if self.kind == "robin":
            if self.mu is None or not self.mu > 0:
                raise ValueError("robin regime needs mu > 0")
        elif self.mu is not None:
            raise ValueError("mu only applies to the robin regime")


def regime_for_theta(theta, mu=1.0):
    """Regime selected by the slowdown exponent."""
    if theta < 1.0:
        return BoundaryRegime("dirichlet")
    if theta == 1.0:
        return BoundaryRegime("robin", mu)
    return BoundaryRegime("neumann")


# ---------------------------------------------------------------------------
# mixed-boundary eigenvalue problem
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RobinRoot:
    """One root of the mixed-boundary transcendental equations.

    Symmetric family: cot(r) = 2 r / mu with r in [pi(m-1), pi(m-1/2)],
    eigenfunction a cos(2 r (u - 1/2)).  Antisymmetric family:
    tan(r) = -2 r / mu with r in [pi(m-1/2), pi m], eigenfunction
    b sin(2 r (u - 1/2)).  Eigenvalue 4 r^2 in both families.
    """

    root: float
    parity: str            # 'sym' or 'anti'
    index: int             # 1-based index within its family
    eigenvalue: float
    amplitude: float


def _bisect(fn, lo, hi):
    flo = fn(lo)
    if flo == 0.0:
        return lo
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (flo > 0) == (fm > 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, hi):
            break
    return 0.5 * (lo + hi)


def robin_eigenvalues(mu, K):
    """First K eigenpairs of the mixed problem, merged by eigenvalue.

    Roots are bracketed in their stated intervals and bisected to 1e-12;
    the two families interlace, so merging by eigenvalue alternates them.
    """
    if not mu > 0:
        raise ValueError("mu must be > 0")
    if K < 1:
        raise ValueError("K must be >= 1")
    half = K // 2 + 2
    roots = []
    for m in range(1, half + 1):
        r = _bisect(lambda r: mu * math.cos(r) - 2.0 * r * math.sin(r),
                    math.pi * (m - 1), math.pi * (m - 0.5))
        lam = 4.0 * r * r
        amp = math.sqrt(2.0) / math.sqrt(1.0 + math.sin(math.sqrt(lam)) / math.sqrt(lam))
        roots.append(RobinRoot(r, "sym", m, lam, amp))
        r = _bisect(lambda r: mu * math.sin(r) + 2.0 * r * math.cos(r),
                    math.pi * (m - 0.5), math.pi * m)
        lam = 4.0 * r * r
        amp = math.sqrt(2.0) / math.sqrt(1.0 - math.sin(math.sqrt(lam)) / math.sqrt(lam))
        roots.append(RobinRoot(r, "anti", m, lam, amp))
    roots.sort(key=lambda rr: rr.eigenvalue)
    return roots[:K]


# ---------------------------------------------------------------------------
# eigenmodes and bases
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mode:
    """Eigenmode amp * cos(omega u + phase) with eigenvalue omega^2.

    The k-th derivative is amp * omega^k * cos(omega u + phase + k pi/2),
    so every derivative evaluator is closed form.
    """

    eigenvalue: float
    amp: float
    omega: float
    phase: float

    def __call__(self, u):
        return self.amp * np.cos(self.omega * np.asarray(u, float) + self.phase)

    def deriv(self, u, order=1):
        return self.amp * self.omega ** order * np.cos(
            self.omega * np.asarray(u, float) + self.phase + order * math.pi / 2.0)


@dataclass
class ContinuumBasis:
    """Validated orthonormal eigenbasis of one boundary regime."""

    regime: BoundaryRegime
    modes: list
    K: int = field(init=False)

    def __post_init__(self):
        self.K = len(self.modes)

    @property
    def eigenvalues(self):
        return np.array([m.eigenvalue for m in self.modes])

    def validation_defects(self):
        """Worst orthonormality, eigen-residual and boundary defects.

        Orthonormality uses adaptive quadrature on every mode pair; the
        eigen-residual is |f'' + lam f| relative to max(lam, 1) on a check
        grid; boundary residuals are scaled by the mode frequency.
        """
        grid = np.linspace(0.0, 1.0, 211)
        ortho = 0.0
        resid = 0.0
        bc = 0.0
        for j, mj in enumerate(self.modes):
            raw = np.max(np.abs(mj.deriv(grid, 2) + mj.eigenvalue * mj(grid)))
            resid = max(resid, raw / max(mj.eigenvalue, 1.0))
            bc = max(bc, self._bc_defect(mj))
            for k in range(j, self.K):
                mk = self.modes[k]
                val = _quad01(lambda u: float(mj(u) * mk(u)))
                ortho = max(ortho, abs(val - (1.0 if j == k else 0.0)))
        return {"orthonormality": ortho, "eigen_residual": resid,
                "boundary": bc}

    def validate(self, ortho_tol=1e-8, resid_tol=1e-6, bc_tol=1e-8):
        """Enforce the construction invariants; raises on violation."""
        d = self.validation_defects()
        if d["orthonormality"] > ortho_tol:
            raise ValueError(f"orthonormality defect {d['orthonormality']:.2e}")
        if d["eigen_residual"] > resid_tol:
            raise ValueError(f"eigen-residual {d['eigen_residual']:.2e}")
        if d["boundary"] > bc_tol:
            raise ValueError(f"boundary-condition residual {d['boundary']:.2e}")
        return self

    def _bc_defect(self, m):
        kind = self.regime.kind
        scale = max(1.0, abs(m.omega))
        if kind == "dirichlet":
            return max(abs(m(0.0)), abs(m(1.0)))
        if kind == "neumann":
            return max(abs(m.deriv(0.0)), abs(m.deriv(1.0))) / scale
        mu = self.regime.mu
        return max(abs(m.deriv(0.0) - mu * m(0.0)),
                   abs(m.deriv(1.0) + mu * m(1.0))) / scale


_basis_cache = {}


def basis_for(regime, K, validate=True):
    """First K eigenmodes of the regime, validated at construction.

    Dirichlet: sqrt(2) sin(k pi u), eigenvalue (k pi)^2, k = 1..K.
    Neumann: the constant 1 then sqrt(2) cos(k pi u), k = 1..K-1.
    Robin(mu): the merged transcendental-root families.
    """
    key = (regime, K)
    if key in _basis_cache:
        return _basis_cache[key]
    modes = []
    if regime.kind == "dirichlet":
        for k in range(1, K + 1):
            w = k * math.pi
            modes.append(Mode(w * w, math.sqrt(2.0), w, -math.pi / 2.0))
    elif regime.kind == "neumann":
        modes.append(Mode(0.0, 1.0, 0.0, 0.0))
        for k in range(1, K):
            w = k * math.pi
            modes.append(Mode(w * w, math.sqrt(2.0), w, 0.0))
    else:
        for rr in robin_eigenvalues(regime.mu, K):
            w = 2.0 * rr.root
            if rr.parity == "sym":
                modes.append(Mode(rr.eigenvalue, rr.amplitude, w, -rr.root))
            else:
                modes.append(Mode(rr.eigenvalue, rr.amplitude, w,
                                  -rr.root - math.pi / 2.0))
    basis = ContinuumBasis(regime, modes)
    if validate:
        basis.validate()
    _basis_cache[key] = basis
    return basis


@dataclass
class TestFunction:
    """Finite combination of basis modes (hence admissible for its
    regime, with closed-form derivatives of every order)."""

    basis: ContinuumBasis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if len(self.coeffs) != self.basis.K:
            raise ValueError("coefficient count must match basis size")

    def __call__(self, u):
        u = np.asarray(u, float)
        out = sum(c * m(u) for c, m in zip(self.coeffs, self.basis.modes)
                  if c != 0.0)
        return out if np.ndim(out) else float(out)

    def deriv(self, u, order=1):
        u = np.asarray(u, float)
        out = sum(c * m.deriv(u, order)
                  for c, m in zip(self.coeffs, self.basis.modes) if c != 0.0)
        return out if np.ndim(out) else float(out)

    def seminorm(self, k, grid_points=2001):
        """sup over [0,1] of the k-th derivative, on a dense grid."""
        grid = np.linspace(0.0, 1.0, grid_points)
        vals = self(grid) if k == 0 else self.deriv(grid, k)
        return float(np.max(np.abs(np.atleast_1d(vals))))


def unit_mode(basis, k):
    """The k-th basis mode as a TestFunction (0-based)."""
    c = np.zeros(basis.K)
    c[k] = 1.0
    return TestFunction(basis, c)


def project(basis, fn, epsabs=_QUAD_ABS):
    """L2 projection of a callable onto the basis (adaptive quadrature)."""
    coeffs = np.array([_quad01(lambda u: float(fn(u) * m(u)), epsabs)
                       for m in basis.modes])
    return TestFunction(basis, coeffs)


def semigroup_apply(f, t):
    """Heat semigroup of the regime: coefficients scaled by exp(-lam t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    return TestFunction(f.basis, f.coeffs * np.exp(-f.basis.eigenvalues * t))


def laplacian(f):
    """Second derivative in coefficients (each mode scaled by -lam)."""
    return TestFunction(f.basis, -f.basis.eigenvalues * f.coeffs)


def inverse_laplacian(f, zero_tol=1e-12):
    """Solve (-Laplacian) g = f in coefficients.

    Fails if f has mass on a zero-eigenvalue mode (the Neumann constant),
    where the operator is not invertible.
    """
    lam = f.basis.eigenvalues
    zero = lam < zero_tol
    if np.any(zero & (np.abs(f.coeffs) > zero_tol)):
        raise ValueError("function has mass on a zero mode; "
                         "inverse Laplacian undefined")
    out = np.zeros_like(f.coeffs)
    nz = ~zero
    out[nz] = f.coeffs[nz] / lam[nz]
    return TestFunction(f.basis, out)


# ---------------------------------------------------------------------------
# covariance predictors
# ---------------------------------------------------------------------------

@dataclass
class CovariancePrediction:
    """Predicted covariance E[Y_t(f) Y_s(g)] split into the evolved
    initial covariance and the dynamical noise integral."""

    value: float
    initial_term: float
    dynamical_term: float
    s: float
    t: float
    truncation_tail: float


def sigma_local_gibbs(rho0):
    """Initial covariance of a product (local-equilibrium) start:
    sigma(f, g) = int chi(rho0(u)) f(u) g(u) du."""

    def sigma(f, g):
        return _quad01(lambda u: chi(float(rho0(u))) * float(f(u)) * float(g(u)))

    return sigma


def sigma_equilibrium(rho):
    """Initial covariance at flat density rho."""
    return sigma_local_gibbs(lambda u: rho)


def gradient_inner_product(rho_r, F, G):
    """<F', G'> weighted by 2 chi(rho_r(u)) (adaptive quadrature)."""
    return _quad01(lambda u: 2.0 * chi(float(rho_r(u)))
                   * float(F.deriv(u)) * float(G.deriv(u)))


def ou_covariance(rho_path, f, g, s, t, sigma, epsabs=1e-8):
    """Covariance of the limiting Gaussian field at times (s, t), s <= t.

    value = sigma(T_t f, T_s g)
          + int_0^s <grad T_(t-r) f, grad T_(s-r) g>_(2 chi(rho_r)) dr,
    where rho_path(r) returns the macroscopic density profile at time r
    as a callable on [0, 1].  The quadratures use closed-form mode
    derivatives; absolute tolerance epsabs.
    """
    if s > t:
        raise ValueError("need s <= t")
    if f.basis is not g.basis:
        raise ValueError("f and g must share a basis")
    ft = semigroup_apply(f, t)
    gs = semigroup_apply(g, s)
    initial = sigma(ft, gs)
    if s == 0.0:
        dynamical = 0.0
    else:
        def integrand(r):
            rho_r = rho_path(r)
            Fr = semigroup_apply(f, t - r)
            Gr = semigroup_apply(g, s - r)
            return gradient_inner_product(rho_r, Fr, Gr)

        dynamical, _ = quad(integrand, 0.0, s, epsabs=epsabs, epsrel=1e-10,
                            limit=_QUAD_LIMIT)
    lam_K = f.basis.eigenvalues[-1]
    tail_coef = abs(f.coeffs[-1]) + abs(g.coeffs[-1])
    tail = tail_coef * (math.exp(-lam_K * min(s, t)) if min(s, t) > 0 else 1.0)
    return CovariancePrediction(initial + dynamical, initial, dynamical,
                                s, t, tail)


def constant_path(rho):
    """Profile path of a flat density (equilibrium)."""
    return lambda r: (lambda u: rho)


class HydroPath:
    """Macroscopic density trajectory solved in the regime's eigenbasis.

    The inhomogeneous stationary part is subtracted, the remainder is
    projected on the basis and evolved mode-by-mode; this is spectrally
    exact whenever rho0 minus the stationary part is basis-representable.
    For the insulating regime the conserved mean plays the role of the
    stationary part.
    """

    def __init__(self, basis, rho0, alpha, beta):
        self.basis = basis
        kind = basis.regime.kind
        if kind == "dirichlet":
            stat = lambda u: alpha + (beta - alpha) * u
        elif kind == "robin":
            mu = basis.regime.mu
            stat = lambda u: (beta + alpha * (1 + mu)) / (2 + mu) \
                + mu * (beta - alpha) * u / (2 + mu)
        else:
            mass = _quad01(lambda u: float(rho0(u)))
            stat = lambda u: mass
        self.stationary = stat
        self.fluct = project(basis, lambda u: float(rho0(u)) - stat(u))

    def __call__(self, r):
        decayed = semigroup_apply(self.fluct, r)
        stat = self.stationary
        return lambda u: stat(u) + float(decayed(u))


def stationary_covariance(params, f, g, basis=None, epsabs=1e-9):
    """Covariance of the stationary limit field on a pair (f, g).

    Away from the mixed regime this is
        int chi(rhobar) f g du - (beta-alpha)^2 int (-Lap)^(-1) f g du
    with rhobar the macroscopic stationary profile of the regime.  At
    theta = 1 (slope mu = 1) two boundary-noise integrals are added:
        2(2 beta + alpha)(2 beta - 1)/3 * int_0^inf T_r f(1) T_r g(1) dr
    and the mirrored term at u = 0; these integrals are evaluated in
    closed form as sum f_j g_k phi_j(b) phi_k(b) / (lam_j + lam_k).
    """
    if f.basis is not g.basis:
        raise ValueError("f and g must share a basis")
    if basis is None:
        basis = f.basis
    alpha, beta, theta = params.alpha, params.beta, params.theta
    rb = lambda u: hydro_stationary_profile(u, theta, alpha, beta)
    static = _quad01(lambda u: chi(rb(u)) * float(f(u)) * float(g(u)), epsabs)
    invf = inverse_laplacian(f)
    cross = _quad01(lambda u: float(invf(u)) * float(g(u)), epsabs)
    if theta != 1.0:
        return static - (beta - alpha) ** 2 * cross
    if basis.regime.kind != "robin" or basis.regime.mu != 1.0:
        raise ValueError("theta = 1 stationary covariance needs the "
                         "mu = 1 mixed basis")
    lam = basis.eigenvalues
    phi1 = np.array([m(1.0) for m in basis.modes])
    phi0 = np.array([m(0.0) for m in basis.modes])
    denom = lam[:, None] + lam[None, :]
    w = np.outer(f.coeffs, g.coeffs) / denom
    b1 = float(np.sum(w * np.outer(phi1, phi1)))
    b0 = float(np.sum(w * np.outer(phi0, phi0)))
    c1 = 2.0 * (2.0 * beta + alpha) * (2.0 * beta - 1.0) / 3.0
    c0 = 2.0 * (beta + 2.0 * alpha) * (2.0 * alpha - 1.0) / 3.0
    return static - ((beta - alpha) / 3.0) ** 2 * cross + c1 * b1 + c0 * b0
