"""Continuum side: eigenbases, semigroups and Gaussian-field covariances.

The boundary regime follows the damping exponent (absorbing below 1,
mixed slope at 1, insulating above 1).  Test functions are finite mode
combinations, the heat semigroup acts diagonally, and the limiting
fluctuation field's covariance splits into an evolved initial covariance
plus a dynamical noise integral.
"""

import math

import numpy as np
from scipy.integrate import quad

from sseplab import SystemParams, chi
from sseplab import continuum as ct

# mixed-boundary eigenvalues: interlaced symmetric/antisymmetric roots
roots = ct.robin_eigenvalues(mu=1.0, K=6)
print("mixed-regime roots (mu=1):")
for r in roots:
    print(f"  {r.parity:4s} #{r.index}: root {r.root:.6f}, "
          f"eigenvalue {r.eigenvalue:.4f}")

basis = ct.basis_for(ct.BoundaryRegime("robin", 1.0), 16)
print("basis defects:", basis.validation_defects())

# semigroup: coefficientwise decay
f = ct.TestFunction(basis, np.r_[1.0, -0.4, 0.2, np.zeros(13)])
for t in (0.0, 0.1, 1.0):
    ft = ct.semigroup_apply(f, t)
    print(f"T_{t} f (0.25) = {ft(0.25):+.5f}")

# equilibrium: evolved initial covariance + noise integral is constant in
# time (shown for the insulating regime)
nb = ct.basis_for(ct.BoundaryRegime("neumann"), 10)
g = ct.TestFunction(nb, np.r_[0.0, 1.0, np.zeros(8)])
sig = ct.sigma_equilibrium(0.5)
ref = chi(0.5) * quad(lambda u: g(u) ** 2, 0, 1)[0]
print("\nequilibrium stationarity of the field variance (target "
      f"{ref:.4f}):")
for t in (0.05, 0.2, 0.8):
    pred = ct.ou_covariance(ct.constant_path(0.5), g, g, t, t, sig)
    print(f"  t={t}: initial {pred.initial_term:.4f} + dynamical "
          f"{pred.dynamical_term:.4f} = {pred.value:.4f}")

# non-equilibrium stationary covariance: static part minus the
# inverse-Laplacian correction (absorbing regime)
p = SystemParams(64, 0.0, 0.2, 0.8)
db = ct.basis_for(ct.BoundaryRegime("dirichlet"), 32)
h = ct.unit_mode(db, 0)
val = ct.stationary_covariance(p, h, h)
static = quad(lambda u: chi(0.2 + 0.6 * u) * h(u) ** 2, 0, 1)[0]
print(f"\nstationary field variance, absorbing regime: {val:.5f} "
      f"(= static {static:.5f} - correction {static - val:.5f})")

# mixed regime adds boundary-noise integrals
p1 = SystemParams(64, 1.0, 0.2, 0.8)
rb = ct.basis_for(ct.BoundaryRegime("robin", 1.0), 32)
h1 = ct.unit_mode(rb, 0)
print("mixed-regime stationary field variance:",
      round(ct.stationary_covariance(p1, h1, h1), 5))
