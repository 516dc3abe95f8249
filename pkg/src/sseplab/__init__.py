"""sseplab: simulation and verification laboratory for the 1D symmetric
simple exclusion process with slow boundary reservoirs.

Subpackages
-----------
simulate   exact-rate kinetic Monte Carlo and ensemble estimators
numerics   exact lattice solvers and closed-form stationary objects
walks      occupation-time solvers and random-walk inequality checks
continuum  eigenbases, heat semigroups and Gaussian-field predictors
oracle     brute-force master-equation ground truth (small n)
cli        the `sseplab` command-line harness
"""

__version__ = "0.1.0"

from .params import SystemParams, chi
from .rng import RandomSource, parse_seed
from .simulate import (Configuration, Trajectory, event_rates, gillespie_step,
                       simulate_until, trajectory, DeterministicStart,
                       BernoulliStart, StationaryStart, estimate_profile,
                       estimate_two_point, estimate_field_covariance,
                       sample_states, default_burn_in)
from .numerics import (ProfileVector, CorrelationField, stationary_profile,
                       hydro_stationary_profile, evolve_profile,
                       profile_path, stationary_path, evolve_correlation,
                       evolve_profile_and_correlation, stationary_correlation,
                       heat_kernel_dirichlet, psi, double_time_integral,
                       cosine_sum_check, discrete_gradient_check)
from .continuum import (BoundaryRegime, regime_for_theta, robin_eigenvalues,
                        basis_for, TestFunction, unit_mode, semigroup_apply,
                        inverse_laplacian, ou_covariance, stationary_covariance,
                        sigma_local_gibbs, sigma_equilibrium, HydroPath)
from .walks import (OccupationProblem, occupation_time, occupation_field,
                    coupling_bound_check, coupling_occupation_check,
                    reflected_occupation_bound_1d,
                    reflected_occupation_bound_2d, holder_exponent_check,
                    fit_loglog)
