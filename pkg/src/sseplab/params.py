"""Model parameters for the slow-reservoir exclusion process.

The model lives on the bulk sites {1, ..., n-1}.  Particles hop to empty
nearest-neighbour sites at rate 1, and at the two boundary sites particles
are created/annihilated by reservoirs whose rates carry a damping factor
n**(-theta): creation alpha*n**(-theta) and annihilation
(1-alpha)*n**(-theta) at site 1, and the same with beta at site n-1.  All
public APIs use the macroscopic (diffusively rescaled) clock, i.e. the
full generator is accelerated by n**2; that factor is folded into every
rate and never exposed.
"""

from dataclasses import dataclass


def chi(u):
    """Static compressibility chi(u) = u*(1-u), the variance of a
    Bernoulli(u) occupation variable."""
    return u * (1.0 - u)


@dataclass(frozen=True)
class SystemParams:
    """The quadruple (n, theta, alpha, beta) defining one system.

    Parameters
    ----------
    n : int
        Lattice size; bulk sites are 1..n-1, so there are n-1 of them.
    theta : float
        Boundary slowdown exponent, >= 0.
    alpha, beta : float
        Left/right reservoir densities, in the open interval (0, 1).
    """

    n: int
    theta: float
    alpha: float
    beta: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"n must be an integer >= 3, got {self.n}")
        if not self.theta >= 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")

    @property
    def n_sites(self):
        """Number of bulk sites, n - 1."""
        return self.n - 1

    @property
    def n_bonds(self):
        """Number of bulk bonds, n - 2 (bond x joins sites x and x+1)."""
        return self.n - 2

    @property
    def boundary_factor(self):
        """The reservoir damping n**(-theta)."""
        return float(self.n) ** (-self.theta)

    @property
    def bulk_rate(self):
        """Macroscopic-clock rate of one discrepant bulk bond, n**2."""
        return float(self.n) ** 2

    @property
    def boundary_scale(self):
        """Macroscopic-clock scale of a boundary flip, n**(2-theta)."""
        return float(self.n) ** 2 * self.boundary_factor

    def flip_rate_left(self, occupied):
        """Macroscopic flip rate at site 1 given its occupation."""
        dens = (1.0 - self.alpha) if occupied else self.alpha
        return self.boundary_scale * dens

    def flip_rate_right(self, occupied):
        """Macroscopic flip rate at site n-1 given its occupation."""
        dens = (1.0 - self.beta) if occupied else self.beta
        return self.boundary_scale * dens
