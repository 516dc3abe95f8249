"""Discrete generators used by the exact solvers.

Four operators appear throughout:

* the absorbed 1D chain on sites 1..n-1 governing the mean occupation
  profile (unit rates on bulk bonds, damped rate n**(-theta) from site 1
  into the absorbing state 0 and from site n-1 into n);
* the absorbed pair chain on the triangle V_n = {(x, y): 1 <= x < y <= n-1}
  governing the two-point correlation field.  Its two coordinates are the
  positions of an exclusion pair: from an adjacent pair (x, x+1) only the
  outward moves to (x-1, x+1) and (x, x+2) are allowed, and moves that hit
  the lines x = 0 or y = n are absorbing with rate n**(-theta);
* the corresponding reflected chains, identical except that the absorbing
  moves are suppressed.

All matrices are given on the macroscopic clock, i.e. they include the
n**2 acceleration.  Matrices act on the transient states only; together
with the per-state absorption rates in ``kill`` the row sums of the full
(generator) matrix vanish.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .params import SystemParams

KIND_1D_ABSORBED = "B_theta_1d_absorbed"
KIND_2D_ABSORBED = "A_theta_2d_absorbed"
KIND_1D_REFLECTED = "R_1d_reflected"
KIND_2D_REFLECTED = "R2_2d_reflected"


@dataclass
class DiscreteOperator:
    """A sparse lattice generator on its transient states.

    matrix : csr_matrix
        n**2-accelerated action on the transient states.
    kill : ndarray
        Per-state absorption rate (same acceleration); zero for the
        reflected kinds.
    states : list
        State labels; ints (sites) in 1D, (x, y) pairs in 2D.
    index : dict
        Label -> row position in ``matrix``.
    """

    kind: str
    params: SystemParams
    matrix: sp.csr_matrix
    kill: np.ndarray
    states: list
    index: dict = field(repr=False)

    def generator_row_defect(self):
        """Max |row sum + absorption rate|; zero for a valid generator."""
        rows = np.asarray(self.matrix.sum(axis=1)).ravel()
        return float(np.max(np.abs(rows + self.kill)))

    def min_offdiagonal(self):
        """Smallest off-diagonal entry (must be >= 0)."""
        coo = self.matrix.tocoo()
        off = coo.data[coo.row != coo.col]
        return float(off.min()) if off.size else 0.0


def pair_states(n):
    """Lexicographic list of the triangle states (x, y), 1 <= x < y <= n-1."""
    return [(x, y) for x in range(1, n) for y in range(x + 1, n)]


def absorbed_chain_1d(params):
    """Absorbed 1D chain (profile generator), on sites 1..n-1."""
    n, theta = params.n, params.theta
    m = n - 1
    k = params.boundary_factor
    n2 = params.bulk_rate
    rows, cols, vals = [], [], []
    kill = np.zeros(m)
    for i in range(m):
        x = i + 1
        tot = 0.0
        if x > 1:
            rows.append(i), cols.append(i - 1), vals.append(1.0)
            tot += 1.0
        else:
            kill[i] += k
            tot += k
        if x < n - 1:
            rows.append(i), cols.append(i + 1), vals.append(1.0)
            tot += 1.0
        else:
            kill[i] += k
            tot += k
        rows.append(i), cols.append(i), vals.append(-tot)
    mat = sp.csr_matrix((np.array(vals) * n2, (rows, cols)), shape=(m, m))
    return DiscreteOperator(KIND_1D_ABSORBED, params, mat, n2 * kill,
                            list(range(1, n)), {x: x - 1 for x in range(1, n)})


def reflected_chain_1d(params):
    """1D chain reflected at sites 1 and n-1 (no absorption)."""
    n = params.n
    m = n - 1
    n2 = params.bulk_rate
    rows, cols, vals = [], [], []
    for i in range(m):
        x = i + 1
        tot = 0.0
        if x > 1:
            rows.append(i), cols.append(i - 1), vals.append(1.0)
            tot += 1.0
        if x < n - 1:
            rows.append(i), cols.append(i + 1), vals.append(1.0)
            tot += 1.0
        rows.append(i), cols.append(i), vals.append(-tot)
    mat = sp.csr_matrix((np.array(vals) * n2, (rows, cols)), shape=(m, m))
    return DiscreteOperator(KIND_1D_REFLECTED, params, mat, np.zeros(m),
                            list(range(1, n)), {x: x - 1 for x in range(1, n)})


def _pair_moves(x, y, n):
    """Allowed target cells of the exclusion pair at (x, y); cells with
    x = 0 or y = n are the absorbing boundary."""
    if y == x + 1:
        return [(x - 1, y), (x, y + 1)]
    return [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]


def _pair_chain(params, reflected):
    n, theta = params.n, params.theta
    k = params.boundary_factor
    n2 = params.bulk_rate
    states = pair_states(n)
    index = {p: i for i, p in enumerate(states)}
    rows, cols, vals = [], [], []
    kill = np.zeros(len(states))
    for i, (x, y) in enumerate(states):
        tot = 0.0
        for tx, ty in _pair_moves(x, y, n):
            if tx == 0 or ty == n:
                if not reflected:
                    kill[i] += k
                    tot += k
            else:
                rows.append(i), cols.append(index[(tx, ty)]), vals.append(1.0)
                tot += 1.0
        rows.append(i), cols.append(i), vals.append(-tot)
    mat = sp.csr_matrix((np.array(vals) * n2, (rows, cols)),
                        shape=(len(states), len(states)))
    kind = KIND_2D_REFLECTED if reflected else KIND_2D_ABSORBED
    return DiscreteOperator(kind, params, mat, n2 * kill, states, index)


def pair_chain_2d(params):
    """Absorbed pair chain on V_n (two-point correlation generator)."""
    return _pair_chain(params, reflected=False)


def reflected_pair_chain_2d(params):
    """Pair chain reflected at x = 1, y = n-1 and at the adjacency diagonal."""
    return _pair_chain(params, reflected=True)


def diagonal_indices(n, index=None):
    """Row positions of the adjacent pairs (x, x+1), x = 1..n-2."""
    if index is None:
        index = {p: i for i, p in enumerate(pair_states(n))}
    return np.array([index[(x, x + 1)] for x in range(1, n - 1)], dtype=np.int64)


def dirichlet_modes(n):
    """Eigenpairs of the accelerated 1D chain with unit boundary rates.

    Returns (lam, V): lam[l-1] = 4 n^2 sin^2(pi l / 2n) and column
    V[:, l-1] sampling sqrt(2/n) sin(pi l x / n) at x = 1..n-1.  The
    columns are orthonormal and satisfy (accelerated chain) v = -lam v.
    """
    x = np.arange(1, n)
    ell = np.arange(1, n)
    lam = 4.0 * n * n * np.sin(np.pi * ell / (2 * n)) ** 2
    V = np.sqrt(2.0 / n) * np.sin(np.pi * np.outer(x, ell) / n)
    return lam, V
