import numpy as np
import pytest

from sseplab import SystemParams
from sseplab.operators import (absorbed_chain_1d, pair_chain_2d,
                               reflected_chain_1d, reflected_pair_chain_2d,
                               pair_states, diagonal_indices, dirichlet_modes)

PARAM_DRAWS = [
    SystemParams(4, 0.0, 0.2, 0.8),
    SystemParams(5, 0.5, 0.3, 0.6),
    SystemParams(8, 1.0, 0.2, 0.8),
    SystemParams(12, 2.0, 0.45, 0.55),
    SystemParams(17, 3.0, 0.1, 0.9),
]


@pytest.mark.parametrize("params", PARAM_DRAWS)
@pytest.mark.parametrize("build", [absorbed_chain_1d, pair_chain_2d,
                                   reflected_chain_1d,
                                   reflected_pair_chain_2d])
def test_generator_property(params, build):
    op = build(params)
    assert op.min_offdiagonal() >= 0.0
    # row sums of the closed generator (transient rows + absorption) vanish
    assert op.generator_row_defect() <= 1e-9


@pytest.mark.parametrize("params", PARAM_DRAWS)
def test_absorbed_1d_rate_placement(params):
    op = absorbed_chain_1d(params)
    k = params.boundary_factor * params.bulk_rate
    m = params.n - 1
    assert op.kill[0] == pytest.approx(k)
    assert op.kill[m - 1] == pytest.approx(k)
    assert np.all(op.kill[1:m - 1] == 0.0)
    dense = op.matrix.toarray()
    for i in range(m - 1):
        assert dense[i, i + 1] == pytest.approx(params.bulk_rate)
        assert dense[i + 1, i] == pytest.approx(params.bulk_rate)


@pytest.mark.parametrize("params", PARAM_DRAWS)
def test_pair_chain_rate_placement(params):
    """Damped rates appear exactly on moves leaving V_n; adjacent pairs
    move only outward (two moves)."""
    n = params.n
    op = pair_chain_2d(params)
    k = params.boundary_factor * params.bulk_rate
    dense = op.matrix.toarray()
    for i, (x, y) in enumerate(op.states):
        # moves into x = 0 or y = n are absorbing: exactly when x = 1 / y = n-1
        expected_kill = (k if x == 1 else 0.0) + (k if y == n - 1 else 0.0)
        moves = [(x - 1, y), (x, y + 1)] if y == x + 1 else \
            [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
        targets = {op.index[t]: params.bulk_rate for t in moves if t in op.index}
        assert op.kill[i] == pytest.approx(expected_kill)
        row = {j: dense[i, j] for j in np.nonzero(dense[i])[0] if j != i}
        assert row == pytest.approx(targets)


def test_reflected_chains_have_no_kill():
    p = SystemParams(9, 1.5, 0.2, 0.8)
    assert np.all(reflected_chain_1d(p).kill == 0.0)
    assert np.all(reflected_pair_chain_2d(p).kill == 0.0)


def test_reflected_2d_corner_rows():
    """Corner adjacent pairs have a single outward move."""
    p = SystemParams(6, 2.0, 0.2, 0.8)
    op = reflected_pair_chain_2d(p)
    dense = op.matrix.toarray()
    i12 = op.index[(1, 2)]
    nz = [j for j in np.nonzero(dense[i12])[0] if j != i12]
    assert nz == [op.index[(1, 3)]]
    icorner = op.index[(p.n - 2, p.n - 1)]
    nz = [j for j in np.nonzero(dense[icorner])[0] if j != icorner]
    assert nz == [op.index[(p.n - 3, p.n - 1)]]


def test_pair_states_order_and_diagonal():
    n = 6
    states = pair_states(n)
    assert states[0] == (1, 2)
    assert states[-1] == (n - 2, n - 1)
    assert len(states) == (n - 1) * (n - 2) // 2
    diag = diagonal_indices(n)
    assert [states[i] for i in diag] == [(x, x + 1) for x in range(1, n - 1)]


@pytest.mark.parametrize("n", [4, 9, 32])
def test_dirichlet_modes_orthonormal(n):
    lam, V = dirichlet_modes(n)
    gram = V.T @ V
    assert np.max(np.abs(gram - np.eye(n - 1))) < 1e-10


@pytest.mark.parametrize("n", [4, 9, 32])
def test_dirichlet_modes_are_eigenvectors(n):
    p = SystemParams(n, 0.0, 0.5, 0.5)
    lam, V = dirichlet_modes(n)
    op = absorbed_chain_1d(p).matrix.toarray()
    for ell in range(n - 1):
        v = V[:, ell]
        resid = op @ v + lam[ell] * v
        assert np.max(np.abs(resid)) < 1e-9 * max(lam[ell], 1.0)
