import numpy as np
import pytest

from sseplab import SystemParams, RandomSource, parse_seed
from sseplab.rng import initial_state
from sseplab import _kernels


def test_validation():
    SystemParams(3, 0.0, 0.2, 0.8)
    with pytest.raises(ValueError):
        SystemParams(2, 0.0, 0.2, 0.8)
    with pytest.raises(ValueError):
        SystemParams(4, -0.5, 0.2, 0.8)
    with pytest.raises(ValueError):
        SystemParams(4, 0.0, 0.0, 0.8)
    with pytest.raises(ValueError):
        SystemParams(4, 0.0, 0.2, 1.0)


def test_boundary_rates_positive():
    for theta in (0.0, 0.5, 1.0, 3.0):
        p = SystemParams(6, theta, 0.2, 0.8)
        for occ in (False, True):
            assert p.flip_rate_left(occ) > 0
            assert p.flip_rate_right(occ) > 0


def test_flip_rate_values():
    # alpha*n^(2-theta) for creation at an empty left site
    p = SystemParams(4, 1.0, 0.2, 0.8)
    assert p.flip_rate_left(False) == pytest.approx(16 * 0.2 / 4)
    assert p.flip_rate_left(True) == pytest.approx(16 * 0.8 / 4)


def test_seed_parsing():
    assert parse_seed("12345") == 12345
    assert parse_seed("0xff") == 255
    assert parse_seed("0XAB") == 171
    assert parse_seed(7) == 7


def test_random_source_determinism():
    a = RandomSource(987654321, 3)
    b = RandomSource(987654321, 3)
    assert [a.next_u64() for _ in range(64)] == [b.next_u64() for _ in range(64)]


def test_random_source_streams_differ():
    a = RandomSource(1, 0)
    b = RandomSource(1, 1)
    assert [a.next_u64() for _ in range(8)] != [b.next_u64() for _ in range(8)]


def test_uniform_range_and_moments():
    r = RandomSource(42, 0)
    u = np.array([r.uniform() for _ in range(20000)])
    assert np.all(u > 0) and np.all(u <= 1)
    assert abs(u.mean() - 0.5) < 0.01
    assert abs(u.var() - 1 / 12) < 0.005


def test_python_and_kernel_streams_match():
    py = RandomSource(0xDEADBEEF, 5)
    ks = _kernels._init_state(np.uint64(0xDEADBEEF), np.uint64(5))
    assert np.array_equal(py.state, ks)
    kvals = [int(_kernels._next_u64(ks)) for _ in range(32)]
    pvals = [py.next_u64() for _ in range(32)]
    assert kvals == pvals
