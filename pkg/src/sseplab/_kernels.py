"""Compiled inner loops for the exclusion-process Monte Carlo engine.

The random stream here is the same xoshiro256++ generator as
``sseplab.rng.RandomSource`` and consumes draws in the same order, so
Python-level stepping and the compiled ensemble driver produce
bit-identical trajectories for equal (seed, stream_id).
"""

import numpy as np
from numba import njit, uint64, float64

_MASK = uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = uint64(0x9E3779B97F4A7C15)
_STREAM_MULT = uint64(0xA3EC647659359ACD)


@njit(cache=True, inline="always")
def _splitmix64(z):
    z = ((z ^ (z >> uint64(30))) * uint64(0xBF58476D1CE4E5B9)) & _MASK
    z = ((z ^ (z >> uint64(27))) * uint64(0x94D049BB133111EB)) & _MASK
    return z ^ (z >> uint64(31))


@njit(cache=True, inline="always")
def _rotl(x, k):
    return ((x << k) | (x >> (uint64(64) - k))) & _MASK


@njit(cache=True)
def _init_state(seed, stream_id):
    s = np.empty(4, dtype=np.uint64)
    acc = seed ^ ((stream_id * _STREAM_MULT) & _MASK)
    for i in range(4):
        acc = (acc + _GOLDEN) & _MASK
        s[i] = _splitmix64(acc)
    return s


@njit(cache=True, inline="always")
def _next_u64(s):
    result = (_rotl((s[0] + s[3]) & _MASK, uint64(23)) + s[0]) & _MASK
    t = (s[1] << uint64(17)) & _MASK
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], uint64(45))
    return result


@njit(cache=True, inline="always")
def _uniform(s):
    # in (0, 1], safe under log
    return (float64(_next_u64(s) >> uint64(11)) + 1.0) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def _toggle_bond(eta, pos, loc, D, b):
    """Update the discrepant-bond index set after eta changed at bond b."""
    if eta[b] != eta[b + 1]:
        if loc[b] < 0:
            pos[D] = b
            loc[b] = D
            D += 1
    else:
        if loc[b] >= 0:
            j = loc[b]
            last = pos[D - 1]
            pos[j] = last
            loc[last] = j
            loc[b] = -1
            D -= 1
    return D


@njit(cache=True)
def _run_one(eta, n, theta, alpha, beta, state, t0, t_samples, out):
    """Advance one trajectory from time t0, recording the state at each
    requested macroscopic time.  Mutates eta and the rng state; returns
    the time of the last processed event.
    """
    m = n - 1
    nb = n - 2
    n2 = float64(n) * float64(n)
    kb = n2 * float64(n) ** (-theta)
    T = t_samples.shape[0]

    pos = np.empty(nb, dtype=np.int64)
    loc = np.full(nb, -1, dtype=np.int64)
    D = 0
    for b in range(nb):
        if eta[b] != eta[b + 1]:
            pos[D] = b
            loc[b] = D
            D += 1

    t = t0
    si = 0
    while si < T:
        lr = kb * (alpha if eta[0] == 0 else 1.0 - alpha)
        rr = kb * (beta if eta[m - 1] == 0 else 1.0 - beta)
        bulk = D * n2
        tot = bulk + lr + rr
        t_next = t - np.log(_uniform(state)) / tot
        while si < T and t_samples[si] < t_next:
            out[si, :] = eta
            si += 1
        if si >= T:
            break
        t = t_next
        u = _uniform(state) * tot
        if u < bulk:
            b = pos[np.int64(u / n2)]
            tmp = eta[b]
            eta[b] = eta[b + 1]
            eta[b + 1] = tmp
            if b - 1 >= 0:
                D = _toggle_bond(eta, pos, loc, D, b - 1)
            if b + 1 < nb:
                D = _toggle_bond(eta, pos, loc, D, b + 1)
        else:
            site = 0 if u - bulk < lr else m - 1
            eta[site] = 1 - eta[site]
            b = 0 if site == 0 else nb - 1
            if 0 <= b < nb:
                D = _toggle_bond(eta, pos, loc, D, b)
    return t


@njit(cache=True)
def _run_ensemble(n, theta, alpha, beta, seed, init_mode, init_profile,
                  eta_fixed, t_samples, out):
    """Independent replicas, one per stream id.

    init_mode 0: every replica starts from eta_fixed.
    init_mode 1: site i is occupied with probability init_profile[i],
                 sampled from the replica's own stream before stepping.
    out has shape (replicas, len(t_samples), n-1).
    """
    R = out.shape[0]
    m = n - 1
    for r in range(R):
        state = _init_state(uint64(seed), uint64(r))
        eta = np.empty(m, dtype=np.uint8)
        if init_mode == 0:
            for i in range(m):
                eta[i] = eta_fixed[i]
        else:
            for i in range(m):
                eta[i] = 1 if _uniform(state) <= init_profile[i] else 0
        _run_one(eta, n, theta, alpha, beta, state, 0.0, t_samples, out[r])
