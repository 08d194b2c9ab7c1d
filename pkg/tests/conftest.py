"""Shared oracles for the test suite.

Everything here is deliberately independent of the library's own machinery:
the magnetization law comes from brute-force enumeration over all 2^N
configurations, and the dense chain is the full 2^N x 2^N one-step matrix
assembled directly from the update rule.
"""

import numpy as np

from pspin_glauber import ModelParams
from pspin_glauber.dynamics import _level_tables


def enumerate_mag_law(params: ModelParams, N: int) -> np.ndarray:
    """Exact magnetization-level law by summing Gibbs weights over 2^N states."""
    assert N <= 20
    sums = np.array([2 * bin(x).count("1") - N for x in range(1 << N)])
    c = sums / N
    w = np.exp(N * (params.beta * c**params.p + params.h * c))
    probs = np.zeros(N + 1)
    np.add.at(probs, (sums + N) // 2, w)
    return probs / probs.sum()


def dense_transition_matrix(params: ModelParams, N: int):
    """Full 2^N-state one-step matrix of the single-site update rule.

    Returns (P, sums) with sums[x] the magnetization sum of state x (bit i
    set means spin +1 at site i).
    """
    assert N <= 12
    size = 1 << N
    sums = np.array([2 * bin(x).count("1") - N for x in range(size)])
    _, f_up = _level_tables(params, N)
    P = np.zeros((size, size))
    for x in range(size):
        f = f_up[(sums[x] + N) >> 1]
        for i in range(N):
            P[x, x | (1 << i)] += f / N
            P[x, x & ~(1 << i)] += (1 - f) / N
    return P, sums


def gibbs_full_law(params: ModelParams, N: int) -> np.ndarray:
    """Exact Gibbs law over all 2^N configurations."""
    sums = np.array([2 * bin(x).count("1") - N for x in range(1 << N)])
    c = sums / N
    w = np.exp(N * (params.beta * c**params.p + params.h * c))
    return w / w.sum()


def central_difference(f, x: float, step: float) -> float:
    return (f(x + step) - f(x - step)) / (2.0 * step)


def mean_hamming_from_opposite_starts(params: ModelParams, N: int, R: int,
                                      checkpoints, seed: int) -> dict:
    """Mean Hamming distance of R coupled pairs started all-plus/all-minus.

    Both chains share the (site, uniform) draw at every step, the grand
    coupling; returns {t: mean Hamming} at the requested checkpoints.
    """
    from pspin_glauber.dynamics import rng_stream

    _, f_up = _level_tables(params, N)
    x = np.ones((R, N), dtype=np.int8)
    y = -x.copy()
    sx = x.sum(axis=1).astype(np.int64)
    sy = y.sum(axis=1).astype(np.int64)
    rows = np.arange(R)
    rng = rng_stream(seed, 0)
    out = {}
    horizon = max(checkpoints)
    for t in range(1, horizon + 1):
        u = rng.random((2, R))
        sites = (u[0] * N).astype(np.int64)
        nx = np.where(u[1] <= f_up[(sx + N) >> 1], 1, -1).astype(np.int8)
        ny = np.where(u[1] <= f_up[(sy + N) >> 1], 1, -1).astype(np.int8)
        sx += nx - x[rows, sites]
        sy += ny - y[rows, sites]
        x[rows, sites] = nx
        y[rows, sites] = ny
        if t in checkpoints:
            ham = np.abs(x.astype(np.int16) - y.astype(np.int16)).sum(axis=1) / 2
            out[t] = float(ham.mean())
    return out
