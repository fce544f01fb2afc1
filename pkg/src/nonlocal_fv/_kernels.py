"""Compiled inner loops for the nonlocal quadrature and the turning rates.

Each cell accumulates its quadrature serially in ascending offset order, so the
result for a cell never depends on its position in the array or on how many
threads share the outer loop.
"""
import math
import warnings

import numba
import numpy as np
from numba import njit, prange

warnings.filterwarnings("ignore", message=".*TBB threading layer.*")


@njit(cache=True, parallel=True)
def odd_difference_sums(ahead, behind, w):
    """out[i] = sum_k w[k] * (ahead[i + k] - behind[i - k]), periodic in i."""
    n = ahead.shape[0]
    m = w.shape[0] - 1
    pad_a = np.empty(n + 2 * m)
    pad_b = np.empty(n + 2 * m)
    for i in range(n + 2 * m):
        j = (i - m) % n
        pad_a[i] = ahead[j]
        pad_b[i] = behind[j]
    out = np.empty(n)
    for i in prange(n):
        c = i + m
        acc = 0.0
        for k in range(m + 1):
            acc += w[k] * (pad_a[c + k] - pad_b[c - k])
        out[i] = acc
    return out


@njit(cache=True)
def tanh_rates(y, lambda1, lambda2, y0):
    out = np.empty(y.shape[0])
    for i in range(y.shape[0]):
        out[i] = lambda1 + lambda2 * (0.5 + 0.5 * math.tanh(y[i] - y0))
    return out


def set_threads(n):
    """Clamp and apply a thread-count hint for the compiled loops."""
    if n is None or n <= 0:
        return numba.get_num_threads()
    n = min(int(n), numba.config.NUMBA_NUM_THREADS)
    numba.set_num_threads(n)
    return n
