"""Compiled inner loops."""
import numba
import numpy as np


@numba.njit(cache=True, nogil=True)
def permuted_inner(a, b, perm):
    """``sum_ij a[i, j] * b[perm[i], perm[j]]`` without materialising the permuted matrix."""
    n = a.shape[0]
    total = 0.0
    for i in range(n):
        ai = a[i]
        bi = b[perm[i]]
        acc = 0.0
        for j in range(n):
            acc += ai[j] * bi[perm[j]]
        total += acc
    return total


def identity(n: int) -> np.ndarray:
    return np.arange(n, dtype=np.intp)
