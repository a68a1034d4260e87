"""Numba kernel for the parallel-ordered (round-robin) cyclic Jacobi method.

Each sweep visits every off-diagonal pair exactly once. Pairs are scheduled
in ``m - 1`` rounds of ``m / 2`` disjoint rotations (tournament ordering), so
that all rotations of a round commute and can be applied as one row pass and
one column pass. Odd sizes get a phantom index that is simply skipped.
"""
from __future__ import annotations

import math

import numba
import numpy as np


@numba.njit(cache=True)
def jacobi_kernel(a, want_vectors, tol, max_sweeps):
    """Diagonalize the symmetric array ``a`` in place.

    Returns ``(a, vt, sweeps)`` where ``diag(a)`` holds the eigenvalues and
    the rows of ``vt`` the matching eigenvectors. ``sweeps == -1`` signals
    that the off-diagonal norm did not drop below ``tol * ||a||_F``.
    """
    n = a.shape[0]
    m = n + (n & 1)
    if want_vectors:
        vt = np.eye(n)
    else:
        vt = np.zeros((1, 1))
    ring = np.arange(m)
    half = m // 2
    P = np.empty(half, np.int64)
    Q = np.empty(half, np.int64)
    C = np.empty(half)
    S = np.empty(half)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        tot = 0.0
        for i in range(n):
            for j in range(n):
                x = a[i, j] * a[i, j]
                tot += x
                if i != j:
                    off += x
        if math.sqrt(off) <= tol * math.sqrt(tot):
            return a, vt, sweep
        if sweep == max_sweeps:
            break
        skip = tol * math.sqrt(tot) / n
        for step in range(m - 1):
            npairs = 0
            for k in range(half):
                p = ring[k]
                q = ring[m - 1 - k]
                if p > q:
                    p, q = q, p
                if q >= n:
                    continue
                apq = a[p, q]
                if abs(apq) <= skip:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.hypot(theta, 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                P[npairs] = p
                Q[npairs] = q
                C[npairs] = c
                S[npairs] = t * c
                npairs += 1
            for r in range(npairs):
                p = P[r]
                q = Q[r]
                c = C[r]
                s = S[r]
                for k in range(n):
                    x = a[p, k]
                    y = a[q, k]
                    a[p, k] = c * x - s * y
                    a[q, k] = s * x + c * y
            for k in range(n):
                for r in range(npairs):
                    p = P[r]
                    q = Q[r]
                    c = C[r]
                    s = S[r]
                    x = a[k, p]
                    y = a[k, q]
                    a[k, p] = c * x - s * y
                    a[k, q] = s * x + c * y
            if want_vectors:
                for r in range(npairs):
                    p = P[r]
                    q = Q[r]
                    c = C[r]
                    s = S[r]
                    for k in range(n):
                        x = vt[p, k]
                        y = vt[q, k]
                        vt[p, k] = c * x - s * y
                        vt[q, k] = s * x + c * y
            for r in range(npairs):
                a[P[r], Q[r]] = 0.0
                a[Q[r], P[r]] = 0.0
            last = ring[m - 1]
            for k in range(m - 1, 1, -1):
                ring[k] = ring[k - 1]
            ring[1] = last
    return a, vt, -1


@numba.njit(cache=True)
def stieltjes_sum_kernel(s2, z):
    """``z * mean_k 1/(s2[k] - z^2)`` for each entry of the 1-d array ``z``."""
    out = np.empty(z.size, dtype=np.complex128)
    n = s2.size
    for i in range(z.size):
        w = z[i] * z[i]
        acc = 0j
        for k in range(n):
            acc += 1.0 / (s2[k] - w)
        out[i] = z[i] * acc / n
    return out
