"""Hot numeric kernels.

The simplex pivot loop dominates solver runtime, so it is compiled with
numba when available. Setting DELAYFLOW_NO_NUMBA=1 selects the pure-numpy
fallback (same code path, uncompiled); see benchmarks/bench_kernels.py for
a comparison of the two.
"""

from __future__ import annotations

import os

import numpy as np

#: Pivot tolerance for the tableau simplex.
PIVOT_TOL = 1e-9

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_ITER_LIMIT = 2


def _simplex_iterations(T, basis, n_enterable, max_iter):
    """Run Bland-rule simplex pivots on tableau T in place.

    T has shape (m+1, n+1): m constraint rows plus the objective row last,
    n columns plus the rhs column last. The objective row holds reduced
    costs for a maximization; a column j with T[m, j] < -PIVOT_TOL can
    improve. Only columns < n_enterable may enter (artificials stay out
    in phase 2). Returns a status code.
    """
    m = T.shape[0] - 1
    for _ in range(max_iter):
        enter = -1
        for j in range(n_enterable):
            if T[m, j] < -PIVOT_TOL:
                enter = j
                break
        if enter < 0:
            return STATUS_OPTIMAL
        # Ratio test; ties go to the smallest basis index (Bland).
        leave = -1
        best = np.inf
        for i in range(m):
            a = T[i, enter]
            if a > PIVOT_TOL:
                r = T[i, -1] / a
                if r < best - PIVOT_TOL or (
                    r < best + PIVOT_TOL and (leave < 0 or basis[i] < basis[leave])
                ):
                    if r < best:
                        best = r
                    leave = i
        if leave < 0:
            return STATUS_UNBOUNDED
        piv = T[leave, enter]
        T[leave, :] /= piv
        for i in range(m + 1):
            if i != leave:
                f = T[i, enter]
                if f != 0.0:
                    T[i, :] -= f * T[leave, :]
        basis[leave] = enter
    return STATUS_ITER_LIMIT


USE_NUMBA = os.environ.get("DELAYFLOW_NO_NUMBA", "") not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        from numba import njit

        simplex_iterations = njit(cache=True)(_simplex_iterations)
    except ImportError:  # pragma: no cover
        simplex_iterations = _simplex_iterations
        USE_NUMBA = False
else:
    simplex_iterations = _simplex_iterations
