"""Compiled O(n^2) grid sweeps.

Both kernels walk the n x n grid row by row, keeping the column counts of
the current row in a single vector, so memory stays O(n). Each row is
summed in a fixed order and rows are combined in order, which keeps the
result independent of how callers schedule replicates.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def copula_sweep(row_col, y_marg):
    """Discrepancy of the empirical copula against its margins.

    Parameters
    ----------
    row_col : int64[n]
        ``row_col[j-1]`` is the Y-rank of the point with X-rank ``j``.
    y_marg : int64[n+1]
        ``y_marg[k] = #{i : S_i <= k}``.

    Returns
    -------
    (sum_sq, max_abs) of ``d(j, k) = n * count(j, k) - j * y_marg[k]``
    over ``1 <= j, k <= n``.
    """
    n = row_col.size
    cnt = np.zeros(n + 1, dtype=np.int64)
    total = 0.0
    max_abs = 0
    for j in range(1, n + 1):
        s = row_col[j - 1]
        for k in range(s, n + 1):
            cnt[k] += 1
        row = 0
        for k in range(1, n + 1):
            d = n * cnt[k] - j * y_marg[k]
            row += d * d
            if d < 0:
                d = -d
            if d > max_abs:
                max_abs = d
        total += row
    return total, max_abs


@njit(cache=True, nogil=True)
def local_sweep(r):
    """Sum of squares of ``(n^2 count_L(j, k) - (n-1) j k)`` over the grid.

    ``count_L(j, k) = #{i < n : r_i <= j, r_{i+1} <= k}``.
    """
    n = r.size
    nxt = np.zeros(n + 1, dtype=np.int64)
    for i in range(n - 1):
        nxt[r[i]] = r[i + 1]
    cnt = np.zeros(n + 1, dtype=np.int64)
    total = 0.0
    n2 = n * n
    for j in range(1, n + 1):
        s = nxt[j]
        if s > 0:
            for k in range(s, n + 1):
                cnt[k] += 1
        row = 0.0
        for k in range(1, n + 1):
            d = float(n2 * cnt[k] - (n - 1) * j * k)
            row += d * d
        total += row
    return total
