"""Pure-Python (numpy) simplex pivot loop.

Twin of the compiled kernel in _simplex_core.pyx: same pivot rules, same
floating-point operations in the same order, so both backends produce
identical pivot sequences and identical tableaus.
"""

from __future__ import annotations

import numpy as np

STATUS_OPTIMAL = 0
STATUS_UNBOUNDED = 1
STATUS_PIVOT_LIMIT = 2


def run_pivots(T: np.ndarray, basis: np.ndarray, tol: float,
               bland_after: int, max_pivots: int) -> tuple[int, int]:
    """Pivot the tableau in place until the objective row is non-negative.

    T has the reduced-cost row last and the rhs column last; basis maps
    each constraint row to its basic column. Dantzig entering rule, with
    Bland's rule after bland_after pivots as a cycling guard. Ratio-test
    ties go to the row with the lowest basic-column index.
    """
    nrows = T.shape[0] - 1
    last = T.shape[1] - 1
    pivots = 0
    while True:
        obj = T[nrows, :last]
        if pivots >= bland_after:
            neg = np.nonzero(obj < -tol)[0]
            if neg.size == 0:
                return STATUS_OPTIMAL, pivots
            j = int(neg[0])
        else:
            j = int(np.argmin(obj))
            if obj[j] >= -tol:
                return STATUS_OPTIMAL, pivots
        if pivots >= max_pivots:
            return STATUS_PIVOT_LIMIT, pivots

        col = T[:nrows, j]
        rhs = T[:nrows, last]
        positive = col > tol
        if not positive.any():
            return STATUS_UNBOUNDED, pivots
        ratios = np.where(positive, rhs / np.where(positive, col, 1.0), np.inf)
        rmin = ratios.min()
        ties = np.nonzero(ratios == rmin)[0]
        i = int(ties[np.argmin(basis[ties])])

        piv = T[i, j]
        T[i, :] /= piv
        factors = T[:, j].copy()
        factors[i] = 0.0
        T -= np.outer(factors, T[i, :])
        T[:, j] = 0.0
        T[i, j] = 1.0
        basis[i] = j
        pivots += 1
