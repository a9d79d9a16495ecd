"""Two-phase dense simplex for LP relaxations.

Solves max c.x subject to A x <= b, x >= 0 (b may be negative). The hot
pivot loop lives in a compiled Cython kernel when available, with a
bit-identical numpy fallback selected at import time (DORMALLOC_PURE=1
forces the fallback).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _simplex_py

if os.environ.get("DORMALLOC_PURE"):
    _kernel = _simplex_py
else:
    try:
        from . import _simplex_core as _kernel  # type: ignore[no-redef]
    except ImportError:
        _kernel = _simplex_py

BACKEND = "cython" if _kernel is not _simplex_py else "python"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
PIVOT_LIMIT = "pivot_limit"

FEAS_TOL = 1e-9
BLAND_FACTOR = 10


@dataclass
class LpResult:
    status: str
    x: np.ndarray | None
    objective: float
    pivots: int


def solve_lp(c: np.ndarray, A: np.ndarray, b: np.ndarray,
             max_pivots: int = 10**9,
             kernel=None) -> LpResult:
    """Maximize c.x s.t. A x <= b, x >= 0 via two-phase tableau simplex."""
    run = (kernel or _kernel).run_pivots
    c = np.asarray(c, dtype=np.float64)
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    total_pivots = 0

    neg = b < 0
    Aw = np.where(neg[:, None], -A, A)
    bw = np.where(neg, -b, b)
    slack = np.where(neg, -1.0, 1.0)
    art_rows = np.nonzero(neg)[0]
    n_art = art_rows.size

    ncols = n + m + n_art
    T = np.zeros((m + 1, ncols + 1), dtype=np.float64)
    T[:m, :n] = Aw
    T[np.arange(m), n + np.arange(m)] = slack
    T[art_rows, n + m + np.arange(n_art)] = 1.0
    T[:m, ncols] = bw

    basis = np.empty(m, dtype=np.int64)
    basis[:] = n + np.arange(m)
    basis[art_rows] = n + m + np.arange(n_art)

    bland_after = BLAND_FACTOR * (m + ncols)

    if n_art:
        # phase 1: minimize the sum of artificials
        T[m, n + m:ncols] = 1.0
        for i in art_rows:
            T[m, :] -= T[i, :]
        status, pivots = run(T, basis, FEAS_TOL, bland_after, max_pivots)
        total_pivots += pivots
        if status == _simplex_py.STATUS_PIVOT_LIMIT:
            return LpResult(PIVOT_LIMIT, None, float("nan"), total_pivots)
        if status == _simplex_py.STATUS_UNBOUNDED:
            raise RuntimeError("phase-1 objective cannot be unbounded")
        if -T[m, ncols] > 1e-7:
            return LpResult(INFEASIBLE, None, float("nan"), total_pivots)

    # phase 2 on structural + slack columns only
    keep_rows = [i for i in range(m) if basis[i] < n + m]
    # rows still basic in an artificial are redundant at level ~0: try to
    # pivot them onto a real column first, otherwise drop them
    for i in range(m):
        if basis[i] >= n + m:
            piv_col = -1
            for j in range(n + m):
                if abs(T[i, j]) > FEAS_TOL:
                    piv_col = j
                    break
            if piv_col >= 0:
                piv = T[i, piv_col]
                T[i, :] /= piv
                factors = T[:, piv_col].copy()
                factors[i] = 0.0
                T -= np.outer(factors, T[i, :])
                T[:, piv_col] = 0.0
                T[i, piv_col] = 1.0
                basis[i] = piv_col
                keep_rows.append(i)
    keep_rows.sort()

    T2 = np.zeros((len(keep_rows) + 1, n + m + 1), dtype=np.float64)
    T2[:len(keep_rows), :n + m] = T[keep_rows, :n + m]
    T2[:len(keep_rows), n + m] = T[keep_rows, ncols]
    basis2 = basis[keep_rows].copy()

    cost = np.zeros(n + m + 1, dtype=np.float64)
    cost[:n] = -c  # maximize c.x == minimize -c.x
    T2[-1, :] = cost
    for i in range(len(keep_rows)):
        if cost[basis2[i]] != 0.0:
            T2[-1, :] -= cost[basis2[i]] * T2[i, :]

    status, pivots = run(T2, basis2, FEAS_TOL, bland_after,
                         max_pivots - total_pivots)
    total_pivots += pivots
    if status == _simplex_py.STATUS_PIVOT_LIMIT:
        return LpResult(PIVOT_LIMIT, None, float("nan"), total_pivots)
    if status == _simplex_py.STATUS_UNBOUNDED:
        return LpResult(UNBOUNDED, None, float("inf"), total_pivots)

    x = np.zeros(n, dtype=np.float64)
    nrows = len(keep_rows)
    for i in range(nrows):
        if basis2[i] < n:
            x[basis2[i]] = T2[i, n + m]
    return LpResult(OPTIMAL, x, float(c @ x), total_pivots)
