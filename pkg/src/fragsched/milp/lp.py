"""Dense two-phase bounded simplex for LP relaxations.

Solves ``max c @ x`` subject to ``A_ub @ x <= b_ub``, ``A_eq @ x == b_eq``
and finite variable bounds ``lb <= x <= ub``.  Before building the
tableau, fixed columns are substituted out and inequality rows that the
variable bounds already imply are dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels

OPTIMAL, INFEASIBLE, UNBOUNDED, ITERATION_LIMIT = "optimal", "infeasible", "unbounded", "iteration_limit"

_FEAS_TOL = 1e-7
_PIVOT_TOL = 1e-9


class LPError(RuntimeError):
    """The simplex failed (iteration limit or numerical breakdown)."""


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    iterations: int = 0


def _activity_bounds(A, lb, ub):
    pos = np.clip(A, 0, None)
    neg = np.clip(A, None, 0)
    # 0 * inf from an unbounded column with a zero coefficient is harmless
    with np.errstate(invalid="ignore"):
        lo, hi = pos @ lb + neg @ ub, pos @ ub + neg @ lb
    return np.nan_to_num(lo, nan=-np.inf), np.nan_to_num(hi, nan=np.inf)


def solve_lp(c, A_ub, b_ub, A_eq, b_eq, lb, ub, *, kernel=None, max_iter=50_000) -> LPResult:
    kernel = kernel or kernels.backend
    c = np.asarray(c, float)
    lb = np.asarray(lb, float)
    ub = np.asarray(ub, float)
    nvar = c.size
    A_ub = np.asarray(A_ub, float).reshape(-1, nvar)
    A_eq = np.asarray(A_eq, float).reshape(-1, nvar)
    b_ub = np.asarray(b_ub, float)
    b_eq = np.asarray(b_eq, float)
    if np.any(lb > ub + _FEAS_TOL):
        return LPResult(INFEASIBLE)

    # substitute fixed columns
    fixed = ub - lb <= 0.0
    free = ~fixed
    x_fixed = np.where(fixed, lb, 0.0)
    b_ub = b_ub - A_ub @ x_fixed
    b_eq = b_eq - A_eq @ x_fixed
    const = float(c @ x_fixed)
    A_ub, A_eq, cf = A_ub[:, free], A_eq[:, free], c[free]
    lbf, ubf = lb[free], ub[free]

    lo, hi = _activity_bounds(A_ub, lbf, ubf)
    if np.any(lo > b_ub + _FEAS_TOL):
        return LPResult(INFEASIBLE)
    keep = hi > b_ub + 1e-12
    A_ub, b_ub = A_ub[keep], b_ub[keep]
    lo, hi = _activity_bounds(A_eq, lbf, ubf)
    if np.any((lo > b_eq + _FEAS_TOL) | (hi < b_eq - _FEAS_TOL)):
        return LPResult(INFEASIBLE)
    keep = np.any(A_eq != 0.0, axis=1)
    A_eq, b_eq = A_eq[keep], b_eq[keep]

    x = x_fixed.copy()
    if cf.size == 0:
        return LPResult(OPTIMAL, x, const, 0)

    # shift to zero lower bounds
    b_ub = b_ub - A_ub @ lbf
    b_eq = b_eq - A_eq @ lbf
    width = ubf - lbf
    m_ub, m_eq, n = A_ub.shape[0], A_eq.shape[0], cf.size
    m = m_ub + m_eq

    need_art = np.concatenate([b_ub < 0, np.ones(m_eq, bool)])
    n_art = int(need_art.sum())
    ncol = n + m_ub + n_art
    T = np.zeros((m, ncol))
    rhs = np.concatenate([b_ub, b_eq])
    sign = np.where(rhs < 0, -1.0, 1.0)
    T[:m_ub, :n] = A_ub
    T[m_ub:, :n] = A_eq
    T[np.arange(m_ub), n + np.arange(m_ub)] = 1.0
    T *= sign[:, None]
    beta = rhs * sign
    basis = np.empty(m, np.int64)
    art_rows = np.flatnonzero(need_art)
    art_cols = n + m_ub + np.arange(n_art)
    T[art_rows, art_cols] = 1.0
    basis[:m_ub] = n + np.arange(m_ub)
    basis[art_rows] = art_cols

    ubx = np.concatenate([width, np.full(m_ub, np.inf), np.full(n_art, np.inf)])
    at_upper = np.zeros(ncol, bool)
    iters = 0

    if n_art:
        cost1 = np.zeros(ncol)
        cost1[art_cols] = -1.0
        d = cost1 - cost1[basis] @ T
        status, it = kernel.simplex_iterate(T, d, beta, basis, at_upper, ubx, max_iter, _PIVOT_TOL)
        iters += it
        if status != 0:
            raise LPError(f"phase 1 stopped with status {status}")
        infeas = -(cost1[basis] @ beta)
        if infeas > _FEAS_TOL * max(1.0, np.abs(rhs).max()):
            return LPResult(INFEASIBLE, iterations=iters)
        ubx[art_cols] = 0.0
        at_upper[art_cols] = False

    scale = np.abs(cf).max()
    scale = scale if scale > 0 else 1.0
    cost2 = np.zeros(ncol)
    cost2[:n] = cf / scale
    d = cost2 - cost2[basis] @ T
    status, it = kernel.simplex_iterate(T, d, beta, basis, at_upper, ubx, max_iter, _PIVOT_TOL)
    iters += it
    if status == 1:
        return LPResult(UNBOUNDED, iterations=iters)
    if status != 0:
        raise LPError("phase 2 hit the iteration limit")

    vals = np.where(at_upper, ubx, 0.0)
    vals[basis] = beta
    xs = np.clip(vals[:n], 0.0, width) + lbf
    x[free] = xs
    return LPResult(OPTIMAL, x, float(c @ x), iters)
