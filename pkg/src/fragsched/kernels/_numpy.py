"""Vectorized numpy twins of the numba kernels.

Same algorithms and the same tie-breaking, so both backends return
identical answers.
"""
import numpy as np

NAME = "numpy"


def simplex_iterate(T, d, beta, basis, at_upper, ub, max_iter, tol):
    m, n = T.shape
    is_basic = np.zeros(n, bool)
    is_basic[basis] = True
    degenerate = 0
    it = 0
    while it < max_iter:
        score = np.where(at_upper, -d, np.where(ub > 0.0, d, -np.inf))
        score[is_basic] = -np.inf
        eligible = score > tol
        if not eligible.any():
            return 0, it
        if degenerate > 50:
            j = int(np.argmax(eligible))
        else:
            j = int(np.argmax(np.where(eligible, score, -np.inf)))
        sigma = -1.0 if at_upper[j] else 1.0

        a = sigma * T[:, j]
        ub_b = ub[basis]
        lim = np.full(m, np.inf)
        down = a > tol
        up = (a < -tol) & np.isfinite(ub_b)
        lim[down] = beta[down] / a[down]
        lim[up] = (ub_b[up] - beta[up]) / (-a[up])
        np.maximum(lim, 0.0, out=lim)
        theta = min(ub[j], lim.min()) if m else ub[j]
        if theta == np.inf:
            return 1, it
        r = -1
        cand = np.flatnonzero(lim <= theta + 1e-12)
        if cand.size:
            r = int(cand[np.argmin(basis[cand])])
        if ub[j] <= theta + 1e-12:
            r = -1

        beta -= sigma * theta * T[:, j]
        it += 1
        degenerate = degenerate + 1 if theta <= 1e-12 else 0

        if r < 0:
            at_upper[j] = not at_upper[j]
            continue

        leaving = basis[r]
        at_upper[leaving] = a[r] < 0.0
        enter_val = (ub[j] if at_upper[j] else 0.0) + sigma * theta
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        d -= d[j] * T[r]
        beta[r] = enter_val
        is_basic[leaving] = False
        is_basic[j] = True
        basis[r] = j
        at_upper[j] = False
    return 2, it


def budget_dp(gains, sizes, changed, nchoice, budget):
    J = gains.shape[0]
    V = np.zeros((J + 1, budget + 1))
    C = np.zeros((J + 1, budget + 1), np.int64)
    for j in range(J - 1, -1, -1):
        best = np.full(budget + 1, -np.inf)
        bchg = np.full(budget + 1, 1 << 40, np.int64)
        for k in range(nchoice[j]):
            s = int(sizes[j, k])
            if s > budget:
                continue
            cand = gains[j, k] + V[j + 1, : budget + 1 - s]
            chg = changed[j, k] + C[j + 1, : budget + 1 - s]
            cur, cur_chg = best[s:], bchg[s:]
            take = (cand > cur) | ((cand == cur) & (chg < cur_chg))
            cur[take] = cand[take]
            cur_chg[take] = chg[take]
        V[j] = best
        C[j] = bchg
    return V, C


_CHUNK = 1 << 18


def exhaustive_best(gains, sizes, changed, nchoice, budget):
    J = gains.shape[0]
    shape = tuple(int(k) for k in nchoice)
    total = int(np.prod(shape, dtype=np.int64)) if J else 1
    best_obj = -np.inf
    best = np.zeros(J, np.int64)
    best_chg = None
    for start in range(0, total, _CHUNK):
        lin = np.arange(start, min(start + _CHUNK, total))
        idx = np.unravel_index(lin, shape) if J else ()
        used = np.zeros(lin.size, np.int64)
        for j in range(J):
            used += sizes[j, idx[j]]
        s = np.zeros(lin.size)
        for j in range(J - 1, -1, -1):
            s = gains[j, idx[j]] + s
        s[used > budget] = -np.inf
        top = s.max()
        if top > best_obj:
            best_obj = top
            best_chg = None
        if top < best_obj or top == -np.inf:
            continue
        rows = np.flatnonzero(s == best_obj)
        cand = np.stack([i[rows] for i in idx], axis=1) if J else np.zeros((rows.size, 0), np.int64)
        chg = np.zeros(rows.size, np.int64)
        for j in range(J):
            chg += changed[j, cand[:, j]]
        # fewest changes, then lexicographically largest choice vector
        keys = [-cand[:, j] for j in range(J - 1, -1, -1)] + [chg]
        pick = np.lexsort(keys)[0] if rows.size > 1 else 0
        c_chg, c_vec = int(chg[pick]), cand[pick]
        if best_chg is None or c_chg < best_chg or (
            c_chg == best_chg and tuple(c_vec) > tuple(best)
        ):
            best_chg = c_chg
            best = c_vec.astype(np.int64)
    return best, best_obj, total
