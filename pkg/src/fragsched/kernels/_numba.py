"""Loop kernels compiled with numba."""
import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def simplex_iterate(T, d, beta, basis, at_upper, ub, max_iter, tol):
    """Bounded primal simplex on a dense tableau, maximizing.

    All variables are shifted to a lower bound of 0.  ``T`` holds
    B^-1 A, ``d`` the reduced costs, ``beta`` the basic values.  Arrays
    are updated in place.  Returns (status, iterations) with status
    0 = optimal, 1 = unbounded, 2 = iteration limit.
    """
    m, n = T.shape
    pos = np.full(n, -1, np.int64)
    for i in range(m):
        pos[basis[i]] = i
    degenerate = 0
    it = 0
    while it < max_iter:
        bland = degenerate > 50
        # pricing
        j = -1
        best = 0.0
        for k in range(n):
            if pos[k] >= 0:
                continue
            if at_upper[k]:
                score = -d[k]
            elif ub[k] > 0.0:
                score = d[k]
            else:
                continue
            if score > tol:
                if bland:
                    j = k
                    break
                if score > best:
                    best = score
                    j = k
        if j < 0:
            return 0, it
        sigma = -1.0 if at_upper[j] else 1.0

        # ratio test: first pass finds the step, second breaks ties by
        # smallest basic column index
        theta = ub[j]
        for i in range(m):
            a = sigma * T[i, j]
            if a > tol:
                lim = beta[i] / a
            elif a < -tol and ub[basis[i]] < np.inf:
                lim = (ub[basis[i]] - beta[i]) / (-a)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim < theta:
                theta = lim
        if theta == np.inf:
            return 1, it
        r = -1
        rcol = n
        for i in range(m):
            a = sigma * T[i, j]
            if a > tol:
                lim = beta[i] / a
            elif a < -tol and ub[basis[i]] < np.inf:
                lim = (ub[basis[i]] - beta[i]) / (-a)
            else:
                continue
            if lim < 0.0:
                lim = 0.0
            if lim <= theta + 1e-12 and basis[i] < rcol:
                r = i
                rcol = basis[i]
        if ub[j] <= theta + 1e-12:
            # a bound flip needs no basis change, so it wins ties
            r = -1

        for i in range(m):
            beta[i] -= sigma * theta * T[i, j]
        it += 1
        if theta <= 1e-12:
            degenerate += 1
        else:
            degenerate = 0

        if r < 0:
            at_upper[j] = not at_upper[j]
            continue

        leaving = basis[r]
        a = sigma * T[r, j]
        at_upper[leaving] = a < 0.0
        enter_val = (ub[j] if at_upper[j] else 0.0) + sigma * theta
        piv = T[r, j]
        for k in range(n):
            T[r, k] /= piv
        for i in range(m):
            if i != r:
                f = T[i, j]
                if f != 0.0:
                    for k in range(n):
                        T[i, k] -= f * T[r, k]
        f = d[j]
        if f != 0.0:
            for k in range(n):
                d[k] -= f * T[r, k]
        beta[r] = enter_val
        pos[leaving] = -1
        pos[j] = r
        basis[r] = j
        at_upper[j] = False
    return 2, it


@njit(cache=True)
def budget_dp(gains, sizes, changed, nchoice, budget):
    """Suffix DP over jobs: best (objective, fewest changes) per budget.

    ``V[j, b]`` is the best objective of jobs j..J-1 using at most b nodes;
    ``C[j, b]`` the matching number of changed jobs.
    """
    J = gains.shape[0]
    V = np.zeros((J + 1, budget + 1))
    C = np.zeros((J + 1, budget + 1), np.int64)
    for j in range(J - 1, -1, -1):
        for b in range(budget + 1):
            best = -np.inf
            bchg = 1 << 40
            for k in range(nchoice[j]):
                s = sizes[j, k]
                if s > b:
                    continue
                cand = gains[j, k] + V[j + 1, b - s]
                chg = changed[j, k] + C[j + 1, b - s]
                if cand > best or (cand == best and chg < bchg):
                    best = cand
                    bchg = chg
            V[j, b] = best
            C[j, b] = bchg
    return V, C


@njit(cache=True)
def exhaustive_best(gains, sizes, changed, nchoice, budget):
    """Enumerate every count vector; returns (choice, objective, n_candidates).

    Ties on objective go to fewer changed jobs, then to the
    lexicographically largest choice vector.
    """
    J = gains.shape[0]
    total = 1
    for j in range(J):
        total *= nchoice[j]
    idx = np.zeros(J, np.int64)
    best_obj = -np.inf
    for _ in range(total):
        used = 0
        for j in range(J):
            used += sizes[j, idx[j]]
        if used <= budget:
            s = 0.0
            for j in range(J - 1, -1, -1):
                s = gains[j, idx[j]] + s
            if s > best_obj:
                best_obj = s
        for j in range(J - 1, -1, -1):
            idx[j] += 1
            if idx[j] < nchoice[j]:
                break
            idx[j] = 0

    best = np.zeros(J, np.int64)
    best_chg = 1 << 40
    found = False
    idx[:] = 0
    for _ in range(total):
        used = 0
        for j in range(J):
            used += sizes[j, idx[j]]
        if used <= budget:
            s = 0.0
            for j in range(J - 1, -1, -1):
                s = gains[j, idx[j]] + s
            if s == best_obj:
                chg = 0
                for j in range(J):
                    chg += changed[j, idx[j]]
                better = False
                if not found or chg < best_chg:
                    better = True
                elif chg == best_chg:
                    for j in range(J):
                        if idx[j] != best[j]:
                            better = idx[j] > best[j]
                            break
                if better:
                    found = True
                    best_chg = chg
                    best[:] = idx
        for j in range(J - 1, -1, -1):
            idx[j] += 1
            if idx[j] < nchoice[j]:
                break
            idx[j] = 0
    return best, best_obj, total
