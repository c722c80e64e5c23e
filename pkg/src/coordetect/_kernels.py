"""Hot inner loops.

Every kernel exists twice: a loop form compiled with ``numba.njit`` and a
vectorized numpy form. Set ``COORDETECT_NO_JIT=1`` to use the numpy forms
(useful when numba is unavailable or when debugging). Both forms follow the
same pivoting / tie-breaking rules so they return identical answers up to
floating-point summation order.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_JIT = numba is not None and os.environ.get("COORDETECT_NO_JIT", "0") != "1"

SIMPLEX_OPTIMAL = 0
SIMPLEX_UNBOUNDED = 1
SIMPLEX_ITERATION_LIMIT = 2

_RATIO_TIE = 1e-12


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# ---------------------------------------------------------------------------
# simplex


def _simplex_loop_nb(tab, basis, allowed, max_iter, bland_after, pivot_tol):
    m = tab.shape[0] - 1
    ncol = tab.shape[1] - 1
    it = 0
    while True:
        enter = -1
        best = -pivot_tol
        bland = it >= bland_after
        for j in range(ncol):
            if not allowed[j]:
                continue
            rc = tab[m, j]
            if rc < best:
                enter = j
                if bland:
                    break
                best = rc
        if enter < 0:
            return SIMPLEX_OPTIMAL, it
        if it >= max_iter:
            return SIMPLEX_ITERATION_LIMIT, it

        leave = -1
        best_ratio = np.inf
        for r in range(m):
            a = tab[r, enter]
            if a > pivot_tol:
                rhs = tab[r, ncol]
                if rhs < 0.0:
                    rhs = 0.0
                ratio = rhs / a
                if leave < 0 or ratio < best_ratio - _RATIO_TIE * (1.0 + abs(best_ratio)):
                    leave = r
                    best_ratio = ratio
                elif ratio <= best_ratio + _RATIO_TIE * (1.0 + abs(best_ratio)) \
                        and basis[r] < basis[leave]:
                    leave = r
                    best_ratio = min(ratio, best_ratio)
        if leave < 0:
            return SIMPLEX_UNBOUNDED, it

        piv = tab[leave, enter]
        for c in range(ncol + 1):
            tab[leave, c] /= piv
        for r in range(m + 1):
            if r == leave:
                continue
            f = tab[r, enter]
            if f != 0.0:
                for c in range(ncol + 1):
                    tab[r, c] -= f * tab[leave, c]
        basis[leave] = enter
        it += 1


def _simplex_loop_np(tab, basis, allowed, max_iter, bland_after, pivot_tol, trace=None):
    m = tab.shape[0] - 1
    ncol = tab.shape[1] - 1
    idx = np.arange(m)
    it = 0
    while True:
        rc = np.where(allowed, tab[m, :ncol], np.inf)
        candidates = np.flatnonzero(rc < -pivot_tol)
        if candidates.size == 0:
            return SIMPLEX_OPTIMAL, it
        if it >= max_iter:
            return SIMPLEX_ITERATION_LIMIT, it
        if it >= bland_after:
            enter = int(candidates[0])
        else:
            enter = int(np.argmin(rc))

        col = tab[:m, enter]
        ok = col > pivot_tol
        if not ok.any():
            return SIMPLEX_UNBOUNDED, it
        rows = idx[ok]
        ratios = np.maximum(tab[rows, ncol], 0.0) / col[ok]
        # replicate the sequential tie rule of the loop kernel
        leave = int(rows[0])
        best_ratio = ratios[0]
        for r, ratio in zip(rows[1:], ratios[1:]):
            tie = _RATIO_TIE * (1.0 + abs(best_ratio))
            if ratio < best_ratio - tie:
                leave, best_ratio = int(r), ratio
            elif ratio <= best_ratio + tie and basis[r] < basis[leave]:
                leave, best_ratio = int(r), min(ratio, best_ratio)

        tab[leave] /= tab[leave, enter]
        f = tab[:, enter].copy()
        f[leave] = 0.0
        tab -= np.outer(f, tab[leave])
        basis[leave] = enter
        it += 1
        if trace is not None:
            trace(it, enter, leave, tab)


# ---------------------------------------------------------------------------
# Monte-Carlo max statistic


def _psi_nb(alpha, eps):
    L, M, T, N = eps.shape
    out = np.empty(L)
    for l in range(L):
        best = -np.inf
        for i in range(M):
            for t in range(T):
                at_et = 0.0
                for n in range(N):
                    at_et += alpha[t, n] * eps[l, i, t, n]
                for s in range(T):
                    if s == t:
                        continue
                    at_es = 0.0
                    for n in range(N):
                        at_es += alpha[t, n] * eps[l, i, s, n]
                    v = at_et - at_es
                    if v > best:
                        best = v
        out[l] = best
    return out


def _psi_np(alpha, eps):
    L, M, T, N = eps.shape
    if T < 2:
        return np.full(L, -np.inf)
    # proj[l, i, t, s] = alpha_t' eps_s^i
    proj = np.einsum("tn,lisn->lits", alpha, eps)
    diag = np.einsum("litt->lit", proj)
    diff = diag[..., :, None] - proj
    mask = ~np.eye(T, dtype=bool)
    return diff[..., mask].reshape(L, -1).max(axis=1)


# ---------------------------------------------------------------------------
# Power utilities and the budget-simplex grid


def _power_value_nb(x, p, q):
    g = 1.0
    for n in range(x.shape[0]):
        if p[n] == 0.0:
            continue
        if x[n] <= 0.0:
            return 0.0
        g *= x[n] ** p[n]
    return g ** q


def _grid_nb(alpha, P, Q, mu, K, mode, target, margin):
    """Enumerate every allocation of K budget units over the M*N slots.

    mode 0: return the lexicographically first maximizer of sum mu_i f_i.
    mode 1: return the first allocation that Pareto-dominates ``target``
            (all f_i >= target_i and one f_i > target_i + margin), or -1s.
    """
    M, N = P.shape
    D = M * N
    c = np.zeros(D, dtype=np.int64)
    c[D - 1] = K
    best = np.full(D, -1, dtype=np.int64)
    best_val = -np.inf
    x = np.empty(N)
    vals = np.empty(M)
    unit = 1.0 / K
    while True:
        total = 0.0
        for i in range(M):
            for n in range(N):
                x[n] = c[i * N + n] * unit / alpha[n]
            vals[i] = _power_value_nb(x, P[i], Q[i])
            total += mu[i] * vals[i]
        if mode == 0:
            if total > best_val:
                best_val = total
                best[:] = c
        else:
            ok = True
            strict = False
            for i in range(M):
                if vals[i] < target[i]:
                    ok = False
                    break
                if vals[i] > target[i] + margin:
                    strict = True
            if ok and strict:
                best[:] = c
                return best
        # next composition in lexicographic order
        j = D - 2
        rem = c[D - 1]
        while j >= 0 and rem == 0:
            rem += c[j]
            j -= 1
        if j < 0:
            break
        c[j] += 1
        rem -= 1
        for k in range(j + 1, D - 1):
            c[k] = 0
        c[D - 1] = rem
    return best


def _compositions_np(D, K):
    """All compositions of K into D parts, lexicographic order (numpy, small sizes)."""
    if D == 1:
        return np.array([[K]], dtype=np.int64)
    parts = []
    for first in range(K + 1):
        rest = _compositions_np(D - 1, K - first)
        parts.append(np.column_stack([np.full(len(rest), first, dtype=np.int64), rest]))
    return np.vstack(parts)


def _power_values_np(X, p, q):
    # X: (..., N)
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.where(p > 0, p * np.log(np.where(X > 0, X, 1.0)), 0.0).sum(axis=-1)
        zero = np.any((X <= 0) & (p > 0), axis=-1)
        return np.where(zero, 0.0, np.exp(q * logs))


def _grid_np(alpha, P, Q, mu, K, mode, target, margin):
    M, N = P.shape
    comps = _compositions_np(M * N, K)
    X = comps.reshape(-1, M, N) / K / alpha
    vals = np.stack([_power_values_np(X[:, i], P[i], Q[i]) for i in range(M)], axis=1)
    if mode == 0:
        total = vals @ mu
        return comps[int(np.argmax(total))]
    ok = np.all(vals >= target, axis=1) & np.any(vals > target + margin, axis=1)
    hit = np.flatnonzero(ok)
    if hit.size == 0:
        return np.full(M * N, -1, dtype=np.int64)
    return comps[hit[0]]


# ---------------------------------------------------------------------------
# projected gradient ascent for weighted Power utilities


def _project_budget_nb(y, a):
    """Euclidean projection of y onto {x >= 0, a'x <= 1} (a > 0)."""
    D = y.shape[0]
    x = np.empty(D)
    s = 0.0
    for k in range(D):
        x[k] = y[k] if y[k] > 0.0 else 0.0
        s += a[k] * x[k]
    if s <= 1.0:
        return x
    # x(tau) = max(0, y - tau*a); find tau with a'x(tau) = 1 via sorted breakpoints
    bp = np.empty(D)
    for k in range(D):
        bp[k] = y[k] / a[k]
    order = np.argsort(bp)[::-1]
    num = 0.0
    den = 0.0
    tau = 0.0
    for idx in range(D):
        k = order[idx]
        if bp[k] <= 0.0:
            break
        num += a[k] * y[k]
        den += a[k] * a[k]
        tau = (num - 1.0) / den
        nxt = bp[order[idx + 1]] if idx + 1 < D else 0.0
        if tau >= nxt:
            break
    for k in range(D):
        v = y[k] - tau * a[k]
        x[k] = v if v > 0.0 else 0.0
    return x


def _objective_nb(z, P, Q, mu):
    M, N = P.shape
    tot = 0.0
    for i in range(M):
        tot += mu[i] * _power_value_nb(z[i * N:(i + 1) * N], P[i], Q[i])
    return tot


def _gradient_nb(z, P, Q, mu, cap):
    M, N = P.shape
    g = np.zeros(M * N)
    for i in range(M):
        x = z[i * N:(i + 1) * N]
        p = P[i]
        q = Q[i]
        base = 1.0
        for n in range(N):
            if p[n] > 0.0 and x[n] > 0.0:
                base *= x[n] ** p[n]
            elif p[n] > 0.0:
                base = 0.0
        for n in range(N):
            if p[n] == 0.0:
                continue
            # d/dx_n of prod_m x_m^p_m = p_n x_n^(p_n - 1) prod_{m != n} x_m^p_m
            others = 1.0
            for k in range(N):
                if k != n and p[k] > 0.0:
                    others *= x[k] ** p[k] if x[k] > 0.0 else 0.0
            if x[n] > 0.0:
                d = p[n] * x[n] ** (p[n] - 1.0)
            else:
                d = np.inf if p[n] < 1.0 else 1.0
            if d > cap:
                d = cap
            dg = d * others
            if q != 1.0:
                dg *= q * base ** (q - 1.0) if base > 0.0 else 0.0
            if dg > cap:
                dg = cap
            g[i * N + n] = mu[i] * dg
    return g


def _pga_nb(z0, a, P, Q, mu, tol, max_iter, cap):
    z = _project_budget_nb(z0, a)
    f = _objective_nb(z, P, Q, mu)
    step = 1.0
    calm = 0
    it = 0
    for it in range(max_iter):
        g = _gradient_nb(z, P, Q, mu, cap)
        accepted = False
        for _ in range(60):
            zn = _project_budget_nb(z + step * g, a)
            fn = _objective_nb(zn, P, Q, mu)
            lin = 0.0
            for k in range(z.shape[0]):
                lin += g[k] * (zn[k] - z[k])
            if fn >= f + 1e-4 * lin and fn >= f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return z, f, it, True
        change = fn - f
        moved = 0.0
        for k in range(z.shape[0]):
            moved = max(moved, abs(zn[k] - z[k]))
        z = zn
        f = fn
        if change < tol * (1.0 + abs(f)) and moved < 1e-9:
            calm += 1
            if calm >= 3:
                return z, f, it + 1, True
        else:
            calm = 0
        step = min(step * 2.0, 1e6)
    return z, f, it + 1, False


def _project_budget_np(y, a):
    x = np.maximum(y, 0.0)
    if a @ x <= 1.0:
        return x
    lo, hi = 0.0, float(np.max(y / a))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if a @ np.maximum(y - mid * a, 0.0) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-16 * max(1.0, hi):
            break
    return np.maximum(y - hi * a, 0.0)


def _objective_np(z, P, Q, mu):
    M, N = P.shape
    return float(mu @ _power_values_np(z.reshape(M, N), P, Q))


def _gradient_np(z, P, Q, mu, cap):
    M, N = P.shape
    X = z.reshape(M, N)
    pos = X > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        powd = np.where(pos, X ** P, 0.0)
        powd = np.where(P > 0, powd, 1.0)
        d = np.where(pos, P * np.where(pos, X, 1.0) ** (P - 1.0), np.where(P < 1.0, np.inf, 1.0))
    d = np.minimum(d, cap)
    G = np.zeros((M, N))
    for n in range(N):
        others = np.prod(np.delete(powd, n, axis=1), axis=1)
        G[:, n] = d[:, n] * others
    base = np.prod(powd, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        outer = np.where(Q != 1.0, np.where(base > 0, Q * base ** (Q - 1.0), 0.0), 1.0)
    G = np.minimum(G * outer[:, None], cap)
    G[:, :] = np.where(P > 0, G, 0.0)
    return (G * mu[:, None]).ravel()


def _pga_np(z0, a, P, Q, mu, tol, max_iter, cap):
    z = _project_budget_np(z0, a)
    f = _objective_np(z, P, Q, mu)
    step = 1.0
    calm = 0
    it = 0
    for it in range(max_iter):
        g = _gradient_np(z, P, Q, mu, cap)
        accepted = False
        for _ in range(60):
            zn = _project_budget_np(z + step * g, a)
            fn = _objective_np(zn, P, Q, mu)
            if fn >= f + 1e-4 * (g @ (zn - z)) and fn >= f:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            return z, f, it, True
        change = fn - f
        moved = float(np.max(np.abs(zn - z)))
        z, f = zn, fn
        if change < tol * (1.0 + abs(f)) and moved < 1e-9:
            calm += 1
            if calm >= 3:
                return z, f, it + 1, True
        else:
            calm = 0
        step = min(step * 2.0, 1e6)
    return z, f, it + 1, False


# ---------------------------------------------------------------------------
# selection

if numba is not None:
    _power_value_nb = _njit(_power_value_nb)
    _project_budget_nb = _njit(_project_budget_nb)
    _objective_nb = _njit(_objective_nb)
    _gradient_nb = _njit(_gradient_nb)
    simplex_loop_jit = _njit(_simplex_loop_nb)
    psi_jit = _njit(_psi_nb)
    grid_jit = _njit(_grid_nb)
    pga_jit = _njit(_pga_nb)
    project_budget_jit = _project_budget_nb
else:  # pragma: no cover
    simplex_loop_jit = _simplex_loop_nb
    psi_jit = _psi_nb
    grid_jit = _grid_nb
    pga_jit = _pga_nb
    project_budget_jit = _project_budget_nb

simplex_loop_np = _simplex_loop_np
psi_np = _psi_np
grid_np = _grid_np
pga_np = _pga_np
project_budget_np = _project_budget_np

if USE_JIT:
    simplex_loop = simplex_loop_jit
    psi = psi_jit
    grid = grid_jit
    pga = pga_jit
    project_budget = project_budget_jit
else:
    simplex_loop = simplex_loop_np
    psi = psi_np
    grid = grid_np
    pga = pga_np
    project_budget = project_budget_np
