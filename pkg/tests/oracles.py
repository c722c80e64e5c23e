"""Independent reference implementations used only by the tests.

None of these import the package's solvers; they use brute force,
closed forms or scipy so that agreement is evidence, not tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

# Values below were computed once with the oracles in this file and frozen.
# PSI_MEAN_T2: E max(D, -0.5 D), D ~ N(0, 2), for probes (1,), (0.5,) and sigma = 1;
#   closed form 1.5 * sqrt(2) / sqrt(2 pi) = 1.5 / sqrt(pi); 1e6-draw brute force agrees.
PSI_MEAN_T2 = 1.5 / math.sqrt(math.pi)
# WARP_PHI: the two-observation cycle has edge gaps -1/3 and -1/13, so the
#   smallest relaxation that breaks the cycle is 1/13.
WARP_PHI = 1.0 / 13.0
GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


def warp_cycle():
    """One agent, two epochs, each bundle revealed strictly preferred to the other."""
    probes = np.array([[1 / 6, 2 / 6], [2 / 6.5, 1 / 6.5]])
    responses = np.array([[[2.0, 2.0]], [[3.0, 0.5]]])
    return probes, responses


def psi_brute(alpha, sigma, draws, rng):
    """Monte Carlo mean of max_{t != s} alpha_t'(eps_t - eps_s) for one agent."""
    alpha = np.asarray(alpha, dtype=np.float64)
    T, N = alpha.shape
    eps = rng.normal(0.0, sigma, size=(draws, T, N))
    best = np.full(draws, -np.inf)
    for t in range(T):
        for s in range(T):
            if s != t:
                best = np.maximum(best, (eps[:, t] - eps[:, s]) @ alpha[t])
    return best


def vertex_feasibility(A, b, lo, hi, tol=1e-9):
    """Feasibility of {A x <= b, lo <= x <= hi} by enumerating candidate vertices.

    The box makes the polytope pointed, so it is nonempty iff one of the
    points where ``d`` linearly independent constraints are tight is feasible.
    Returns (feasible, best_violation, vertices_checked).
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    d = A.shape[1]
    G = np.vstack([A, np.eye(d), -np.eye(d)])
    h = np.concatenate([b, hi, -np.asarray(lo, dtype=np.float64)])
    best = np.inf
    verts = []
    for rows in itertools.combinations(range(G.shape[0]), d):
        sub = G[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, h[list(rows)])
        viol = float(np.max(G @ x - h))
        best = min(best, viol)
        verts.append((x, viol))
    return best <= tol, best, verts


def vertex_minimum(c, A, b, lo, hi, tol=1e-9):
    _, _, verts = vertex_feasibility(A, b, lo, hi, tol)
    vals = [float(np.dot(c, x)) for x, v in verts if v <= tol]
    return min(vals) if vals else None


def brute_events(omega):
    """Feasible events by filtering all (m+1)^n assignments."""
    omega = np.asarray(omega)
    n, m1 = omega.shape
    out = []
    for assign in itertools.product(range(m1), repeat=n):
        if any(omega[j, t] == 0 for j, t in enumerate(assign)):
            continue
        used = [t for t in assign if t > 0]
        if len(used) != len(set(used)):
            continue
        out.append(assign)
    return out


def scalar_are(a, c, q, r):
    """Positive root of the scalar Riccati equation.

    From s = a^2 (s - s^2 c^2 / (c^2 s + r)) + q: c^2 s^2 + (r - a^2 r - q c^2) s - q r = 0.
    """
    A2 = c * c
    B = r - a * a * r - q * c * c
    C = -q * r
    return (-B + math.sqrt(B * B - 4 * A2 * C)) / (2 * A2)


def kalman_reference(A, C, Q, R, mean, cov, y):
    """Textbook predict/update written independently of the package."""
    xp = A @ mean
    Pp = A @ cov @ A.T + Q
    S = C @ Pp @ C.T + R
    K = Pp @ C.T @ np.linalg.inv(S)
    x = xp + K @ (y - C @ xp)
    I = np.eye(len(mean))
    P = (I - K @ C) @ Pp @ (I - K @ C).T + K @ R @ K.T  # Joseph form
    return x, P


def cycle_minimax_brute(gaps):
    """-min over simple cycles of the max edge gap, by enumerating all cycles (T <= 6)."""
    T = gaps.shape[0]
    best = np.inf
    for k in range(2, T + 1):
        for nodes in itertools.permutations(range(T), k):
            if nodes[0] != min(nodes):
                continue
            edges = [gaps[nodes[i], nodes[(i + 1) % k]] for i in range(k)]
            best = min(best, max(edges))
    return -best
