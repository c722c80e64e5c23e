"""Inverse side: Afriat-type feasibility, utility reconstruction and the relaxation statistic.

For agent ``i`` the observations are rationalizable by a concave monotone
utility (jointly with the other agents, under the shared budget) iff numbers
``u_t`` and ``lam_t > 0`` exist with

    u_s - u_t - lam_t * alpha_t'(beta_s - beta_t) <= 0      for all s, t.

The system is positively homogeneous in ``(u, lam)`` and invariant to shifting
``u``, so ``lam >= 1`` and ``u >= 1`` are imposed without loss of generality.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import lp
from .core import CoordError, InteractionDataset, validate_dataset

BISECTION_TOL = 1e-8
GUESS_HALF_WIDTH = 1e-6


class CertificateMismatch(CoordError):
    pass


def expenditure_gaps(data: InteractionDataset) -> np.ndarray:
    """``gaps[i, t, s] = alpha_t'(beta_s^i - beta_t^i)``."""
    # own[t, i] = alpha_t' beta_t^i ; cross[t, s, i] = alpha_t' beta_s^i
    cross = np.einsum("tn,sin->its", data.probes, data.responses)
    own = np.einsum("itt->it", cross)
    return cross - own[:, :, None]


def afriat_program(gaps: np.ndarray, phi: float = 0.0, objective=None) -> lp.LinearProgram:
    """LP in ``z = (u_1..u_T, lam_1..lam_T)`` for one agent.

    Rows ``u_s - u_t - lam_t (gaps[t, s] + phi) <= 0`` for ``s != t``; bounds
    ``u, lam >= 1``.
    """
    T = gaps.shape[0]
    ts, ss = np.nonzero(~np.eye(T, dtype=bool))
    k = ts.size
    A = np.zeros((k, 2 * T))
    rows = np.arange(k)
    A[rows, ss] += 1.0
    A[rows, ts] -= 1.0
    A[rows, T + ts] = -(gaps[ts, ss] + phi)
    c = np.zeros(2 * T) if objective is None else np.asarray(objective, dtype=np.float64)
    return lp.LinearProgram(c, A, (lp.LE,) * k, np.zeros(k), np.ones(2 * T), np.full(2 * T, np.inf))


def _agent_feasible(gaps: np.ndarray, phi: float, strict: bool = True) -> np.ndarray | None:
    try:
        out = lp.solve(afriat_program(gaps, phi))
    except lp.NumericalBreakdown:
        # Just above the relaxation level the multipliers blow up like
        # 1/(phi - level); inside a bisection an unverifiable witness counts
        # as infeasible so the returned level always carries a valid one.
        if strict:
            raise
        return None
    return out.x if out.ok else None


# -- deterministic detection ----------------------------------------------

@dataclass(frozen=True)
class AfriatCertificate:
    u: np.ndarray       # (T, M)
    lam: np.ndarray     # (T, M)

    def max_violation(self, data: InteractionDataset) -> float:
        gaps = expenditure_gaps(data)
        worst = 0.0
        for i in range(data.M):
            # lhs[t, s] = u_s - u_t - lam_t gaps[t, s]
            lhs = self.u[None, :, i] - self.u[:, None, i] - self.lam[:, None, i] * gaps[i]
            worst = max(worst, float(lhs.max()))
        return worst


@dataclass(frozen=True)
class Coordinated:
    certificate: AfriatCertificate

    coordinated = True


@dataclass(frozen=True)
class NotCoordinated:
    failing_agents: tuple[int, ...]

    coordinated = False


def detect_coordination(data: InteractionDataset) -> Coordinated | NotCoordinated:
    """Solve one Afriat feasibility LP per agent; coordinated iff all are feasible.

    The returned certificate is the LP witness with the most compact utility
    levels (minimum total ``u``, then ``lam``), which keeps the reconstructed
    utilities close to the data rather than at an arbitrary vertex.
    """
    data = validate_dataset(data)
    gaps = expenditure_gaps(data)
    T, M = data.T, data.M
    u = np.ones((T, M))
    lam = np.ones((T, M))
    failing = []
    for i in range(M):
        x = _agent_feasible(gaps[i], 0.0)
        if x is None:
            failing.append(i)
            continue
        x = _tighten(gaps[i], x)
        u[:, i], lam[:, i] = x[:T], x[T:]
    if failing:
        return NotCoordinated(tuple(failing))
    return Coordinated(AfriatCertificate(u, lam))


def _tighten(gaps: np.ndarray, witness: np.ndarray) -> np.ndarray:
    T = gaps.shape[0]
    obj = np.concatenate([np.ones(T), 1e-3 * np.ones(T)])
    try:
        out = lp.solve(afriat_program(gaps, 0.0, objective=obj))
    except lp.NumericalBreakdown:
        return witness
    return out.x if out.status is lp.Status.OPTIMAL else witness


def joint_certificate(data: InteractionDataset, weights) -> AfriatCertificate | None:
    """Certificate whose multipliers share one budget price per epoch.

    Solves the per-agent inequalities with ``lam[t, i] = nu_t / mu_i``. When
    this holds, ``sum_i mu_i U^i`` has supergradient ``nu_t alpha_t`` at the
    observed joint allocation, so the allocation maximizes the weighted sum
    over a binding shared budget. Per-agent feasibility alone does not give
    that for a fixed weight vector. Returns None when infeasible.
    """
    data = validate_dataset(data)
    mu = np.asarray(getattr(weights, "mu", weights), dtype=np.float64)
    if mu.shape != (data.M,) or np.any(mu <= 0):
        raise ValueError("need one positive weight per agent")
    gaps = expenditure_gaps(data)
    T, M = data.T, data.M
    ts, ss = np.nonzero(~np.eye(T, dtype=bool))
    k = ts.size
    nv = T * M + T
    A = np.zeros((M * k, nv))
    for i in range(M):
        r = np.arange(i * k, (i + 1) * k)
        A[r, ss * M + i] += 1.0
        A[r, ts * M + i] -= 1.0
        A[r, T * M + ts] = -gaps[i, ts, ss] / mu[i]
    prog = lp.LinearProgram(np.zeros(nv), A, (lp.LE,) * (M * k), np.zeros(M * k),
                            np.ones(nv), np.full(nv, np.inf))
    out = lp.solve(prog)
    if not out.ok:
        return None
    u = out.x[:T * M].reshape(T, M)
    lam = out.x[T * M:][:, None] / mu[None, :]
    return AfriatCertificate(u, lam)


# -- reconstruction -------------------------------------------------------

@dataclass(frozen=True)
class RationalizingUtility:
    """``U(x) = min_t [u_t + lam_t alpha_t'(x - beta_t)]`` for one agent."""

    agent: int
    u: np.ndarray        # (T,)
    lam: np.ndarray      # (T,)
    probes: np.ndarray   # (T, N)
    anchors: np.ndarray  # (T, N) the agent's observed bundles

    def slopes(self) -> np.ndarray:
        return self.lam[:, None] * self.probes

    def intercepts(self) -> np.ndarray:
        return self.u - np.einsum("tn,tn->t", self.slopes(), self.anchors)

    def __call__(self, x) -> float | np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        vals = x @ self.slopes().T + self.intercepts()
        return vals.min(axis=-1) if x.ndim > 1 else float(vals.min())

    def grid(self, resolution: int, lo: float = 0.0, hi: float = 1.2):
        """Values on a ``resolution x resolution`` grid over ``[lo, hi]^2``."""
        if self.probes.shape[1] != 2:
            raise ValueError("grid export needs two-dimensional bundles")
        if resolution < 2:
            raise ValueError("resolution must be at least 2")
        axis = np.linspace(lo, hi, resolution)
        B1, B2 = np.meshgrid(axis, axis, indexing="ij")
        U = self(np.stack([B1, B2], axis=-1).reshape(-1, 2)).reshape(resolution, resolution)
        return axis, U

    def to_csv(self, resolution: int, lo: float = 0.0, hi: float = 1.2) -> str:
        axis, U = self.grid(resolution, lo, hi)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["beta1", "beta2", "U"])
        for a in range(resolution):
            for b in range(resolution):
                w.writerow([f"{axis[a]:.9g}", f"{axis[b]:.9g}", f"{U[a, b]:.9g}"])
        return buf.getvalue()


def reconstruct_utilities(cert: AfriatCertificate, data: InteractionDataset,
                          tol: float = lp.FEAS_TOL) -> list[RationalizingUtility]:
    data = validate_dataset(data)
    if cert.u.shape != (data.T, data.M) or cert.lam.shape != (data.T, data.M):
        raise CertificateMismatch("certificate shape does not match the dataset")
    if np.any(cert.lam <= 0):
        raise CertificateMismatch("non-positive marginal utility in certificate")
    viol = cert.max_violation(data)
    if viol > tol * (1.0 + float(np.abs(cert.u).max()) + float(cert.lam.max())):
        raise CertificateMismatch(f"certificate violates the inequalities by {viol:.3g}")
    return [RationalizingUtility(i, cert.u[:, i].copy(), cert.lam[:, i].copy(),
                                 data.probes.copy(), data.responses[:, i, :].copy())
            for i in range(data.M)]


# -- relaxation statistic -------------------------------------------------

@dataclass(frozen=True)
class RelaxationStatistic:
    per_agent: np.ndarray
    u: np.ndarray     # (T, M) multipliers feasible at each agent's relaxation level
    lam: np.ndarray

    @property
    def overall(self) -> float:
        return float(self.per_agent.max())


def agent_relaxation(gaps: np.ndarray, bound: float, tol: float = BISECTION_TOL,
                     guess: float | None = None):
    """Smallest ``phi`` (within ``tol``) making one agent's relaxed system feasible.

    Feasibility is monotone in ``phi`` because ``lam > 0``. At ``phi = bound``
    equal utility levels work; the search never goes below ``-bound``. A
    ``guess`` of the level narrows the starting bracket to ``guess +- 1e-6``
    once the LP confirms both ends; otherwise the full bracket is bisected.
    """
    T = gaps.shape[0]
    trivial = np.concatenate([np.ones(T), np.ones(T)])
    if T < 2 or bound == 0.0:
        x = _agent_feasible(gaps, -bound, strict=False)
        return -bound, (x if x is not None else trivial)
    lo, hi, x_hi = -bound, bound, None
    if guess is not None and np.isfinite(guess):
        g_lo = max(-bound, guess - GUESS_HALF_WIDTH)
        g_hi = min(bound, guess + GUESS_HALF_WIDTH)
        x = _agent_feasible(gaps, g_hi, strict=False)
        if x is not None:
            if g_lo == -bound or _agent_feasible(gaps, g_lo, strict=False) is None:
                lo, hi, x_hi = g_lo, g_hi, x
    if x_hi is None:
        x_hi = _agent_feasible(gaps, hi, strict=False)
        if x_hi is None:  # only possible through round-off at the bracket edge
            x_hi = trivial
    x_lo = _agent_feasible(gaps, lo, strict=False)
    if x_lo is not None:
        return lo, x_lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        x = _agent_feasible(gaps, mid, strict=False)
        if x is None:
            lo = mid
        else:
            hi, x_hi = mid, x
    return hi, x_hi


def relaxation_statistic(data: InteractionDataset, tol: float = BISECTION_TOL,
                         warm_start: bool = True) -> RelaxationStatistic:
    """Per-agent relaxation levels by LP bisection.

    With ``warm_start`` the bisection bracket is centred on the minimax-cycle
    value, which cuts the number of LP solves by about four; the answer is
    still certified by the LP at both bracket ends.
    """
    data = validate_dataset(data)
    gaps = expenditure_gaps(data)
    bound = float(np.abs(gaps).max())
    T, M = data.T, data.M
    per = np.empty(M)
    u = np.empty((T, M))
    lam = np.empty((T, M))
    for i in range(M):
        guess = minimax_cycle_relaxation(gaps[i]) if warm_start else None
        per[i], x = agent_relaxation(gaps[i], bound, tol, guess)
        u[:, i], lam[:, i] = x[:T], x[T:]
    return RelaxationStatistic(per, u, lam)


def minimax_cycle_relaxation(gaps: np.ndarray) -> float:
    """Combinatorial value of the relaxation level for one agent.

    The relaxed system is infeasible exactly when some cycle of length >= 2
    has every edge ``gaps[t, s] + phi <= 0`` with one edge strictly negative,
    so the level equals ``-min over cycles of the largest edge gap``. Computed
    with a bottleneck (min-max) Floyd-Warshall closure.
    """
    T = gaps.shape[0]
    if T < 2:
        return -np.inf
    D = gaps.astype(np.float64).copy()
    np.fill_diagonal(D, np.inf)
    for k in range(T):
        D = np.minimum(D, np.maximum(D[:, k:k + 1], D[k:k + 1, :]))
    # after the closure the diagonal holds the best cycle bottleneck through each node
    return float(-np.min(np.diag(D)))
