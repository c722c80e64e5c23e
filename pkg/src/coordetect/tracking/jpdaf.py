"""Joint probabilistic data association.

Measurements ``j = 1..n`` are matched to targets ``t = 1..m`` or to clutter
(``t = 0``). Events assign every measurement one source and every target at
most one measurement; posteriors weigh each event by its clutter count,
measurement likelihoods and detection probabilities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import CoordError
from .kalman import GaussianBelief, LinearGaussianModel, SingularInnovation, _solve_innovation, _sym

GATE_CHI2 = 9.21
MAX_ENUM = 8


class TooLarge(CoordError):
    pass


class ZeroTotalMass(CoordError):
    pass


@dataclass(frozen=True)
class ValidationMatrix:
    """``omega[j, t]`` = 1 when measurement ``j`` may come from source ``t`` (column 0 is clutter)."""

    omega: np.ndarray

    def __post_init__(self):
        om = np.atleast_2d(np.asarray(self.omega)).astype(np.int8)
        if om.ndim != 2 or om.shape[1] < 1:
            raise ValueError("validation matrix needs shape (n, m + 1)")
        if not np.all((om == 0) | (om == 1)):
            raise ValueError("validation entries must be 0 or 1")
        if not np.all(om[:, 0] == 1):
            raise ValueError("column 0 (clutter) must be all ones")
        om.setflags(write=False)
        object.__setattr__(self, "omega", om)

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def m(self) -> int:
        return self.omega.shape[1] - 1

    @classmethod
    def full(cls, n: int, m: int) -> "ValidationMatrix":
        return cls(np.ones((n, m + 1), dtype=np.int8))


@dataclass(frozen=True)
class AssociationEvent:
    """``assignment[j]`` is the source of measurement ``j`` (0 = clutter)."""

    assignment: tuple[int, ...]

    def detected(self, m: int) -> np.ndarray:
        """Target detection indicators ``delta_t`` for ``t = 1..m``."""
        d = np.zeros(m, dtype=np.int8)
        for t in self.assignment:
            if t:
                d[t - 1] += 1
        return d

    @property
    def associated(self) -> np.ndarray:
        """Measurement association indicators ``tau_j``."""
        return np.array([t > 0 for t in self.assignment], dtype=np.int8)

    @property
    def n_false(self) -> int:
        return sum(t == 0 for t in self.assignment)

    def measurement_of(self, t: int) -> int | None:
        """Index of the measurement given to target ``t`` (1-based target), or None."""
        for j, s in enumerate(self.assignment):
            if s == t:
                return j
        return None

    def is_feasible(self, m: int) -> bool:
        return all(0 <= t <= m for t in self.assignment) and bool(np.all(self.detected(m) <= 1))


def enumerate_events(omega: ValidationMatrix) -> list[AssociationEvent]:
    """All feasible events allowed by the gate, in lexicographic order of assignments."""
    n, m = omega.n, omega.m
    if n > MAX_ENUM or m > MAX_ENUM:
        raise TooLarge(f"n={n}, m={m} exceeds the enumeration guard of {MAX_ENUM}")
    allowed = [np.flatnonzero(omega.omega[j]).tolist() for j in range(n)]
    out: list[AssociationEvent] = []
    used = [False] * (m + 1)
    cur: list[int] = []

    def rec(j: int) -> None:
        if j == n:
            out.append(AssociationEvent(tuple(cur)))
            return
        for t in allowed[j]:
            if t and used[t]:
                continue
            used[t] = bool(t)
            cur.append(t)
            rec(j + 1)
            cur.pop()
            if t:
                used[t] = False

    rec(0)
    return out


# -- clutter ----------------------------------------------------------------

@dataclass(frozen=True)
class ClutterModel:
    """Number of false measurements and their spread over a region of volume ``V``.

    ``kind`` is ``"poisson"`` (mean ``density * V``), ``"diffuse"`` (flat
    count prior, so it drops out of the posterior) or ``"pmf"`` (explicit
    ``pmf[phi]``).
    """

    kind: str = "poisson"
    volume: float = 1.0
    density: float = 0.0
    pmf: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in ("poisson", "diffuse", "pmf"):
            raise ValueError(f"unknown clutter model {self.kind!r}")
        if not self.volume > 0:
            raise ValueError("surveillance volume must be positive")
        if self.density < 0:
            raise ValueError("clutter density must be >= 0")
        if self.kind == "pmf" and (not self.pmf or min(self.pmf) < 0):
            raise ValueError("pmf must be a nonempty list of nonnegative masses")

    def log_mass(self, phi: int) -> float:
        if self.kind == "diffuse":
            return 0.0
        if self.kind == "pmf":
            p = self.pmf[phi] if phi < len(self.pmf) else 0.0
            return math.log(p) if p > 0 else -math.inf
        lam = self.density * self.volume
        if lam == 0.0:
            return 0.0 if phi == 0 else -math.inf
        return -lam + phi * math.log(lam) - math.lgamma(phi + 1)


def _log_normal_pdf(y: np.ndarray, mean: np.ndarray, S: np.ndarray) -> float:
    d = y - mean
    sign, logdet = np.linalg.slogdet(S)
    if sign <= 0:
        raise SingularInnovation("innovation covariance is not positive definite")
    return float(-0.5 * (d @ np.linalg.solve(S, d) + logdet + d.size * math.log(2 * math.pi)))


@dataclass(frozen=True)
class EventPosterior:
    events: tuple[AssociationEvent, ...]
    probs: np.ndarray
    m: int

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.shape != (len(self.events),) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-10:
            raise ValueError("event probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "probs", p)

    def marginals(self) -> np.ndarray:
        """``psi[j, t]``: probability that measurement ``j`` came from source ``t``."""
        n = len(self.events[0].assignment) if self.events else 0
        psi = np.zeros((n, self.m + 1))
        for ev, p in zip(self.events, self.probs):
            for j, t in enumerate(ev.assignment):
                psi[j, t] += p
        return psi

    def miss_probabilities(self) -> np.ndarray:
        """Probability that target ``t`` received no measurement, for ``t = 1..m``."""
        out = np.zeros(self.m)
        for ev, p in zip(self.events, self.probs):
            out += p * (1 - ev.detected(self.m))
        return out


def _normalize(events, logw, m) -> EventPosterior:
    logw = np.asarray(logw, dtype=np.float64)
    top = np.max(logw, initial=-np.inf)
    if not np.isfinite(top):
        raise ZeroTotalMass("every association event has zero weight")
    w = np.exp(logw - top)
    return EventPosterior(tuple(events), w / w.sum(), m)


def _event_prefix(ev: AssociationEvent, m: int, p_detect: np.ndarray, clutter: ClutterModel,
                  mk: str) -> float:
    phi = ev.n_false
    n = len(ev.assignment)
    m_k = n if mk == "total" else n - phi
    lw = math.lgamma(phi + 1) - math.lgamma(m_k + 1) + clutter.log_mass(phi) - phi * math.log(clutter.volume)
    delta = ev.detected(m)
    for t in range(m):
        pd = p_detect[t]
        f = pd if delta[t] else 1.0 - pd
        if f <= 0.0:
            return -math.inf
        lw += math.log(f)
    return lw


def event_posterior_uncoupled(events, y_pred, S_pred, p_detect, clutter: ClutterModel,
                              measurements, mk: str = "total") -> EventPosterior:
    """Posterior over events with independent per-target measurement likelihoods.

    ``y_pred[t]``/``S_pred[t]`` are target ``t + 1``'s predicted measurement
    and innovation covariance. ``mk`` selects the count in the ``phi!/m_k!``
    prefactor: ``"total"`` uses all ``n`` measurements (a constant, the usual
    convention) and ``"associated"`` uses ``n - phi``.
    """
    y = [np.asarray(v, dtype=np.float64) for v in measurements]
    m = len(y_pred)
    pd = np.broadcast_to(np.asarray(p_detect, dtype=np.float64), (m,))
    cache: dict[tuple[int, int], float] = {}
    logw = []
    for ev in events:
        lw = _event_prefix(ev, m, pd, clutter, mk)
        if np.isfinite(lw):
            for j, t in enumerate(ev.assignment):
                if t:
                    key = (j, t)
                    if key not in cache:
                        cache[key] = _log_normal_pdf(y[j], np.asarray(y_pred[t - 1]), np.asarray(S_pred[t - 1]))
                    lw += cache[key]
        logw.append(lw)
    return _normalize(events, logw, m)


# -- stacked (coupled) filtering ---------------------------------------------

@dataclass(frozen=True)
class StackedBelief:
    """Joint Gaussian over all targets; blocks follow ``models`` order."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance does not match the mean")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def from_beliefs(cls, beliefs) -> "StackedBelief":
        mean = np.concatenate([b.mean for b in beliefs])
        cov = _block_diag([b.cov for b in beliefs])
        return cls(mean, cov)

    def marginal(self, sl: slice) -> GaussianBelief:
        return GaussianBelief(self.mean[sl], self.cov[sl, sl])


def _block_diag(blocks) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def _state_slices(models) -> list[slice]:
    out, k = [], 0
    for md in models:
        out.append(slice(k, k + md.n_x))
        k += md.n_x
    return out


def stacked_predict(models, belief: StackedBelief) -> StackedBelief:
    A = _block_diag([md.A for md in models])
    Q = _block_diag([md.Q for md in models])
    return StackedBelief(A @ belief.mean, _sym(A @ belief.cov @ A.T + Q))


def _detected_system(models, detected):
    """Rows of the stacked ``C_hat`` and blocks of ``R_hat`` for detected targets only."""
    nx = sum(md.n_x for md in models)
    sl = _state_slices(models)
    rows, Rs = [], []
    for t, md in enumerate(models):
        if detected[t]:
            C = np.zeros((md.n_y, nx))
            C[:, sl[t]] = md.C
            rows.append(C)
            Rs.append(md.R)
    if not rows:
        return np.zeros((0, nx)), np.zeros((0, 0))
    return np.vstack(rows), _block_diag(Rs)


def event_posterior_coupled(events, models, predicted: StackedBelief, p_detect,
                            clutter: ClutterModel, measurements, mk: str = "total") -> EventPosterior:
    """Posterior over events using the joint density of the associated measurements.

    Cross-covariances between targets enter through ``C_hat P C_hat' + R_hat``.
    """
    y = [np.asarray(v, dtype=np.float64) for v in measurements]
    m = len(models)
    pd = np.broadcast_to(np.asarray(p_detect, dtype=np.float64), (m,))
    logw = []
    for ev in events:
        lw = _event_prefix(ev, m, pd, clutter, mk)
        if np.isfinite(lw):
            det = ev.detected(m)
            if det.any():
                Ch, Rh = _detected_system(models, det)
                ys = np.concatenate([y[ev.measurement_of(t + 1)] for t in range(m) if det[t]])
                lw += _log_normal_pdf(ys, Ch @ predicted.mean, Ch @ predicted.cov @ Ch.T + Rh)
        logw.append(lw)
    return _normalize(events, logw, m)


def jpdacf_update(predicted: StackedBelief, posterior: EventPosterior, models,
                  measurements) -> StackedBelief:
    """Coupled update of the stacked prediction.

    Every event conditions the joint Gaussian on the measurements it assigns,
    with gain ``W = P C_hat'(C_hat P C_hat' + R_hat)^-1`` built from the
    detected blocks only. The mixture is collapsed by matching moments:
    the covariance equals the prediction minus the expected information gain
    ``sum_theta p(theta) W S W'`` plus the spread of the per-event estimates.
    """
    y = [np.asarray(v, dtype=np.float64) for v in measurements]
    m = len(models)
    P = predicted.cov
    x0 = predicted.mean
    means, gains = [], np.zeros_like(P)
    for ev, p in zip(posterior.events, posterior.probs):
        det = ev.detected(m)
        if not det.any() or p == 0.0:
            means.append(x0)
            continue
        Ch, Rh = _detected_system(models, det)
        S = Ch @ P @ Ch.T + Rh
        PCt = P @ Ch.T
        Wt = _solve_innovation(S, PCt.T)
        ys = np.concatenate([y[ev.measurement_of(t + 1)] for t in range(m) if det[t]])
        means.append(x0 + Wt.T @ (ys - Ch @ x0))
        gains += p * (PCt @ Wt)
    means = np.array(means)
    probs = posterior.probs
    mean = probs @ means
    dev = means - mean
    spread = (dev * probs[:, None]).T @ dev
    return StackedBelief(mean, _sym(P - gains + spread))


def pda_update(model: LinearGaussianModel, predicted: GaussianBelief, psi_t: np.ndarray,
               measurements) -> GaussianBelief:
    """Single-target probabilistic data association update.

    ``psi_t[j]`` is the probability that measurement ``j`` belongs to this
    target; ``1 - sum(psi_t)`` is the probability that none does.
    """
    psi_t = np.asarray(psi_t, dtype=np.float64)
    P, C = predicted.cov, model.C
    S = C @ P @ C.T + model.R
    Wt = _solve_innovation(S, C @ P)
    yhat = C @ predicted.mean
    if len(measurements):
        nus = np.array([np.asarray(v, dtype=np.float64) - yhat for v in measurements])
    else:
        nus = np.zeros((0, model.n_y))
    nu = psi_t @ nus if len(nus) else np.zeros(model.n_y)
    hit = float(psi_t.sum())
    spread = (nus * psi_t[:, None]).T @ nus - np.outer(nu, nu) if len(nus) else 0.0
    mean = predicted.mean + Wt.T @ nu
    cov = P - hit * (Wt.T @ S @ Wt) + Wt.T @ spread @ Wt
    return GaussianBelief(mean, _sym(cov))


def gate(models, predicted: StackedBelief, measurements, threshold: float = GATE_CHI2) -> ValidationMatrix:
    """Normalized-innovation gate of every measurement against every target."""
    y = [np.asarray(v, dtype=np.float64) for v in measurements]
    sl = _state_slices(models)
    om = np.zeros((len(y), len(models) + 1), dtype=np.int8)
    om[:, 0] = 1
    for t, md in enumerate(models):
        b = predicted.marginal(sl[t])
        S = md.C @ b.cov @ md.C.T + md.R
        yh = md.C @ b.mean
        for j, v in enumerate(y):
            d = v - yh
            om[j, t + 1] = int(d @ np.linalg.solve(S, d) <= threshold)
    return ValidationMatrix(om)
