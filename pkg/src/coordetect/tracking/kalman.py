"""Linear-Gaussian tracking: Kalman recursion, Riccati fixed point and asymptotic precision."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import CoordError

SYM_TOL = 1e-10
ARE_STEP_TOL = 1e-12
ARE_RESIDUAL_TOL = 1e-9
ARE_MAX_ITER = 100_000


class SingularInnovation(CoordError):
    pass


class NotDetectable(CoordError):
    pass


class NotStabilizable(CoordError):
    pass


class NoConvergence(CoordError):
    pass


class SingularCovariance(CoordError):
    pass


def _sym(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.T)


def _check_psd(S: np.ndarray, what: str, strict: bool = False) -> None:
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"{what} must be square")
    if np.max(np.abs(S - S.T), initial=0.0) > SYM_TOL * (1 + np.max(np.abs(S), initial=0.0)):
        raise ValueError(f"{what} is not symmetric")
    w = np.linalg.eigvalsh(_sym(S))
    if strict and w.min() <= 0:
        raise ValueError(f"{what} must be positive definite")
    if w.min() < -SYM_TOL * (1 + abs(w).max()):
        raise ValueError(f"{what} is not positive semidefinite")


@dataclass(frozen=True)
class LinearGaussianModel:
    """``x' = A x + w, w ~ N(0, Q)`` and ``y = C x + v, v ~ N(0, R)``."""

    A: np.ndarray
    C: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        A, C, Q, R = (np.atleast_2d(np.asarray(m, dtype=np.float64)) for m in
                      (self.A, self.C, self.Q, self.R))
        nx, ny = A.shape[0], C.shape[0]
        if A.shape != (nx, nx) or C.shape != (ny, nx) or Q.shape != (nx, nx) or R.shape != (ny, ny):
            raise ValueError("inconsistent model dimensions")
        _check_psd(Q, "Q")
        _check_psd(R, "R", strict=True)
        for name, m in zip("ACQR", (A, C, Q, R)):
            object.__setattr__(self, name, m)

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]

    @classmethod
    def spectral(cls, alpha, beta, A=None, C=None) -> "LinearGaussianModel":
        """``Q = diag(beta)``, ``R = diag(alpha)^-1``."""
        alpha = np.asarray(alpha, dtype=np.float64)
        beta = np.asarray(beta, dtype=np.float64)
        if np.any(alpha <= 0):
            raise ValueError("alpha must be strictly positive")
        n = beta.size
        A = np.eye(n) if A is None else A
        C = np.eye(alpha.size, n) if C is None else C
        return cls(A, C, np.diag(beta), np.diag(1.0 / alpha))


@dataclass(frozen=True)
class GaussianBelief:
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).ravel()
        cov = np.atleast_2d(np.asarray(self.cov, dtype=np.float64))
        if cov.shape != (mean.size, mean.size):
            raise ValueError("covariance does not match the mean")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)


def _solve_innovation(S: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``S^-1 B`` with a conditioning check."""
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > 1e14:
        raise SingularInnovation("innovation covariance is numerically singular")
    return np.linalg.solve(S, B)


def predict(model: LinearGaussianModel, belief: GaussianBelief) -> GaussianBelief:
    return GaussianBelief(model.A @ belief.mean,
                          _sym(model.A @ belief.cov @ model.A.T + model.Q))


def kalman_step(model: LinearGaussianModel, belief: GaussianBelief, y) -> GaussianBelief:
    """One predict + update cycle."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size != model.n_y or belief.mean.size != model.n_x:
        raise ValueError("dimension mismatch between model, belief and measurement")
    pred = predict(model, belief)
    P, C = pred.cov, model.C
    S = C @ P @ C.T + model.R
    PCt = P @ C.T
    gain_t = _solve_innovation(S, PCt.T)       # = S^-1 C P, i.e. gain'
    mean = pred.mean + gain_t.T @ (y - C @ pred.mean)
    cov = P - PCt @ _solve_innovation(S, C @ P)
    return GaussianBelief(mean, _sym(cov))


# -- Riccati analysis -------------------------------------------------------

def _pbh_ok(A: np.ndarray, B: np.ndarray, stack_rows: bool) -> bool:
    n = A.shape[0]
    for lam in np.linalg.eigvals(A):
        if abs(lam) < 1.0 - 1e-12:
            continue
        shifted = A - lam * np.eye(n)
        M = np.vstack([shifted, B]) if stack_rows else np.hstack([shifted, B])
        if np.linalg.matrix_rank(M, tol=1e-9 * max(1.0, np.abs(M).max())) < n:
            return False
    return True


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(_sym(S))
    return V * np.sqrt(np.clip(w, 0.0, None))


def riccati_map(model: LinearGaussianModel, S: np.ndarray) -> np.ndarray:
    A, C = model.A, model.C
    inner = C @ S @ C.T + model.R
    upd = S - S @ C.T @ np.linalg.solve(inner, C @ S)
    return _sym(A @ upd @ A.T + model.Q)


def are_residual(model: LinearGaussianModel, S: np.ndarray) -> np.ndarray:
    return riccati_map(model, S) - S


def solve_are(model: LinearGaussianModel) -> np.ndarray:
    """Asymptotic predicted covariance, by iterating the Riccati map from ``Q``."""
    if not _pbh_ok(model.A, model.C, stack_rows=True):
        raise NotDetectable("[A, C] is not detectable")
    if not _pbh_ok(model.A, _psd_sqrt(model.Q), stack_rows=False):
        raise NotStabilizable("[A, sqrt(Q)] is not stabilizable")
    S = model.Q.copy()
    for _ in range(ARE_MAX_ITER):
        nxt = riccati_map(model, S)
        if np.max(np.abs(nxt - S)) < ARE_STEP_TOL:
            S = nxt
            break
        S = nxt
    else:
        raise NoConvergence(f"Riccati iteration did not settle in {ARE_MAX_ITER} steps")
    res = np.max(np.abs(are_residual(model, S)))
    if res >= ARE_RESIDUAL_TOL * max(1.0, np.max(np.abs(S))):
        raise NoConvergence(f"Riccati residual {res:.3g} above tolerance")
    return S


def precision(alpha, beta, base_model: LinearGaussianModel | None = None) -> np.ndarray:
    """Inverse of the asymptotic predicted covariance for probe ``alpha`` and maneuver ``beta``."""
    A = None if base_model is None else base_model.A
    C = None if base_model is None else base_model.C
    model = LinearGaussianModel.spectral(alpha, beta, A, C)
    S = solve_are(model)
    if np.linalg.eigvalsh(S).min() <= 1e-14 * max(1.0, np.abs(S).max()):
        raise SingularCovariance("asymptotic covariance is singular; precision is unbounded")
    return _sym(np.linalg.inv(S))
