"""Two-timescale radar / UAV-network simulator.

On the slow scale the radar draws a probe ``alpha_t`` and the agents answer
with maneuvers ``beta_t^i``: jointly Pareto-optimal ones when coordinating,
independent uniform draws otherwise. On the fast scale each agent's state
follows ``x_{k+1} = A x_k + w_k`` with ``w_k ~ N(0, diag(beta))`` and the radar
observes ``y_k = C x_k + v_k`` with ``v_k ~ N(0, diag(alpha)^-1)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import moo
from .core import (EmptyDataset, InteractionDataset, NoiseModel, NoisyDataset, SimplexWeights,
                   rng_stream)

COORDINATED = "coordinated"
INDEPENDENT = "independent"


@dataclass(frozen=True)
class ScenarioConfig:
    M: int = 3
    T: int = 10
    N: int = 2
    probe_lo: float = 0.1
    probe_hi: float = 1.1
    utilities: tuple = ()
    weights: SimplexWeights | None = None
    regime: str = COORDINATED
    noise: NoiseModel | None = None
    fast_steps: int = 100
    A: np.ndarray | None = field(default=None, repr=False)
    C: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if min(self.M, self.T, self.N) < 0:
            raise ValueError("M, T and N must be nonnegative")
        if min(self.M, self.T, self.N) == 0:
            raise EmptyDataset(f"M={self.M}, T={self.T}, N={self.N}")
        if not 0 < self.probe_lo < self.probe_hi:
            raise ValueError("probe box needs 0 < lo < hi")
        if self.regime not in (COORDINATED, INDEPENDENT):
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.fast_steps < 1:
            raise ValueError("fast_steps must be positive")
        utils = tuple(self.utilities) or default_utilities(self.M, self.N)
        if len(utils) != self.M or any(u.n != self.N for u in utils):
            raise ValueError("need M utilities of dimension N")
        w = self.weights
        if w is None:
            w = SimplexWeights.uniform(self.M)
        elif not isinstance(w, SimplexWeights):
            w = SimplexWeights.normalized(w)
        if w.mu.size != self.M:
            raise ValueError("weight vector length must equal M")
        object.__setattr__(self, "utilities", utils)
        object.__setattr__(self, "weights", w)

    def with_noise(self, sigma: float | None) -> "ScenarioConfig":
        return replace(self, noise=None if sigma is None else NoiseModel(sigma=sigma))

    def with_regime(self, regime: str) -> "ScenarioConfig":
        return replace(self, regime=regime)


def default_utilities(M: int, N: int) -> tuple:
    if N == 2:
        base = moo.example_utilities()
        return tuple(base[i % 3] for i in range(M))
    return tuple(moo.UtilitySpec.power(np.full(N, 1.0 / N)) for _ in range(M))


def example_config(weights: str = "normalized", regime: str = COORDINATED,
                 sigma: float | None = None, T: int = 10) -> ScenarioConfig:
    """M = 3 agents, 2-D probes on U[0.1, 1.1]^2 and the three example utilities.

    ``weights="normalized"`` rescales (0.4, 0.4, 0.3) onto the simplex;
    ``weights="equal"`` uses 1/3 each.
    """
    if weights == "normalized":
        w = SimplexWeights.normalized(moo.EXAMPLE_RAW_WEIGHTS)
    elif weights == "equal":
        w = SimplexWeights.uniform(3)
    else:
        raise ValueError(f"unknown weight choice {weights!r}")
    noise = None if sigma is None else NoiseModel(sigma=sigma)
    return ScenarioConfig(M=3, T=T, N=2, utilities=tuple(moo.example_utilities()), weights=w,
                          regime=regime, noise=noise)


def _coordinated_responses(cfg: ScenarioConfig, probes: np.ndarray, rng) -> np.ndarray:
    out = np.empty((cfg.T, cfg.M, cfg.N))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", moo.NonConcaveUtilityWarning)
        for t in range(cfg.T):
            prob = moo.ScalarizedProblem(cfg.utilities, cfg.weights, probes[t])
            out[t] = moo.solve_scalarized(prob, seed=int(rng.integers(2**62)))
    return out


def generate_dataset(cfg: ScenarioConfig, seed: int) -> InteractionDataset | NoisyDataset:
    """Simulate one slow-scale dataset.

    Probes come from stream 0, maneuvers from stream 1 and observation noise
    from stream 2 of ``seed``, so changing the noise level leaves probes and
    clean responses untouched.
    """
    probes = rng_stream(seed, 0).uniform(cfg.probe_lo, cfg.probe_hi, size=(cfg.T, cfg.N))
    resp_rng = rng_stream(seed, 1)
    if cfg.regime == COORDINATED:
        responses = _coordinated_responses(cfg, probes, resp_rng)
    else:
        responses = resp_rng.uniform(0.0, 1.0, size=(cfg.T, cfg.M, cfg.N))
    clean = InteractionDataset(probes, responses)
    if cfg.noise is None:
        return clean
    eps = cfg.noise.sample(rng_stream(seed, 2), responses.shape)
    observed = InteractionDataset(probes, responses + eps, nonnegative=False)
    return NoisyDataset(observed, cfg.noise, clean=clean, noise_draws=eps)


@dataclass(frozen=True)
class FastScaleRun:
    states: np.ndarray        # (M, K + 1, n_x)
    measurements: np.ndarray  # (M, K, n_y)
    Q: np.ndarray             # (M, n_x, n_x)
    R: np.ndarray             # (n_y, n_y)


def _psd_sqrt(S: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(S)
    return V * np.sqrt(np.clip(w, 0.0, None))


def simulate_fast_scale(cfg: ScenarioConfig, alpha, betas, K: int | None = None,
                        seed: int = 0, x0: np.ndarray | None = None) -> FastScaleRun:
    """Run ``K`` fast-scale steps for every agent within one epoch.

    ``alpha`` entries may be ``inf`` for a noiseless measurement channel.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    betas = np.atleast_2d(np.asarray(betas, dtype=np.float64))
    K = cfg.fast_steps if K is None else K
    M, N = betas.shape
    A = np.eye(N) if cfg.A is None else np.asarray(cfg.A, dtype=np.float64)
    C = np.eye(N) if cfg.C is None else np.asarray(cfg.C, dtype=np.float64)
    if A.shape != (N, N) or C.shape[1] != N or alpha.size != C.shape[0]:
        raise ValueError("tracking matrices do not match the signal dimension")
    with np.errstate(divide="ignore"):
        R = np.diag(1.0 / alpha)
    rng = rng_stream(seed, 0)
    states = np.empty((M, K + 1, N))
    meas = np.empty((M, K, C.shape[0]))
    Qs = np.empty((M, N, N))
    Rh = _psd_sqrt(R)
    for i in range(M):
        Q = np.diag(betas[i])
        Qs[i] = Q
        Qh = _psd_sqrt(Q)
        w = rng.standard_normal((K, N)) @ Qh.T
        v = rng.standard_normal((K, C.shape[0])) @ Rh.T
        x = np.zeros(N) if x0 is None else np.asarray(x0, dtype=np.float64)[i]
        states[i, 0] = x
        for k in range(K):
            x = A @ x + w[k]
            states[i, k + 1] = x
            meas[i, k] = C @ x + v[k]
    return FastScaleRun(states, meas, Qs, R)


def estimate_maneuver(measurements: np.ndarray, alpha) -> np.ndarray:
    """Method-of-moments recovery of ``beta`` from one agent's measurements (A = C = I).

    With ``d_k = y_{k+1} - y_k = w_k + v_{k+1} - v_k`` the lag-0 and lag-1
    autocovariances are ``Q + 2R`` and ``-R``, so ``Q = G0 + 2 G1`` no matter
    what ``R`` is; ``alpha`` is only used to cross-check the sizes.
    """
    y = np.asarray(measurements, dtype=np.float64)
    if y.shape[1] != np.asarray(alpha).size:
        raise ValueError("alpha does not match the measurement dimension")
    d = np.diff(y, axis=0)
    d = d - d.mean(axis=0)
    G0 = d.T @ d / len(d)
    G1 = d[1:].T @ d[:-1] / (len(d) - 1)
    Q = G0 + G1 + G1.T
    return np.sort(np.linalg.eigvalsh(0.5 * (Q + Q.T)))
