"""Coordination test for responses observed through additive noise.

The relaxation level ``Phi*`` of the noisy dataset is compared with the law of

    Psi = max_{i, t != s} alpha_t'(eps_t^i - eps_s^i),

which is simulated from the assumed noise model. Under coordination
``Phi* <= Psi`` for the realized noise, so the tail mass of ``Psi`` above
``Phi*`` is a p-value-like statistic: small values reject coordination.
"""

from __future__ import annotations

import csv
import enum
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels, revpref, sim
from .core import NoiseModel, NoisyDataset, rng_stream, validate_dataset

DEFAULT_L = 500
DEFAULT_TRIALS = 300


@dataclass(frozen=True)
class PsiSample:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("need at least one Psi draw")
        object.__setattr__(self, "values", v)

    @property
    def L(self) -> int:
        return self.values.size


def sample_psi(probes, M: int, noise: NoiseModel, L: int = DEFAULT_L, seed: int = 0) -> PsiSample:
    """Draw ``L`` independent copies of ``Psi`` for the given probes.

    With a single epoch there are no pairs and ``Psi`` is 0 by convention.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    alpha = np.ascontiguousarray(probes, dtype=np.float64)
    T, N = alpha.shape
    if T < 2:
        return PsiSample(np.zeros(L))
    eps = noise.sample(rng_stream(seed, 0), (L, M, T, N))
    return PsiSample(_kernels.psi(alpha, np.ascontiguousarray(eps)))


class EmpiricalCdf:
    """``F(x) = #{samples <= x} / L`` on a fixed sample."""

    def __init__(self, samples):
        self.sorted = np.sort(np.asarray(samples, dtype=np.float64))
        if self.sorted.size == 0:
            raise ValueError("empty sample")

    def __call__(self, x):
        return np.searchsorted(self.sorted, x, side="right") / self.sorted.size

    def survival(self, x):
        """Tail mass ``#{samples >= x} / L``, the left limit of ``1 - F`` at ``x``.

        Using the closed tail keeps the statistic at 1 when ``Psi`` is
        degenerate at 0 and the data sit exactly on the feasibility boundary.
        """
        return 1.0 - np.searchsorted(self.sorted, x, side="left") / self.sorted.size


class Decision(enum.Enum):
    H0_COORDINATED = "H0"
    H1_NOT_COORDINATED = "H1"


@dataclass(frozen=True)
class DetectorVerdict:
    statistic: float
    gamma: float
    decision: Decision
    phi_star: float
    u: np.ndarray     # (T, M) multipliers feasible at the relaxation level
    lam: np.ndarray

    @property
    def coordinated(self) -> bool:
        return self.decision is Decision.H0_COORDINATED


def _check_gamma(gamma: float) -> None:
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")


def decide(data, gamma: float, L: int = DEFAULT_L, seed: int = 0,
           noise: NoiseModel | None = None) -> DetectorVerdict:
    """Run the detector on a noisy dataset.

    ``noise`` overrides the model carried by ``data``; a plain
    :class:`InteractionDataset` needs one (or is treated as noiseless).
    H0 is declared when the statistic is strictly above ``gamma``.
    """
    _check_gamma(gamma)
    if noise is None:
        noise = data.noise_model if isinstance(data, NoisyDataset) else NoiseModel(sigma=0.0)
    obs = validate_dataset(data)
    relax = revpref.relaxation_statistic(obs)
    psi = sample_psi(obs.probes, obs.M, noise, L, seed)
    stat = float(EmpiricalCdf(psi.values).survival(relax.overall))
    decision = Decision.H0_COORDINATED if stat > gamma else Decision.H1_NOT_COORDINATED
    return DetectorVerdict(stat, gamma, decision, relax.overall, relax.u, relax.lam)


# -- Monte Carlo harness ----------------------------------------------------

def _trial(args):
    cfg, seed, trial, L = args
    r = rng_stream(seed, trial)
    data_seed, psi_seed = (int(v) for v in r.integers(0, 2**63 - 1, size=2))
    data = sim.generate_dataset(cfg, data_seed)
    noise = cfg.noise if cfg.noise is not None else NoiseModel(sigma=0.0)
    # gamma only affects the decision, which callers recompute from the statistic
    v = decide(data, 0.5, L, psi_seed, noise=noise)
    return v.statistic


def monte_carlo_statistics(cfg: sim.ScenarioConfig, trials: int, seed: int = 0,
                           L: int = DEFAULT_L, threads: int = 1) -> np.ndarray:
    """Detector statistic on ``trials`` freshly simulated datasets.

    Trial ``k`` draws everything from ``rng_stream(seed, k)``, so the result
    does not depend on ``threads``.
    """
    jobs = [(cfg, seed, k, L) for k in range(trials)]
    if threads > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            out = list(ex.map(_trial, jobs, chunksize=max(1, trials // (4 * threads))))
    else:
        out = [_trial(j) for j in jobs]
    return np.asarray(out, dtype=np.float64)


def type1_error_estimate(cfg: sim.ScenarioConfig, gamma: float, trials: int = DEFAULT_TRIALS,
                         seed: int = 0, L: int = DEFAULT_L, threads: int = 1) -> float:
    """Fraction of coordinated datasets on which the detector declares H1."""
    _check_gamma(gamma)
    if trials < 100:
        raise ValueError("trials must be >= 100 for a meaningful rate")
    stats = monte_carlo_statistics(cfg.with_regime(sim.COORDINATED), trials, seed, L, threads)
    return float(np.mean(stats <= gamma))


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    regime: str
    mean_statistic: float
    std_statistic: float
    n_trials: int


def sweep(sigma_grid, cfg: sim.ScenarioConfig, seed: int = 0, trials: int = DEFAULT_TRIALS,
          L: int = DEFAULT_L, threads: int = 1) -> list[SweepRow]:
    """Mean and spread of the statistic per noise level, coordinated (H0) vs independent (H1)."""
    rows = []
    for k, sigma in enumerate(sigma_grid):
        for j, (label, regime) in enumerate((("H0", sim.COORDINATED), ("H1", sim.INDEPENDENT))):
            c = cfg.with_noise(float(sigma)).with_regime(regime)
            stats = monte_carlo_statistics(c, trials, seed=seed + 2 * k + j, L=L, threads=threads)
            rows.append(SweepRow(float(sigma), label, float(stats.mean()), float(stats.std()), trials))
    return rows


def sweep_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["sigma", "regime", "mean_statistic", "std_statistic", "n_trials"])
    for r in rows:
        w.writerow([f"{r.sigma:.9g}", r.regime, f"{r.mean_statistic:.9g}",
                    f"{r.std_statistic:.9g}", r.n_trials])
    return buf.getvalue()
