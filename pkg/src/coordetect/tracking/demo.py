"""End-to-end multi-target tracking run used by the ``track`` command."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import rng_stream
from . import jpdaf
from .kalman import GaussianBelief, LinearGaussianModel


@dataclass(frozen=True)
class TrackRow:
    k: int
    target: int
    mean: np.ndarray
    cov_trace: float
    nees: float


def run_tracking(targets: int = 2, steps: int = 100, seed: int = 0, alpha=(4.0, 4.0),
                 beta=(0.01, 0.01), p_detect: float = 0.95, clutter_density: float = 0.002,
                 spacing: float = 20.0, coupled: bool = True) -> list[TrackRow]:
    """Random-walk targets on a line of spacing ``spacing``, tracked by JPDA.

    Clutter is Poisson with ``clutter_density`` points per unit area, spread
    uniformly over a box that covers every target with a margin of 10.
    Measurements outside all validation gates are discarded before events
    are enumerated.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    model = LinearGaussianModel.spectral(alpha, beta)
    models = [model] * targets
    n = model.n_x
    rng = rng_stream(seed, 0)
    truth = np.zeros((targets, n))
    truth[:, 0] = spacing * np.arange(targets)
    beliefs = [GaussianBelief(truth[t].copy(), np.eye(n)) for t in range(targets)]
    belief = jpdaf.StackedBelief.from_beliefs(beliefs)
    lo = np.full(n, -10.0)
    hi = np.full(n, 10.0)
    hi[0] += spacing * (targets - 1)
    volume = float(np.prod(hi - lo))
    clutter = jpdaf.ClutterModel("poisson", volume=volume, density=clutter_density)
    q_half = np.sqrt(beta)
    r_half = np.sqrt(1.0 / alpha)
    rows: list[TrackRow] = []
    for k in range(1, steps + 1):
        truth = truth @ model.A.T + rng.standard_normal(truth.shape) * q_half
        ys = [model.C @ truth[t] + rng.standard_normal(model.n_y) * r_half
              for t in range(targets) if rng.random() < p_detect]
        n_clutter = rng.poisson(clutter_density * volume)
        ys += [rng.uniform(lo, hi) for _ in range(n_clutter)]
        pred = jpdaf.stacked_predict(models, belief)
        om = jpdaf.gate(models, pred, ys)
        keep = np.flatnonzero(om.omega[:, 1:].any(axis=1))
        ys = [ys[j] for j in keep]
        om = jpdaf.ValidationMatrix(om.omega[keep]) if keep.size else jpdaf.ValidationMatrix(
            np.ones((0, targets + 1), dtype=np.int8))
        events = jpdaf.enumerate_events(om)
        if coupled:
            post = jpdaf.event_posterior_coupled(events, models, pred, p_detect, clutter, ys)
            belief = jpdaf.jpdacf_update(pred, post, models, ys)
        else:
            sl = [slice(t * n, (t + 1) * n) for t in range(targets)]
            y_pred = [model.C @ pred.mean[s] for s in sl]
            S_pred = [model.C @ pred.cov[s, s] @ model.C.T + model.R for s in sl]
            post = jpdaf.event_posterior_uncoupled(events, y_pred, S_pred, p_detect, clutter, ys)
            psi = post.marginals()
            upd = [jpdaf.pda_update(model, pred.marginal(sl[t]), psi[:, t + 1], ys)
                   for t in range(targets)]
            belief = jpdaf.StackedBelief.from_beliefs(upd)
        for t in range(targets):
            b = belief.marginal(slice(t * n, (t + 1) * n))
            err = truth[t] - b.mean
            rows.append(TrackRow(k, t + 1, b.mean.copy(), float(np.trace(b.cov)),
                                 float(err @ np.linalg.solve(b.cov, err))))
    return rows
