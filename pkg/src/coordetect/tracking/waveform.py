"""Measurement covariance produced by three radar pulse shapes.

Each model maps waveform parameters to the 2x2 covariance of a
(range, range-rate) measurement; the radar's probe ``alpha`` is the vector of
eigenvalues of its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import CoordError

TRIANGULAR = "triangular"
GAUSSIAN = "gaussian"
CHIRP = "chirp"
KINDS = (TRIANGULAR, GAUSSIAN, CHIRP)

SPEED_OF_LIGHT = 299_792_458.0


class InvalidParams(CoordError, ValueError):
    pass


@dataclass(frozen=True)
class WaveformSpec:
    kind: str
    theta: float
    eta: float
    wc: float
    c: float = SPEED_OF_LIGHT
    theta2: float = 0.0   # chirp rate, only used by the chirp model

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParams(f"unknown waveform {self.kind!r}; expected one of {KINDS}")
        for name in ("theta", "eta", "wc", "c"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise InvalidParams(f"{name} must be positive and finite, got {v!r}")
        if not np.isfinite(self.theta2):
            raise InvalidParams("theta2 must be finite")
        if self.kind != CHIRP and self.theta2 != 0.0:
            raise InvalidParams("theta2 only applies to the chirp waveform")


def waveform_covariance(spec: WaveformSpec) -> np.ndarray:
    c2, th, eta, wc = spec.c ** 2, spec.theta, spec.eta, spec.wc
    if spec.kind == TRIANGULAR:
        return np.diag([c2 * th ** 2 / (12 * eta), 5 * c2 / (2 * wc ** 2 * th ** 2 * eta)])
    if spec.kind == GAUSSIAN:
        # the printed range entry has an undefined symbol in its denominator; 2
        # is the value that agrees with the chirp model at zero chirp rate
        return np.diag([c2 * th ** 2 / (2 * eta), c2 / (2 * wc ** 2 * th ** 2 * eta)])
    th2 = spec.theta2
    off = -c2 * th2 * th ** 2 / (wc * eta)
    return np.array([
        [c2 * th ** 2 / (2 * eta), off],
        [off, c2 / (wc ** 2 * eta) * (1 / (2 * th ** 2) + 2 * th2 ** 2 * th ** 2)],
    ])


def probe_from_covariance(R: np.ndarray) -> np.ndarray:
    """Eigenvalues of ``R^-1`` in ascending order."""
    return np.sort(1.0 / np.linalg.eigvalsh(np.asarray(R, dtype=np.float64)))
