"""Domain types, dataset validation, JSON serialization and random streams."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


class CoordError(Exception):
    """Base class for all errors raised by this package."""


class DatasetError(CoordError, ValueError):
    pass


class DimensionMismatch(DatasetError):
    pass


class EmptyDataset(DatasetError):
    pass


class NegativeEntry(DatasetError):
    pass


SIMPLEX_TOL = 1e-12


def _as_float_array(values, ndim: int, what: str) -> np.ndarray:
    try:
        arr = np.array(values, dtype=np.float64)
    except (ValueError, TypeError) as exc:
        raise DimensionMismatch(f"{what}: ragged or non-numeric input") from exc
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{what}: expected {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DatasetError(f"{what}: non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProbeSignal:
    """Precision weights emitted by the radar in one epoch (eigenvalues of R^-1)."""

    values: np.ndarray

    def __post_init__(self):
        v = _as_float_array(self.values, 1, "probe")
        if v.size == 0:
            raise EmptyDataset("probe has zero length")
        if np.any(v < 0):
            raise NegativeEntry("probe has a negative entry")
        if not np.any(v > 0):
            raise DatasetError("probe is all zero; the budget constraint would be vacuous")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class Maneuver:
    """Process-noise eigenvalues chosen by one agent in one epoch."""

    values: np.ndarray

    def __post_init__(self):
        v = _as_float_array(self.values, 1, "maneuver")
        if np.any(v < 0):
            raise NegativeEntry("maneuver has a negative entry")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "iid_gaussian"
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind != "iid_gaussian":
            raise ValueError(f"unsupported noise kind {self.kind!r}")
        if not self.sigma >= 0:
            raise ValueError("sigma must be >= 0")

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.sigma == 0:
            return np.zeros(shape)
        return rng.normal(0.0, self.sigma, size=shape)


@dataclass(frozen=True)
class InteractionDataset:
    """Probes ``alpha[t]`` and responses ``beta[t, i]`` over ``T`` epochs and ``M`` agents.

    Arrays are stored densely: ``probes`` has shape ``(T, N)`` and
    ``responses`` has shape ``(T, M, N)``. Construction validates every
    invariant, so an instance in hand is always well formed. Observed
    responses corrupted by additive noise may dip below zero; those datasets
    are built with ``nonnegative=False``.
    """

    probes: np.ndarray
    responses: np.ndarray
    nonnegative: bool = field(default=True, compare=False)

    def __post_init__(self):
        probes = self.probes
        responses = self.responses
        if isinstance(probes, (list, tuple)) and len(probes) == 0:
            raise EmptyDataset("T = 0")
        probes = _as_float_array(probes, 2, "probes")
        if probes.shape[0] == 0:
            raise EmptyDataset("T = 0")
        responses = _as_float_array(responses, 3, "responses")
        T, N = probes.shape
        if responses.shape[0] != T:
            raise DimensionMismatch(f"responses cover {responses.shape[0]} epochs, probes {T}")
        if responses.shape[1] == 0:
            raise EmptyDataset("M = 0")
        if responses.shape[2] != N:
            raise DimensionMismatch(f"response dimension {responses.shape[2]} != probe dimension {N}")
        if N == 0:
            raise EmptyDataset("N = 0")
        if np.any(probes < 0):
            raise NegativeEntry("negative probe entry")
        if self.nonnegative and np.any(responses < 0):
            raise NegativeEntry("negative response entry")
        if np.any(~np.any(probes > 0, axis=1)):
            raise DatasetError("all-zero probe")
        object.__setattr__(self, "probes", probes)
        object.__setattr__(self, "responses", responses)

    @property
    def T(self) -> int:
        return self.probes.shape[0]

    @property
    def M(self) -> int:
        return self.responses.shape[1]

    @property
    def N(self) -> int:
        return self.probes.shape[1]

    def probe(self, t: int) -> ProbeSignal:
        return ProbeSignal(self.probes[t])

    def response(self, t: int, i: int) -> Maneuver:
        return Maneuver(self.responses[t, i])

    def __eq__(self, other):
        if not isinstance(other, InteractionDataset):
            return NotImplemented
        return (np.array_equal(self.probes, other.probes)
                and np.array_equal(self.responses, other.responses))

    __hash__ = None


@dataclass(frozen=True)
class NoisyDataset:
    """Dataset whose responses were observed through additive noise.

    ``clean`` and ``noise_draws`` are only known when the data were simulated;
    detectors never look at them.
    """

    base: InteractionDataset
    noise_model: NoiseModel
    clean: InteractionDataset | None = field(default=None, compare=False)
    noise_draws: np.ndarray | None = field(default=None, compare=False, repr=False)

    @property
    def T(self) -> int:
        return self.base.T

    @property
    def M(self) -> int:
        return self.base.M

    @property
    def N(self) -> int:
        return self.base.N


@dataclass(frozen=True)
class SimplexWeights:
    mu: np.ndarray
    strict: bool = False

    def __post_init__(self):
        mu = _as_float_array(self.mu, 1, "weights")
        if mu.size == 0:
            raise ValueError("empty weight vector")
        if np.any(mu < 0):
            raise ValueError("weights must be nonnegative")
        if abs(mu.sum() - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"weights sum to {mu.sum()!r}, not 1")
        if self.strict and np.any(mu <= 0):
            raise ValueError("strict weights must be positive")
        object.__setattr__(self, "mu", mu)

    @classmethod
    def normalized(cls, raw, strict: bool = False) -> "SimplexWeights":
        raw = np.asarray(raw, dtype=np.float64)
        return cls(raw / raw.sum(), strict=strict)

    @classmethod
    def uniform(cls, M: int) -> "SimplexWeights":
        return cls(np.full(M, 1.0 / M), strict=True)


def validate_dataset(raw) -> InteractionDataset:
    """Return a validated dataset, rebuilding it from arrays if needed.

    Accepts an :class:`InteractionDataset` (re-checked, so the call is
    idempotent), a :class:`NoisyDataset` (its observed responses), or a
    ``(probes, responses)`` pair of nested sequences.
    """
    if isinstance(raw, NoisyDataset):
        raw = raw.base
    if isinstance(raw, InteractionDataset):
        return InteractionDataset(raw.probes, raw.responses, raw.nonnegative)
    probes, responses = raw
    if len(probes) == 0:
        raise EmptyDataset("T = 0")
    return InteractionDataset(probes, responses)


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Deterministic generator for ``(seed, stream_id)``.

    Streams with different ids are spawned children of the same seed
    sequence, which numpy guarantees to be statistically independent.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=(int(stream_id) & 0xFFFFFFFFFFFFFFFF,))
    return np.random.Generator(np.random.PCG64(ss))


# -- JSON wire format -------------------------------------------------------

def dataset_to_dict(data: InteractionDataset | NoisyDataset) -> dict[str, Any]:
    noise = None
    if isinstance(data, NoisyDataset):
        noise = {"kind": data.noise_model.kind, "sigma": float(data.noise_model.sigma)}
        data = data.base
    return {
        "T": data.T,
        "M": data.M,
        "N": data.N,
        "probes": data.probes.tolist(),
        "responses": data.responses.tolist(),
        "noise": noise,
    }


def dataset_from_dict(doc: dict[str, Any]) -> InteractionDataset | NoisyDataset:
    try:
        T, M, N = int(doc["T"]), int(doc["M"]), int(doc["N"])
        probes, responses = doc["probes"], doc["responses"]
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed dataset document: {exc}") from exc
    if T == 0 or M == 0:
        raise EmptyDataset(f"T={T}, M={M}")
    noise = doc.get("noise")
    if not probes:
        raise EmptyDataset("T = 0")
    data = InteractionDataset(probes, responses, nonnegative=noise is None)
    if (data.T, data.M, data.N) != (T, M, N):
        raise DimensionMismatch(
            f"header says T={T}, M={M}, N={N}; arrays give {data.T}, {data.M}, {data.N}")
    if noise is None:
        return data
    return NoisyDataset(data, NoiseModel(noise.get("kind", "iid_gaussian"), float(noise["sigma"])))


def dumps_dataset(data: InteractionDataset | NoisyDataset) -> str:
    # json emits repr() floats, which round-trip exactly.
    return json.dumps(dataset_to_dict(data), indent=1)


def loads_dataset(text: str) -> InteractionDataset | NoisyDataset:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatasetError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise DatasetError("dataset document must be a JSON object")
    return dataset_from_dict(doc)


def save_dataset(data, path: str | Path) -> None:
    Path(path).write_text(dumps_dataset(data) + "\n")


def load_dataset(path: str | Path):
    return loads_dataset(Path(path).read_text())
