"""Forward side: weighted-sum Pareto points under a shared linear budget.

Agents ``i = 1..M`` pick bundles ``beta_i >= 0``; the joint choice must satisfy
``alpha' sum_i beta_i <= 1``. Maximizing ``sum_i mu_i f_i(beta_i)`` with strictly
positive weights yields a Pareto-optimal joint choice.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .core import CoordError, SimplexWeights, rng_stream


class NonConcaveUtility(CoordError):
    pass


class NonConcaveUtilityWarning(UserWarning):
    pass


class DidNotConverge(CoordError):
    pass


class TooLarge(CoordError):
    pass


GRAD_CAP = 1e6
N_RESTARTS = 10
MAX_GRID_POINTS = 200_000_000


@dataclass(frozen=True)
class UtilitySpec:
    """Either ``f(b) = (prod_n b_n ** p_n) ** q`` or a caller-supplied evaluator.

    Custom evaluators must be continuous and monotone increasing on the
    nonnegative orthant; concavity is spot-checked before solving.
    """

    kind: str
    p: np.ndarray | None = None
    q: float = 1.0
    func: Callable[[np.ndarray], float] | None = field(default=None, compare=False)
    n: int | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind == "power":
            p = np.asarray(self.p, dtype=np.float64).ravel()
            if p.size == 0 or np.any(p <= 0) or np.any(p > 1):
                raise ValueError("power exponents must lie in (0, 1]")
            if not self.q > 0:
                raise ValueError("overall power q must be > 0")
            p.setflags(write=False)
            object.__setattr__(self, "p", p)
            object.__setattr__(self, "n", p.size)
        elif self.kind == "custom":
            if self.func is None or self.n is None:
                raise ValueError("custom utility needs func and n")
        else:
            raise ValueError(f"unknown utility kind {self.kind!r}")

    @classmethod
    def power(cls, p, q: float = 1.0, name: str = "") -> "UtilitySpec":
        return cls("power", p=p, q=q, name=name)

    @classmethod
    def custom(cls, func, n: int, name: str = "") -> "UtilitySpec":
        return cls("custom", func=func, n=n, name=name)

    @property
    def degree(self) -> float:
        return float(self.q * self.p.sum()) if self.kind == "power" else math.nan

    @property
    def is_concave(self) -> bool:
        """Power family: concave on the orthant iff the homogeneity degree is <= 1."""
        if self.kind != "power":
            return midpoint_concave(self, np.random.default_rng(0))
        return self.degree <= 1.0 + 1e-12

    def __call__(self, beta) -> float | np.ndarray:
        beta = np.asarray(beta, dtype=np.float64)
        if self.kind == "power":
            return _kernels._power_values_np(beta, self.p, self.q) if beta.ndim > 1 \
                else float(_kernels._power_values_np(beta, self.p, self.q))
        if beta.ndim > 1:
            return np.array([self.func(b) for b in beta.reshape(-1, self.n)]).reshape(beta.shape[:-1])
        return float(self.func(beta))


def example_utilities() -> list[UtilitySpec]:
    """The three example utilities: (b1 b2)^2, sqrt(b1) b2 and b1 sqrt(b2)."""
    return [
        UtilitySpec.power([1.0, 1.0], q=2.0, name="f1"),
        UtilitySpec.power([0.5, 1.0], name="f2"),
        UtilitySpec.power([1.0, 0.5], name="f3"),
    ]


EXAMPLE_RAW_WEIGHTS = (0.4, 0.4, 0.3)


def midpoint_concave(u: UtilitySpec, rng: np.random.Generator, n_pairs: int = 2000,
                     scale: float = 2.0, tol: float = 1e-9) -> bool:
    a = rng.uniform(0, scale, size=(n_pairs, u.n))
    b = rng.uniform(0, scale, size=(n_pairs, u.n))
    fa, fb, fm = u(a), u(b), u(0.5 * (a + b))
    return bool(np.all(fm >= 0.5 * (fa + fb) - tol * (1 + np.abs(fa) + np.abs(fb))))


@dataclass(frozen=True)
class ScalarizedProblem:
    utilities: tuple[UtilitySpec, ...]
    weights: SimplexWeights
    probe: np.ndarray

    def __post_init__(self):
        utils = tuple(self.utilities)
        probe = np.asarray(getattr(self.probe, "values", self.probe), dtype=np.float64).ravel()
        w = self.weights if isinstance(self.weights, SimplexWeights) else SimplexWeights(self.weights)
        if w.mu.size != len(utils):
            raise ValueError(f"{w.mu.size} weights for {len(utils)} utilities")
        for u in utils:
            if u.n != probe.size:
                raise ValueError(f"utility dimension {u.n} != probe dimension {probe.size}")
        object.__setattr__(self, "utilities", utils)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "probe", probe)

    @property
    def M(self) -> int:
        return len(self.utilities)

    @property
    def N(self) -> int:
        return self.probe.size

    @property
    def all_power(self) -> bool:
        return all(u.kind == "power" for u in self.utilities)

    def power_arrays(self):
        P = np.array([u.p for u in self.utilities])
        Q = np.array([u.q for u in self.utilities], dtype=np.float64)
        return P, Q

    def values(self, betas: np.ndarray) -> np.ndarray:
        betas = np.asarray(betas, dtype=np.float64).reshape(self.M, self.N)
        return np.array([u(b) for u, b in zip(self.utilities, betas)])

    def objective(self, betas: np.ndarray) -> float:
        return float(self.weights.mu @ self.values(betas))

    def budget_used(self, betas: np.ndarray) -> float:
        return float(self.probe @ np.asarray(betas).reshape(self.M, self.N).sum(axis=0))


def _starts(prob: ScalarizedProblem, rng: np.random.Generator) -> list[np.ndarray]:
    M, N = prob.M, prob.N
    a = np.tile(prob.probe, M)
    out = [np.full(M * N, 1.0 / (M * N)) / a]
    # one start per agent holding the whole budget; with non-concave utilities
    # the optimum is often such a corner
    for i in range(M):
        z = np.zeros(M * N)
        z[i * N:(i + 1) * N] = 1.0 / (N * prob.probe)
        out.append(z)
    for _ in range(N_RESTARTS):
        w = rng.dirichlet(np.ones(M * N))
        out.append(w / a)
    return out


def _numeric_gradient(prob: ScalarizedProblem, z: np.ndarray, h: float = 1e-7) -> np.ndarray:
    g = np.empty_like(z)
    for k in range(z.size):
        zp = z.copy()
        zm = z.copy()
        zp[k] += h
        zm[k] = max(z[k] - h, 0.0)
        g[k] = (prob.objective(zp) - prob.objective(zm)) / (zp[k] - zm[k])
    return np.minimum(g, GRAD_CAP)


def _pga_generic(prob, z0, a, tol, max_iter):
    proj = _kernels.project_budget_np
    z = proj(z0, a)
    f = prob.objective(z)
    step = 1.0
    calm = 0
    for it in range(max_iter):
        g = _numeric_gradient(prob, z)
        for _ in range(60):
            zn = proj(z + step * g, a)
            fn = prob.objective(zn)
            if fn >= f + 1e-4 * (g @ (zn - z)) and fn >= f:
                break
            step *= 0.5
        else:
            return z, f, it, True
        change, moved = fn - f, float(np.max(np.abs(zn - z)))
        z, f = zn, fn
        calm = calm + 1 if (change < tol * (1 + abs(f)) and moved < 1e-9) else 0
        if calm >= 3:
            return z, f, it + 1, True
        step = min(step * 2.0, 1e6)
    return z, f, max_iter, False


def solve_scalarized(prob: ScalarizedProblem, tol: float = 1e-10, seed: int = 0,
                     max_iter: int = 1000) -> np.ndarray:
    """Maximize the weighted utility sum over the budget polytope.

    Projected gradient ascent with backtracking, run from an even split, from
    each single-agent corner and from ``N_RESTARTS`` random budget-binding
    points; the best end point is returned as an ``(M, N)`` array.
    ``max_iter`` caps each start separately.
    """
    if np.any(prob.probe <= 0):
        raise ValueError("probe must be strictly positive for a bounded budget set")
    mu = prob.weights.mu
    if np.any(mu <= 0):
        raise ValueError("solve_scalarized needs strictly positive weights")
    if prob.all_power:
        bad = [u.name or str(k) for k, u in enumerate(prob.utilities) if not u.is_concave]
        if bad:
            warnings.warn(f"utilities {bad} are not concave; returning the best of several "
                          "local optima", NonConcaveUtilityWarning, stacklevel=2)
    else:
        check_rng = rng_stream(seed, 0x5EED)
        for k, u in enumerate(prob.utilities):
            if u.kind == "custom" and not midpoint_concave(u, check_rng):
                raise NonConcaveUtility(f"utility {u.name or k} fails the midpoint-concavity check")

    rng = rng_stream(seed, 0)
    a = np.tile(prob.probe, prob.M)
    best_z, best_f, any_conv = None, -np.inf, False
    if prob.all_power:
        P, Q = prob.power_arrays()
        for z0 in _starts(prob, rng):
            z, f, _, conv = _kernels.pga(z0, a, P, Q, mu, tol, max_iter, GRAD_CAP)
            any_conv |= conv
            if f > best_f + 1e-15:
                best_z, best_f = z, f
    else:
        for z0 in _starts(prob, rng):
            z, f, _, conv = _pga_generic(prob, z0, a, tol, max_iter)
            any_conv |= conv
            if f > best_f + 1e-15:
                best_z, best_f = z, f
    if not any_conv:
        raise DidNotConverge(f"no start converged within {max_iter} iterations")
    return np.asarray(best_z).reshape(prob.M, prob.N).copy()


def _grid_units(step: float) -> int:
    K = int(round(1.0 / step))
    if K < 1 or abs(K * step - 1.0) > 1e-9:
        raise ValueError("grid step must divide 1")
    return K


def _guard(prob_M: int, N: int, K: int) -> None:
    D = prob_M * N
    if D > 6:
        raise TooLarge(f"grid search over {D} coordinates (limit 6)")
    if math.comb(K + D - 1, D - 1) > MAX_GRID_POINTS:
        raise TooLarge(f"{math.comb(K + D - 1, D - 1)} grid points at this step")


def _units_to_betas(units: np.ndarray, probe: np.ndarray, M: int, K: int) -> np.ndarray:
    return units.reshape(M, probe.size) / K / probe


def grid_oracle(prob: ScalarizedProblem, step: float) -> np.ndarray:
    """Exhaustive search over budget-binding allocations at resolution ``step``.

    Every slot ``(i, n)`` receives a multiple of ``step`` of the budget (so
    ``beta_i[n] = k * step / alpha[n]``) and all of the budget is spent, which
    loses nothing for monotone utilities. Ties go to the lexicographically
    smallest joint vector.
    """
    K = _grid_units(step)
    _guard(prob.M, prob.N, K)
    if prob.all_power:
        P, Q = prob.power_arrays()
        units = _kernels.grid(prob.probe, P, Q, prob.weights.mu, K, 0, np.zeros(prob.M), 0.0)
    else:
        comps = _kernels._compositions_np(prob.M * prob.N, K)
        vals = [prob.objective(_units_to_betas(c, prob.probe, prob.M, K)) for c in comps]
        units = comps[int(np.argmax(vals))]
    return _units_to_betas(np.asarray(units), prob.probe, prob.M, K)


def is_pareto_optimal(candidate, utilities, probe, step: float, margin: float = 1e-9) -> bool:
    """True when no budget-binding grid point dominates ``candidate``.

    Dominating means every utility at least as large and one larger by more
    than ``margin``.
    """
    utilities = tuple(utilities)
    probe = np.asarray(getattr(probe, "values", probe), dtype=np.float64)
    M, N = len(utilities), probe.size
    cand = np.asarray(candidate, dtype=np.float64).reshape(M, N)
    if probe @ cand.sum(axis=0) > 1.0 + 1e-7:
        raise ValueError("candidate violates the budget")
    K = _grid_units(step)
    _guard(M, N, K)
    target = np.array([u(b) for u, b in zip(utilities, cand)])
    if all(u.kind == "power" for u in utilities):
        P = np.array([u.p for u in utilities])
        Q = np.array([u.q for u in utilities], dtype=np.float64)
        hit = _kernels.grid(probe, P, Q, np.full(M, 1.0 / M), K, 1, target, margin)
        return bool(hit[0] < 0)
    for c in _kernels._compositions_np(M * N, K):
        b = _units_to_betas(c, probe, M, K)
        vals = np.array([u(x) for u, x in zip(utilities, b)])
        if np.all(vals >= target) and np.any(vals > target + margin):
            return False
    return True
