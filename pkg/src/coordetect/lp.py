"""Dense two-phase simplex for the small LPs built by the revealed-preference tests.

Problems are stated as

    minimize    c'x
    subject to  a_k'x  (<=, =, >=)  b_k     for every row k
                lo_j <= x_j <= hi_j          (lo_j may be -inf, hi_j may be +inf)

An all-zero objective turns the call into a pure feasibility query and the
second phase is skipped.
"""

from __future__ import annotations

import enum
import logging
import os
import sys
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .core import CoordError

log = logging.getLogger(__name__)

FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = {LE: LE, EQ: EQ, GE: GE, "==": EQ, "≤": LE, "≥": GE}


class NumericalBreakdown(CoordError):
    pass


class Status(enum.Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpOutcome:
    status: Status
    x: np.ndarray | None = None
    value: float | None = None
    iterations: int = 0

    @property
    def ok(self) -> bool:
        return self.status in (Status.OPTIMAL, Status.FEASIBLE)


@dataclass(frozen=True)
class LinearProgram:
    objective: np.ndarray
    A: np.ndarray
    relations: tuple[str, ...]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=np.float64).ravel()
        n = c.size
        A = np.asarray(self.A, dtype=np.float64).reshape(-1, n)
        b = np.asarray(self.b, dtype=np.float64).ravel()
        if A.shape[0] != b.size or len(self.relations) != b.size:
            raise ValueError("row count mismatch between A, relations and b")
        try:
            rel = tuple(_RELATIONS[r] for r in self.relations)
        except KeyError as exc:
            raise ValueError(f"unknown relation {exc}") from None
        lo = np.broadcast_to(np.asarray(self.lower, dtype=np.float64), (n,)).copy()
        hi = np.broadcast_to(np.asarray(self.upper, dtype=np.float64), (n,)).copy()
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValueError("invalid variable bounds")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n_vars(self) -> int:
        return self.objective.size

    @classmethod
    def from_rows(cls, objective, rows: Sequence[tuple], bounds=None) -> "LinearProgram":
        """Build from ``(a, relation, b)`` rows; ``bounds`` is a list of ``(lo, hi)``.

        Without ``bounds`` every variable is free; ``None`` inside a bound pair
        means unbounded on that side.
        """
        c = np.asarray(objective, dtype=np.float64)
        n = c.size
        if rows:
            A = np.array([np.asarray(r[0], dtype=np.float64) for r in rows]).reshape(len(rows), n)
        else:
            A = np.zeros((0, n))
        rel = tuple(r[1] for r in rows)
        b = np.array([r[2] for r in rows], dtype=np.float64)
        if bounds is None:
            lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
        else:
            lo = np.array([-np.inf if bd[0] is None else bd[0] for bd in bounds], dtype=np.float64)
            hi = np.array([np.inf if bd[1] is None else bd[1] for bd in bounds], dtype=np.float64)
        return cls(c, A, rel, b, lo, hi)

    def violation(self, x: np.ndarray) -> float:
        """Largest constraint or bound violation at ``x`` (0 when feasible)."""
        x = np.asarray(x, dtype=np.float64)
        worst = 0.0
        if self.A.shape[0]:
            r = self.A @ x - self.b
            for k, rel in enumerate(self.relations):
                if rel == LE:
                    worst = max(worst, r[k])
                elif rel == GE:
                    worst = max(worst, -r[k])
                else:
                    worst = max(worst, abs(r[k]))
        worst = max(worst, float(np.max(self.lower - x, initial=0.0)),
                    float(np.max(x - self.upper, initial=0.0)))
        return worst


def _trace_enabled() -> bool:
    return os.environ.get("COORD_LP_TRACE", "0") == "1"


def _dump(label: str, tab: np.ndarray, basis: np.ndarray) -> None:
    with np.printoptions(precision=4, suppress=True, linewidth=200):
        sys.stderr.write(f"--- {label}  basis={basis.tolist()}\n{tab}\n")


def _standardize(lp: LinearProgram):
    """Shift/split variables so every one is >= 0.

    Returns (A', b', c', map, offset, extra_rows) with x = offset + map @ y.
    """
    n = lp.n_vars
    cols = []
    offset = np.zeros(n)
    ub_rows = []
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        e = np.zeros(n)
        e[j] = 1.0
        if np.isfinite(lo):
            offset[j] = lo
            cols.append(e)
            if np.isfinite(hi):
                ub_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append(-e)
        else:
            cols.append(e)
            cols.append(-e)
    T = np.column_stack(cols) if cols else np.zeros((n, 0))
    A = lp.A @ T
    b = lp.b - lp.A @ offset
    rel = list(lp.relations)
    if ub_rows:
        extra = np.zeros((len(ub_rows), T.shape[1]))
        for k, (col, width) in enumerate(ub_rows):
            extra[k, col] = 1.0
        A = np.vstack([A, extra])
        b = np.concatenate([b, [w for _, w in ub_rows]])
        rel += [LE] * len(ub_rows)
    c = lp.objective @ T
    return A, b, rel, c, T, offset


def _run(tab, basis, allowed, max_iter, bland_after, label):
    if _trace_enabled():
        _dump(f"{label} start", tab, basis)
        status, it = _kernels.simplex_loop_np(
            tab, basis, allowed, max_iter, bland_after, PIVOT_TOL,
            trace=lambda k, e, l, t: _dump(f"{label} pivot {k}: enter {e} leave row {l}", t, basis))
    else:
        status, it = _kernels.simplex_loop(tab, basis, allowed, max_iter, bland_after, PIVOT_TOL)
    if status == _kernels.SIMPLEX_ITERATION_LIMIT:
        raise NumericalBreakdown(f"{label}: no progress after {it} pivots (degenerate cycling)")
    return status, it


def solve(lp: LinearProgram) -> LpOutcome:
    """Solve ``lp`` with a two-phase dense-tableau simplex.

    Dantzig pricing is used for the first ``5 * (rows + cols)`` pivots, after
    which Bland's rule takes over to break any degenerate cycle.
    """
    A, b, rel, c, Tmap, offset = _standardize(lp)
    m, n = A.shape

    A = A.copy()
    b = b.copy()
    rel = list(rel)
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    for k in np.flatnonzero(neg):
        rel[k] = {LE: GE, GE: LE, EQ: EQ}[rel[k]]

    n_slack = sum(r != EQ for r in rel)
    n_art = sum(r != LE for r in rel)
    ncol = n + n_slack + n_art
    tab = np.zeros((m + 1, ncol + 1))
    tab[:m, :n] = A
    tab[:m, -1] = b
    basis = np.empty(m, dtype=np.int64)
    s = n
    a = n + n_slack
    art_cols = []
    for k, r in enumerate(rel):
        if r == LE:
            tab[k, s] = 1.0
            basis[k] = s
            s += 1
        else:
            if r == GE:
                tab[k, s] = -1.0
                s += 1
            tab[k, a] = 1.0
            basis[k] = a
            art_cols.append(a)
            a += 1

    bland_after = 5 * (m + ncol)
    max_iter = 50 * (m + ncol) + 100
    iterations = 0

    # phase 1: minimize the sum of artificials
    if art_cols:
        art_rows = [k for k in range(m) if basis[k] >= n + n_slack]
        tab[m, :] = -tab[art_rows].sum(axis=0)
        tab[m, art_cols] = 0.0
        allowed = np.ones(ncol, dtype=np.bool_)
        _, it = _run(tab, basis, allowed, max_iter, bland_after, "phase 1")
        iterations += it
        infeas = -tab[m, -1]
        scale = 1.0 + float(np.max(np.abs(b), initial=0.0))
        if infeas > FEAS_TOL * scale:
            return LpOutcome(Status.INFEASIBLE, iterations=iterations)
        # pivot remaining (zero-level) artificials out of the basis
        keep = np.ones(m, dtype=bool)
        for k in range(m):
            if basis[k] >= n + n_slack:
                row = tab[k, :n + n_slack]
                cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if cand.size == 0:
                    keep[k] = False  # redundant row
                    continue
                j = int(cand[np.argmax(np.abs(row[cand]))])
                tab[k] /= tab[k, j]
                f = tab[:, j].copy()
                f[k] = 0.0
                tab -= np.outer(f, tab[k])
                basis[k] = j
        tab = np.vstack([tab[:m][keep], tab[m:]])
        basis = basis[keep]
        m = basis.size
        tab = np.delete(tab, art_cols, axis=1)
        ncol = n + n_slack

    def extract() -> np.ndarray:
        y = np.zeros(ncol)
        y[basis] = np.maximum(tab[:m, -1], 0.0)
        return offset + Tmap @ y[:n]

    pure_feasibility = not np.any(lp.objective)
    if pure_feasibility:
        x = extract()
        _check_witness(lp, x)
        return LpOutcome(Status.FEASIBLE, x=x, value=0.0, iterations=iterations)

    # phase 2
    tab[m, :] = 0.0
    tab[m, :n] = c
    for k in range(m):
        cb = tab[m, basis[k]]
        if cb != 0.0:
            tab[m] -= cb * tab[k]
    allowed = np.ones(ncol, dtype=np.bool_)
    status, it = _run(tab, basis, allowed, max_iter, bland_after, "phase 2")
    iterations += it
    if status == _kernels.SIMPLEX_UNBOUNDED:
        return LpOutcome(Status.UNBOUNDED, iterations=iterations)
    x = extract()
    _check_witness(lp, x)
    return LpOutcome(Status.OPTIMAL, x=x, value=float(lp.objective @ x), iterations=iterations)


def _check_witness(lp: LinearProgram, x: np.ndarray) -> None:
    viol = lp.violation(x)
    scale = 1.0 + float(np.max(np.abs(x), initial=0.0))
    if viol > FEAS_TOL * scale:
        raise NumericalBreakdown(f"simplex witness violates a constraint by {viol:.3g}")


def feasible(constraints: Sequence[tuple], bounds=None, n_vars: int | None = None) -> LpOutcome:
    """Phase-1 feasibility query over ``(a, relation, b)`` rows.

    Returns a FEASIBLE outcome carrying a witness ``x``, or INFEASIBLE.
    """
    if n_vars is None:
        if constraints:
            n_vars = len(constraints[0][0])
        elif bounds is not None:
            n_vars = len(bounds)
        else:
            raise ValueError("cannot infer the number of variables")
    lp = LinearProgram.from_rows(np.zeros(n_vars), list(constraints), bounds)
    return solve(lp)
