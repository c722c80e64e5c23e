"""Compiled kernels agree with their numpy counterparts."""

import numpy as np
import pytest

from coordetect import _kernels as K
from coordetect import lp, moo

pytestmark = pytest.mark.skipif(K.numba is None, reason="numba not installed")


def power_problem(rng, M=2, N=2):
    P = rng.uniform(0.2, 1.0, (M, N))
    Q = rng.uniform(0.5, 1.0, M)
    mu = rng.dirichlet(np.ones(M))
    alpha = rng.uniform(0.1, 1.1, N)
    return alpha, P, Q, mu


class TestParity:
    @pytest.mark.parametrize("seed", range(10))
    def test_psi(self, seed):
        rng = np.random.default_rng(seed)
        alpha = rng.uniform(0.1, 1.1, (6, 2))
        eps = rng.normal(0, 0.1, (50, 3, 6, 2))
        assert K.psi_jit(alpha, eps) == pytest.approx(K.psi_np(alpha, eps), abs=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    def test_project_budget(self, seed):
        rng = np.random.default_rng(seed)
        y = rng.normal(0, 2, 6)
        a = rng.uniform(0.1, 1.1, 6)
        x = K.project_budget_jit(y, a)
        assert x == pytest.approx(K.project_budget_np(y, a), abs=1e-12)
        assert np.all(x >= 0) and a @ x <= 1 + 1e-12

    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("mode", [0, 1])
    def test_grid(self, seed, mode):
        alpha, P, Q, mu = power_problem(np.random.default_rng(seed))
        target = np.array([0.05, 0.05])
        a = K.grid_jit(alpha, P, Q, mu, 20, mode, target, 1e-9)
        b = K.grid_np(alpha, P, Q, mu, 20, mode, target, 1e-9)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("seed", range(6))
    def test_pga(self, seed):
        rng = np.random.default_rng(seed)
        alpha, P, Q, mu = power_problem(rng)
        a = np.tile(alpha, 2)
        z0 = rng.uniform(0, 1, 4)
        zj, fj, _, cj = K.pga_jit(z0, a, P, Q, mu, 1e-10, 1000, 1e8)
        zn, fn, _, cn = K.pga_np(z0, a, P, Q, mu, 1e-10, 1000, 1e8)
        assert fj == pytest.approx(fn, rel=1e-8)
        assert zj == pytest.approx(zn, abs=1e-6)

    @pytest.mark.parametrize("seed", range(15))
    def test_simplex(self, seed, monkeypatch):
        rng = np.random.default_rng(seed)
        n, m = 4, 5
        prog = lp.LinearProgram(rng.normal(size=n), rng.normal(size=(m, n)), ("<=",) * m,
                                rng.uniform(0, 2, m), -3.0, 3.0)
        monkeypatch.setattr(K, "simplex_loop", K.simplex_loop_jit)
        a = lp.solve(prog)
        monkeypatch.setattr(K, "simplex_loop", K.simplex_loop_np)
        b = lp.solve(prog)
        assert a.status == b.status and a.iterations == b.iterations
        assert a.value == pytest.approx(b.value, abs=1e-10)

    def test_selection_follows_environment(self):
        import os
        want = os.environ.get("COORDETECT_NO_JIT", "0") != "1"
        assert K.USE_JIT == want
        assert (K.psi is K.psi_jit) == want


def test_scalarized_solution_is_backend_independent(monkeypatch):
    prob = moo.ScalarizedProblem(moo.example_utilities()[1:], [0.5, 0.5], [0.4, 0.9])
    monkeypatch.setattr(K, "pga", K.pga_jit)
    a = moo.solve_scalarized(prob, seed=3)
    monkeypatch.setattr(K, "pga", K.pga_np)
    b = moo.solve_scalarized(prob, seed=3)
    assert a == pytest.approx(b, abs=1e-8)
