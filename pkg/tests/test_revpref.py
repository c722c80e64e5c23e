"""Tests for the Afriat feasibility test, reconstruction and the relaxation statistic."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from coordetect import lp, moo, revpref, sim
from coordetect.core import InteractionDataset, NoiseModel, SimplexWeights, rng_stream

from oracles import WARP_PHI, cycle_minimax_brute


def concave_pair_config(T=10):
    utils = (moo.UtilitySpec.power([0.5, 0.5]), moo.UtilitySpec.power([0.3, 0.6]))
    return sim.ScenarioConfig(M=2, T=T, utilities=utils)


def random_dataset(seed, T=6, M=2, N=2):
    r = rng_stream(seed, 4)
    return InteractionDataset(r.uniform(0.1, 1.1, (T, N)), r.uniform(0, 1, (T, M, N)))


class TestDetection:
    def test_single_observation_is_coordinated(self):
        v = revpref.detect_coordination(InteractionDataset([[0.3, 0.7]], [[[1.0, 2.0], [0.5, 0.1]]]))
        assert v.coordinated

    def test_warp_cycle(self, warp_dataset):
        gaps = revpref.expenditure_gaps(warp_dataset)[0]
        assert gaps[0, 1] < 0 and gaps[1, 0] < 0
        v = revpref.detect_coordination(warp_dataset)
        assert not v.coordinated and v.failing_agents == (0,)

    @pytest.mark.parametrize("seed", range(100))
    def test_simulated_two_agent_data_is_coordinated(self, seed):
        cfg = sim.ScenarioConfig(M=2, T=10, utilities=tuple(moo.example_utilities()[1:]))
        assert revpref.detect_coordination(sim.generate_dataset(cfg, seed)).coordinated

    def test_certificate_satisfies_inequalities(self, example_dataset):
        cert = revpref.detect_coordination(example_dataset).certificate
        assert cert.max_violation(example_dataset) <= lp.FEAS_TOL
        assert np.all(cert.lam >= 1 - 1e-9) and np.all(cert.u >= 1 - 1e-9)

    @given(st.integers(0, 10_000), st.floats(0.1, 10.0))
    def test_probe_rescaling_keeps_verdict(self, seed, c):
        d = random_dataset(seed, T=4)
        scaled = InteractionDataset(d.probes * c, d.responses / c)
        assert revpref.detect_coordination(d).coordinated == revpref.detect_coordination(scaled).coordinated

    @pytest.mark.parametrize("seed", range(40))
    def test_verdict_agrees_with_relaxation_level(self, seed):
        d = random_dataset(seed, T=int(3 + seed % 5))
        assert revpref.detect_coordination(d).coordinated == \
            (revpref.relaxation_statistic(d).overall <= lp.FEAS_TOL)


class TestReconstruction:
    def test_own_piece_is_attained(self, example_dataset):
        cert = revpref.detect_coordination(example_dataset).certificate
        for U in revpref.reconstruct_utilities(cert, example_dataset):
            vals = U(U.anchors)
            assert vals == pytest.approx(U.u, abs=1e-7)

    def test_monotone_and_concave(self, example_dataset):
        cert = revpref.detect_coordination(example_dataset).certificate
        rng = np.random.default_rng(0)
        for U in revpref.reconstruct_utilities(cert, example_dataset):
            x = rng.uniform(0, 2, (500, 2))
            y = x + rng.uniform(0, 1, (500, 2))
            assert np.all(U(y) >= U(x) - 1e-12)
            assert np.all(U(0.5 * (x + y)) >= 0.5 * (U(x) + U(y)) - 1e-12)
            assert U(np.zeros(2)) <= U(np.array([0.3, 0.2]))

    def test_csv_export(self, example_dataset):
        cert = revpref.detect_coordination(example_dataset).certificate
        U = revpref.reconstruct_utilities(cert, example_dataset)[1]
        lines = U.to_csv(5).splitlines()
        assert lines[0] == "beta1,beta2,U" and len(lines) == 26
        assert lines[1].startswith("0,0,")
        with pytest.raises(ValueError):
            U.grid(1)

    def test_mismatched_certificate(self, example_dataset, warp_dataset):
        cert = revpref.detect_coordination(example_dataset).certificate
        with pytest.raises(revpref.CertificateMismatch):
            revpref.reconstruct_utilities(cert, warp_dataset)
        bad = revpref.AfriatCertificate(cert.u[:, ::-1] * 50, cert.lam)
        with pytest.raises(revpref.CertificateMismatch):
            revpref.reconstruct_utilities(bad, example_dataset)

    @pytest.mark.parametrize("seed", range(4))
    def test_joint_certificate_rationalizes_observed_allocation(self, seed):
        cfg = concave_pair_config(T=6)
        d = sim.generate_dataset(cfg, seed)
        cert = revpref.joint_certificate(d, cfg.weights)
        assert cert is not None
        utils = [moo.UtilitySpec.custom(U, 2) for U in revpref.reconstruct_utilities(cert, d)]
        for t in range(d.T):
            prob = moo.ScalarizedProblem(utils, cfg.weights, d.probes[t])
            best = prob.objective(moo.grid_oracle(prob, 0.02))
            assert best <= prob.objective(d.responses[t]) + 1e-4

    def test_joint_certificate_rejects_warp(self, warp_dataset):
        assert revpref.joint_certificate(warp_dataset, [1.0]) is None


class TestRelaxation:
    def test_clean_data_level_is_nonpositive(self, example_dataset):
        assert revpref.relaxation_statistic(example_dataset).overall <= 1e-6

    def test_warp_level(self, warp_dataset):
        gaps = revpref.expenditure_gaps(warp_dataset)[0]
        phi = revpref.relaxation_statistic(warp_dataset).overall
        assert phi >= min(abs(gaps[0, 1]), abs(gaps[1, 0])) / 2 > 0
        assert phi == pytest.approx(WARP_PHI, abs=1e-6)

    def test_cold_and_warm_bisection_agree(self, warp_dataset):
        a = revpref.relaxation_statistic(warp_dataset, warm_start=False).overall
        b = revpref.relaxation_statistic(warp_dataset).overall
        assert a == pytest.approx(b, abs=1e-6)

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_minimax_cycle_value(self, seed):
        d = random_dataset(seed, T=5)
        gaps = revpref.expenditure_gaps(d)
        res = revpref.relaxation_statistic(d)
        for i in range(d.M):
            brute = cycle_minimax_brute(gaps[i])
            assert revpref.minimax_cycle_relaxation(gaps[i]) == pytest.approx(brute, abs=1e-12)
            assert res.per_agent[i] == pytest.approx(brute, abs=1e-5)
            assert res.per_agent[i] >= brute - 1e-9

    @pytest.mark.parametrize("seed", range(20))
    def test_multipliers_feasible_at_level(self, seed):
        d = random_dataset(seed, T=5)
        res = revpref.relaxation_statistic(d)
        gaps = revpref.expenditure_gaps(d)
        for i in range(d.M):
            u, lam = res.u[:, i], res.lam[:, i]
            lhs = u[None, :] - u[:, None] - lam[:, None] * (gaps[i] + res.per_agent[i])
            np.fill_diagonal(lhs, 0.0)
            assert lhs.max() <= lp.FEAS_TOL * (1 + np.abs(np.r_[u, lam]).max())

    @pytest.mark.parametrize("seed", range(20))
    def test_noisy_level_bounded_by_realized_noise(self, seed):
        cfg = sim.example_config("equal", sigma=0.05)
        d = sim.generate_dataset(cfg, seed)
        res = revpref.relaxation_statistic(d.base)
        eps = d.noise_draws
        for i in range(d.M):
            proj = np.einsum("tn,sn->ts", d.base.probes, eps[:, i])
            realized = (np.diag(proj)[:, None] - proj)[~np.eye(d.T, dtype=bool)].max()
            assert res.per_agent[i] <= realized + 1e-6

    @given(st.integers(0, 10_000), st.floats(-0.2, 0.2))
    def test_lipschitz_in_one_response(self, seed, delta):
        d = random_dataset(seed, T=4)
        r = d.responses.copy()
        r[1, 0] = np.maximum(r[1, 0] + delta, 0.0)
        moved = np.abs(r - d.responses).max()
        bound = moved * np.abs(d.probes).sum(axis=1).max()
        a = revpref.relaxation_statistic(d).overall
        b = revpref.relaxation_statistic(InteractionDataset(d.probes, r)).overall
        assert abs(a - b) <= bound + 2e-5

    def test_single_epoch(self):
        res = revpref.relaxation_statistic(InteractionDataset([[1.0, 1.0]], [[[0.2, 0.3]]]))
        assert np.isfinite(res.overall)
        assert revpref.minimax_cycle_relaxation(np.zeros((1, 1))) == -np.inf
