"""Tests for the slow- and fast-scale simulator."""

import numpy as np
import pytest

from coordetect import revpref, sim
from coordetect.core import EmptyDataset, NoisyDataset


class TestConfig:
    def test_zero_sizes_rejected(self):
        for kw in ({"M": 0}, {"T": 0}, {"N": 0}):
            with pytest.raises(EmptyDataset):
                sim.ScenarioConfig(**kw)

    def test_bad_values_rejected(self):
        with pytest.raises(ValueError):
            sim.ScenarioConfig(T=-1)
        with pytest.raises(ValueError):
            sim.ScenarioConfig(regime="chaotic")
        with pytest.raises(ValueError):
            sim.example_config("raw")

    def test_example_weights_on_simplex(self):
        for w in ("normalized", "equal"):
            mu = sim.example_config(w).weights.mu
            assert mu.sum() == pytest.approx(1.0) and np.all(mu > 0)


class TestSlowScale:
    def test_same_seed_same_data(self):
        cfg = sim.example_config("equal", sigma=0.03)
        a, b = sim.generate_dataset(cfg, 7), sim.generate_dataset(cfg, 7)
        assert np.array_equal(a.base.probes, b.base.probes)
        assert np.array_equal(a.base.responses, b.base.responses)

    def test_noise_level_leaves_clean_data_alone(self):
        cfg = sim.example_config("equal")
        clean = sim.generate_dataset(cfg, 3)
        noisy = sim.generate_dataset(cfg.with_noise(0.1), 3)
        assert isinstance(noisy, NoisyDataset)
        assert np.array_equal(noisy.clean.responses, clean.responses)
        assert np.allclose(noisy.base.responses, clean.responses + noisy.noise_draws)

    def test_coordinated_responses_spend_the_budget(self, example_dataset):
        spent = np.einsum("tn,tmn->t", example_dataset.probes, example_dataset.responses)
        assert spent == pytest.approx(np.ones(example_dataset.T), abs=1e-6)

    def test_probes_in_box(self):
        d = sim.generate_dataset(sim.example_config(T=50), 0)
        assert d.probes.min() >= 0.1 and d.probes.max() <= 1.1

    def test_independent_regime_mostly_fails_the_test(self):
        cfg = sim.example_config(regime=sim.INDEPENDENT)
        rate = np.mean([not revpref.detect_coordination(sim.generate_dataset(cfg, s)).coordinated
                        for s in range(100)])
        print(f"independent regime rejection rate: {rate:.2f}")
        assert rate >= 0.9

    @pytest.mark.parametrize("seed", range(5))
    def test_clean_core_of_noisy_data_is_coordinated(self, seed):
        d = sim.generate_dataset(sim.example_config("equal", sigma=0.05), seed)
        assert revpref.detect_coordination(d.clean).coordinated


class TestFastScale:
    def test_process_noise_covariance(self):
        cfg = sim.ScenarioConfig()
        beta = np.array([0.3, 1.7])
        run = sim.simulate_fast_scale(cfg, [2.0, 5.0], beta[None], K=100_000, seed=1)
        w = np.diff(run.states[0], axis=0)
        assert np.cov(w.T) == pytest.approx(np.diag(beta), abs=0.05 * beta.max())
        v = run.measurements[0] - run.states[0, 1:]
        assert np.var(v, axis=0) == pytest.approx([0.5, 0.2], rel=0.05)

    def test_noiseless_channel(self):
        run = sim.simulate_fast_scale(sim.ScenarioConfig(), [np.inf, np.inf], [[1.0, 1.0]], K=50)
        assert np.array_equal(run.measurements[0], run.states[0, 1:])

    def test_maneuver_recovery(self):
        beta = np.array([0.4, 1.0])
        alpha = [10.0, 10.0]
        run = sim.simulate_fast_scale(sim.ScenarioConfig(), alpha, beta[None], K=10_000, seed=5)
        est = sim.estimate_maneuver(run.measurements[0], alpha)
        assert est == pytest.approx(beta, rel=0.1)

    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            sim.simulate_fast_scale(sim.ScenarioConfig(), [1.0], [[1.0, 1.0]])
        with pytest.raises(ValueError):
            sim.estimate_maneuver(np.zeros((10, 2)), [1.0])
