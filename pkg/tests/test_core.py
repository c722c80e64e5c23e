"""Tests for domain types, validation, serialization and random streams."""

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from coordetect.core import (DatasetError, DimensionMismatch, EmptyDataset, InteractionDataset,
                             Maneuver, NegativeEntry, NoiseModel, NoisyDataset, ProbeSignal,
                             SimplexWeights, dumps_dataset, load_dataset, loads_dataset, rng_stream,
                             save_dataset, validate_dataset)


class TestValidation:
    def test_minimal_instance(self):
        d = InteractionDataset([[0.5, 0.5]], [[[1.0, 1.0]]])
        assert (d.T, d.M, d.N) == (1, 1, 2)

    def test_mixed_probe_lengths(self):
        with pytest.raises(DimensionMismatch):
            validate_dataset(([[0.5, 0.5], [0.1, 0.2, 0.3]], [[[1, 1]], [[1, 1]]]))

    def test_response_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            InteractionDataset([[0.5, 0.5]], [[[1.0, 1.0, 1.0]]])

    def test_negative_response(self):
        with pytest.raises(NegativeEntry):
            InteractionDataset([[0.5, 0.5]], [[[1.0, -0.1]]])

    def test_negative_response_allowed_for_noisy_observations(self):
        d = InteractionDataset([[0.5, 0.5]], [[[1.0, -0.1]]], nonnegative=False)
        assert d.responses[0, 0, 1] == -0.1

    def test_negative_probe(self):
        with pytest.raises(NegativeEntry):
            InteractionDataset([[-0.5, 0.5]], [[[1.0, 1.0]]])

    def test_all_zero_probe_rejected(self):
        with pytest.raises(DatasetError):
            InteractionDataset([[0.0, 0.0]], [[[1.0, 1.0]]])
        with pytest.raises(DatasetError):
            ProbeSignal([0.0, 0.0])

    def test_probe_may_have_zero_entries(self):
        assert ProbeSignal([0.0, 1.0]).values[1] == 1.0

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            validate_dataset(([], []))
        with pytest.raises(EmptyDataset):
            InteractionDataset(np.zeros((2, 2)) + 1, np.zeros((2, 0, 2)))

    def test_non_finite(self):
        with pytest.raises(DatasetError):
            InteractionDataset([[np.nan, 1.0]], [[[1.0, 1.0]]])

    def test_validate_is_idempotent(self, warp_dataset):
        once = validate_dataset(warp_dataset)
        assert validate_dataset(once) == once == warp_dataset

    def test_arrays_are_read_only(self, warp_dataset):
        with pytest.raises(ValueError):
            warp_dataset.responses[0, 0, 0] = 9.0

    def test_maneuver_rejects_negative(self):
        with pytest.raises(NegativeEntry):
            Maneuver([0.1, -1.0])


class TestWeightsAndNoise:
    def test_simplex(self):
        assert SimplexWeights.normalized([0.4, 0.4, 0.3]).mu.sum() == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ValueError):
            SimplexWeights([0.4, 0.4, 0.3])

    def test_strict(self):
        with pytest.raises(ValueError):
            SimplexWeights([1.0, 0.0], strict=True)
        assert SimplexWeights.uniform(4).strict

    def test_noise_model(self):
        assert np.all(NoiseModel(sigma=0.0).sample(rng_stream(1), (3, 2)) == 0)
        with pytest.raises(ValueError):
            NoiseModel(sigma=-1.0)
        with pytest.raises(ValueError):
            NoiseModel(kind="laplace", sigma=1.0)


class TestRandomStreams:
    def test_repeatable(self):
        assert np.array_equal(rng_stream(7, 0).random(5), rng_stream(7, 0).random(5))

    def test_stream_separation(self):
        assert not np.array_equal(rng_stream(7, 0).random(5), rng_stream(7, 1).random(5))

    def test_seed_separation(self):
        assert not np.array_equal(rng_stream(7, 0).random(5), rng_stream(8, 0).random(5))


datasets = st.integers(1, 5).flatmap(lambda T: st.integers(1, 3).flatmap(lambda M: st.integers(1, 3).flatmap(
    lambda N: st.tuples(
        arrays(np.float64, (T, N), elements=st.floats(0.01, 1e3, allow_subnormal=False)),
        arrays(np.float64, (T, M, N), elements=st.floats(0.0, 1e3, allow_subnormal=False))))))


class TestSerialization:
    @given(datasets)
    def test_round_trip_is_bit_exact(self, arrs):
        d = InteractionDataset(*arrs)
        back = loads_dataset(dumps_dataset(d))
        assert np.array_equal(back.probes, d.probes) and np.array_equal(back.responses, d.responses)

    def test_noisy_round_trip(self, tmp_path):
        base = InteractionDataset([[1.0, 2.0], [0.5, 0.5]], [[[0.1, -0.2]], [[0.3, 0.0]]], nonnegative=False)
        d = NoisyDataset(base, NoiseModel(sigma=0.05))
        save_dataset(d, tmp_path / "d.json")
        back = load_dataset(tmp_path / "d.json")
        assert isinstance(back, NoisyDataset)
        assert back.noise_model.sigma == 0.05
        assert back.base == base

    def test_schema_keys(self, warp_dataset):
        doc = json.loads(dumps_dataset(warp_dataset))
        assert set(doc) == {"T", "M", "N", "probes", "responses", "noise"}
        assert doc["noise"] is None

    def test_header_mismatch(self, warp_dataset):
        doc = json.loads(dumps_dataset(warp_dataset))
        doc["M"] = 4
        with pytest.raises(DimensionMismatch):
            loads_dataset(json.dumps(doc))

    def test_malformed(self):
        with pytest.raises(DatasetError):
            loads_dataset("{not json")
        with pytest.raises(DatasetError):
            loads_dataset("[1, 2]")
        with pytest.raises(DatasetError):
            loads_dataset('{"T": 1}')
