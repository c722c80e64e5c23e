import sys
import warnings
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from coordetect import sim  # noqa: E402
from coordetect.core import InteractionDataset  # noqa: E402

import oracles  # noqa: E402

settings.register_profile("repo", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture
def warp_dataset():
    probes, responses = oracles.warp_cycle()
    return InteractionDataset(probes, responses)


@pytest.fixture(scope="session")
def example_dataset():
    return sim.generate_dataset(sim.example_config("normalized"), 1)


@pytest.fixture(autouse=True)
def _quiet_nonconcave():
    from coordetect.moo import NonConcaveUtilityWarning
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonConcaveUtilityWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
