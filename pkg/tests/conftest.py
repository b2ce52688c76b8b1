import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from cfrelay.channel import NetworkConfig, sample_realization  # noqa: E402


@pytest.fixture
def fig4():
    return NetworkConfig()


def draws(cfg, n, seed):
    rng = np.random.default_rng(seed)
    return [sample_realization(cfg, rng) for _ in range(n)]
