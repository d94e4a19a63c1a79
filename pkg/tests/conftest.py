import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from phfl.config import parse_config

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def small_raw(**overrides):
    """A fast configuration: 16 UEs, a small MLP and few rounds."""
    raw = {
        "seed": 3,
        "topology": {"mbs": 2, "sbs_per_mbs": 2, "vcs_per_sbs": 2, "ues_per_vc": 2},
        "schedule": {"kappa0": 2, "kappa1": 2, "kappa2": 1, "kappa3": 1, "rho": 1,
                     "global_rounds": 3},
        "learner": {"hidden": 8, "n_features": 8, "n_classes": 4, "train_samples": 480,
                    "test_samples": 120, "eta": 0.05},
        "optimizer": {"t_th_s": 0.05},
    }
    for key, value in overrides.items():
        if isinstance(value, dict):
            raw.setdefault(key, {}).update(value)
        else:
            raw[key] = value
    return raw


@pytest.fixture
def small_config():
    return parse_config(small_raw())


@pytest.fixture
def gen():
    return np.random.default_rng(12345)
