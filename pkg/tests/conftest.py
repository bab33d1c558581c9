import numpy as np
import pytest

from relativistic_zk.coding.syndrome import gen_no_instance, gen_yes_instance
from relativistic_zk.config import SMALL_NO_INSTANCE, PRESETS, ProtocolConfig, SessionSeeds
from relativistic_zk.field.fq import FieldParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_yes(rng):
    """(instance, witness) for n=16, k=8, w=3"""
    return gen_yes_instance(16, 8, 3, rng)


@pytest.fixture
def small_params():
    return FieldParams.for_code_length(16)


@pytest.fixture(scope="session")
def small_no():
    n, k, w = SMALL_NO_INSTANCE
    return gen_no_instance(n, k, w, np.random.default_rng(7))


@pytest.fixture(scope="session")
def small_no_params():
    return FieldParams.for_code_length(SMALL_NO_INSTANCE[0])


@pytest.fixture
def small_config():
    """Scenario-1 timing on the n=16 YES class, 30 rounds, reproducible seeds"""
    return ProtocolConfig(n=16, k=8, w=3, q_exponent=None, R=30, lam=0.1, preset=PRESETS["scenario1"],
                          seeds=SessionSeeds.from_master("test-session"))
