import numpy as np
import pytest

from cfolab import (ChannelProfile, SystemConfig, reference_config,
                    reference_profile)
from cfolab.training import OFFSETS_A, OFFSETS_B


@pytest.fixture(scope="session")
def toy_cfg() -> SystemConfig:
    """Small config for fast structural tests: N=64, P=8, Q=8.

    Offsets (1, 6) keep every mirror pair of diagonal indices usable (only
    index 4 is blind); offset differences of Q/2 would alias the likelihood.
    """
    return SystemConfig(n_subcarriers=64, pilot_len=8, n_tx=2, n_rx=2,
                        cp_len=10, chan_len=8, offsets=(1, 6))


@pytest.fixture(scope="session")
def toy_profile() -> ChannelProfile:
    return ChannelProfile(delays=(0, 2, 7), powers_db=(0.0, -3.0, -6.0))


@pytest.fixture(scope="session")
def ref_cfg_a() -> SystemConfig:
    return reference_config(OFFSETS_A)


@pytest.fixture(scope="session")
def ref_cfg_b() -> SystemConfig:
    return reference_config(OFFSETS_B)


@pytest.fixture(scope="session")
def ref_profile() -> ChannelProfile:
    return reference_profile()


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
