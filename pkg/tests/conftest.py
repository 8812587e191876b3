import pytest

import ricean_mimo as rm


@pytest.fixture(scope="session")
def tiny_bundle():
    """Default seven-cell scenario at N=16; cheap enough to share everywhere."""
    return rm.build_bundle(rm.ScenarioConfig(N=16, mc_trials=150))


@pytest.fixture(scope="session")
def mid_bundle():
    """N=64 version of the same scenario for closed-form-vs-MC comparisons."""
    return rm.build_bundle(rm.ScenarioConfig(N=64))
