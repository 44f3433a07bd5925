import pytest
from hypothesis import HealthCheck, settings

from padbench.synth import SynthConfig, synth_manifest

settings.register_profile(
    "padbench",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("padbench")

SHIPPED_SEED = 97


@pytest.fixture(scope="session")
def tenth_scale_manifest():
    """10%-scale synthetic manifest shared by partition and metric tests."""
    return synth_manifest(SynthConfig(seed=SHIPPED_SEED, scale=0.1))
