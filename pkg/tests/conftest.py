import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(autouse=True)
def fresh_caches():
    # Keep memoized item-side optima from leaking between tests.
    from fairrec.optimizer import clear_caches

    clear_caches()
    yield


@pytest.fixture
def worked_instance():
    """Mirrored two-type population, v = (3, 2, 1), alpha = 1/2, ten users."""
    from fairrec.populations import gen_two_type

    return gen_two_type(np.array([3.0, 2.0, 1.0]), 0.5, 10)


def random_positive_matrix(rng, m: int, n: int) -> np.ndarray:
    return rng.uniform(0.05, 1.0, size=(m, n))
