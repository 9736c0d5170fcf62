import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def separable_samples(n, d=5, seed=0, margin=0.1):
    """Two-class points in [-1, 1]^d labelled by a fixed random hyperplane, away from it."""
    from bandit_ensemble.streams import StreamSample

    gen = np.random.default_rng([seed, 99])
    w = np.random.default_rng(7).normal(size=d)
    w /= np.linalg.norm(w)
    out = []
    while len(out) < n:
        x = gen.uniform(-1, 1, size=d)
        s = x @ w
        if abs(s) < margin:
            continue
        out.append(StreamSample(x, int(s > 0)))
    return out


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(module.RESULTS):
        terminalreporter.write_line(module.RESULTS[key])
