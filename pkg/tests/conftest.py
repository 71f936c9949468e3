import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncmac.manifolds import Constellation, ManifoldKind, crandn, random_constellation

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

KINDS = list(ManifoldKind)


def rng_for(seed):
    return np.random.default_rng(seed)


def random_stiefel(rng, T, M):
    Q, R = np.linalg.qr(crandn(rng, (T, M)))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def small_constellation(kind, seed, T=4, M=1, sizes=(2, 2)):
    return random_constellation(kind, T, M, sizes, np.random.default_rng(seed))


def max_rel(a, b):
    """Worst absolute entry difference over a set, divided by the largest reference entry."""
    num = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y)))) for x, y in zip(a, b))
    den = max(max(float(np.max(np.abs(y))) for y in b), 1e-12)
    return num / den


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=KINDS, ids=lambda k: k.value)
def kind(request):
    return request.param


def orthogonal_pair_constellation(T=4):
    e = np.eye(T, dtype=complex)
    return Constellation((np.stack([e[:, :1], e[:, 1:2]]),))


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail=""):
    """Print and keep one PASS/FAIL line for the terminal summary."""
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
