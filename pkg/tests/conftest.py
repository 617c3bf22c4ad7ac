from fractions import Fraction

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncfun import linalg as la
from ncfun.ncalg import MatrixPoint

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def Q(rows):
    """Exact matrix from nested ints/strings."""
    return la.exact_array(rows)


def pt(*mats, exact=None):
    return MatrixPoint([np.asarray(m, dtype=object) if exact else m for m in mats], exact=exact)


def jordan(n, exact=True):
    J = la.zeros((n, n), exact)
    for i in range(n - 1):
        J[i, i + 1] = Fraction(1) if exact else 1.0
    return J


def mpow(A, k):
    out = la.eye(A.shape[0], la.is_exact(A))
    for _ in range(k):
        out = out @ A
    return out


def same(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return a.shape == b.shape and all(x == y for x, y in zip(a.ravel(), b.ravel()))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
