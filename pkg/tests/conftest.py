import math

import mpmath
import numpy as np
import pytest
from hypothesis import strategies as st

from c3msv import make_params


def exact_amplitude(r1, r2, theta1, theta2, n, l, dps=40):
    """A(n, l) straight from the closed form with exact factorials."""
    with mpmath.workdps(dps):
        r1, r2 = mpmath.mpf(r1), mpmath.mpf(r2)
        r = mpmath.sqrt(r1 ** 2 + r2 ** 2)
        if r == 0:
            return complex(1.0) if n == l == 0 else 0j
        t = mpmath.tanh(r)
        value = (
            (-1) ** (n + l)
            * mpmath.expj(n * mpmath.mpf(theta1) + l * mpmath.mpf(theta2))
            * (r1 / r * t) ** n
            * (r2 / r * t) ** l
            * mpmath.sqrt(mpmath.factorial(n + l) / (mpmath.factorial(n) * mpmath.factorial(l)))
            / mpmath.cosh(r)
        )
        return complex(value)


def random_params(rng, r_max=1.5):
    """Magnitude uniform in [0, r_max], direction uniform in the (r1, r2) quadrant."""
    r = rng.uniform(0.0, r_max)
    phi = rng.uniform(0.0, math.pi / 2)
    return make_params(r * math.cos(phi), r * math.sin(phi),
                       rng.uniform(0, 2 * math.pi), rng.uniform(0, 2 * math.pi))


magnitudes = st.floats(min_value=0.0, max_value=1.2, allow_nan=False)
phases = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False)
params_strategy = st.builds(make_params, magnitudes, magnitudes, phases, phases)


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


@pytest.fixture
def symmetric():
    return make_params(0.5, 0.5, 0.0, 0.0)


@pytest.fixture
def symmetric_pi():
    return make_params(0.5, 0.5, math.pi, math.pi)
