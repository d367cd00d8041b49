import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2diffusion.polynomial import Poly, binomial_half, inverse_distance_taylor, monomials

small = st.floats(-0.5, 0.5, allow_nan=False)


def random_poly(rng, nvars=3, degree=3):
    coeffs = {}
    for d in range(degree + 1):
        for m in monomials(nvars, d):
            coeffs[m] = rng.normal()
    return Poly(nvars, degree, coeffs)


def test_monomial_counts():
    assert len(monomials(4, 2)) == 10 and len(monomials(4, 3)) == 20


def test_binomial_half():
    # (1 + s)^(-1/2) = 1 - s/2 + 3 s^2/8 - 5 s^3/16
    assert [binomial_half(n) for n in range(4)] == [1.0, -0.5, 0.375, -0.3125]


@settings(max_examples=30, deadline=None)
@given(small, small, small)
def test_product_matches_values_up_to_truncation(x, y, z):
    rng = np.random.default_rng(1)
    p, q = random_poly(rng, 3, 1), random_poly(rng, 3, 1)
    # degree-1 factors have a degree-2 product; keep degree 2
    p2, q2 = Poly(3, 2, p.coeffs), Poly(3, 2, q.coeffs)
    assert (p2 * q2)(x, y, z) == pytest.approx(p(x, y, z) * q(x, y, z), abs=1e-12)


def test_truncation_drops_high_terms():
    x = Poly.variable(1, 3, 0)
    assert (x * x * x * x).coeffs == {}


def test_diff_lowers_degree():
    x, y = Poly.variable(2, 3, 0), Poly.variable(2, 3, 1)
    p = x * x * y + 2.0 * y
    d = p.diff(0)
    assert d.degree == 2 and d.coefficient(1, 1) == 2.0 and d.coefficient(0, 1) == 0.0


def test_compose_against_direct_evaluation():
    rng = np.random.default_rng(2)
    p = random_poly(rng, 2, 3)
    lin = [Poly.linear([0.3, -0.2, 0.5], 3, const=0.0), Poly.linear([0.1, 0.4, -0.6], 3)]
    c = p.compose(lin)
    for w in rng.uniform(-1e-2, 1e-2, (5, 3)):
        u = 0.3 * w[0] - 0.2 * w[1] + 0.5 * w[2]
        v = 0.1 * w[0] + 0.4 * w[1] - 0.6 * w[2]
        assert c(*w) == pytest.approx(p(u, v), abs=1e-14)


@pytest.mark.parametrize("a,b", [(0.7, 0.0), (-0.3, 0.4), (1.2, -0.5)])
def test_inverse_distance_taylor(a, b):
    p = inverse_distance_taylor(a, b, 4)
    rho = math.hypot(a, b)
    for h in (1e-2, 5e-3):
        u, v = 0.6 * h, -0.8 * h
        err = abs(p(u, v) - 1.0 / math.hypot(a + u, b + v))
        # remainder is fifth order in the offset
        assert err < 50 * (h / rho) ** 5 / rho
