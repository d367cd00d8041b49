import math

import numpy as np
import pytest

from l2diffusion.equilibria import center_basis_vector, equilibrium
from l2diffusion.models import Circular, Hill
from l2diffusion.normalform import (
    CubicVectorField,
    conjugated_field,
    energy_coefficient_h2,
    expand_cubic,
    frequency_slope,
    hill_twist_closed_form,
    normal_form_frequency_slope,
    predicted_frequency,
    resonant_cubic_coefficient,
    twist_a22,
    twist_for_model,
    twist_for_mu,
)
from l2diffusion.orbits import frequency_slope_from_family, lapunov
from l2diffusion.polynomial import Poly

HILL_A22 = 9 ** (1 / 3) * (102 * math.sqrt(7) - 57) / 224
TABLE1 = {
    2: (0.4253863522e-2, 74.94775503, 1.967649155),
    3: (0.6752539971e-3, 255.7208206, 1.968237635),
    4: (0.2192936884e-3, 541.7397907, 1.970039000),
    10: (0.92907436e-5, 4466.568296, 1.973971883),
}


@pytest.fixture(scope="module")
def hill_cvf(hill_eq):
    return expand_cubic(Hill(), hill_eq)


@pytest.mark.parametrize("model", [Hill(), Circular(1e-3)], ids=["hill", "mu1e-3"])
def test_cubic_field_structure(model):
    eq = equilibrium(model)
    cvf = expand_cubic(model, eq)
    assert cvf.linear_residual <= 1e-10
    assert cvf.constant_residual <= 1e-12


def test_cubic_field_matches_conjugated_field_hill(hill_eq, hill_cvf, rng):
    for _ in range(20):
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        w *= 1e-3 / np.linalg.norm(w)
        assert np.max(np.abs(hill_cvf(w) - conjugated_field(Hill(), hill_eq, w))) <= 1e-10


@pytest.mark.parametrize("mu", [1e-3, 0.4253863522e-2])
def test_cubic_field_remainder_is_fourth_order(mu, rng):
    model = Circular(mu)
    eq = equilibrium(model)
    cvf = expand_cubic(model, eq)
    # offsets on the Hill length scale mu^(1/3)
    scale = mu ** (1 / 3)
    for _ in range(5):
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        w /= np.linalg.norm(w)
        errs = [np.max(np.abs(cvf(h * w) - conjugated_field(model, eq, h * w))) for h in (2e-3 * scale, 1e-3 * scale)]
        assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.1)
        assert errs[1] <= 1e-10 * scale


def test_hill_twist_closed_form(hill_cvf):
    assert hill_twist_closed_form() == pytest.approx(HILL_A22, rel=1e-15)
    assert twist_a22(hill_cvf).a22 == pytest.approx(HILL_A22, rel=1e-8)
    assert HILL_A22 == pytest.approx(1.9767, abs=1e-4)


@pytest.mark.parametrize("k", sorted(TABLE1))
def test_table1_rows(k):
    mu, a22, scaled = TABLE1[k]
    res = twist_for_mu(mu)
    assert res.a22 == pytest.approx(a22, rel=1e-3)
    assert res.mu_scaled == pytest.approx(scaled, abs=1e-3)
    assert res.diagnostics["imag_residual"] <= 1e-8


def test_scaled_twist_increases_to_hill_value():
    vals = [twist_for_mu(TABLE1[k][0]).mu_scaled for k in sorted(TABLE1)]
    assert np.all(np.diff(vals) > 0)
    assert 0 < HILL_A22 - vals[-1] < 0.01


@pytest.mark.parametrize("phase,stretch", [(0.9, 1.0), (2.1, 0.4), (0.0, 3.0)])
@pytest.mark.parametrize("model", [Hill(), Circular(0.6752539971e-3)], ids=["hill", "mu3"])
def test_twist_invariant_under_phi_freedom(model, phase, stretch):
    ref = twist_for_model(model).a22
    assert twist_for_model(model, phase=phase, stretch=stretch).a22 == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("model", [Hill(), Circular(1e-3)], ids=["hill", "mu1e-3"])
def test_h2_is_real_positive(model):
    eq = equilibrium(model)
    v = center_basis_vector(eq.Phi)
    raw = 0.5 * v @ (-(np.array([[0, 0, 1, 0], [0, 0, 0, 1], [-1, 0, 0, 0], [0, -1, 0, 0]])) @ eq.linearization) @ v
    assert abs(raw.imag) <= 1e-9
    assert energy_coefficient_h2(model, eq) > 0


def test_h2_tends_to_hill_value(hill_eq):
    ref = energy_coefficient_h2(Hill(), hill_eq)
    gaps = [abs(energy_coefficient_h2(Circular(mu), equilibrium(Circular(mu))) - ref) for mu in (1e-4, 1e-5)]
    assert gaps[1] < gaps[0] < 3 * (1e-4) ** (1 / 3) * ref


def test_h2_against_lapunov_family(hill_eq):
    # energy offset against squared x-amplitude for two family members
    h2 = energy_coefficient_h2(Hill(), hill_eq)
    v0 = abs(center_basis_vector(hill_eq.Phi)[0].real)
    orbits = [lapunov(Hill(), dc, tol=1e-13) for dc in (1e-6, 4e-6)]
    amp2 = np.array([o.amplitude**2 for o in orbits])
    dC = np.array([o.C - hill_eq.C2 for o in orbits])
    slope = np.polyfit(np.concatenate([[0.0], amp2]), np.concatenate([[0.0], dC]), 2)[1]
    assert slope == pytest.approx(h2 / v0**2, rel=0.05)


def test_predicted_frequency():
    assert predicted_frequency(2.0, 1.5, 4.0, 0.0) == 1.5
    assert predicted_frequency(2.0, 1.5, 4.0, 0.1) == pytest.approx(1.55)
    assert frequency_slope(2.0, 4.0) == 0.5


def test_twist_nonzero_for_hill(hill_eq, hill_cvf):
    assert frequency_slope(twist_a22(hill_cvf).a22, energy_coefficient_h2(Hill(), hill_eq)) != 0


# --- resonant coefficient oracle --------------------------------------------


def _oscillator_field(om, lam, force):
    """Diagonal-coordinate field of a decoupled saddle plus a 1-dof center ``q'' = -om^2 q + force(q)``."""
    s = 1 / np.sqrt(2 * om)
    a, c = s, -1j * om * s
    Phi = np.zeros((4, 4), complex)
    Phi[0, 0] = Phi[2, 2] = 1
    Phi[1, 1], Phi[1, 3], Phi[3, 1], Phi[3, 3] = a, -1j * np.conj(a), c, -1j * np.conj(c)
    W = [Poly.variable(4, 3, i) for i in range(4)]
    q1, q2, p1, p2 = [sum((Phi[i, j] * W[j] for j in range(4)), Poly(4, 3)) for i in range(4)]
    F = [lam * q1, p2, -lam * p1, -(om**2) * q2 + force(q2)]
    inv = np.linalg.inv(Phi)
    comps = [sum((F[j] * inv[i, j] for j in range(4)), Poly(4, 3)) for i in range(4)]
    return CubicVectorField(comps, lam, -1j * om)


def test_resonant_coefficient_quadratic_oscillator():
    # frequency shift of q'' + w^2 q + e q^2 = 0 is -5 e^2 I / (6 w^4)
    om, eps = 1.3, 0.7
    c = resonant_cubic_coefficient(_oscillator_field(om, 2.0, lambda q: -eps * q * q))
    assert c == pytest.approx(5 * eps**2 / (6 * om**4), rel=1e-12)


def test_resonant_coefficient_cubic_oscillator():
    # frequency shift of q'' + w^2 q + b q^3 = 0 is +3 b I / (4 w^2)
    om, beta = 1.3, 0.9
    c = resonant_cubic_coefficient(_oscillator_field(om, 2.0, lambda q: -beta * q * q * q))
    assert c == pytest.approx(-3 * beta / (4 * om**2), rel=1e-12)


def test_normal_form_slope_matches_lapunov_family():
    measured = frequency_slope_from_family(Hill())
    assert normal_form_frequency_slope(Hill()) == pytest.approx(measured, rel=1e-3)
