import math

import numpy as np
import pytest

from l2diffusion.equilibria import (
    HILL_L2_X,
    build_phi,
    center_basis_vector,
    equilibrium,
    find_libration_L2,
    hill_phi_closed_form,
    linearize,
    phi_residuals,
    unstable_direction,
)
from l2diffusion.models import Circular, EllipticFirstOrder, Hill, hill_transform, vector_field

R7 = math.sqrt(7.0)
HILL_ALPHA1 = math.sqrt(1 + 2 * R7)
HILL_OMEGA2 = math.sqrt(2 * R7 - 1)
MODELS = [Hill(), Circular(1e-3), Circular(1e-5), Circular(0.4253863522e-2)]
IDS = ["hill", "mu1e-3", "mu1e-5", "mu2"]


def fd_jacobian(model, p, h=1e-6):
    A = np.zeros((4, 4))
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        A[:, j] = (vector_field(model, p + e) - vector_field(model, p - e)) / (2 * h)
    return A


def test_hill_l2_location():
    loc = find_libration_L2(Hill()).location
    assert np.allclose(loc, [HILL_L2_X, 0, 0, HILL_L2_X], atol=1e-12)


def test_circular_l2_hill_image():
    mu = 1e-4
    img = hill_transform(mu, find_libration_L2(Circular(mu)).location)
    assert abs(img[0] - HILL_L2_X) < 0.05


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_l2_is_a_root(model):
    loc = find_libration_L2(model).location
    assert np.max(np.abs(vector_field(model, loc))) <= 1e-12


def test_l2_lies_between_primaries():
    mu = 0.01
    x = find_libration_L2(Circular(mu)).location[0]
    assert mu - 1 < x < mu
    assert x - (mu - 1) == pytest.approx((mu / 3) ** (1 / 3), rel=0.1)


def test_elliptic_model_shares_equilibrium():
    a = find_libration_L2(Circular(1e-3)).location
    b = find_libration_L2(EllipticFirstOrder(1e-3, 0.05)).location
    assert np.array_equal(a, b)


def test_deterministic():
    a, b = equilibrium(Circular(1e-3)), equilibrium(Circular(1e-3))
    assert np.array_equal(a.location, b.location) and np.array_equal(a.Phi, b.Phi)


def test_hill_linearization_matrix():
    A = linearize(Hill(), [HILL_L2_X, 0, 0, HILL_L2_X])
    expected = np.array([[0, 1, 1, 0], [-1, 0, 0, 1], [8, 0, 0, 1], [0, -4, -1, 0]], dtype=float)
    assert np.allclose(A, expected, atol=1e-12)


def test_hill_eigenvalues(hill_eq):
    assert hill_eq.alpha1 == pytest.approx(HILL_ALPHA1, abs=1e-13)
    assert hill_eq.omega2 == pytest.approx(HILL_OMEGA2, abs=1e-13)
    ev = np.sort_complex(np.linalg.eigvals(hill_eq.linearization))
    ref = np.sort_complex(np.array([HILL_ALPHA1, -HILL_ALPHA1, 1j * HILL_OMEGA2, -1j * HILL_OMEGA2]))
    assert np.allclose(ev, ref, atol=1e-12)


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_linearization_matches_differences_and_is_traceless(model):
    p = find_libration_L2(model).location + np.array([1e-3, 2e-3, -1e-3, 3e-3])
    A = linearize(model, p)
    assert np.allclose(A, fd_jacobian(model, p), atol=1e-6)
    assert abs(np.trace(A)) < 1e-14


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_phi_constraints(model):
    eq = equilibrium(model)
    canon, real = phi_residuals(eq.Phi)
    assert canon <= 1e-10 and real <= 1e-10


@pytest.mark.parametrize("model", MODELS, ids=IDS)
def test_phi_diagonalizes(model):
    eq = equilibrium(model)
    D = np.linalg.solve(eq.Phi, eq.linearization @ eq.Phi)
    lam = np.diag([eq.alpha1, eq.alpha2, -eq.alpha1, -eq.alpha2])
    assert np.allclose(D, lam, atol=1e-9)


def test_hill_phi_matches_closed_form_column(hill_eq):
    ref = hill_phi_closed_form()
    for j in range(4):
        a, b = hill_eq.Phi[:, j], ref[:, j]
        # collinearity: |a^H b| = |a| |b|
        resid = 1 - abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
        assert resid <= 1e-10


@pytest.mark.parametrize("phase,stretch", [(0.7, 1.0), (0.0, 2.5), (2.0, 0.3)])
def test_residual_freedom_keeps_constraints(hill_eq, phase, stretch):
    eq = build_phi(Hill(), hill_eq, phase=phase, stretch=stretch)
    canon, real = phi_residuals(eq.Phi)
    assert canon <= 1e-10 and real <= 1e-10


def test_center_basis_vector_is_real(hill_eq):
    v = center_basis_vector(hill_eq.Phi)
    assert np.max(np.abs(v.imag)) <= 1e-10


def test_center_basis_vector_eigen_relation(hill_eq):
    Phi, a2 = hill_eq.Phi, hill_eq.alpha2
    lhs = hill_eq.linearization @ center_basis_vector(Phi)
    rhs = Phi @ np.array([0, a2, 0, -a2 * 1j])
    assert np.allclose(lhs, rhs, atol=1e-9)


def test_center_basis_vector_is_linear(hill_eq):
    Phi2 = hill_eq.Phi.copy()
    Phi2[:, 1] *= 2
    Phi2[:, 3] *= 2
    assert np.allclose(center_basis_vector(Phi2), 2 * center_basis_vector(hill_eq.Phi))


def test_unstable_direction(hill_eq):
    v = unstable_direction(hill_eq)
    assert np.linalg.norm(v) == pytest.approx(1.0)
    assert np.allclose(hill_eq.linearization @ v, hill_eq.alpha1 * v, atol=1e-12)


def test_spectrum_tends_to_hill():
    gaps = []
    for mu in (1e-3, 1e-6, 1e-9):
        eq = equilibrium(Circular(mu))
        # time scale in Hill units is unchanged, so the exponents converge directly
        gaps.append((abs(eq.alpha1 - HILL_ALPHA1), abs(eq.omega2 - HILL_OMEGA2)))
    gaps = np.array(gaps)
    assert np.all(np.diff(gaps[:, 0]) < 0) and np.all(np.diff(gaps[:, 1]) < 0)
    # corrections are of order mu^(1/3)
    assert gaps[-1].max() < 2 * (1e-9) ** (1 / 3)
