import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from l2diffusion.equilibria import equilibrium, find_libration_L2
from l2diffusion.models import (
    make_deviation_rhs,
    make_rhs,
    J,
    Circular,
    EllipticFirstOrder,
    G_partials,
    G_t,
    G_tt,
    G_tt_hill,
    Hill,
    SingularityError,
    hamiltonian,
    hamiltonian_kepler_exact,
    hill_energy_shift,
    hill_transform,
    jacobi_constant,
    kepler_primaries,
    omega,
    perturbation_f,
    perturbation_f_tt,
    perturbation_G,
    solve_kepler,
    symmetry_S,
    vector_field,
)

from conftest import random_states

MU = 0.0123
HILL_L2 = np.array([3 ** (-1 / 3), 0.0, 0.0, 3 ** (-1 / 3)])

coord = st.floats(-1.5, 1.5, allow_nan=False)
states = st.tuples(coord, coord, coord, coord).map(np.array)
times = st.floats(-10.0, 10.0, allow_nan=False)


def _clear(s, mu=MU, r=0.05):
    return np.hypot(s[0] - mu, s[1]) > r and np.hypot(s[0] + 1 - mu, s[1]) > r


def fd_gradient(f, s, h=1e-6):
    g = np.zeros(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = h
        g[i] = (f(s + e) - f(s - e)) / (2 * h)
    return g


# --- hamiltonian -------------------------------------------------------------


def test_hill_energy_at_l2():
    assert hamiltonian(Hill(), HILL_L2) == pytest.approx(-1.5 * 3 ** (1 / 3), abs=1e-14)


def test_circular_energy_at_l2_is_minus_omega():
    loc = find_libration_L2(Circular(0.01)).location
    # independent potential evaluation at the root
    x = loc[0]
    om = 0.5 * x * x + 0.99 / abs(x - 0.01) + 0.01 / abs(x + 0.99)
    assert hamiltonian(Circular(0.01), loc) == pytest.approx(-om, abs=1e-13)


@settings(max_examples=50, deadline=None)
@given(states, times)
def test_elliptic_zero_e_matches_circular(s, t):
    if not _clear(s):
        return
    assert hamiltonian(EllipticFirstOrder(MU, 0.0), s, t) == hamiltonian(Circular(MU), s)
    assert np.array_equal(vector_field(EllipticFirstOrder(MU, 0.0), s, t), vector_field(Circular(MU), s))


def test_singularity_guard():
    with pytest.raises(SingularityError):
        hamiltonian(Circular(MU), [MU - 1 + 1e-8, 0, 0, 0])
    with pytest.raises(SingularityError):
        vector_field(Hill(), [1e-8, 0, 0, 0])


# --- vector field ------------------------------------------------------------


def test_vector_field_vanishes_at_equilibria():
    assert np.max(np.abs(vector_field(Hill(), HILL_L2))) < 1e-15
    loc = find_libration_L2(Circular(MU)).location
    assert np.max(np.abs(vector_field(Circular(MU), loc))) < 1e-12


@pytest.mark.parametrize(
    "model", [Circular(MU), Circular(1e-5), Hill(), EllipticFirstOrder(MU, 0.05)], ids=["c", "c-small", "hill", "ell"]
)
def test_vector_field_is_hamiltonian(model, rng):
    mu = getattr(model, "mu", None)
    for s in random_states(rng, 20, mu=mu):
        t = 0.7
        grad = fd_gradient(lambda z: hamiltonian(model, z, t), s)
        assert np.allclose(vector_field(model, s, t), J @ grad, atol=1e-7, rtol=1e-7)


def test_vector_field_error_is_second_order(rng):
    s = random_states(rng, 1, mu=MU)[0]
    exact = vector_field(Circular(MU), s)
    errs = [np.max(np.abs(J @ fd_gradient(lambda z: hamiltonian(Circular(MU), z), s, h) - exact)) for h in (1e-2, 5e-3)]
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)


def test_velocity_recovery(rng):
    for s in random_states(rng, 5, mu=MU):
        v = vector_field(Circular(MU), s)
        assert v[0] == pytest.approx(s[2] + s[1]) and v[1] == pytest.approx(s[3] - s[0])


# --- Jacobi ------------------------------------------------------------------


def test_jacobi_is_minus_twice_energy(rng):
    for s in random_states(rng, 10, mu=MU):
        assert jacobi_constant(MU, s) + 2 * hamiltonian(Circular(MU), s) == pytest.approx(0.0, abs=1e-12)


def test_jacobi_at_l2():
    loc = find_libration_L2(Circular(MU)).location
    assert jacobi_constant(MU, loc) == pytest.approx(2 * omega(MU, loc[0], 0.0), abs=1e-12)


def test_jacobi_conserved_along_flow():
    from l2diffusion.integrate import propagate

    s0 = np.array([0.5, 0.0, 0.0, 0.9])
    tr = propagate(Circular(MU), s0, 0.0, 10.0, 1e-12)
    f = np.array([jacobi_constant(MU, s) for s in tr.states])
    # drift budget of the integrator: 100 * tol * elapsed
    assert np.max(np.abs(f - f[0])) < 100 * 1e-12 * 10.0


# --- perturbation ------------------------------------------------------------


@settings(max_examples=50, deadline=None)
@given(coord, coord, st.floats(-1, 1))
def test_f_at_zero_time(x, y, a):
    assert perturbation_f(x, y, a, 0.0) == pytest.approx(2 * x * a - a * a, abs=1e-12)
    assert perturbation_f_tt(x, y, a, 0.0) == pytest.approx(-4 * x * a + a * a, abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(states, times)
def test_G_periodic(s, t):
    if not _clear(s):
        return
    tp = t + 2 * math.pi
    assert perturbation_G(MU, s, tp) == pytest.approx(perturbation_G(MU, s, t), abs=1e-12)
    a, b = G_partials(MU, s, t), G_partials(MU, s, tp)
    assert np.allclose(a, b, atol=1e-12, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(states, times)
def test_G_time_parities(s, t):
    if not _clear(s):
        return
    r = symmetry_S(s)
    assert G_t(MU, r[0], r[1], -t) == pytest.approx(-G_t(MU, s[0], s[1], t), abs=1e-11)
    assert G_tt(MU, r[0], r[1], -t) == pytest.approx(G_tt(MU, s[0], s[1], t), abs=1e-11)


def test_G_partials_against_differences(rng):
    for s in random_states(rng, 10, mu=MU):
        t = 1.3
        gp = G_partials(MU, s, t)
        h = 1e-6
        g = lambda z, tt: perturbation_G(MU, z, tt)
        ex = np.array([h, 0, 0, 0])
        ey = np.array([0, h, 0, 0])
        assert gp.dx == pytest.approx((g(s + ex, t) - g(s - ex, t)) / (2 * h), rel=1e-6, abs=1e-7)
        assert gp.dy == pytest.approx((g(s + ey, t) - g(s - ey, t)) / (2 * h), rel=1e-6, abs=1e-7)
        assert gp.dt == pytest.approx((g(s, t + h) - g(s, t - h)) / (2 * h), rel=1e-6, abs=1e-7)
        k = 1e-4
        fd2 = (g(s, t + k) - 2 * g(s, t) + g(s, t - k)) / k**2
        assert gp.dtt == pytest.approx(fd2, rel=1e-5, abs=1e-5)
        assert gp.dt == pytest.approx(G_t(MU, s[0], s[1], t))
        assert gp.dtt == pytest.approx(G_tt(MU, s[0], s[1], t))


def test_G_tt_hill_is_second_derivative_of_cos_cubed():
    x, y, t, h = 0.4, -0.3, 0.9, 1e-4
    r3 = math.hypot(x, y) ** 3
    fd = (math.cos(t + h) ** 3 - 2 * math.cos(t) ** 3 + math.cos(t - h) ** 3) / h**2 / r3
    assert G_tt_hill(x, y, t) == pytest.approx(fd, rel=1e-6)


# --- Kepler ------------------------------------------------------------------


def test_kepler_residual():
    E, res = solve_kepler(0.3, 1.7)
    assert res <= 1e-14
    assert E - 0.3 * math.sin(E) == pytest.approx(1.7, abs=1e-14)


@pytest.mark.parametrize("t", [0.0, 0.5, 2.0, 5.0])
def test_kepler_circular_poses(t):
    p = kepler_primaries(MU, 0.0, t)
    assert np.allclose(p.big, [MU, 0]) and np.allclose(p.small, [MU - 1, 0])


@pytest.mark.parametrize("t", [0.5, 2.0])
def test_kepler_first_order_ellipse(t):
    e = 1e-3
    # first-order ellipse with periapsis at t = 0: r = 1 - e cos t, true anomaly t + 2 e sin t
    r, nu = 1 - e * math.cos(t), t + 2 * e * math.sin(t)
    rel_syn = r * np.array([math.cos(nu - t), math.sin(nu - t)])
    p = kepler_primaries(MU, e, t)
    assert np.allclose(p.big, MU * rel_syn, atol=5 * e * e)
    assert np.allclose(p.small, (MU - 1) * rel_syn, atol=5 * e * e)


def test_kepler_exact_hamiltonian_reduces_at_zero_e(rng):
    for s in random_states(rng, 5, mu=MU):
        assert hamiltonian_kepler_exact(MU, 0.0, s, 0.8) == pytest.approx(hamiltonian(Circular(MU), s), abs=1e-13)


# --- symmetry ----------------------------------------------------------------


@given(states)
def test_S_involution(s):
    assert np.array_equal(symmetry_S(symmetry_S(s)), s)


def test_S_preserves_energy(rng):
    for s in random_states(rng, 10, mu=MU):
        assert hamiltonian(Circular(MU), symmetry_S(s)) == pytest.approx(hamiltonian(Circular(MU), s), abs=1e-13)


def test_S_maps_solutions_to_reversed_solutions():
    from l2diffusion.integrate import propagate

    model = Circular(MU)
    s0 = np.array([0.5, 0.1, 0.05, 0.9])
    fwd = propagate(model, s0, 0.0, 3.0, 1e-13)
    # r(t) = S q(3 - t) solves the system and starts at S q(3)
    rev = propagate(model, symmetry_S(fwd.states[-1]), 0.0, 3.0, 1e-13)
    for t in (0.5, 1.5, 3.0):
        assert np.allclose(symmetry_S(rev(t)), fwd(3.0 - t), atol=1e-9)


# --- Hill coordinates --------------------------------------------------------


@given(states, st.floats(1e-9, 0.4))
def test_hill_transform_roundtrip(s, mu):
    back = hill_transform(mu, hill_transform(mu, s, "to"), "from")
    assert np.allclose(back, s, atol=1e-12)


def test_hill_image_of_l2():
    mu = 1e-4
    img = hill_transform(mu, find_libration_L2(Circular(mu)).location)
    assert np.max(np.abs(img - HILL_L2)) < 3 * mu ** (1 / 3)


@pytest.mark.parametrize("mu", [1e-4, 1e-5])
def test_hill_energy_scaling(mu):
    loc = find_libration_L2(Circular(mu)).location
    errs = []
    for off in ([0, 0, 0, 0], [2e-3, 1e-3, -1e-3, 5e-4], [-1e-3, 2e-3, 1e-3, 0]):
        s = loc + np.array(off) * mu ** (1 / 3)
        lhs = mu ** (-2 / 3) * hamiltonian(Circular(mu), s) + hill_energy_shift(mu)
        errs.append(abs(lhs - hamiltonian(Hill(), hill_transform(mu, s))))
    assert max(errs) < 5 * mu ** (1 / 3)


@pytest.mark.parametrize("model", [Hill(), Circular(0.01), Circular(1e-6)])
def test_deviation_field_matches_difference(model, rng):
    eq = equilibrium(model)
    dev = make_deviation_rhs(model, eq.location)
    f = make_rhs(model)
    scale = 1.0 if isinstance(model, Hill) else model.mu ** (1 / 3)
    for _ in range(5):
        d = rng.normal(size=4) * 1e-2 * scale
        ref = f(0.0, eq.location + d) - f(0.0, eq.location)
        assert np.allclose(dev(0.0, d), ref, rtol=1e-9, atol=1e-12 * np.abs(ref).max())
    # far below roundoff of the plain field the deviation stays linear
    d = rng.normal(size=4)
    assert np.allclose(dev(0.0, 1e-12 * d), 1e-3 * dev(0.0, 1e-9 * d), rtol=1e-6)
