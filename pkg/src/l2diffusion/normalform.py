"""Cubic expansion in the eigenbasis, the twist coefficient a22 and h2.

In the diagonalising coordinates ``w = (x1, x2, y1, y2)`` with
``state = L2 + Phi w`` the field reads

    x_nu' =  alpha_nu x_nu + f_nu(w),    y_nu' = -alpha_nu y_nu + g_nu(w).

Only degrees two and three of ``f_nu, g_nu`` are needed for a22.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .equilibria import EquilibriumData, center_basis_vector, equilibrium, hamiltonian_hessian, phi_residuals
from .models import Circular, Hill, Model
from .polynomial import Poly, inverse_distance_taylor

IMAG_TOL = 1e-6


class ImaginaryResidualError(ArithmeticError):
    pass


@dataclass
class CubicVectorField:
    components: list[Poly]  # four polynomials in w, degrees 1..3
    alpha1: float
    alpha2: complex
    linear_residual: float = 0.0
    constant_residual: float = 0.0

    def f(self, nu: int, i: int, j: int, k: int, l: int) -> complex:
        return self.components[nu - 1].coefficient(i, j, k, l)

    def g(self, nu: int, i: int, j: int, k: int, l: int) -> complex:
        return self.components[nu + 1].coefficient(i, j, k, l)

    def __call__(self, w) -> np.ndarray:
        return np.array([c(*w) for c in self.components])


@dataclass
class TwistResult:
    a22: float
    mu_scaled: float | None
    diagnostics: dict = field(default_factory=dict)


def _potential_taylor(model: Model, x0: float, y0: float, degree: int) -> Poly:
    """Taylor polynomial of Omega at ``(x0, y0)`` in the offsets ``(u, v)``."""
    u = Poly.variable(2, degree, 0, shift=x0)
    v = Poly.variable(2, degree, 1, shift=y0)
    if isinstance(model, Hill):
        return inverse_distance_taylor(x0, y0, degree) + 1.5 * u * u
    mu = model.mu
    return (
        0.5 * (u * u + v * v)
        + (1.0 - mu) * inverse_distance_taylor(x0 - mu, y0, degree)
        + mu * inverse_distance_taylor(x0 + 1.0 - mu, y0, degree)
    )


def field_taylor(model: Model, p, degree: int = 3) -> list[Poly]:
    """Taylor polynomials of the four field components at ``p`` in ``(dx, dy, dpx, dpy)``."""
    x0, y0, px0, py0 = (float(c) for c in p)
    om = _potential_taylor(model, x0, y0, degree + 1)
    ox, oy = om.diff(0), om.diff(1)
    # lift (u, v) polynomials into the 4-variable ring
    lift = [Poly.variable(4, degree, 0), Poly.variable(4, degree, 1)]
    ox4, oy4 = ox.compose(lift), oy.compose(lift)
    dx, dy, dpx, dpy = (Poly.variable(4, degree, i) for i in range(4))
    vx = dpx + dy + (px0 + y0)
    vy = dpy - dx + (py0 - x0)
    return [vx, vy, vy + ox4, -1.0 * vx + oy4]


def expand_cubic(model: Model, eq_data: EquilibriumData) -> CubicVectorField:
    """Taylor coefficients of ``w -> Phi^{-1} F(L2 + Phi w)`` through degree 3."""
    Phi = eq_data.Phi
    Phi_inv = np.linalg.inv(Phi)
    F = field_taylor(model, eq_data.location, 3)
    subs = [Poly.linear(list(Phi[i]), 3) for i in range(4)]
    Fw = [c.compose(subs) for c in F]
    comps = []
    for i in range(4):
        acc = Poly(4, 3)
        for j in range(4):
            acc = acc + Fw[j] * Phi_inv[i, j]
        comps.append(acc)

    lin = np.array([[c.coefficient(*np.eye(4, dtype=int)[j]) for j in range(4)] for c in comps])
    diag = np.diag([eq_data.alpha1, eq_data.alpha2, -eq_data.alpha1, -eq_data.alpha2])
    const = max(abs(c.coefficient(0, 0, 0, 0)) for c in comps)
    # drop degree 0/1 numerical noise: the linear part is diagonal by construction
    cleaned = []
    for i, c in enumerate(comps):
        nonlin = Poly(4, 3, {k: v for k, v in c.coeffs.items() if sum(k) >= 2})
        e = [0, 0, 0, 0]
        e[i] = 1
        cleaned.append(nonlin + Poly(4, 3, {tuple(e): diag[i, i]}))
    return CubicVectorField(
        components=cleaned,
        alpha1=eq_data.alpha1,
        alpha2=eq_data.alpha2,
        linear_residual=float(np.max(np.abs(lin - diag))),
        constant_residual=float(const),
    )


def conjugated_field(model: Model, eq_data: EquilibriumData, w) -> np.ndarray:
    """Direct evaluation of ``Phi^{-1} F(L2 + Phi w)`` (complex arithmetic)."""
    Phi = eq_data.Phi
    z = eq_data.location + Phi @ np.asarray(w, dtype=complex)
    return np.linalg.solve(Phi, _complex_field(model, z))


def _complex_field(model: Model, z) -> np.ndarray:
    x, y, px, py = z
    if isinstance(model, Hill):
        r3 = (x * x + y * y) ** 1.5
        ox, oy = 3.0 * x - x / r3, -y / r3
    else:
        mu = model.mu
        d1, d2 = x - mu, x + 1.0 - mu
        c1 = (1.0 - mu) / (d1 * d1 + y * y) ** 1.5
        c2 = mu / (d2 * d2 + y * y) ** 1.5
        ox = x - c1 * d1 - c2 * d2
        oy = y - (c1 + c2) * y
    return np.array([px + y, py - x, py - x + ox, -(px + y) + oy])


def twist_a22(cvf: CubicVectorField, mu: float | None = None) -> TwistResult:
    """Twist coefficient from the degree-2/3 coefficients of the diagonal field."""
    f, g = cvf.f, cvf.g
    bracket = (
        -f(2, 1, 1, 0, 0) * f(1, 0, 1, 0, 1)
        - f(2, 0, 1, 1, 0) * g(1, 0, 1, 0, 1)
        + f(2, 0, 0, 1, 1) * g(1, 0, 2, 0, 0)
        - f(2, 0, 2, 0, 0) * f(2, 0, 1, 0, 1)
        + 2.0 * g(2, 0, 2, 0, 0) * f(2, 0, 0, 0, 2)
        + f(2, 1, 0, 0, 1) * f(1, 0, 2, 0, 0)
        - g(2, 0, 1, 0, 1) * f(2, 0, 1, 0, 1)
    )
    raw = bracket / cvf.alpha2 + f(2, 0, 2, 0, 1)
    scale = max(abs(raw), 1e-300)
    rel_imag = abs(raw.imag) / scale
    if rel_imag > IMAG_TOL:
        raise ImaginaryResidualError(f"a22 has relative imaginary part {rel_imag:.2e}: {raw}")
    a22 = float(raw.real)
    return TwistResult(
        a22=a22,
        mu_scaled=None if mu is None else mu ** (2.0 / 3.0) * a22,
        diagnostics={
            "imag_residual": rel_imag,
            "raw": complex(raw),
            "linear_residual": cvf.linear_residual,
            "constant_residual": cvf.constant_residual,
        },
    )


def resonant_cubic_coefficient(cvf: CubicVectorField) -> complex:
    """Coefficient of ``x2**2 y2`` in the ``x2`` equation after a near-identity
    change ``w = xi + h(xi)`` removes every quadratic term.

    With all quadratic terms non-resonant the cubic field becomes
    ``F3 + DF2 . h`` with ``h_i,m = F2_i,m / (<m, lambda> - lambda_i)``.  The
    Lapunov frequency then obeys ``d omega / d(r**2) = -Re(c)``.
    """
    lam = np.array([cvf.alpha1, cvf.alpha2, -cvf.alpha1, -cvf.alpha2])
    quad = [c.homogeneous(2) for c in cvf.components]
    h = []
    for i in range(4):
        h.append(Poly(4, 3, {m: v / (np.dot(m, lam) - lam[i]) for m, v in quad[i].coeffs.items()}))
    cubic = cvf.components[1].homogeneous(3)
    for j in range(4):
        # re-wrap the derivative at degree 3 so the product keeps cubic terms
        cubic = cubic + Poly(4, 3, quad[1].diff(j).coeffs) * h[j]
    return complex(cubic.coefficient(0, 2, 0, 1))


def normal_form_frequency_slope(model: Model) -> float:
    """``d omega / dC`` of the Lapunov family from :func:`resonant_cubic_coefficient`."""
    eq = equilibrium(model)
    c = resonant_cubic_coefficient(expand_cubic(eq.model, eq))
    return -c.real / energy_coefficient_h2(eq.model, eq)


def twist_for_model(model: Model, **phi_kwargs) -> TwistResult:
    eq = equilibrium(model, **phi_kwargs)
    res = twist_a22(expand_cubic(eq.model, eq), None if isinstance(eq.model, Hill) else eq.model.mu)
    canon, real = phi_residuals(eq.Phi)
    res.diagnostics.update(phi_canonical=canon, phi_reality=real)
    return res


def twist_for_mu(mu: float) -> TwistResult:
    return twist_for_model(Circular(mu))


def hill_twist_closed_form() -> float:
    return 9.0 ** (1.0 / 3.0) / 224.0 * (102.0 * np.sqrt(7.0) - 57.0)


def energy_coefficient_h2(model: Model, eq_data: EquilibriumData) -> float:
    """``h2 = 1/2 D2H(L2)(v, v)`` with ``v = Phi (0, 1, 0, i)``."""
    v = center_basis_vector(eq_data.Phi)
    h2 = 0.5 * v @ hamiltonian_hessian(model, eq_data.location) @ v
    if abs(h2.imag) > 1e-9:
        raise ImaginaryResidualError(f"h2 has imaginary part {h2.imag:.2e}")
    return float(h2.real)


def predicted_frequency(a22: float, omega2: float, h2: float, dC: float) -> float:
    """Lapunov orbit angular frequency at energy offset ``dC`` to leading order."""
    return omega2 + frequency_slope(a22, h2) * dC


def frequency_slope(a22: float, h2: float) -> float:
    """``d omega / dC = a22 / h2``."""
    return a22 / h2


__all__ = [
    "CubicVectorField",
    "TwistResult",
    "expand_cubic",
    "twist_a22",
    "twist_for_model",
    "twist_for_mu",
    "energy_coefficient_h2",
    "predicted_frequency",
    "frequency_slope",
    "conjugated_field",
    "resonant_cubic_coefficient",
    "normal_form_frequency_slope",
    "hill_twist_closed_form",
]
