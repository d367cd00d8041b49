"""The collinear point L2, its linearisation and the symplectic eigenbasis Phi.

L2 here is the collinear point adjacent to the small primary on the side of
the large primary; its image in Hill coordinates is ``(3**(-1/3), 0, 0, 3**(-1/3))``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

from .models import (
    J,
    Circular,
    Hill,
    Model,
    hamiltonian,
    omega_gradient,
    omega_hessian,
    omega_hill_gradient,
    omega_hill_hessian,
)

HILL_L2_X = 3.0 ** (-1.0 / 3.0)
PHI_TOL = 1e-10


class BracketError(RuntimeError):
    pass


class PhiConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class EquilibriumData:
    model: Model
    location: np.ndarray
    C2: float
    alpha1: float | None = None
    omega2: float | None = None
    linearization: np.ndarray | None = None
    Phi: np.ndarray | None = None
    #: center eigenvalue paired with the second column of Phi, ``+-1j * omega2``
    alpha2: complex | None = None


def _reduce(model: Model) -> Model:
    # EllipticFirstOrder shares the circular equilibrium
    if isinstance(model, Hill):
        return model
    return Circular(model.mu)


def l2_bracket(mu: float) -> tuple[float, float]:
    """Interval of x strictly between the primaries that contains L2."""
    scale = mu ** (1.0 / 3.0)
    return mu - 1.0 + 0.1 * scale, mu - 1.0 + min(3.0 * scale, 0.9)


def find_libration_L2(model: Model) -> EquilibriumData:
    """Locate L2 by bracketed root finding on the x axis."""
    model = _reduce(model)
    if isinstance(model, Hill):
        lo, hi = 0.1, 2.0
        fun = lambda x: omega_hill_gradient(x, 0.0)[0]
    else:
        lo, hi = l2_bracket(model.mu)
        fun = lambda x: omega_gradient(model.mu, x, 0.0)[0]
    flo, fhi = fun(lo), fun(hi)
    if flo * fhi > 0:
        raise BracketError(f"no sign change of Omega_x on [{lo}, {hi}]")
    x = brentq(fun, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    loc = np.array([x, 0.0, 0.0, x])
    return EquilibriumData(model=model, location=loc, C2=hamiltonian(model, loc))


def linearize(model: Model, p) -> np.ndarray:
    """Analytic Jacobian of the vector field at ``p``."""
    x, y = float(p[0]), float(p[1])
    if isinstance(model, Hill):
        hess = omega_hill_hessian(x, y)
    else:
        hess = omega_hessian(model.mu, x, y)
    oxx, oxy, oyy = hess[0, 0], hess[0, 1], hess[1, 1]
    return np.array(
        [
            [0.0, 1.0, 1.0, 0.0],
            [-1.0, 0.0, 0.0, 1.0],
            [oxx - 1.0, oxy, 0.0, 1.0],
            [oxy, oyy - 1.0, -1.0, 0.0],
        ]
    )


def hamiltonian_hessian(model: Model, p) -> np.ndarray:
    """Hessian of H in ``(x, y, px, py)``; ``A = J @ hessian``."""
    return -J @ linearize(model, p)


def _spectrum(A: np.ndarray) -> tuple[float, float]:
    # H = kinetic - Omega gives lambda^4 + (4 - Oxx - Oyy) lambda^2 + det(Hess Omega) = 0
    oxx = A[2, 0] + 1.0
    oyy = A[3, 1] + 1.0
    oxy = A[2, 1]
    b = 4.0 - oxx - oyy
    c = oxx * oyy - oxy * oxy
    disc = b * b - 4.0 * c
    if disc <= 0:
        raise PhiConstructionError("complex lambda^2: not a saddle x center point")
    sq = math.sqrt(disc)
    if b < 0:
        l2_plus = (-b + sq) / 2.0
        l2_minus = c / l2_plus
    else:
        l2_minus = (-b - sq) / 2.0
        l2_plus = c / l2_minus
    if not (l2_plus > 0 and l2_minus < 0):
        raise PhiConstructionError(f"spectrum is not saddle x center: lambda^2 = {l2_plus}, {l2_minus}")
    return math.sqrt(l2_plus), math.sqrt(-l2_minus)


def _eigenvector(A: np.ndarray, lam: complex) -> np.ndarray:
    oxx = A[2, 0] + 1.0
    oxy = A[2, 1]
    den = 2.0 * lam + oxy
    if abs(den) < 1e-14:
        w, v = np.linalg.eig(A)
        return v[:, np.argmin(abs(w - lam))] / v[0, np.argmin(abs(w - lam))]
    b = (lam * lam - oxx) / den
    # momenta from velocities: px = xdot - y, py = ydot + x
    return np.array([1.0, b, lam - b, lam * b + 1.0], dtype=complex)


def build_phi(model: Model, eq_point: EquilibriumData, phase: float = 0.0, stretch: float = 1.0):
    """Canonical, reality-normalised eigenbasis ordered (a1, a2, -a1, -a2).

    ``phase`` and ``stretch`` move along the residual freedom
    ``x1 -> stretch*x1, y1 -> y1/stretch, x2 -> e^{i phase} x2, y2 -> e^{-i phase} y2``
    which preserves both constraints; the defaults give the canonical choice.
    """
    A = linearize(model, eq_point.location)
    alpha1, omega2 = _spectrum(A)
    u1 = _eigenvector(A, alpha1).real
    u3 = _eigenvector(A, -alpha1).real
    # the Krein sign decides which of +-i*omega2 admits a canonical real basis
    alpha2 = 1j * omega2
    u2 = _eigenvector(A, alpha2)
    if ((u2 @ J @ np.conj(u2)) / 1j).real < 0:
        alpha2 = -alpha2
        u2 = _eigenvector(A, alpha2)

    q = u1 @ J @ u3
    # first components of the saddle pair opposite in sign when possible
    sign3 = -1.0 if q < 0 else 1.0
    s = 1.0 / math.sqrt(abs(q))
    v1 = s * stretch * u1
    v3 = sign3 * s / stretch * u3

    k = (u2 @ J @ np.conj(u2)) / 1j
    if abs(k.imag) > 1e-12 * abs(k) or k.real <= 0:
        raise PhiConstructionError(f"center eigenvector has wrong Krein sign: u^T J conj(u) / i = {k}")
    c = cmath.exp(1j * phase) / math.sqrt(k.real)
    v2 = c * u2
    v4 = -1j * np.conj(v2)

    Phi = np.column_stack([v1, v2, v3, v4])
    canon, real = phi_residuals(Phi)
    if canon > PHI_TOL or real > PHI_TOL:
        raise PhiConstructionError(f"Phi constraints violated: canonical {canon:.2e}, reality {real:.2e}")
    return replace(eq_point, alpha1=alpha1, omega2=omega2, alpha2=alpha2, linearization=A, Phi=Phi)


def phi_residuals(Phi: np.ndarray) -> tuple[float, float]:
    """Max-norm residuals of ``Phi^T J Phi = J`` and ``J_z Phi = Phi J_w``."""
    canon = np.max(np.abs(Phi.T @ J @ Phi - J))
    # J_z Phi w = conj(Phi) conj(w);  Phi J_w w = Phi M conj(w)
    M = np.array([[1, 0, 0, 0], [0, 0, 0, 1j], [0, 0, 1, 0], [0, 1j, 0, 0]])
    real = np.max(np.abs(np.conj(Phi) - Phi @ M))
    return float(canon), float(real)


def equilibrium(model: Model, **phi_kwargs) -> EquilibriumData:
    """L2 with spectrum and Phi filled in."""
    eq = find_libration_L2(model)
    return build_phi(eq.model, eq, **phi_kwargs)


def center_basis_vector(Phi: np.ndarray) -> np.ndarray:
    """``Phi (0, 1, 0, i)``: leading-order direction of the Lapunov family."""
    return Phi @ np.array([0.0, 1.0, 0.0, 1j])


def unstable_direction(eq: EquilibriumData) -> np.ndarray:
    """Unit real eigenvector of ``+alpha1``."""
    v = eq.Phi[:, 0].real
    return v / np.linalg.norm(v)


def hill_phi_closed_form() -> np.ndarray:
    """Closed-form Hill eigenbasis with the canonical coefficient choice."""
    r7 = math.sqrt(7.0)
    a1 = math.sqrt(1.0 + 2.0 * r7)
    a2 = 1j * math.sqrt(2.0 * r7 - 1.0)
    l1 = math.sqrt(a1 * (r7 + 4.0) / r7) / 6.0
    l2 = -l1
    beta = cmath.sqrt(1j * a2 * (r7 - 4.0) / r7) / 6.0
    bb = -1j * np.conj(beta)
    return np.array(
        [
            [l1, beta, l2, bb],
            [-9 * l1 / (a1 * (r7 + 4)), -beta * 9 / (a2 * (r7 - 4)), 9 * l2 / (a1 * (r7 + 4)), bb * 9 / (a2 * (r7 - 4))],
            [
                9 * l1 * (r7 + 3) / (a1 * (r7 + 4)),
                -beta * 9 * (r7 - 3) / (a2 * (r7 - 4)),
                -9 * l2 * (r7 + 3) / (a1 * (r7 + 4)),
                bb * 9 * (r7 - 3) / (a2 * (r7 - 4)),
            ],
            [-l1 * 2 / (3 + r7), beta * 2 / (r7 - 3), -l2 * 2 / (3 + r7), bb * 2 / (r7 - 3)],
        ],
        dtype=complex,
    )
