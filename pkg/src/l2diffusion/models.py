"""Closed-form evaluation of the planar restricted three-body models.

Three models share one phase space ``(x, y, p_x, p_y)`` in the synodic frame
(distance between the primaries 1, period of the primaries 2*pi):

* :class:`Circular` -- the circular problem with mass parameter ``mu``;
  the mass ``1 - mu`` sits at ``(mu, 0)`` and the mass ``mu`` at ``(mu - 1, 0)``.
* :class:`Hill` -- the ``mu -> 0`` limit in coordinates centred on the small
  primary and scaled by ``mu**(-1/3)`` (additive constant dropped).
* :class:`EllipticFirstOrder` -- the circular Hamiltonian plus ``e * G``.

States are plain ``numpy`` arrays of shape ``(4,)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

#: Evaluations closer than this to a primary are rejected.
MIN_DISTANCE = 1e-6
E_MAX = 0.1

J = np.array(
    [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [-1.0, 0.0, 0.0, 0.0], [0.0, -1.0, 0.0, 0.0]]
)


class SingularityError(ValueError):
    """A state came closer to a primary than :data:`MIN_DISTANCE`."""


class KeplerError(RuntimeError):
    """Newton iteration on Kepler's equation did not converge."""


@dataclass(frozen=True)
class Circular:
    mu: float

    def __post_init__(self):
        if not 0.0 < self.mu < 0.5:
            raise ValueError(f"mu must lie in (0, 1/2), got {self.mu!r}")


@dataclass(frozen=True)
class Hill:
    pass


@dataclass(frozen=True)
class EllipticFirstOrder:
    mu: float
    e: float
    e_max: float = E_MAX

    def __post_init__(self):
        if not 0.0 < self.mu < 0.5:
            raise ValueError(f"mu must lie in (0, 1/2), got {self.mu!r}")
        if not 0.0 <= self.e <= self.e_max:
            raise ValueError(f"e must lie in [0, {self.e_max}], got {self.e!r}")


Model = Union[Circular, Hill, EllipticFirstOrder]


class PrimariesPose(NamedTuple):
    """Synodic positions of both primaries at one instant."""

    big: np.ndarray  # mass 1 - mu
    small: np.ndarray  # mass mu
    kepler_residual: float


def as_state(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if s.shape != (4,):
        raise ValueError(f"phase state must have shape (4,), got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("phase state has non-finite components")
    return s


def _guard(r: float, which: str) -> None:
    if r < MIN_DISTANCE:
        raise SingularityError(f"distance to {which} is {r:.3e} < {MIN_DISTANCE:g}")


def _distances(mu: float, x: float, y: float) -> tuple[float, float]:
    r1 = math.hypot(x - mu, y)
    r2 = math.hypot(x + 1.0 - mu, y)
    _guard(r1, "primary 1-mu")
    _guard(r2, "primary mu")
    return r1, r2


# ---------------------------------------------------------------------------
# effective potentials


def omega(mu: float, x: float, y: float) -> float:
    """Effective potential of the circular problem."""
    r1, r2 = _distances(mu, x, y)
    return 0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2


def omega_hill(x: float, y: float) -> float:
    r = math.hypot(x, y)
    _guard(r, "origin")
    return 1.0 / r + 1.5 * x * x


def omega_gradient(mu: float, x: float, y: float) -> tuple[float, float]:
    r1, r2 = _distances(mu, x, y)
    c1 = (1.0 - mu) / r1**3
    c2 = mu / r2**3
    ox = x - c1 * (x - mu) - c2 * (x + 1.0 - mu)
    oy = y - c1 * y - c2 * y
    return ox, oy


def omega_hessian(mu: float, x: float, y: float) -> np.ndarray:
    r1, r2 = _distances(mu, x, y)
    oxx = oyy = 1.0
    oxy = 0.0
    for m, dx, r in ((1.0 - mu, x - mu, r1), (mu, x + 1.0 - mu, r2)):
        r3 = r**3
        r5 = r3 * r * r
        oxx += m * (3.0 * dx * dx / r5 - 1.0 / r3)
        oyy += m * (3.0 * y * y / r5 - 1.0 / r3)
        oxy += m * 3.0 * dx * y / r5
    return np.array([[oxx, oxy], [oxy, oyy]])


def omega_hill_gradient(x: float, y: float) -> tuple[float, float]:
    r = math.hypot(x, y)
    _guard(r, "origin")
    r3 = r**3
    return 3.0 * x - x / r3, -y / r3


def omega_hill_hessian(x: float, y: float) -> np.ndarray:
    r = math.hypot(x, y)
    _guard(r, "origin")
    r3 = r**3
    r5 = r3 * r * r
    return np.array(
        [[3.0 + 3.0 * x * x / r5 - 1.0 / r3, 3.0 * x * y / r5], [3.0 * x * y / r5, 3.0 * y * y / r5 - 1.0 / r3]]
    )


# ---------------------------------------------------------------------------
# perturbation G


def _f(x, y, a, t):
    s, c = math.sin(t), math.cos(t)
    return -y * a * (3.0 * s - s**3) + x * a * (c + c**3) - a * a * c


def _f_t(x, y, a, t):
    s, c = math.sin(t), math.cos(t)
    return -y * a * (3.0 * c - 3.0 * s * s * c) + x * a * (-s - 3.0 * c * c * s) + a * a * s


def _f_tt(x, y, a, t):
    s, c = math.sin(t), math.cos(t)
    s3, c3 = math.sin(3.0 * t), math.cos(3.0 * t)
    return y * a * 2.25 * (s + s3) - x * a * 0.25 * (7.0 * c + 9.0 * c3) + a * a * c


def perturbation_f(x: float, y: float, alpha: float, t: float) -> float:
    """Helper ``f(x, y, alpha, t)`` entering the perturbation potential."""
    return _f(x, y, alpha, t)


def perturbation_f_tt(x: float, y: float, alpha: float, t: float) -> float:
    return _f_tt(x, y, alpha, t)


def perturbation_G(mu: float, s, t: float) -> float:
    """First-order eccentricity perturbation ``G(s, t)``, 2*pi periodic in ``t``."""
    x, y = float(s[0]), float(s[1])
    r1, r2 = _distances(mu, x, y)
    return (1.0 - mu) / r1**3 * _f(x, y, mu, t) + mu / r2**3 * _f(x, y, mu - 1.0, t)


class GPartials(NamedTuple):
    dx: float
    dy: float
    dt: float
    dtt: float


def G_partials(mu: float, s, t: float) -> GPartials:
    """Analytic ``(dG/dx, dG/dy, dG/dt, d2G/dt2)``."""
    x, y = float(s[0]), float(s[1])
    r1, r2 = _distances(mu, x, y)
    sn, cs = math.sin(t), math.cos(t)
    gx = gy = gt = gtt = 0.0
    for m, a, dxc, r in ((1.0 - mu, mu, x - mu, r1), (mu, mu - 1.0, x + 1.0 - mu, r2)):
        r3 = r**3
        r5 = r3 * r * r
        fv = _f(x, y, a, t)
        fx = a * (cs + cs**3)
        fy = -a * (3.0 * sn - sn**3)
        gx += m * (fx / r3 - 3.0 * dxc * fv / r5)
        gy += m * (fy / r3 - 3.0 * y * fv / r5)
        gt += m * _f_t(x, y, a, t) / r3
        gtt += m * _f_tt(x, y, a, t) / r3
    return GPartials(gx, gy, gt, gtt)


def G_t(mu: float, x: float, y: float, t: float) -> float:
    r1, r2 = _distances(mu, x, y)
    return (1.0 - mu) / r1**3 * _f_t(x, y, mu, t) + mu / r2**3 * _f_t(x, y, mu - 1.0, t)


def G_tt(mu: float, x: float, y: float, t: float) -> float:
    r1, r2 = _distances(mu, x, y)
    return (1.0 - mu) / r1**3 * _f_tt(x, y, mu, t) + mu / r2**3 * _f_tt(x, y, mu - 1.0, t)


def G_tt_hill(x: float, y: float, t: float) -> float:
    """Hill limit of ``d2G/dt2``: ``(d2/dt2 cos(t)**3) / r**3``."""
    r = math.hypot(x, y)
    _guard(r, "origin")
    # cos^3 = (3 cos t + cos 3t) / 4
    return -0.75 * (math.cos(t) + 3.0 * math.cos(3.0 * t)) / r**3


# ---------------------------------------------------------------------------
# Kepler motion of the primaries


def solve_kepler(e: float, mean_anomaly: float, maxiter: int = 50) -> tuple[float, float]:
    """Newton iteration on ``E - e sin E = M`` seeded at ``E = M``.

    Returns ``(E, residual)``.
    """
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity must lie in [0, 1), got {e!r}")
    E = mean_anomaly
    for _ in range(maxiter):
        res = E - e * math.sin(E) - mean_anomaly
        step = res / (1.0 - e * math.cos(E))
        E -= step
        if abs(step) <= 1e-16 * max(1.0, abs(E)):
            break
    else:
        raise KeplerError(f"Kepler iteration failed for e={e}, M={mean_anomaly}")
    return E, abs(E - e * math.sin(E) - mean_anomaly)


def relative_orbit(e: float, t: float) -> tuple[np.ndarray, float]:
    """Inertial relative position of the small primary's orbit, periapsis at t = 0."""
    E, res = solve_kepler(e, t)
    pos = np.array([math.cos(E) - e, math.sqrt(1.0 - e * e) * math.sin(E)])
    return pos, res


def kepler_primaries(mu: float, e: float, t: float) -> PrimariesPose:
    """Exact elliptic positions of both primaries in the uniformly rotating frame."""
    rel, res = relative_orbit(e, t)
    c, s = math.cos(t), math.sin(t)
    rot = np.array([[c, s], [-s, c]])
    rel_syn = rot @ rel
    return PrimariesPose(big=mu * rel_syn, small=(mu - 1.0) * rel_syn, kepler_residual=res)


def hamiltonian_kepler_exact(mu: float, e: float, s, t: float) -> float:
    """Rotating-frame Hamiltonian with primaries on exact Kepler ellipses."""
    x, y, px, py = (float(v) for v in s)
    pose = kepler_primaries(mu, e, t)
    r1 = math.hypot(x - pose.big[0], y - pose.big[1])
    r2 = math.hypot(x - pose.small[0], y - pose.small[1])
    _guard(r1, "primary 1-mu")
    _guard(r2, "primary mu")
    return 0.5 * ((px + y) ** 2 + (py - x) ** 2) - 0.5 * (x * x + y * y) - (1.0 - mu) / r1 - mu / r2


def kepler_first_order_G(mu: float, s, t: float) -> float:
    """First-order-in-e term of :func:`hamiltonian_kepler_exact`.

    Diagnostic companion of :func:`perturbation_G`: linearising the Kepler
    ellipse gives a displacement ``alpha * (-cos t, 2 sin t)`` of each primary.
    """
    x, y = float(s[0]), float(s[1])
    r1, r2 = _distances(mu, x, y)
    c, sn = math.cos(t), math.sin(t)
    out = 0.0
    for m, a, r in ((1.0 - mu, mu, r1), (mu, mu - 1.0, r2)):
        out += m / r**3 * (x * a * c - a * a * c - 2.0 * y * a * sn)
    return out


# ---------------------------------------------------------------------------
# Hamiltonians and vector fields


def hamiltonian(model: Model, s, t: float = 0.0) -> float:
    x, y, px, py = (float(v) for v in s)
    kin = 0.5 * ((px + y) ** 2 + (py - x) ** 2)
    if isinstance(model, Hill):
        return kin - omega_hill(x, y)
    h = kin - omega(model.mu, x, y)
    if isinstance(model, EllipticFirstOrder) and model.e != 0.0:
        h += model.e * perturbation_G(model.mu, s, t)
    return h


def vector_field(model: Model, s, t: float = 0.0) -> np.ndarray:
    x, y, px, py = (float(v) for v in s)
    if isinstance(model, Hill):
        ox, oy = omega_hill_gradient(x, y)
    else:
        ox, oy = omega_gradient(model.mu, x, y)
    out = np.array([px + y, py - x, py - x + ox, -(px + y) + oy])
    if isinstance(model, EllipticFirstOrder) and model.e != 0.0:
        gp = G_partials(model.mu, s, t)
        out[2] -= model.e * gp.dx
        out[3] -= model.e * gp.dy
    return out


def make_rhs(model: Model):
    """Fast ``rhs(t, s)`` closure for the integrator."""
    if isinstance(model, Hill):

        def rhs(t, s):
            x, y, px, py = s
            r2 = x * x + y * y
            r3 = r2 * math.sqrt(r2)
            if r3 < MIN_DISTANCE**3:
                _guard(math.sqrt(r2), "origin")
            vx = px + y
            vy = py - x
            return np.array([vx, vy, vy + 3.0 * x - x / r3, -vx - y / r3])

        return rhs

    mu = model.mu
    m1 = 1.0 - mu
    if isinstance(model, EllipticFirstOrder) and model.e != 0.0:

        def rhs(t, s):
            return vector_field(model, s, t)

        return rhs

    def rhs(t, s):
        x, y, px, py = s
        d1 = x - mu
        d2 = x + m1
        q1 = d1 * d1 + y * y
        q2 = d2 * d2 + y * y
        r1 = math.sqrt(q1)
        r2 = math.sqrt(q2)
        if r1 < MIN_DISTANCE or r2 < MIN_DISTANCE:
            _distances(mu, x, y)
        c1 = m1 / (q1 * r1)
        c2 = mu / (q2 * r2)
        vx = px + y
        vy = py - x
        return np.array([vx, vy, vy + x - c1 * d1 - c2 * d2, -vx + y - (c1 + c2) * y])

    return rhs


def _pull_change(m: float, ax: float, ay: float, dx: float, dy: float) -> tuple[float, float]:
    """``g(a + d) - g(a)`` for ``g(a) = -m a / |a|**3`` without cancellation."""
    u0 = ax * ax + ay * ay
    du = 2.0 * (ax * dx + ay * dy) + dx * dx + dy * dy
    if u0 + du < MIN_DISTANCE**2:
        raise SingularityError(f"distance {math.sqrt(max(u0 + du, 0.0)):.3g} to a primary below {MIN_DISTANCE:g}")
    inv0 = 1.0 / (u0 * math.sqrt(u0))
    d_inv = inv0 * math.expm1(-1.5 * math.log1p(du / u0))
    inv = inv0 + d_inv
    return -m * (dx * inv + ax * d_inv), -m * (dy * inv + ay * d_inv)


def make_deviation_rhs(model: Model, origin):
    """``rhs(t, d) = f(origin + d) - f(origin)`` for an autonomous model.

    The gravitational terms are differenced analytically, so ``d`` keeps its
    relative accuracy even when it is many orders below ``|origin|``.  With
    ``origin`` an equilibrium this is the exact field in shifted coordinates.
    """
    ox, oy = (float(v) for v in as_state(origin)[:2])
    if isinstance(model, Hill):

        def rhs(t, d):
            dx, dy, dpx, dpy = d
            gx, gy = _pull_change(1.0, ox, oy, dx, dy)
            vx = dpx + dy
            vy = dpy - dx
            return np.array([vx, vy, vy + 3.0 * dx + gx, -vx + gy])

        return rhs
    if isinstance(model, EllipticFirstOrder):
        raise ValueError("the elliptic model has no shifted-origin field")
    mu = model.mu
    m1 = 1.0 - mu

    def rhs(t, d):
        dx, dy, dpx, dpy = d
        g1x, g1y = _pull_change(m1, ox - mu, oy, dx, dy)
        g2x, g2y = _pull_change(mu, ox + m1, oy, dx, dy)
        vx = dpx + dy
        vy = dpy - dx
        return np.array([vx, vy, vy + dx + g1x + g2x, -vx + dy + g1y + g2y])

    return rhs


def jacobi_constant(mu: float, s) -> float:
    """Jacobi integral ``F = 2*Omega - (xdot**2 + ydot**2) = -2H``."""
    x, y, px, py = (float(v) for v in s)
    xd, yd = px + y, py - x
    return 2.0 * omega(mu, x, y) - (xd * xd + yd * yd)


def symmetry_S(s) -> np.ndarray:
    """Reversing symmetry ``(x, y, px, py) -> (x, -y, -px, py)``."""
    s = np.asarray(s, dtype=float)
    return np.array([s[0], -s[1], -s[2], s[3]])


def hill_transform(mu: float, s, direction: str = "to") -> np.ndarray:
    """Map synodic states to Hill coordinates (``"to"``) or back (``"from"``)."""
    if mu <= 0.0:
        raise ValueError("mu must be positive")
    s = np.asarray(s, dtype=float)
    c = mu ** (1.0 / 3.0)
    shift = np.array([1.0 - mu, 0.0, 0.0, 1.0 - mu])
    if direction == "to":
        return (s + shift) / c
    if direction == "from":
        return s * c - shift
    raise ValueError(f"direction must be 'to' or 'from', got {direction!r}")


def hill_energy_shift(mu: float) -> float:
    """Additive constant ``C(mu)`` dropped from the scaled Hamiltonian."""
    return mu ** (-2.0 / 3.0) * ((1.0 - mu) + (1.0 - mu) ** 2 / 2.0)
