"""Melnikov integrals along the symmetric homoclinic orbits and the Hill limit.

For the elliptic perturbation ``e * G`` the Melnikov function is

    M(t0) = int {H, G}(q(t), t + t0) dt
          = int [G_t(q(t), t + t0) - G_t(L2, t + t0)] dt,

and ``dM/dt0(0) = 2 int_{-inf}^0 [G_tt(q(t), t) - G_tt(L2, t)] dt`` for an
S-symmetric ``q``.  Integrals are truncated at the seed of the unstable half,
where ``|q - L2| = delta``.  The part beyond the seed is added in its
linearized form; what is left is of order ``delta**2``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .equilibria import EquilibriumData, equilibrium, unstable_direction
from .integrate import DEFAULT_TOL, Trajectory
from .models import G_partials, G_t, G_tt, G_tt_hill, Hill
from .orbits import HomoclinicOrbit, tip_times, unstable_branch

QUAD_TOL = 1e-8
PANEL = 0.5
HILL_DELTA = 1e-9
HILL_T_MAX = 120.0

# tip type whose phase reproduces the sign (-1)^k of the circular values
TIP_KIND = {"even": "far", "odd": "near"}


class HorizonTooShort(ArithmeticError):
    pass


class TipNotFound(LookupError):
    pass


@dataclass
class MelnikovResult:
    value: float
    T: float
    quad_tol: float
    tail_bound: float
    form: str
    diagnostics: dict = field(default_factory=dict)

    def record(self, **extra) -> dict:
        out = {"value": self.value, "T": self.T, "tail_bound": self.tail_bound, "form": self.form}
        out.update(extra)
        return out

    def to_json(self, **extra) -> str:
        return json.dumps(self.record(**extra), sort_keys=True)


# ---------------------------------------------------------------------------
# quadrature


def _panels(a: float, b: float, width: float = PANEL) -> np.ndarray:
    n = max(int(math.ceil((b - a) / width)), 1)
    return np.linspace(a, b, n + 1)


def integrate_panels(f: Callable[[float], float], a: float, b: float, tol: float = QUAD_TOL) -> tuple[float, float]:
    """Adaptive Gauss-Kronrod on panels no wider than :data:`PANEL`.

    Returns ``(value, error estimate)``; the absolute target is split evenly
    over the panels.
    """
    if b <= a:
        return 0.0, 0.0
    edges = _panels(a, b)
    eps = tol / (len(edges) - 1)
    total = err = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, e = quad(f, lo, hi, epsabs=eps, epsrel=0.0, limit=200)
        total += v
        err += e
    return total, err


def _derivative_along(g: Callable[[np.ndarray, float], float], p: np.ndarray, v: np.ndarray, h: float = 1e-6):
    """``t -> d/ds g(p + s v, t)`` at ``s = 0`` (central difference)."""
    return lambda t: (g(p + h * v, t) - g(p - h * v, t)) / (2.0 * h)


def seed_tail(coef: Callable[[float], float], alpha: float, delta: float, t_edge: float, outward: float) -> float:
    """Leading-order integral beyond a truncation point next to L2.

    There ``|q - L2| = delta * exp(-alpha s)`` at distance ``s`` past
    ``t_edge`` and the L2-subtracted integrand is ``coef(t) * |q - L2|``.
    """
    span = 36.0 / alpha
    val, _ = integrate_panels(lambda s: math.exp(-alpha * s) * coef(t_edge + outward * s), 0.0, span, 1e-10)
    return delta * val


def _tail_bound(delta: float, scale: float, *tails: float) -> float:
    """Bound on the tail left after the linear correction.

    Relative to the linear term it is of order ``delta / scale`` with
    ``scale`` the distance from L2 to the nearest singularity; a factor 10
    covers the O(1) constants.
    """
    return float(10.0 * sum(abs(t) for t in tails) * delta / scale)


def _check_tail(res: MelnikovResult) -> MelnikovResult:
    if res.tail_bound > 10.0 * res.quad_tol:
        raise HorizonTooShort(
            f"tail bound {res.tail_bound:.2e} exceeds 10 x quad_tol = {10 * res.quad_tol:.1e}; use a smaller delta"
        )
    return res


# ---------------------------------------------------------------------------
# circular problem


def _integrands(h: HomoclinicOrbit, t0: float):
    mu = h.mu
    L = h.equilibrium.location

    def potential(t):
        s = h(t)
        return G_t(mu, s[0], s[1], t + t0) - G_t(mu, L[0], L[1], t + t0)

    def bracket(t):
        s = h(t)
        gp = G_partials(mu, s, t + t0)
        # {H, G} = -(xdot G_x + ydot G_y) since G does not depend on momenta
        return -((s[2] + s[1]) * gp.dx + (s[3] - s[0]) * gp.dy)

    return {"potential": potential, "bracket": bracket}


def melnikov(h: HomoclinicOrbit, t0: float = 0.0, form: str = "potential", quad_tol: float = QUAD_TOL) -> MelnikovResult:
    """``M(t0)`` over ``t in [-T, T]`` with the stable half from the S-symmetry."""
    funcs = _integrands(h, t0)
    if form not in funcs:
        raise ValueError(f"form must be 'bracket' or 'potential', got {form!r}")
    T = h.T
    value, err = integrate_panels(funcs[form], -T, T, quad_tol)
    mu = h.mu
    eq = h.equilibrium
    vu = _oriented_vu(h)
    vs = vu * np.array([1.0, -1.0, -1.0, 1.0])
    if form == "potential":
        g = lambda p, t: G_t(mu, p[0], p[1], t + t0)
        lower, upper = _derivative_along(g, eq.location, vu), _derivative_along(g, eq.location, vs)
    else:
        # near L2 the position moves like +-alpha1 (q - L2)
        grad = lambda t, w, sgn: -sgn * eq.alpha1 * float(np.dot(G_partials(mu, eq.location, t + t0)[:2], w[:2]))
        lower = lambda t: grad(t, vu, 1.0)
        upper = lambda t: grad(t, vs, -1.0)
    tails = (
        seed_tail(lower, eq.alpha1, h.offset_delta, -T, -1.0),
        seed_tail(upper, eq.alpha1, h.offset_delta, T, 1.0),
    )
    tail = _tail_bound(h.offset_delta, _singular_distance(h), *tails)
    res = MelnikovResult(value + sum(tails), T, quad_tol, tail, form, {"quad_error": err, "t0": t0, "linear_tail": sum(tails)})
    return _check_tail(res)


def _singular_distance(h: HomoclinicOrbit) -> float:
    """Distance from L2 to the small primary."""
    return abs(h.equilibrium.location[0] - (h.mu - 1.0))


def _oriented_vu(h: HomoclinicOrbit) -> np.ndarray:
    """Unit unstable direction pointing from L2 to the seed."""
    v = unstable_direction(h.equilibrium)
    d = h.unstable_half.states[0] - h.equilibrium.location
    return v if np.dot(v, d) > 0 else -v


def melnikov_derivative_at_zero(
    h: HomoclinicOrbit, quad_tol: float = QUAD_TOL, periodic_subtraction: bool = True
) -> MelnikovResult:
    """``dM/dt0(0) = 2 int_{-T}^0 [G_tt(q, t) - G_tt(L2, t)] dt``.

    With ``periodic_subtraction`` the ``L2`` term is dropped on the whole
    periods ``[-2 pi n, 0]``, over which it integrates to zero.
    """
    mu = h.mu
    L = h.equilibrium.location
    T = h.T
    sub = lambda t: G_tt(mu, L[0], L[1], t)

    def full(t):
        s = h.unstable_half(t)
        return G_tt(mu, s[0], s[1], t) - sub(t)

    def bare(t):
        s = h.unstable_half(t)
        return G_tt(mu, s[0], s[1], t)

    if periodic_subtraction:
        cut = -2.0 * math.pi * math.floor(T / (2.0 * math.pi))
        v1, e1 = integrate_panels(full, -T, cut, quad_tol / 2)
        v2, e2 = integrate_panels(bare, cut, 0.0, quad_tol / 2)
        value, err = v1 + v2, e1 + e2
    else:
        value, err = integrate_panels(full, -T, 0.0, quad_tol)
    eq = h.equilibrium
    coef = _derivative_along(lambda p, t: G_tt(mu, p[0], p[1], t), eq.location, _oriented_vu(h))
    lin = 2.0 * seed_tail(coef, eq.alpha1, h.offset_delta, -T, -1.0)
    scale = _singular_distance(h)
    tail = _tail_bound(h.offset_delta, scale, lin)
    res = MelnikovResult(2.0 * value + lin, T, quad_tol, tail, "derivative", {"quad_error": 2.0 * err, "linear_tail": lin})
    # horizon check: truncating 3 e-folds later, with its own linear tail
    t_short = -T + 3.0 / eq.alpha1
    short, _ = integrate_panels(full, t_short, 0.0, quad_tol)
    delta_short = h.offset_delta * math.exp(3.0)
    lin_short = 2.0 * seed_tail(coef, eq.alpha1, delta_short, t_short, -1.0)
    res.diagnostics.update(
        horizon_change=abs(2.0 * short + lin_short - res.value),
        horizon_tail_bound=_tail_bound(delta_short, scale, lin_short),
    )
    return _check_tail(res)


def melnikov_sweep(h: HomoclinicOrbit, t0_grid, form: str = "potential", quad_tol: float = QUAD_TOL):
    """``[(t0, M(t0)), ...]`` over the grid."""
    return [(float(t0), melnikov(h, float(t0), form, quad_tol).value) for t0 in t0_grid]


# ---------------------------------------------------------------------------
# Hill limit


def hill_tips(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Times of near (x minima, next to the zero-velocity curve) and far (x maxima) tips."""
    tips = tip_times(traj)
    # the x acceleration sign separates minima from maxima
    acc = np.array([_x_acceleration(traj(t)) for t in tips])
    return tips[acc > 0], tips[acc < 0]


def _x_acceleration(s) -> float:
    x, y, px, py = s
    r3 = (x * x + y * y) ** 1.5
    # xddot = 2 ydot + Omega_x
    return 2.0 * (py - x) + 3.0 * x - x / r3


def hill_tip_orbit(
    k_parity: str,
    tip_index: int = 2,
    delta: float = HILL_DELTA,
    t_max: float = HILL_T_MAX,
    tol: float = DEFAULT_TOL,
    kind: str | None = None,
) -> Trajectory:
    """Hill unstable branch re-based so the selected tip sits at ``t = 0``.

    ``tip_index`` counts tips of the selected kind from the seed (1-based).
    ``kind`` ("near" | "far") overrides the parity rule :data:`TIP_KIND`.
    Returns the ``t <= 0`` half.
    """
    if k_parity not in TIP_KIND:
        raise ValueError("k_parity must be 'even' or 'odd'")
    if tip_index < 1:
        raise ValueError("tip_index is 1-based")
    kind = kind or TIP_KIND[k_parity]
    if kind not in ("near", "far"):
        raise ValueError("kind must be 'near' or 'far'")
    traj = unstable_branch(Hill(), delta, 1, t_max, tol, stop_at_crossing=False)
    near, far = hill_tips(traj)
    pool = near if kind == "near" else far
    if len(pool) < tip_index:
        raise TipNotFound(f"only {len(pool)} {kind} tips before t = {t_max}")
    t_tip = float(pool[tip_index - 1])
    half = traj.rebased(t_tip)
    cut = Trajectory(half.model, half.t[half.t <= 0.0], half.states[half.t <= 0.0], half.dense, tol, half.shift)
    # keep the exact tip as the last sample
    cut = Trajectory(
        cut.model,
        np.append(cut.t, 0.0),
        np.vstack([cut.states, half(0.0)]),
        half.dense,
        tol,
        half.shift,
        {"tip_kind": kind, "tip_index": tip_index, "parity": k_parity, "delta": delta},
    )
    return cut


def hill_melnikov_derivative(tip_traj: Trajectory, quad_tol: float = QUAD_TOL) -> MelnikovResult:
    """``2 int_{-T}^0 [G_tt^Hill(q(t), t) - G_tt^Hill(L2, t)] dt`` on a tip-calibrated branch."""
    eq = equilibrium(Hill())
    L = eq.location
    T = -tip_traj.t_start

    def f(t):
        s = tip_traj(t)
        return G_tt_hill(s[0], s[1], t) - G_tt_hill(L[0], L[1], t)

    value, err = integrate_panels(f, -T, 0.0, quad_tol)
    v = unstable_direction(eq)
    v = v if v[0] > 0 else -v
    coef = _derivative_along(lambda p, t: G_tt_hill(p[0], p[1], t), L, v)
    delta = tip_traj.info.get("delta", HILL_DELTA)
    lin = 2.0 * seed_tail(coef, eq.alpha1, delta, -T, -1.0)
    # the singularity sits at the origin
    tail = _tail_bound(delta, float(np.hypot(L[0], L[1])), lin)
    info = {"quad_error": 2.0 * err, "linear_tail": lin, **tip_traj.info}
    res = MelnikovResult(2.0 * value + lin, T, quad_tol, tail, "hill", info)
    return _check_tail(res)


def hill_limit(k_parity: str, tip_index: int = 2, delta: float = HILL_DELTA) -> MelnikovResult:
    return hill_melnikov_derivative(hill_tip_orbit(k_parity, tip_index, delta))


__all__ = [
    "MelnikovResult",
    "HorizonTooShort",
    "TipNotFound",
    "TIP_KIND",
    "integrate_panels",
    "melnikov",
    "melnikov_derivative_at_zero",
    "melnikov_sweep",
    "hill_tips",
    "hill_tip_orbit",
    "hill_melnikov_derivative",
    "hill_limit",
]
