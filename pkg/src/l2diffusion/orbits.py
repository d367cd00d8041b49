"""Unstable branch of L2, homoclinic shooting for mu_k and Lapunov orbits.

The branch used throughout leaves L2 with increasing x, i.e. into the
region between the small primary and the large one.  A symmetric
homoclinic orbit is found by requiring the first qualifying crossing of
``y = 0`` to be perpendicular (``p_x = 0`` there, since ``y = 0``).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, newton

from .equilibria import EquilibriumData, center_basis_vector, equilibrium, unstable_direction
from .integrate import DEFAULT_TOL, NoCrossingError, Section, SectionEvent, Trajectory, find_crossing, propagate
from .normalform import energy_coefficient_h2
from .models import Circular, Hill, Model, hamiltonian, omega, omega_hill, symmetry_S

DEFAULT_DELTA = 1e-7
T_MAX = 400.0
BOX = {"circular": 3.0, "hill": 2e3}
Y_SECTION = Section(coord=1, level=0.0, direction=0)

# first mass probed when scanning for mu_2
MU_SCAN_START = 1e-2


class BracketNotFound(RuntimeError):
    pass


class CorrectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class ShootResult:
    residual: float
    wave_count: int
    crossing: SectionEvent
    trajectory: Trajectory


@dataclass(frozen=True, eq=False)
class HomoclinicOrbit:
    mu: float
    k: int
    crossing_state: np.ndarray
    unstable_half: Trajectory
    offset_delta: float
    residual: float
    equilibrium: EquilibriumData
    waves: int = 0

    @property
    def T(self) -> float:
        """Flight time from the seed to the symmetric crossing."""
        return -self.unstable_half.t_start

    def __call__(self, t):
        """State on the full orbit; ``t > 0`` uses ``q(t) = S q(-t)``."""
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = self.unstable_half(-np.abs(t))
        pos = t > 0
        out[pos] = out[pos] * np.array([1.0, -1.0, -1.0, 1.0])
        return out[0] if scalar else out

    def summary(self) -> dict:
        return {
            "mu": self.mu,
            "k": self.k,
            "residual": self.residual,
            "T": self.T,
            "delta": self.offset_delta,
            "waves": self.waves,
            "crossing_state": [float(v) for v in self.crossing_state],
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def to_csv(self, path=None, n: int | None = None) -> str:
        times = None if n is None else np.linspace(self.unstable_half.t_start, 0.0, n)
        return self.unstable_half.to_csv(path, times)


@dataclass(frozen=True, eq=False)
class LapunovOrbit:
    model: Model
    C: float
    period: float
    initial_state: np.ndarray
    amplitude: float
    correction_residual: float
    trajectory: Trajectory | None = field(default=None, repr=False)

    @property
    def frequency(self) -> float:
        return 2.0 * math.pi / self.period


# ---------------------------------------------------------------------------
# helpers


def _box(model: Model) -> float:
    return BOX["hill"] if isinstance(model, Hill) else BOX["circular"]


def _small_primary(model: Model) -> np.ndarray:
    if isinstance(model, Hill):
        return np.zeros(2)
    return np.array([model.mu - 1.0, 0.0])


def exclusion_radius(eq: EquilibriumData) -> float:
    """Crossings closer than this to L2 do not qualify."""
    return 2.0 * float(np.linalg.norm(eq.location[:2] - _small_primary(eq.model)))


def _qualifies(eq: EquilibriumData):
    rad = exclusion_radius(eq)
    loc = eq.location[:2]

    def accept(t, s):
        return math.hypot(s[0] - loc[0], s[1] - loc[1]) > rad

    return accept


def branch_seed(eq: EquilibriumData, delta: float, branch: int = 1) -> np.ndarray:
    """``L2 + delta * branch * v_u`` with ``v_u`` oriented to increasing x."""
    if branch not in (-1, 1):
        raise ValueError("branch must be +1 or -1")
    v = unstable_direction(eq)
    if v[0] < 0:
        v = -v
    return eq.location + delta * branch * v


def unstable_branch(
    model: Model,
    delta: float = DEFAULT_DELTA,
    branch: int = 1,
    t_max: float = T_MAX,
    tol: float = DEFAULT_TOL,
    stop_at_crossing: bool = True,
    eq: EquilibriumData | None = None,
) -> Trajectory:
    """Propagate the unstable manifold branch of L2 from a linear seed.

    ``branch = +1`` enters the region on the large-primary side of L2.  With
    ``stop_at_crossing`` the run ends at the first qualifying ``y = 0``
    crossing; otherwise it runs to ``t_max``.
    """
    if not 1e-9 <= delta <= 1e-4:
        raise ValueError(f"delta must lie in [1e-9, 1e-4], got {delta}")
    eq = eq or equilibrium(model)
    s0 = branch_seed(eq, delta, branch)
    stop = Y_SECTION if stop_at_crossing else None
    # relative accuracy near L2 until the branch is a quarter exclusion radius out
    near = 0.25 * exclusion_radius(eq)
    traj = propagate(
        eq.model, s0, 0.0, t_max, tol, stop=stop, accept=_qualifies(eq), box=_box(eq.model), origin=eq.location, near=near
    )
    traj.info.update(delta=delta, branch=branch)
    return traj


# ---------------------------------------------------------------------------
# waves


def tip_distance(model: Model, states: np.ndarray) -> np.ndarray:
    """Distance whose extrema mark the tips of the branch.

    Circular: distance to the large primary.  Hill: ``x`` (the large primary
    sits at ``x = +inf`` in Hill coordinates).
    """
    states = np.atleast_2d(states)
    if isinstance(model, Hill):
        return states[:, 0].copy()
    return np.hypot(states[:, 0] - model.mu, states[:, 1])


def tip_rate(model: Model, states: np.ndarray) -> np.ndarray:
    """Time derivative of :func:`tip_distance` along the flow."""
    states = np.atleast_2d(states)
    x, y, px, py = states.T
    xd, yd = px + y, py - x
    if isinstance(model, Hill):
        return xd
    dx = x - model.mu
    return (dx * xd + y * yd) / np.hypot(dx, y)


def tip_times(traj: Trajectory, t_stop: float | None = None, spacing: float = 0.01) -> np.ndarray:
    """Times of strict local extrema of the tip distance, refined by root finding."""
    t_lo, t_hi = sorted((traj.t_start, traj.t_end if t_stop is None else t_stop))
    n = max(int((t_hi - t_lo) / spacing), 2)
    tt = np.linspace(t_lo, t_hi, n + 1)
    rate = tip_rate(traj.model, traj(tt))
    out = []
    for i in np.nonzero(rate[:-1] * rate[1:] < 0)[0]:
        fun = lambda t: float(tip_rate(traj.model, traj(t))[0])
        out.append(brentq(fun, tt[i], tt[i + 1], xtol=1e-14))
    return np.array(out)


def wave_count(traj: Trajectory, t_stop: float | None = None, margin: float = 0.05) -> int:
    """Tips of the branch up to its end (or ``t_stop``), the final tip included.

    Interior tips are strict extrema of :func:`tip_distance`; the trajectory's
    end point (the symmetric crossing) counts as the last tip.
    """
    end = traj.t_end if t_stop is None else t_stop
    sgn = 1.0 if traj.forward else -1.0
    interior = tip_times(traj, end - sgn * margin)
    return int(len(interior) + 1) if len(traj) > 1 else 0


# ---------------------------------------------------------------------------
# shooting for mu_k


def shoot(mu: float, delta: float = DEFAULT_DELTA, tol: float = DEFAULT_TOL, t_max: float = T_MAX) -> ShootResult:
    """``p_x`` at the first qualifying ``y = 0`` crossing of the unstable branch."""
    model = Circular(mu)
    eq = equilibrium(model)
    traj = unstable_branch(model, delta, 1, t_max, tol, eq=eq)
    try:
        ev = find_crossing(traj, Y_SECTION, 1, accept=_qualifies(eq))
    except NoCrossingError as exc:
        raise NoCrossingError(f"no qualifying y = 0 crossing before t = {t_max} at mu = {mu}", exc.found) from exc
    state = ev.state.copy()
    state[1] = 0.0
    ev = SectionEvent(ev.time, state, ev.section, ev.residual)
    return ShootResult(float(state[2]), wave_count(traj, ev.time), ev, traj)


def _residual(delta, tol, t_max=T_MAX):
    return lambda mu: shoot(mu, delta, tol, t_max).residual


def _refine(f, a: float, b: float):
    mu = brentq(f, a, b, xtol=1e-15 * min(a, b), rtol=4 * np.finfo(float).eps, maxiter=200)
    return mu, f(mu)


# scan state per (delta, tol, int_tol, t_max, mu_start): zeros so far, last probe
_SCANS: dict[tuple, tuple[list[float], float, float]] = {}


def _zeros(
    k_max: int, delta: float, tol: float, int_tol: float, t_max: float = T_MAX, mu_start: float = MU_SCAN_START
) -> tuple[float, ...]:
    key = (delta, tol, int_tol, t_max, mu_start)
    f = _residual(delta, int_tol, t_max)
    if key in _SCANS:
        zeros, hi, f_hi = _SCANS[key]
        zeros = list(zeros)
    else:
        zeros, hi = [], mu_start
        f_hi = f(hi)
    while len(zeros) < k_max - 1:
        k = len(zeros) + 2
        # probes per predicted gap; the asymptotic ratio underestimates early gaps
        ratio = ((k + 1) / k) ** 3
        step = ratio ** (1.0 / 12.0)
        lo = hi
        while True:
            lo_new = lo / step
            if lo_new < 1e-9:
                raise BracketNotFound(f"no sign change for mu_{k} above 1e-9")
            f_new = f(lo_new)
            if f_new == 0.0 or f_new * f_hi < 0:
                mu, res = _refine(f, lo_new, lo)
                if abs(res) <= tol:
                    zeros.append(mu)
                    hi, f_hi = lo_new, f_new
                    break
            lo, f_hi = lo_new, f_new
        _SCANS[key] = (list(zeros), hi, f_hi)
    return tuple(zeros)


def find_mu_k(
    k: int,
    tol: float = 1e-10,
    delta: float = DEFAULT_DELTA,
    int_tol: float = DEFAULT_TOL,
    t_max: float = T_MAX,
    mu_start: float = MU_SCAN_START,
) -> float:
    """Mass of the k-th S-symmetric homoclinic orbit (``k = 2`` the largest).

    Zeros of the shooting residual are indexed by their order when scanning
    mu downward; a mismatch with the counted waves issues a warning.  ``tol``
    bounds ``|p_x|`` at the root, ``int_tol`` is the integrator tolerance.
    The scan starts at ``mu_start`` and each branch runs at most ``t_max``.
    """
    if k < 2:
        raise ValueError("k must be at least 2")
    mu = _zeros(k, float(delta), float(tol), float(int_tol), float(t_max), float(mu_start))[k - 2]
    waves = shoot(mu, delta, int_tol, t_max).wave_count
    if waves != k:
        warnings.warn(f"mu_{k} = {mu:.10e}: counted {waves} waves", RuntimeWarning, stacklevel=2)
    return mu


def homoclinic(
    mu_k: float,
    k: int,
    delta: float = DEFAULT_DELTA,
    tol: float = DEFAULT_TOL,
    polish: bool = True,
    t_max: float = T_MAX,
) -> HomoclinicOrbit:
    """Symmetric homoclinic orbit with the crossing at ``t = 0``.

    With ``polish`` the mass is re-converged for this ``delta`` inside a
    relative window of 1e-6 when the residual exceeds 1e-10.
    """
    res = shoot(mu_k, delta, tol, t_max)
    if polish and abs(res.residual) > 1e-10:
        f = _residual(delta, tol, t_max)
        a, b = mu_k * (1 - 1e-6), mu_k * (1 + 1e-6)
        fa, fb = f(a), f(b)
        if fa * fb < 0:
            mu_k, _ = _refine(f, a, b)
            res = shoot(mu_k, delta, tol, t_max)
    ev = res.crossing
    eq = equilibrium(Circular(mu_k))
    half = res.trajectory.rebased(ev.time)
    if abs(half.t_end) > 1e-9:
        raise RuntimeError("unstable half does not end at the crossing")
    return HomoclinicOrbit(
        mu=mu_k,
        k=k,
        crossing_state=ev.state,
        unstable_half=half,
        offset_delta=delta,
        residual=abs(res.residual),
        equilibrium=eq,
        waves=res.wave_count,
    )


def symmetry_residual(h: HomoclinicOrbit, times, tol: float | None = None) -> float:
    """``max |S q(-t) - q_s(t)|`` with ``q_s`` propagated forward from the crossing."""
    times = np.sort(np.asarray(times, dtype=float))
    tol = tol or h.unstable_half.tol
    fwd = propagate(h.unstable_half.model, h.crossing_state, 0.0, float(times[-1]), tol)
    ref = np.array([symmetry_S(s) for s in h.unstable_half(-times)])
    return float(np.max(np.abs(fwd(times) - ref)))


def tail_log_slope(h: HomoclinicOrbit, efolds: float = 1.0) -> float:
    """Growth rate of ``|q(t) - L2|`` over the first e-fold after the seed."""
    t0 = h.unstable_half.t_start
    alpha = h.equilibrium.alpha1
    t1 = t0 + efolds / alpha
    d0, d1 = (np.linalg.norm(h.unstable_half(t) - h.equilibrium.location) for t in (t0, t1))
    return float(np.log(d1 / d0) / (t1 - t0))


# ---------------------------------------------------------------------------
# Lapunov orbits


def _potential(model: Model, x: float) -> float:
    return omega_hill(x, 0.0) if isinstance(model, Hill) else omega(model.mu, x, 0.0)


def _symmetric_start(model: Model, eq: EquilibriumData, x0: float, energy: float, ydot_sign: float) -> np.ndarray:
    # y = 0, p_x = 0; p_y from the energy with the linear orbit's sense of rotation
    k2 = 2.0 * (energy + _potential(model, x0))
    if k2 < 0:
        raise CorrectionError(f"x = {x0} lies outside the Hill region at this energy")
    return np.array([x0, 0.0, 0.0, x0 + ydot_sign * math.sqrt(k2)])


def _half_period(model, s0, tol, t_guess):
    tr = propagate(model, s0, 0.0, 3.0 * t_guess, tol, stop=Y_SECTION, accept=lambda t, s: t > 0.25 * t_guess)
    ev = find_crossing(tr, Y_SECTION, 1, accept=lambda t, s: t > 0.25 * t_guess)
    return ev, tr


def lapunov(
    model: Model,
    dC: float,
    guess: float | None = None,
    tol: float = DEFAULT_TOL,
    residual_tol: float = 1e-10,
    maxiter: int = 50,
) -> LapunovOrbit:
    """Planar Lapunov orbit of L2 at energy ``H = C2 + dC``.

    The orbit is sought among S-symmetric starts ``(x0, 0, 0, p_y(x0))`` on the
    energy level; ``x0`` is corrected until the next ``y = 0`` crossing is
    perpendicular.  ``guess`` is the x-amplitude (default: linear estimate).
    """
    if dC <= 0:
        raise ValueError("dC must be positive")
    eq = equilibrium(model)
    model = eq.model
    energy = eq.C2 + dC
    v = center_basis_vector(eq.Phi).real
    h2 = energy_coefficient_h2(model, eq)
    if guess is None:
        guess = math.sqrt(dC / h2) * abs(v[0])
    ydot_sign = math.copysign(1.0, (v[3] - v[0]) * v[0])
    t_guess = math.pi / eq.omega2

    def resid(a):
        s0 = _symmetric_start(model, eq, eq.location[0] + a, energy, ydot_sign)
        ev, _ = _half_period(model, s0, tol, t_guess)
        return ev.state[2]

    try:
        amp = newton(resid, guess, x1=guess * 1.001, tol=1e-15, maxiter=maxiter)
    except (RuntimeError, CorrectionError, NoCrossingError) as exc:
        raise CorrectionError(f"differential correction diverged from amplitude {guess}: {exc}") from exc
    s0 = _symmetric_start(model, eq, eq.location[0] + amp, energy, ydot_sign)
    ev, _ = _half_period(model, s0, tol, t_guess)
    if abs(ev.state[2]) > residual_tol:
        raise CorrectionError(f"residual {abs(ev.state[2]):.2e} above {residual_tol:g}")
    period = 2.0 * ev.time
    full = propagate(model, s0, 0.0, period, tol)
    return LapunovOrbit(
        model=model,
        C=float(hamiltonian(model, s0)),
        period=period,
        initial_state=s0,
        amplitude=float(amp),
        correction_residual=float(abs(ev.state[2])),
        trajectory=full,
    )


def frequency_slope_from_family(model: Model, dC1: float = 1e-5, dC2: float = 2e-5, tol: float = 1e-13) -> float:
    """Finite-difference ``d omega / dC`` from two Lapunov orbits."""
    o1, o2 = lapunov(model, dC1, tol=tol), lapunov(model, dC2, tol=tol)
    return (o2.frequency - o1.frequency) / (o2.C - o1.C)


__all__ = [
    "DEFAULT_DELTA",
    "ShootResult",
    "HomoclinicOrbit",
    "LapunovOrbit",
    "BracketNotFound",
    "CorrectionError",
    "unstable_branch",
    "shoot",
    "find_mu_k",
    "homoclinic",
    "wave_count",
    "tip_times",
    "lapunov",
    "frequency_slope_from_family",
    "symmetry_residual",
    "tail_log_slope",
    "exclusion_radius",
]
