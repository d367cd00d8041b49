"""Adaptive propagation with dense output and coordinate-section crossings.

All runs use scipy's DOP853 (an explicit 8(5,3) Runge-Kutta pair with a
7th-order dense output) with ``rtol = atol = tol``, except for an optional
first stage near an equilibrium, whose absolute tolerance follows the
distance to it.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import DenseOutput, OdeSolution, solve_ivp
from scipy.optimize import brentq

from .models import Model, as_state, make_deviation_rhs, make_rhs

DEFAULT_TOL = 1e-12
MIN_STEP = 1e-13
# factor by which the distance to a shifted origin grows before atol is rescaled
GROWTH = 10.0
TANGENCY_TOL = 1e-10
CROSSING_TOL = 1e-12
COORDS = ("x", "y", "p_x", "p_y")


class StepUnderflowError(RuntimeError):
    """The adaptive step fell below :data:`MIN_STEP`."""


class EscapeError(RuntimeError):
    """The trajectory left the bounding box."""


class NoCrossingError(LookupError):
    def __init__(self, msg: str, found: int = 0):
        super().__init__(msg)
        self.found = found


@dataclass(frozen=True)
class Section:
    """The hyperplane ``state[coord] = level`` crossed in ``direction``.

    ``direction`` is +1 (increasing), -1 (decreasing) or 0 (any).
    """

    coord: int = 1
    level: float = 0.0
    direction: int = 0

    def __post_init__(self):
        if isinstance(self.coord, str):
            object.__setattr__(self, "coord", COORDS.index(self.coord))
        if self.direction not in (-1, 0, 1):
            raise ValueError("direction must be -1, 0 or +1")

    def value(self, states: np.ndarray) -> np.ndarray:
        return np.asarray(states)[..., self.coord] - self.level


@dataclass(frozen=True)
class SectionEvent:
    time: float
    state: np.ndarray
    section: Section
    residual: float


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Samples at accepted steps plus the dense interpolant between them.

    ``shift`` is added to integration time to give trajectory time, so
    re-basing never touches the interpolant.
    """

    model: Model
    t: np.ndarray
    states: np.ndarray
    dense: OdeSolution | None
    tol: float
    shift: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def t_start(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def forward(self) -> bool:
        return self.t[-1] >= self.t[0]

    def __len__(self) -> int:
        return len(self.t)

    def __call__(self, t):
        """State(s) at trajectory time ``t``; sample times return the samples."""
        tq = np.asarray(t, dtype=float)
        scalar = tq.ndim == 0
        tq = np.atleast_1d(tq)
        if self.dense is None:
            if np.any(tq != self.t[0]):
                raise ValueError("single-sample trajectory can only be evaluated at its start")
            out = np.repeat(self.states[:1], len(tq), axis=0)
        else:
            lo, hi = sorted((self.t[0], self.t[-1]))
            if np.any((tq < lo - 1e-12) | (tq > hi + 1e-12)):
                raise ValueError(f"time outside trajectory span [{lo}, {hi}]")
            out = self.dense(tq - self.shift).T
            idx, hit = self._sample_index(tq)
            out[hit] = self.states[idx[hit]]
        return out[0] if scalar else out

    def _sample_index(self, tq):
        ts = self.t if self.forward else self.t[::-1]
        idx = np.clip(np.searchsorted(ts, tq), 0, len(ts) - 1)
        hit = ts[idx] == tq
        if not self.forward:
            idx = len(ts) - 1 - idx
        return idx, hit

    def rebased(self, t_zero: float) -> "Trajectory":
        """Same trajectory with time origin moved to ``t_zero``."""
        return Trajectory(
            model=self.model,
            t=self.t - t_zero,
            states=self.states,
            dense=self.dense,
            tol=self.tol,
            shift=self.shift - t_zero,
            info=dict(self.info),
        )

    def sample(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``n`` evenly spaced times over the span and the states there."""
        tt = np.linspace(self.t[0], self.t[-1], n)
        return tt, self(tt)

    def to_csv(self, path=None, times=None) -> str:
        """Write ``t, x, y, p_x, p_y`` rows; returns the text."""
        tt = self.t if times is None else np.asarray(times, dtype=float)
        ss = self.states if times is None else self(tt)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *COORDS])
        for ti, si in zip(tt, ss):
            w.writerow([repr(float(ti)), *(repr(float(v)) for v in si)])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


class _Shifted(DenseOutput):
    """Interpolant of a run in shifted coordinates, returning absolute states."""

    def __init__(self, base: DenseOutput, offset: np.ndarray):
        super().__init__(base.t_old, base.t)
        self.base = base
        self.offset = offset

    def _call_impl(self, t):
        y = self.base(t)
        return y + (self.offset if y.ndim == 1 else self.offset[:, None])


def _solve(rhs, s0, t0, t1, tol, events, atol=None):
    with warnings.catch_warnings():
        # scipy raises tiny rtol to 100*eps with a warning; that is intended
        warnings.simplefilter("ignore", UserWarning)
        sol = solve_ivp(
            rhs,
            (t0, t1),
            s0,
            method="DOP853",
            rtol=tol,
            atol=tol if atol is None else atol,
            dense_output=True,
            events=events or None,
        )
    if sol.status == -1:
        raise StepUnderflowError(sol.message)
    return sol


def _check_steps(ts: np.ndarray) -> None:
    if len(ts) > 2:
        h = np.abs(np.diff(ts[:-1]))
        if h.min() < MIN_STEP:
            raise StepUnderflowError(f"step size {h.min():.2e} below floor {MIN_STEP:g}")


def propagate(
    model: Model,
    s0,
    t0: float,
    t1: float,
    tol: float = DEFAULT_TOL,
    stop: Section | None = None,
    accept: Callable[[float, np.ndarray], bool] | None = None,
    box: float | None = None,
    origin=None,
    near: float | None = None,
) -> Trajectory:
    """Integrate from ``(t0, s0)`` to ``t1`` (either direction).

    With ``stop`` the run ends at the first crossing of that section for
    which ``accept(t, state)`` holds (all crossings if ``accept`` is None).
    A start lying on the section does not count as a crossing.  With ``box``
    leaving ``max(|x|, |y|) <= box`` raises :class:`EscapeError`.

    With ``origin`` the run starts in coordinates relative to that point and
    with the absolute tolerance scaled by ``|s - origin|`` (rescaled each time
    that distance grows by ``GROWTH``), so a start very close to an
    equilibrium keeps its relative accuracy; it switches to plain
    coordinates once ``|s - origin|`` reaches ``near``.  The origin must be
    an equilibrium of an autonomous model; the shifted stage uses the
    analytically differenced field.
    """
    s0 = as_state(s0)
    if not 1e-14 <= tol <= 1e-6:
        raise ValueError(f"tol must lie in [1e-14, 1e-6], got {tol}")
    if t1 == t0:
        return Trajectory(model, np.array([float(t0)]), s0[None, :].copy(), None, tol)
    base_rhs = make_rhs(model)
    sign = 1.0 if t1 > t0 else -1.0

    offset = np.zeros(4)
    atol, reach = tol, None
    if origin is not None:
        if near is None or near <= 0:
            raise ValueError("origin needs a positive switch radius near")
        origin = as_state(origin)
        shifted_rhs = make_deviation_rhs(model, origin)
        d0 = float(np.linalg.norm(s0 - origin))
        if 0 < d0 < near:
            offset, atol, reach = origin, tol * d0, min(near, GROWTH * d0)

    def rhs(t, y):
        return shifted_rhs(t, y) if offset.any() else base_rhs(t, y)

    def make_events():
        events = []
        if stop is not None:

            def event(t, y):
                s = y + offset
                v = s[stop.coord] - stop.level
                if t == t_cur and abs(v) <= TANGENCY_TOL:
                    # a start on the section takes the sign it is about to have
                    return math.copysign(TANGENCY_TOL, sign * base_rhs(t, s)[stop.coord])
                return v

            event.terminal = True
            event.direction = stop.direction
            events.append(event)
        if box is not None:

            def escape(t, y):
                s = y + offset
                return box - max(abs(s[0]), abs(s[1]))

            escape.terminal = True
            events.append(escape)
        if offset.any():

            def leave(t, y):
                return float(np.linalg.norm(y)) - reach

            leave.terminal = True
            leave.direction = 1
            events.append(leave)
        return events

    ts_all, interps, samples = [], [], []
    t_cur, s_cur = float(t0), s0
    while True:
        events = make_events()
        sol = _solve(rhs, s_cur - offset, t_cur, t1, tol, events, atol)
        _check_steps(sol.t)
        ts_all.append(sol.sol.ts)
        interps.extend(sol.sol.interpolants if not offset.any() else [_Shifted(i, offset) for i in sol.sol.interpolants])
        samples.append((sol.t, sol.y.T + offset))
        if sol.status != 1:
            break
        # event slots: [stop], [box], [leave]
        slot = 0
        hit_stop = stop is not None and len(sol.t_events[slot])
        slot += stop is not None
        if box is not None and len(sol.t_events[slot]):
            t_esc = float(sol.t_events[slot][0])
            raise EscapeError(f"left the box |x|, |y| <= {box} at t = {t_esc:.6g}")
        slot += box is not None
        if not hit_stop:
            # grew by GROWTH: rescale the absolute tolerance, or leave the
            # neighbourhood of the origin and continue in plain coordinates
            t_cur, s_cur = float(sol.t[-1]), sol.y[:, -1] + offset
            if reach < near:
                atol, reach = tol * reach, min(near, GROWTH * reach)
            else:
                offset, atol = np.zeros(4), tol
            continue
        te = float(sol.t_events[0][0])
        se = sol.y_events[0][0] + offset
        if accept is None or accept(te, se):
            break
        # rejected crossing: restart just past it so the event is not re-found
        nudge = sign * max(1e-9, 1e-12 * abs(te))
        t_next = te + nudge
        if sign * (t1 - t_next) <= 0:
            break
        # step over the rejected event without event detection
        bridge = _solve(rhs, se - offset, te, t_next, tol, [], atol)
        t_cur, s_cur = t_next, bridge.y[:, -1] + offset
        ts_all.append(bridge.sol.ts)
        interps.extend(bridge.sol.interpolants if not offset.any() else [_Shifted(i, offset) for i in bridge.sol.interpolants])
        samples.append((bridge.t, bridge.y.T + offset))

    ts = ts_all[0]
    for more in ts_all[1:]:
        ts = np.concatenate([ts, more[1:]])
    t_s = samples[0][0]
    y_s = samples[0][1]
    for tt, yy in samples[1:]:
        t_s = np.concatenate([t_s, tt[1:]])
        y_s = np.vstack([y_s, yy[1:]])
    dense = OdeSolution(ts, interps)
    return Trajectory(model, t_s, y_s, dense, tol)


def find_crossing(
    traj: Trajectory,
    section: Section,
    which: int = 1,
    window: tuple[float, float] | None = None,
    accept: Callable[[float, np.ndarray], bool] | None = None,
    subdivisions: int = 8,
) -> SectionEvent:
    """The ``which``-th crossing (1-based, in time order of the run) of ``section``."""
    if which < 1:
        raise ValueError("which is 1-based")
    if traj.dense is None:
        raise NoCrossingError("single-sample trajectory has no crossings", 0)
    ts = traj.t
    # refine each step so two crossings inside one step are still separated
    frac = np.linspace(0.0, 1.0, subdivisions + 1)[:-1]
    grid = np.concatenate([a + frac * (b - a) for a, b in zip(ts[:-1], ts[1:])] + [ts[-1:]])
    if window is not None:
        lo, hi = sorted(window)
        grid = grid[(grid >= lo) & (grid <= hi)]
    if len(grid) < 2:
        raise NoCrossingError("window holds no trajectory segment", 0)
    vals = section.value(traj(grid))
    # a run stopped on the section ends exactly at a crossing
    if abs(vals[-1]) <= CROSSING_TOL:
        vals[-1] = 0.0

    # a start on the section takes the sign of the first point off it
    start = 0
    if abs(vals[0]) <= TANGENCY_TOL:
        nz = np.nonzero(np.abs(vals) > TANGENCY_TOL)[0]
        if len(nz) == 0:
            raise NoCrossingError("trajectory stays on the section", 0)
        start = nz[0]
    found = 0
    time_sign = 1.0 if traj.forward else -1.0
    for i in range(start, len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if a == 0.0 or a * b > 0:
            continue
        # crossing direction in the direction of motion
        d = int(np.sign(b - a) * time_sign)
        if section.direction and d != section.direction:
            continue
        fun = lambda t: float(section.value(traj(t)))
        tc = grid[i + 1] if b == 0.0 else brentq(fun, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        state = traj(tc)
        if accept is not None and not accept(tc, state):
            continue
        found += 1
        if found == which:
            residual = abs(float(section.value(state)))
            if residual > CROSSING_TOL:
                raise NoCrossingError(f"crossing residual {residual:.2e} above {CROSSING_TOL:g}", found)
            return SectionEvent(time=float(tc), state=state, section=section, residual=residual)
    raise NoCrossingError(f"requested crossing #{which}, found {found}", found)


def energy_drift(traj: Trajectory, energy: Callable[[np.ndarray], float]) -> float:
    """Largest ``|E(sample) - E(first sample)|`` over the samples."""
    e = np.array([energy(s) for s in traj.states])
    return float(np.max(np.abs(e - e[0])))


__all__ = [
    "DEFAULT_TOL",
    "Section",
    "SectionEvent",
    "Trajectory",
    "StepUnderflowError",
    "NoCrossingError",
    "EscapeError",
    "propagate",
    "find_crossing",
    "energy_drift",
]
