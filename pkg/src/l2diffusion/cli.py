"""Command-line batch runs: tables, orbits, Melnikov sweeps and the Hill limit.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import report
from .config import ConfigError, RunConfig, load_config, parse_value
from .equilibria import BracketError, PhiConstructionError, equilibrium
from .integrate import EscapeError, NoCrossingError, StepUnderflowError
from .melnikov import (
    HILL_T_MAX,
    HorizonTooShort,
    TipNotFound,
    hill_melnikov_derivative,
    hill_tip_orbit,
    melnikov,
    melnikov_derivative_at_zero,
)
from .models import Circular, Hill, KeplerError, SingularityError
from .normalform import ImaginaryResidualError, hill_twist_closed_form, twist_for_model, twist_for_mu
from .orbits import T_MAX, BracketNotFound, CorrectionError, find_mu_k, homoclinic, lapunov

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

NUMERICAL_ERRORS = (
    SingularityError,
    KeplerError,
    BracketError,
    PhiConstructionError,
    ImaginaryResidualError,
    StepUnderflowError,
    EscapeError,
    NoCrossingError,
    BracketNotFound,
    CorrectionError,
    HorizonTooShort,
    TipNotFound,
    FloatingPointError,
)

# homoclinic masses listed with the twist table, used as given inputs
LISTED_MU = {
    2: 0.4253863522e-2,
    3: 0.6752539971e-3,
    4: 0.2192936884e-3,
    10: 0.92907436e-5,
    11: 0.68212830e-5,
    12: 0.51549632e-5,
    50: 0.582146e-7,
    60: 0.336890e-7,
    70: 0.212152e-7,
    200: 0.9096e-9,
}


def _horizon(cfg: RunConfig, hill: bool = False) -> float:
    if cfg.horizon is not None:
        return cfg.horizon
    return HILL_T_MAX if hill else T_MAX


def _map(fn, items, workers: int) -> list:
    """Order-stable map, in worker processes when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def _guarded(fn, arg):
    """``(result, None)`` or ``(None, message)`` for a numerical failure."""
    try:
        return fn(arg), None
    except NUMERICAL_ERRORS as exc:
        return None, f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# table rows


def table1_row(k: int) -> dict:
    if k not in LISTED_MU:
        raise ConfigError(f"no listed mass for k = {k}; listed k: {sorted(LISTED_MU)}")
    mu = LISTED_MU[k]
    res = twist_for_mu(mu)
    return {"k": k, "mu": mu, "a22": res.a22, "mu23_a22": res.mu_scaled}


def hill_row() -> dict:
    a = twist_for_model(Hill()).a22
    return {"k": "hill", "mu": None, "a22": a, "mu23_a22": a}


def cmd_table1(cfg: RunConfig) -> tuple[list[dict], list[str]]:
    for k in cfg.k_list:
        if k not in LISTED_MU:
            raise ConfigError(f"no listed mass for k = {k}; listed k: {sorted(LISTED_MU)}")
    out = _map(_table1_job, cfg.k_list, cfg.workers)
    rows = [r for r, _ in out if r is not None]
    errors = [f"k={k}: {e}" for k, (_, e) in zip(cfg.k_list, out) if e is not None]
    rows.append(hill_row())
    return rows, errors


def _table1_job(k):
    return _guarded(table1_row, k)


def _table2_job(args):
    k, mu, cfg = args

    def run(_):
        h = homoclinic(mu, k, cfg.delta, cfg.tol, t_max=_horizon(cfg))
        r = melnikov_derivative_at_zero(h, cfg.quad_tol)
        return {"k": k, "mu": h.mu, "dMdt0": r.value, "T": r.T, "tail_bound": r.tail_bound}

    return _guarded(run, None)


def _mu_list(cfg: RunConfig, ks) -> list[float]:
    return [
        find_mu_k(k, cfg.root_tol, cfg.scan_delta, cfg.tol, t_max=_horizon(cfg), mu_start=cfg.mu_start) for k in ks
    ]


def cmd_mu_k(cfg: RunConfig) -> tuple[list[dict], list[str]]:
    ks = list(range(cfg.k_min, cfg.k_max + 1))
    try:
        mus = _mu_list(cfg, ks)
    except NUMERICAL_ERRORS as exc:
        return [], [f"{type(exc).__name__}: {exc}"]
    return [{"k": k, "mu": mu} for k, mu in zip(ks, mus)], []


def cmd_table2(cfg: RunConfig) -> tuple[list[dict], list[str]]:
    base, errors = cmd_mu_k(cfg)
    if errors:
        return [], errors
    out = _map(_table2_job, [(r["k"], r["mu"], cfg) for r in base], cfg.workers)
    rows = [r for r, _ in out if r is not None]
    errors = [f"k={b['k']}: {e}" for b, (_, e) in zip(base, out) if e is not None]
    return rows, errors


def _hill_job(args):
    parity, cfg = args

    def run(_):
        tip = hill_tip_orbit(parity, cfg.tip_index, cfg.delta, _horizon(cfg, hill=True), cfg.tol)
        r = hill_melnikov_derivative(tip, cfg.quad_tol)
        return {
            "parity": parity,
            "tip_kind": tip.info["tip_kind"],
            "tip_index": cfg.tip_index,
            "dMdt0": r.value,
            "T": r.T,
            "tail_bound": r.tail_bound,
        }

    return _guarded(run, None)


HILL_COLUMNS = ("parity", "tip_kind", "tip_index", "dMdt0", "T", "tail_bound")


def cmd_hill_limit(cfg: RunConfig) -> tuple[list[dict], list[str]]:
    out = _map(_hill_job, [(p, cfg) for p in cfg.parity], cfg.workers)
    rows = [r for r, _ in out if r is not None]
    errors = [f"{p}: {e}" for p, (_, e) in zip(cfg.parity, out) if e is not None]
    return rows, errors


def _homoclinic_for(cfg: RunConfig, k: int):
    mu = _mu_list(cfg, [k])[0]
    return homoclinic(mu, k, cfg.delta, cfg.tol, t_max=_horizon(cfg))


def _sweep_job(args):
    h, t0, form, quad_tol = args
    return melnikov(h, t0, form, quad_tol).value


def sweep_zeros(t0: np.ndarray, values: np.ndarray) -> list[float]:
    """Sign changes of a sampled function, located by linear interpolation."""
    out = []
    for a, b, fa, fb in zip(t0[:-1], t0[1:], values[:-1], values[1:]):
        if fa == 0.0:
            out.append(float(a))
        elif fa * fb < 0:
            out.append(float(a - fa * (b - a) / (fb - fa)))
    if values[-1] == 0.0:
        out.append(float(t0[-1]))
    return out


# ---------------------------------------------------------------------------
# commands that write files


def _write_table(cfg, stem, rows, columns=report.TABLE_COLUMNS) -> list[str]:
    return [report.write_rows(cfg.out_dir, stem, rows, columns, cfg.format)]


def run_table1(cfg: RunConfig) -> tuple[list[str], list[str]]:
    rows, errors = cmd_table1(cfg)
    paths = _write_table(cfg, "table1", rows)
    if cfg.figures:
        paths.append(report.plot_table1(rows, cfg.out_dir, limit=hill_twist_closed_form()))
    return paths, errors


def run_table2(cfg: RunConfig) -> tuple[list[str], list[str]]:
    rows, errors = cmd_table2(cfg)
    paths = _write_table(cfg, "table2", rows)
    if cfg.figures and rows:
        paths.append(report.plot_table2(rows, cfg.out_dir))
    return paths, errors


def run_mu_k(cfg: RunConfig) -> tuple[list[str], list[str]]:
    rows, errors = cmd_mu_k(cfg)
    paths = _write_table(cfg, "mu_k", rows)
    if cfg.figures and rows:
        paths.append(report.plot_mu_k(rows, cfg.out_dir))
    return paths, errors


def run_hill_limit(cfg: RunConfig) -> tuple[list[str], list[str]]:
    rows, errors = cmd_hill_limit(cfg)
    paths = _write_table(cfg, "hill_limit", rows, HILL_COLUMNS)
    if cfg.figures and rows:
        for parity in cfg.parity:
            tip = hill_tip_orbit(parity, cfg.tip_index, cfg.delta, _horizon(cfg, hill=True), cfg.tol)
            marks = {"L2": equilibrium(Hill()).location, "tip": tip.states[-1]}
            paths.append(report.plot_orbit(tip.states, cfg.out_dir, f"hill_limit_{parity}", marks, f"{parity} tip"))
    return paths, errors


def run_homoclinic(cfg: RunConfig) -> tuple[list[str], list[str]]:
    h = _homoclinic_for(cfg, cfg.k)
    stem = f"homoclinic_k{cfg.k}"
    if cfg.format == "csv":
        paths = [report.write_text(os.path.join(cfg.out_dir, stem + ".csv"), h.to_csv())]
    else:
        payload = dict(h.summary(), t=h.unstable_half.t, states=h.unstable_half.states)
        paths = [report.write_text(os.path.join(cfg.out_dir, stem + ".json"), report.json_text(payload))]
    if cfg.figures:
        tt = np.linspace(-h.T, h.T, 4001)
        marks = {"L2": h.equilibrium.location, "crossing": h.crossing_state, "small primary": (h.mu - 1.0, 0.0)}
        paths.append(report.plot_orbit(h(tt), cfg.out_dir, stem, marks, f"k = {cfg.k}, mu = {h.mu:.10e}"))
    return paths, []


LAPUNOV_COLUMNS = ("dC", "C", "period", "frequency", "amplitude", "correction_residual")


def run_lapunov(cfg: RunConfig) -> tuple[list[str], list[str]]:
    model = Hill() if cfg.model == "hill" else Circular(cfg.mu)
    orbits, rows, errors = [], [], []
    for dc in cfg.dc:
        orb, err = _guarded(lambda d: lapunov(model, d, tol=cfg.tol), dc)
        if err is not None:
            errors.append(f"dC={dc!r}: {err}")
            continue
        orbits.append(orb)
        rows.append(
            {
                "dC": dc,
                "C": orb.C,
                "period": orb.period,
                "frequency": orb.frequency,
                "amplitude": orb.amplitude,
                "correction_residual": orb.correction_residual,
            }
        )
    stem = f"lapunov_{cfg.model}"
    if cfg.format == "csv":
        paths = [report.write_text(os.path.join(cfg.out_dir, stem + ".csv"), report.csv_text(rows, LAPUNOV_COLUMNS))]
    else:
        payload = {"orbits": rows}
        if len(orbits) >= 2:
            payload["domega_dC"] = (orbits[-1].frequency - orbits[0].frequency) / (orbits[-1].C - orbits[0].C)
        paths = [report.write_text(os.path.join(cfg.out_dir, stem + ".json"), report.json_text(payload))]
    if cfg.figures and orbits:
        states = np.vstack([o.trajectory.states for o in orbits])
        marks = {"L2": equilibrium(model).location}
        paths.append(report.plot_orbit(states, cfg.out_dir, stem, marks, "Lapunov orbits"))
    return paths, errors


def run_melnikov_sweep(cfg: RunConfig) -> tuple[list[str], list[str]]:
    h = _homoclinic_for(cfg, cfg.k)
    t0 = np.linspace(cfg.t0_min, cfg.t0_max, cfg.t0_count)
    values = np.array(_map(_sweep_job, [(h, float(t), "potential", cfg.quad_tol) for t in t0], cfg.workers))
    stem = f"melnikov_sweep_k{cfg.k}"
    rows = [{"t0": float(a), "M": float(b)} for a, b in zip(t0, values)]
    if cfg.format == "csv":
        paths = [report.write_text(os.path.join(cfg.out_dir, stem + ".csv"), report.csv_text(rows, ("t0", "M")))]
    else:
        payload = {"k": cfg.k, "mu": h.mu, "sweep": rows, "zeros": sweep_zeros(t0, values)}
        paths = [report.write_text(os.path.join(cfg.out_dir, stem + ".json"), report.json_text(payload))]
    if cfg.figures:
        paths.append(report.plot_sweep(t0, values, cfg.out_dir, stem))
    return paths, []


COMMANDS = {
    "table1": run_table1,
    "table2": run_table2,
    "hill-limit": run_hill_limit,
    "homoclinic": run_homoclinic,
    "lapunov": run_lapunov,
    "melnikov-sweep": run_melnikov_sweep,
    "mu-k": run_mu_k,
}

HELP = {
    "table1": "twist coefficients at the listed masses plus the Hill value",
    "table2": "dM/dt0(0) along the homoclinic orbits k = k_min..k_max",
    "hill-limit": "Melnikov derivative along tip-calibrated Hill orbits",
    "homoclinic": "export the k-th symmetric homoclinic orbit",
    "lapunov": "Lapunov orbits at the energy offsets dc",
    "melnikov-sweep": "M(t0) on a grid of t0 along the k-th homoclinic orbit",
    "mu-k": "homoclinic masses mu_k for k = k_min..k_max",
}


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")
    common.add_argument("--tol", help="integrator tolerance")
    common.add_argument("--delta", help="seed offset along the unstable direction")
    common.add_argument("--horizon", help="integration horizon of the unstable branch")
    common.add_argument("--out", help="output directory (default from $L2DIFFUSION_OUT)")
    common.add_argument("--format", choices=("csv", "json"), help="table format")
    common.add_argument("--workers", help="worker processes for independent rows")
    parser = argparse.ArgumentParser(prog="l2diffusion", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return parser


_FLAG_KEYS = {"tol": "tol", "delta": "delta", "horizon": "horizon", "out": "out_dir", "format": "format", "workers": "workers"}


def config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = parse_value(key.strip(), val)
    for flag, key in _FLAG_KEYS.items():
        val = getattr(args, flag)
        if val is not None:
            overrides[key] = parse_value(key, val)
    return load_config(args.config, overrides)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths, errors = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for p in paths:
        print(p)
    if errors:
        for e in errors:
            print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
