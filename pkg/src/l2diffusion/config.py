"""Run configuration: a flat ``key = value`` file plus overrides."""

from __future__ import annotations

import math
import os
from dataclasses import asdict, dataclass, field, fields, replace

OUT_ENV = "L2DIFFUSION_OUT"
DEFAULT_OUT = "results"
TABLE1_K = (2, 3, 4, 10, 11, 12, 50, 60, 70, 200)


class ConfigError(ValueError):
    pass


def _default_out() -> str:
    return os.environ.get(OUT_ENV, DEFAULT_OUT)


@dataclass(frozen=True)
class RunConfig:
    """Every knob of a CLI run.

    ``horizon`` is the integration horizon of the unstable branch; None
    selects 400 for the circular problem and 120 for the Hill branch.
    """

    tol: float = 1e-12
    quad_tol: float = 1e-8
    delta: float = 1e-9
    scan_delta: float = 1e-7
    root_tol: float = 1e-10
    horizon: float | None = None
    mu_start: float = 1e-2
    k_list: tuple[int, ...] = TABLE1_K
    k_min: int = 2
    k_max: int = 13
    k: int = 2
    parity: tuple[str, ...] = ("even", "odd")
    tip_index: int = 2
    t0_min: float = -1.0
    t0_max: float = 4.0
    t0_count: int = 51
    model: str = "hill"
    mu: float | None = None
    dc: tuple[float, ...] = (1e-5, 2e-5)
    out_dir: str = field(default_factory=_default_out)
    format: str = "csv"
    workers: int = 1
    figures: bool = True

    def as_dict(self) -> dict:
        return asdict(self)

    def validate(self) -> "RunConfig":
        def need(cond, msg):
            if not cond:
                raise ConfigError(msg)

        need(1e-14 <= self.tol <= 1e-6, f"tol must lie in [1e-14, 1e-6], got {self.tol}")
        need(1e-12 <= self.quad_tol <= 1e-4, f"quad_tol must lie in [1e-12, 1e-4], got {self.quad_tol}")
        for name in ("delta", "scan_delta"):
            v = getattr(self, name)
            need(1e-9 <= v <= 1e-4, f"{name} must lie in [1e-9, 1e-4], got {v}")
        need(0 < self.root_tol <= 1e-6, f"root_tol must lie in (0, 1e-6], got {self.root_tol}")
        need(self.horizon is None or self.horizon > 0, "horizon must be positive")
        need(0 < self.mu_start < 0.5, "mu_start must lie in (0, 0.5)")
        need(len(self.k_list) > 0 and min(self.k_list) >= 2, "k_list entries must be >= 2")
        need(2 <= self.k_min <= self.k_max, "need 2 <= k_min <= k_max")
        need(self.k >= 2, "k must be >= 2")
        need(len(self.parity) > 0 and set(self.parity) <= {"even", "odd"}, "parity entries must be even or odd")
        need(self.tip_index >= 1, "tip_index must be >= 1")
        need(self.t0_count >= 2 and self.t0_max > self.t0_min, "t0 grid needs t0_max > t0_min and t0_count >= 2")
        need(self.model in ("hill", "circular"), "model must be hill or circular")
        need(self.model == "hill" or self.mu is not None, "model = circular needs mu")
        need(self.mu is None or 0 < self.mu < 0.5, "mu must lie in (0, 0.5)")
        need(len(self.dc) > 0 and min(self.dc) > 0, "dc entries must be positive")
        need(self.format in ("csv", "json"), "format must be csv or json")
        need(self.workers >= 1, "workers must be >= 1")
        need(bool(self.out_dir), "out_dir must be non-empty")
        return self


def _parse_bool(s: str) -> bool:
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"not finite: {s!r}")
    return v


def _split(s: str) -> list[str]:
    return [p.strip() for p in s.split(",") if p.strip()]


def _int_list(s: str) -> tuple[int, ...]:
    out = []
    for part in _split(s):
        if "-" in part:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


_PARSERS = {
    "tol": _parse_float,
    "quad_tol": _parse_float,
    "delta": _parse_float,
    "scan_delta": _parse_float,
    "root_tol": _parse_float,
    "horizon": lambda s: None if s.lower() in ("", "none", "default") else _parse_float(s),
    "mu_start": _parse_float,
    "k_list": _int_list,
    "k_min": int,
    "k_max": int,
    "k": int,
    "parity": lambda s: tuple(_split(s)),
    "tip_index": int,
    "t0_min": _parse_float,
    "t0_max": _parse_float,
    "t0_count": int,
    "model": str,
    "mu": lambda s: None if s.lower() in ("", "none") else _parse_float(s),
    "dc": lambda s: tuple(_parse_float(p) for p in _split(s)),
    "out_dir": str,
    "format": str,
    "workers": int,
    "figures": _parse_bool,
}
assert set(_PARSERS) == {f.name for f in fields(RunConfig)}


def parse_value(key: str, text: str):
    if key not in _PARSERS:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return _PARSERS[key](text.strip())
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {exc}") from exc


def parse_lines(lines) -> dict:
    """``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out = {}
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}: expected key = value, got {raw.strip()!r}")
        key, val = (p.strip() for p in line.split("=", 1))
        if key in out:
            raise ConfigError(f"line {n}: duplicate key {key!r}")
        out[key] = parse_value(key, val)
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then ``overrides`` (already parsed)."""
    values = {}
    if path is not None:
        try:
            with open(path) as fh:
                values.update(parse_lines(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for key, val in (overrides or {}).items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        values[key] = val
    return replace(RunConfig(), **values).validate()


__all__ = ["RunConfig", "ConfigError", "OUT_ENV", "load_config", "parse_lines", "parse_value"]
