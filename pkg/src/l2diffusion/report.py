"""Deterministic CSV/JSON writers and matplotlib figures for CLI runs."""

from __future__ import annotations

import csv
import io
import json
import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

TABLE_COLUMNS = ("k", "mu", "a22", "mu23_a22", "dMdt0", "T", "tail_bound")
# PNG metadata carries the matplotlib version by default; drop it for byte-stable files
_PNG_META = {"Software": None}


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return repr(v) if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def csv_text(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


def json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_text(path: str, text: str) -> str:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


def write_rows(out_dir: str, stem: str, rows: list[dict], columns, fmt: str) -> str:
    """``stem.csv`` with exactly ``columns`` or ``stem.json`` with the full records."""
    if fmt == "csv":
        return write_text(os.path.join(out_dir, stem + ".csv"), csv_text(rows, columns))
    return write_text(os.path.join(out_dir, stem + ".json"), json_text(rows))


def _save(fig, out_dir: str, stem: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, stem + ".png")
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_table1(rows: list[dict], out_dir: str, stem: str = "table1", limit: float | None = None) -> str:
    pts = [(r["mu"], r["mu23_a22"]) for r in rows if isinstance(r.get("mu"), float) and r.get("mu23_a22") is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    if pts:
        mu, val = np.array(pts).T
        ax.semilogx(mu, val, "o-", label="mu^(2/3) a22")
    if limit is not None:
        ax.axhline(limit, color="k", lw=0.8, ls="--", label="Hill limit")
    ax.set_xlabel("mu")
    ax.set_ylabel("mu^(2/3) a22")
    ax.legend()
    fig.tight_layout()
    return _save(fig, out_dir, stem)


def plot_table2(rows: list[dict], out_dir: str, stem: str = "table2") -> str:
    ks = [r["k"] for r in rows if r.get("dMdt0") is not None]
    vals = [r["dMdt0"] for r in rows if r.get("dMdt0") is not None]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ks, vals, "o-")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("k")
    ax.set_ylabel("dM/dt0 (0)")
    fig.tight_layout()
    return _save(fig, out_dir, stem)


def plot_mu_k(rows: list[dict], out_dir: str, stem: str = "mu_k") -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy([r["k"] for r in rows], [r["mu"] for r in rows], "o-")
    ax.set_xlabel("k")
    ax.set_ylabel("mu_k")
    fig.tight_layout()
    return _save(fig, out_dir, stem)


def plot_orbit(states: np.ndarray, out_dir: str, stem: str, marks: dict | None = None, title: str = "") -> str:
    """``y`` against ``x`` with optional labelled points."""
    fig, ax = plt.subplots(figsize=(6, 5))
    ax.plot(states[:, 0], states[:, 1], lw=0.8)
    for label, p in (marks or {}).items():
        ax.plot(p[0], p[1], "o", ms=4, label=label)
    if marks:
        ax.legend()
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, out_dir, stem)


def plot_sweep(t0: np.ndarray, values: np.ndarray, out_dir: str, stem: str) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(t0, values, "-")
    ax.axhline(0.0, color="k", lw=0.5)
    ax.set_xlabel("t0")
    ax.set_ylabel("M(t0)")
    fig.tight_layout()
    return _save(fig, out_dir, stem)


__all__ = [
    "TABLE_COLUMNS",
    "csv_text",
    "json_text",
    "write_text",
    "write_rows",
    "plot_table1",
    "plot_table2",
    "plot_mu_k",
    "plot_orbit",
    "plot_sweep",
]
