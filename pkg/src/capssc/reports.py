"""JSON, CSV and SVG output.  Every file goes through :func:`atomic_write`."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import subprocess
from pathlib import Path

import numpy as np

from .checkpoint import atomic_write

SERIES_COLUMNS = ("step", "t", "dt", "phi1", "phi2", "log_product", "omega_along",
                  "sup_grad", "sup_hess", "K", "omega_inf")


def _plain(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return _plain(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(obj, path) -> None:
    atomic_write(path, json.dumps(_plain(obj), indent=1, sort_keys=True) + "\n")


def write_csv(rows: list[dict], path, columns=None) -> None:
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: repr(float(v)) if isinstance(v, (float, np.floating)) else v for k, v in r.items()})
    atomic_write(path, buf.getvalue())


def version_string() -> str:
    """``git describe`` of the source tree, or the package version outside a checkout."""
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], capture_output=True,
                             text=True, timeout=5, cwd=Path(__file__).parent)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("capssc")
    except PackageNotFoundError:
        return "unknown"


@dataclasses.dataclass
class RunManifest:
    config: dict
    constants: dict
    version: str
    wall_clock: float
    acceptance: list  # rows {"name", "passed", "value", "limit"}
    extra: dict = dataclasses.field(default_factory=dict)

    def table(self) -> list[tuple]:
        return [(r["name"], bool(r["passed"]), r["value"], r["limit"]) for r in self.acceptance]

    def write(self, path) -> None:
        write_json(self, path)


def acceptance_rows(checks) -> list[dict]:
    return [{"name": c.name, "passed": bool(c.passed), "value": float(c.value), "limit": float(c.limit),
             "detail": c.detail} for c in checks]


# ---------------------------------------------------------------------------
# plots


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path) -> None:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None})
    atomic_write(path, buf.getvalue())


def plot_growth(times, sup_grad, sup_hess, path, epsilon: float | None = None) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogy(times, sup_grad, label="sup |grad w| on box")
    ax.semilogy(times, sup_hess, label="sup |Hess w| on box")
    if epsilon:
        t = np.asarray(times)
        ax.semilogy(t, sup_hess[0] * np.exp(0.5 * epsilon * (t - t[0])), "k--", lw=0.8,
                    label="rate 0.5 eps")
    ax.set_xlabel("t")
    ax.legend()
    _save(fig, path)
    plt.close(fig)


def plot_trajectory(rows: list[dict], box: float, path) -> None:
    plt = _figure()
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot([r["phi1"] for r in rows], [r["phi2"] for r in rows], ".-", ms=3)
    ax.plot([0, box, box, 0, 0], [0, 0, box, box, 0], "k-", lw=0.8)
    ax.set_xlabel("Phi_1")
    ax.set_ylabel("Phi_2")
    ax.set_aspect("equal")
    _save(fig, path)
    plt.close(fig)


def plot_margins(values, labels, path, title: str = "") -> None:
    """One marker per sample; points below zero violate their bound."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for v, lab in zip(values, labels):
        ax.plot(np.asarray(v), ".", ms=3, label=lab)
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("sample")
    ax.set_ylabel("margin")
    if title:
        ax.set_title(title)
    ax.legend()
    _save(fig, path)
    plt.close(fig)
