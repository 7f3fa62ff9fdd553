"""Artifact emission for experiment runs: output directories, manifests,
and rendered matplotlib figures next to the delimited data files.

Figures are conveniences for humans; the CSVs written by the domain
objects are the reproducible record (and the only files covered by the
byte-identity guarantee, since the manifest carries wall time).
"""

from __future__ import annotations

import csv
import json
import os
import time

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

import torusdamp


def ensure_outdir(path) -> str:
    os.makedirs(path, exist_ok=True)
    return str(path)


def write_manifest(outdir, config: dict, wall_time: float,
                   extra: dict = None) -> str:
    """Write manifest.json: config echo, package version, wall time."""
    manifest = {
        "config": config,
        "version": torusdamp.__version__,
        "wall_time_seconds": wall_time,
        "written_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    if extra:
        manifest.update(extra)
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")
    return path


def write_csv(path, header, rows) -> str:
    """Generic CSV writer with full-precision float formatting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{x:.17g}" if isinstance(x, float) else x
                             for x in row])
    return str(path)


def plot_energy_trace(trace, path, title: str = "", curves: dict = None) -> str:
    """Energy versus time on a log scale, with optional reference curves
    (label -> array aligned with trace.times)."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    positive = trace.energy > 0
    ax.semilogy(trace.times[positive], trace.energy[positive],
                label="E(t)", lw=1.5)
    if curves:
        for label, vals in curves.items():
            vals = np.asarray(vals)
            good = vals > 0
            ax.semilogy(trace.times[good], vals[good], "--", label=label, lw=1)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_loglog_sweep(x, y, path, xlabel: str, ylabel: str,
                      slope: float = None, title: str = "") -> str:
    """Log-log scatter of a sweep with an optional fitted power law."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.loglog(x, y, "o-", label="measured")
    if slope is not None and np.all(y > 0):
        ref = y[0] * (x / x[0]) ** slope
        ax.loglog(x, ref, "--", label=f"slope {slope:.3f}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_beam_comparison(report, path, title: str = "") -> str:
    """Exact-solver energy against the propagator prediction G^2."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(report.times, report.energy_exact, label="E(exact)", lw=1.5)
    ax.plot(report.times, report.g_squared, "--", label="G^2", lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("energy")
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)


def plot_damping_snapshot(field, path, title: str = "") -> str:
    """Render a damping snapshot: a curve on T^1, an image on T^2."""
    grid = field.grid
    fig, ax = plt.subplots(figsize=(6, 4.5))
    if grid.dim == 1:
        ax.plot(grid.axis(), field.values.real)
        ax.set_xlabel("x")
        ax.set_ylabel("W")
    else:
        im = ax.imshow(field.values.real.T, origin="lower",
                       extent=[0, grid.period, 0, grid.period])
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return str(path)
