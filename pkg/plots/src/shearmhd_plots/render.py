"""Render harness CSVs to static images.

The renderer only consumes the simulation toolkit's delimited outputs
(mode-sweep rows, per-mode traces); it never imports the solver.  Sweep
plots use log-log axes so power laws read off as straight lines; traces
keep a linear time axis and carry the decay envelope

    e^(-c kappa^(1/3) t) (1 + nu kappa^(-1/3)),   c = (1 - 1/(2 alpha))^2 / 200,

scaled to the initial amplitude.  Images are deterministic for fixed
input and style: the Agg/SVG backends are pinned and date metadata is
stripped.
"""

import csv
from dataclasses import dataclass, field
from typing import Optional

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

matplotlib.rcParams["svg.hashsalt"] = "shearmhd-plots"

KINDS = ("heatmap", "trace", "slopes")
REQUIRED_COLUMNS = {
    "heatmap": ("nu", "kappa", "growth_factor"),
    "trace": ("t", "abs_p", "nu", "kappa", "alpha", "t_peak"),
    "slopes": ("nu", "kappa", "growth_factor"),
}


class RenderError(ValueError):
    """Unusable input CSV or unsupported output format."""


@dataclass
class PlotJob:
    kind: str
    in_csv: str
    out_img: str
    title: Optional[str] = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise RenderError(f"unknown plot kind {self.kind!r}; choose from {KINDS}")
        if not self.out_img.lower().endswith((".png", ".svg")):
            raise RenderError("output must end in .png or .svg")


def read_rows(path: str, required: tuple) -> list:
    """Parse the CSV into float-valued dicts, checking the schema first."""
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [col for col in required if col not in header]
            if missing:
                raise RenderError(f"missing column {missing[0]!r} in {path}")
            rows = []
            for raw in reader:
                rows.append({col: float(raw[col]) for col in required})
    except FileNotFoundError:
        raise RenderError(f"input CSV not found: {path}")
    except ValueError as exc:
        if isinstance(exc, RenderError):
            raise
        raise RenderError(f"non-numeric cell in {path}: {exc}")
    if not rows:
        raise RenderError(f"no rows in {path}")
    return rows


def _save(fig, path: str):
    if path.lower().endswith(".svg"):
        fig.savefig(path, metadata={"Date": None})
    else:
        fig.savefig(path, dpi=150)
    plt.close(fig)


def render_heatmap(job: PlotJob) -> dict:
    """Growth factor over the (nu, kappa) grid, log axes, log color scale."""
    rows = read_rows(job.in_csv, REQUIRED_COLUMNS["heatmap"])
    nus = np.array(sorted({r["nu"] for r in rows}))
    kappas = np.array(sorted({r["kappa"] for r in rows}))
    grid = np.full((len(nus), len(kappas)), np.nan)
    for r in rows:
        i = int(np.searchsorted(nus, r["nu"]))
        j = int(np.searchsorted(kappas, r["kappa"]))
        g = grid[i, j]
        grid[i, j] = r["growth_factor"] if np.isnan(g) else max(g, r["growth_factor"])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(
        kappas, nus, np.log10(grid), shading="nearest", cmap="viridis"
    )
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel(r"$\kappa$")
    ax.set_ylabel(r"$\nu$")
    ax.set_title(job.title or "log10 growth factor")
    fig.colorbar(mesh, ax=ax, label=r"$\log_{10}$ growth")
    fig.tight_layout()
    _save(fig, job.out_img)
    return {"n_nu": len(nus), "n_kappa": len(kappas)}


def render_trace(job: PlotJob) -> dict:
    """|p(t)| on a linear time axis with the decay envelope overlaid."""
    rows = read_rows(job.in_csv, REQUIRED_COLUMNS["trace"])
    t = np.array([r["t"] for r in rows])
    absp = np.array([r["abs_p"] for r in rows])
    nu, kappa, alpha = rows[0]["nu"], rows[0]["kappa"], rows[0]["alpha"]
    t_peak_col = rows[0]["t_peak"]
    c = (1.0 - 0.5 / alpha) ** 2 / 200.0
    envelope = (
        absp[0]
        * (1.0 + nu * kappa ** (-1.0 / 3.0))
        * np.exp(-c * kappa ** (1.0 / 3.0) * t)
    )
    i_peak = int(np.argmax(absp))
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.semilogy(t, absp, label=r"$|p(t)|$", lw=1.2)
    ax.semilogy(t, envelope, "--", label="decay envelope", lw=1.0)
    ax.axvline(t[i_peak], color="gray", lw=0.8, ls=":", label=f"peak t = {t[i_peak]:.3g}")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$|p|$")
    ax.set_title(job.title or rf"mode trace ($\nu$={nu:g}, $\kappa$={kappa:g})")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, job.out_img)
    spacing = float(np.max(np.diff(t))) if len(t) > 1 else 0.0
    return {"peak_t": float(t[i_peak]), "t_peak_column": t_peak_col,
            "max_sample_spacing": spacing}


def render_slopes(job: PlotJob) -> dict:
    """Max growth per kappa on log-log axes with the fitted power law."""
    rows = read_rows(job.in_csv, REQUIRED_COLUMNS["slopes"])
    by_kappa = {}
    for r in rows:
        if np.isfinite(r["growth_factor"]):
            key = r["kappa"]
            by_kappa[key] = max(by_kappa.get(key, -np.inf), r["growth_factor"])
    if len(by_kappa) < 1:
        raise RenderError(f"no finite growth factors in {job.in_csv}")
    kappas = np.array(sorted(by_kappa))
    growth = np.array([by_kappa[k] for k in kappas])
    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.loglog(kappas, growth, "o-", label="max growth")
    slope = None
    if len(kappas) >= 2 and np.all(growth > 0):
        slope, intercept = np.polyfit(np.log(kappas), np.log(growth), 1)
        ax.loglog(kappas, np.exp(intercept) * kappas**slope, "--",
                  label=f"fit slope {slope:+.3f}")
        slope = float(slope)
    ax.set_xlabel(r"$\kappa$")
    ax.set_ylabel("growth factor")
    ax.set_title(job.title or "growth scaling")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, job.out_img)
    return {"slope": slope, "n_kappa": len(kappas)}


_RENDERERS = {"heatmap": render_heatmap, "trace": render_trace, "slopes": render_slopes}


def render(job: PlotJob) -> dict:
    """Dispatch on the plot kind; returns renderer summary statistics."""
    return _RENDERERS[job.kind](job)
