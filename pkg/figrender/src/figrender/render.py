"""Render jobs: phase-space contour panels, the time-series panel, and the
achievable-region plot.

All inputs come through a ManifestReader, so nothing is read unless it is
listed in the manifest with a matching checksum.  Output is deterministic:
a pinned rc context, a fixed svg hash salt, and no date metadata, so
re-rendering a job yields byte-identical vector output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .manifest import ManifestReader

KINDS = ("fig1-panels", "fig1c-series", "fig2-region")

_RC = {
    "svg.hashsalt": "figrender",
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "axes.unicode_minus": False,
}

DEFAULT_LEVELS = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass
class RenderJob:
    manifest: str | Path
    kind: str
    out_dir: str | Path
    fmt: str = "svg"
    contour_levels: tuple = DEFAULT_LEVELS

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.fmt not in ("svg", "png"):
            raise ValueError(f"format must be svg or png, got {self.fmt!r}")


def _save(fig, path: Path, fmt: str) -> Path:
    path = path.with_suffix(f".{fmt}")
    if fmt == "svg":
        fig.savefig(path, format="svg", metadata={"Date": None})
    else:
        fig.savefig(path, format="png")
    plt.close(fig)
    return path


def _contour(ax, xs, ys, values, levels_frac):
    top = values.max()
    if top <= 0:
        return
    levels = [frac * top for frac in levels_frac]
    ax.contour(xs, ys, values, levels=levels, linewidths=0.8, colors="k")


def _spin_view_from_minus_z(reader: ManifestReader, resolution: int = 201):
    """Resample the (theta, phi) overlap grid into the Sx-Sy disk as seen
    from the negative z axis (pure presentation-side resampling)."""
    values = reader.matrix("husimi.csv")
    meta = reader.json("husimi.json")
    n_theta, n_phi = meta["resolution"]
    if values.shape != (n_theta, n_phi):
        raise ValueError(f"husimi.csv shape {values.shape} does not match sidecar")
    theta = np.linspace(meta["theta_range"][0], meta["theta_range"][1], n_theta)
    # phi is a half-open periodic axis; append the wrap column
    phi_step = 2 * math.pi / n_phi
    phi = np.arange(n_phi + 1) * phi_step
    wrapped = np.concatenate([values, values[:, :1]], axis=1)

    axis = np.linspace(-1.05, 1.05, resolution)
    sx, sy = np.meshgrid(axis, axis)
    r = np.hypot(sx, sy)
    inside = r <= 1.0
    th = math.pi - np.arcsin(np.clip(r, 0.0, 1.0))
    ph = np.mod(np.arctan2(sy, sx), 2 * math.pi)
    # bilinear sample
    ti = np.clip((th - theta[0]) / (theta[1] - theta[0]), 0, n_theta - 1 - 1e-9)
    pi_ = np.clip(ph / phi_step, 0, n_phi - 1e-9)
    t0 = np.floor(ti).astype(int)
    p0 = np.floor(pi_).astype(int)
    tf, pf = ti - t0, pi_ - p0
    sample = (wrapped[t0, p0] * (1 - tf) * (1 - pf)
              + wrapped[t0 + 1, p0] * tf * (1 - pf)
              + wrapped[t0, p0 + 1] * (1 - tf) * pf
              + wrapped[t0 + 1, p0 + 1] * tf * pf)
    return axis, np.where(inside, sample, 0.0)


def _field_panel_arrays(reader: ManifestReader):
    """Q grid re-axed to the transfer mapping: x = -Im(alpha), y = -Re(alpha)."""
    values = reader.matrix("qgrid.csv")
    meta = reader.json("qgrid.json")
    n_im, n_re = meta["resolution"]
    if values.shape != (n_im, n_re):
        raise ValueError(f"qgrid.csv shape {values.shape} does not match sidecar")
    re_axis = np.linspace(meta["re_range"][0], meta["re_range"][1], n_re)
    im_axis = np.linspace(meta["im_range"][0], meta["im_range"][1], n_im)
    xs = -im_axis[::-1]
    ys = -re_axis[::-1]
    remapped = values[::-1, ::-1].T
    return xs, ys, remapped


def _series_axes(ax, reader: ManifestReader):
    quad = reader.json("quadratures.json")
    tau = np.asarray(quad["tau"])
    ax.plot(tau, np.asarray(quad["amp"]), label=r"$|\langle a\rangle|$")
    ax.plot(tau, np.asarray(quad["var_fixed_phi"]),
            label=r"$\mathrm{var}(a_2)$")
    theta = np.asarray(quad["theta_from_minus_z"], dtype=float)
    ax.plot(tau, theta, label=r"$\theta$", linestyle="--")
    ax.axhline(0.25, color="gray", linewidth=0.8, linestyle=":",
               label="standard quantum limit")
    ax.axvline(quad["tau_star"], color="gray", linewidth=0.6)
    ax.set_xlabel(r"$\tau = g t$")
    ax.legend(loc="upper right", fontsize=7)


def _render_fig1_panels(reader: ManifestReader, job: RenderJob, out: Path) -> Path:
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, 3, figsize=(9.6, 3.2))
        axis, spin_view = _spin_view_from_minus_z(reader)
        _contour(axes[0], axis, axis, spin_view, job.contour_levels)
        axes[0].set_xlabel(r"$S_x / S$")
        axes[0].set_ylabel(r"$S_y / S$")
        axes[0].set_title("atoms (view from $-z$)")
        axes[0].set_aspect("equal")

        xs, ys, remapped = _field_panel_arrays(reader)
        _contour(axes[1], xs, ys, remapped, job.contour_levels)
        axes[1].set_xlabel(r"$-\mathrm{Im}\,\alpha$")
        axes[1].set_ylabel(r"$-\mathrm{Re}\,\alpha$")
        axes[1].set_title("field $Q(\\alpha)$ at $\\tau^*$")
        axes[1].set_aspect("equal")

        _series_axes(axes[2], reader)
        axes[2].set_title("time evolution")
        fig.tight_layout()
        return _save(fig, out / "fig1_panels", job.fmt)


def _render_fig1c_series(reader: ManifestReader, job: RenderJob, out: Path) -> Path:
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.8, 3.2))
        _series_axes(ax, reader)
        fig.tight_layout()
        return _save(fig, out / "fig1c_series", job.fmt)


def _render_fig2_region(reader: ManifestReader, job: RenderJob, out: Path) -> Path:
    header, rows = reader.table("region.csv")
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(4.8, 3.6))
        ax.set_xlabel(r"$|\langle a\rangle|$")
        ax.set_ylabel(r"$\min_\phi\,\mathrm{var}(a_\phi)$")
        if not rows:
            ax.annotate("no region data", xy=(0.5, 0.5),
                        xycoords="axes fraction", ha="center", color="red")
        else:
            cols = {name: i for i, name in enumerate(header)}
            for key in ("num_atoms", "amp", "var_min_phi"):
                if key not in cols:
                    raise ValueError(f"region.csv missing column {key}")
            data = np.array([[float(r[cols["num_atoms"]]), float(r[cols["amp"]]),
                              float(r[cols["var_min_phi"]])] for r in rows])
            hulls = {}
            if reader.has("region_summary.json"):
                summary = reader.json("region_summary.json")
                hulls = {int(k): v.get("hull")
                         for k, v in summary.get("per_n", {}).items()}
            for num_atoms in sorted(set(data[:, 0].astype(int))):
                sel = data[data[:, 0] == num_atoms]
                ax.scatter(sel[:, 1], sel[:, 2], s=2, alpha=0.4,
                           label=f"N = {num_atoms}")
                hull = hulls.get(num_atoms)
                if hull:
                    loop = np.vstack([hull, hull[:1]])
                    ax.plot(loop[:, 0], loop[:, 1], linewidth=0.8)
            ax.axhline(0.25, color="gray", linewidth=0.8, linestyle=":")
            ax.legend(fontsize=7)
        fig.tight_layout()
        return _save(fig, out / "fig2_region", job.fmt)


def render(job: RenderJob) -> list[Path]:
    """Run one render job; returns the written image paths."""
    reader = ManifestReader(job.manifest)
    out = Path(job.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if job.kind == "fig1-panels":
        return [_render_fig1_panels(reader, job, out)]
    if job.kind == "fig1c-series":
        return [_render_fig1c_series(reader, job, out)]
    return [_render_fig2_region(reader, job, out)]
