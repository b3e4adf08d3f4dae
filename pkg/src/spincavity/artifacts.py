"""Artifact writers: CSV series and grids with JSON sidecars, state
serialization, operator dumps, and the run manifest with checksums.

File layouts are part of the external contract: series.csv has a header row
`tau` followed by one re/im column pair per observable; grids are plain CSV
matrices with their axes in a JSON sidecar; states carry basis labels and
(re, im) amplitude pairs.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .dynamics import ObservableSeries
from .operators import BlockedOperator
from .quasiprob import BlochGrid, QGrid
from .spaces import DickeSpace, FockSpace, JointSpace
from .states import DensityMatrix, PureState


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def sha256_of(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_series_csv(path: Path, series: ObservableSeries,
                     sidecar: dict | None = None) -> list[Path]:
    """tau column plus one re/im pair per observable; metadata sidecar."""
    path = Path(path)
    names = sorted(series.values)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["tau"] + [f"{n}_{p}" for n in names for p in ("re", "im")])
        for i, tau in enumerate(series.tau_grid):
            row = [f"{tau:.17g}"]
            for n in names:
                v = complex(series.values[n][i])
                row += [f"{v.real:.17g}", f"{v.imag:.17g}"]
            writer.writerow(row)
    written = [path]
    if sidecar is not None:
        written.append(write_json(path.with_suffix(".json"),
                                  {**sidecar, "observables": names,
                                   "provenance": series.provenance}))
    return written


def write_matrix_csv(path: Path, matrix: np.ndarray) -> Path:
    path = Path(path)
    np.savetxt(path, matrix, delimiter=",", fmt="%.17g")
    return path


def write_qgrid(path: Path, grid: QGrid, extra: dict | None = None) -> list[Path]:
    path = Path(path)
    write_matrix_csv(path, grid.values)
    sidecar = {
        "kind": "field_q",
        "re_range": [grid.re_values[0], grid.re_values[-1]],
        "im_range": [grid.im_values[0], grid.im_values[-1]],
        "resolution": [len(grid.im_values), len(grid.re_values)],
        "cell_area": grid.cell_area,
        "total_mass": grid.total_mass(),
        "layout": "rows = Im(alpha) ascending, columns = Re(alpha) ascending",
        **(extra or {}),
    }
    return [path, write_json(path.with_suffix(".json"), sidecar)]


def write_bloch_grid(path: Path, grid: BlochGrid, extra: dict | None = None) -> list[Path]:
    path = Path(path)
    write_matrix_csv(path, grid.values)
    sidecar = {
        "kind": "spin_husimi",
        "theta_range": [grid.theta_values[0], grid.theta_values[-1]],
        "phi_range": [grid.phi_values[0], grid.phi_values[-1]],
        "resolution": [len(grid.theta_values), len(grid.phi_values)],
        "twice_spin": grid.twice_spin,
        "identity_integral": grid.identity_integral(),
        "layout": "rows = theta in [0, pi], columns = phi in [0, 2pi)",
        **(extra or {}),
    }
    return [path, write_json(path.with_suffix(".json"), sidecar)]


def _space_meta(space) -> dict:
    if isinstance(space, DickeSpace):
        return {"kind": "dicke", "num_atoms": space.num_atoms,
                "basis": {"m": space.m_values.tolist()}}
    if isinstance(space, FockSpace):
        return {"kind": "fock", "cutoff": space.cutoff,
                "basis": {"n": space.n_values.tolist()}}
    if isinstance(space, JointSpace):
        return {"kind": "joint",
                "dicke": _space_meta(space.dicke),
                "fock": _space_meta(space.fock),
                "ordering": "m-major"}
    raise TypeError(f"unknown space {type(space)!r}")


def _space_from_meta(meta: dict):
    kind = meta["kind"]
    if kind == "dicke":
        return DickeSpace(meta["num_atoms"])
    if kind == "fock":
        return FockSpace(meta["cutoff"])
    if kind == "joint":
        return JointSpace(_space_from_meta(meta["dicke"]), _space_from_meta(meta["fock"]))
    raise ValueError(f"unknown space kind {kind!r}")


def write_state_json(path: Path, state: PureState | DensityMatrix) -> Path:
    doc = {"space": _space_meta(state.space), "metadata": _jsonable(state.metadata)}
    if isinstance(state, PureState):
        doc["type"] = "pure"
        doc["amplitudes"] = [[a.real, a.imag] for a in state.amplitudes]
    else:
        doc["type"] = "density"
        flat = state.matrix.ravel()
        doc["matrix"] = [[v.real, v.imag] for v in flat]
    return write_json(Path(path), doc)


def read_state_json(path: Path) -> PureState | DensityMatrix:
    doc = json.loads(Path(path).read_text())
    space = _space_from_meta(doc["space"])
    if doc["type"] == "pure":
        amp = np.array([re + 1j * im for re, im in doc["amplitudes"]])
        return PureState(space, amp, metadata=doc.get("metadata", {}))
    flat = np.array([re + 1j * im for re, im in doc["matrix"]])
    return DensityMatrix(space, flat.reshape(space.dim, space.dim),
                         metadata=doc.get("metadata", {}))


def write_region_csv(path: Path, rows: list[dict]) -> Path:
    """Achievable-region point cloud; one row per (scan point, tau)."""
    path = Path(path)
    fields = ["num_atoms", "amp", "var_min_phi", "var_fixed_phi", "tau",
              "alpha_re", "alpha_im", "tau1", "theta_r", "chi"]
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: f"{row[k]:.12g}" if isinstance(row[k], float)
                             else row[k] for k in fields})
    return path


def write_pgm(path: Path, values: np.ndarray) -> Path:
    """8-bit PGM quick-look of a grid, max-scaled (no rendering deps)."""
    path = Path(path)
    v = np.asarray(values, dtype=float)
    top = v.max()
    img = np.zeros_like(v, dtype=np.uint8) if top <= 0 else \
        np.round(255 * np.clip(v, 0, None) / top).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        f.write(img[::-1].tobytes())    # flip so increasing row plots upward
    return path


def write_sector_table(path: Path, joint: JointSpace) -> Path:
    return write_json(Path(path), {"sectors": joint.sector_table()})


def write_blocked_operator_csv(directory: Path, op: BlockedOperator,
                               prefix: str = "block") -> list[Path]:
    """One CSV (row, col, re, im) per sector block, for debugging."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for sec, blk in zip(op.joint.sectors, op.blocks):
        p = directory / f"{prefix}_k{sec.k:04d}.csv"
        with open(p, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["row", "col", "re", "im"])
            for r in range(sec.dim):
                for c in range(sec.dim):
                    v = blk[r, c]
                    if v != 0:
                        writer.writerow([r, c, f"{v.real:.17g}", f"{v.imag:.17g}"])
        written.append(p)
    return written


class Manifest:
    """Collects artifact paths and writes manifest.json with checksums."""

    def __init__(self, output_dir: Path, config: dict | None = None):
        self.output_dir = Path(output_dir)
        self.config = config or {}
        self.files: list[Path] = []

    def add(self, paths) -> None:
        if isinstance(paths, (str, Path)):
            paths = [paths]
        self.files.extend(Path(p) for p in paths)

    def write(self) -> Path:
        entries = []
        for p in sorted(set(self.files)):
            entries.append({
                "path": str(p.relative_to(self.output_dir)),
                "sha256": sha256_of(p),
                "bytes": p.stat().st_size,
            })
        doc = {"config": _jsonable(self.config), "files": entries}
        return write_json(self.output_dir / "manifest.json", doc)
