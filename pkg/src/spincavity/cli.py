"""Command-line entry point.

Every subcommand reads a JSON configuration, writes its artifacts into the
configured output directory, and finishes with a manifest listing each file
with a sha256 checksum.  Exit codes: 0 success, 1 numerical/module failure,
2 configuration error; failures print a machine-readable JSON line.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .artifacts import (
    Manifest,
    read_state_json,
    write_blocked_operator_csv,
    write_bloch_grid,
    write_json,
    write_pgm,
    write_qgrid,
    write_region_csv,
    write_sector_table,
    write_series_csv,
    write_state_json,
)
from .dynamics import check_heisenberg_identities, diagonalize, evolve
from .errors import ConfigError, SpinCavityError
from .operators import interaction_hamiltonian
from .pipeline import (
    emission_window,
    load_config,
    run_pipeline,
    scan_achievable_region,
    stage1_prepare,
    stage2_auto_orient,
    stage2_rotate,
    stage3_radiate,
)
from .quasiprob import field_q, spin_husimi
from .spaces import DickeSpace, FockSpace, JointSpace
from .squeezing import feasibility_report, squeezing_report, thermal_occupancy
from .states import (
    excited_spin_state,
    fock_state,
    product_state,
    spin_vector,
)


def _read_config(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError("<config>", f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("<config>", f"malformed JSON: {exc}") from exc


def _out_dir(config_doc: dict, override: str | None) -> Path:
    out = Path(override or config_doc.get("output_dir", "out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _stage3_artifacts(result, out: Path, manifest: Manifest) -> None:
    manifest.add(write_series_csv(out / "series.csv", result.series, sidecar={
        "tau_star": result.tau_star,
        "phi_grid": result.phi_grid.tolist(),
        "conservation": result.conservation,
    }))
    quad = {
        "tau": result.tau_grid.tolist(),
        "var_min": result.var_min.tolist(),
        "phi_star": result.phi_star.tolist(),
        "var_fixed_phi": result.var_fixed.tolist(),
        "var_amplitude": result.var_amp.tolist(),
        "var_tangential": result.var_tan.tolist(),
        "amp": result.amp.tolist(),
        "theta_from_minus_z": result.theta_from_minus_z.tolist(),
        "tau_star": result.tau_star,
        "amp_floor": result.amp_floor,
    }
    manifest.add(write_json(out / "quadratures.json", quad))
    manifest.add(write_state_json(out / "field_rho.json", result.field_rho))


def cmd_prep(doc: dict, out: Path, manifest: Manifest) -> None:
    config = load_config(doc)
    result = stage1_prepare(config.num_atoms, config.alpha, tau1=config.tau1,
                            tau1_range=config.tau1_range,
                            spin_floor_frac=config.spin_floor_frac,
                            n_max=config.n_max)
    manifest.add(write_state_json(out / "rho_atom.json", result.rho_atom))
    manifest.add(write_json(out / "report.json", {
        "stage": "prep",
        "tau1": result.tau1,
        "alpha": {"re": result.alpha.real, "im": result.alpha.imag},
        "fock_cutoff": result.fock_cutoff,
        "tail_mass": result.tail_mass,
        "zeta": result.zeta,
        "squeezing": result.report.to_json(),
    }))
    curve_doc = {"columns": ["tau", "zeta", "lambda_min", "mean_spin_len"],
                 "rows": result.curve.tolist()}
    manifest.add(write_json(out / "search_curve.json", curve_doc))


def cmd_rotate(doc: dict, out: Path, manifest: Manifest, state_path: str) -> None:
    config = load_config(doc)
    rho = read_state_json(state_path)
    rot = config.rotation
    if rot["mode"] == "auto":
        rotated, info = stage2_auto_orient(rho, rot["theta"], rot["axis"])
    elif rot["mode"] == "manual":
        rotated = stage2_rotate(rho, rot["theta"], rot["phi"])
        info = dict(rot)
    else:
        raise ConfigError("rotation", "rotate needs mode 'auto' or {theta, phi}")
    manifest.add(write_state_json(out / "rho_rotated.json", rotated))
    manifest.add(write_json(out / "report.json", {
        "stage": "rotate",
        "rotation": info,
        "squeezing": squeezing_report(rotated).to_json(),
    }))


def cmd_radiate(doc: dict, out: Path, manifest: Manifest, state_path: str) -> None:
    config = load_config(doc)
    rho = read_state_json(state_path)
    tau3 = config.tau3_grid
    if tau3 is None:
        tau3 = np.linspace(0.0, emission_window(spin_vector(rho).magnitude), 121)
    result = stage3_radiate(rho, tau3, config.phi_grid)
    _stage3_artifacts(result, out, manifest)


def cmd_pipeline(doc: dict, out: Path, manifest: Manifest) -> None:
    config = load_config(doc)
    result = run_pipeline(config)
    manifest.add(write_state_json(out / "rho_atom.json", result.stage1.rho_atom))
    manifest.add(write_state_json(out / "rho_rotated.json", result.rho_rotated))
    _stage3_artifacts(result.stage3, out, manifest)
    manifest.add(write_qgrid(out / "qgrid.csv", result.qgrid,
                             extra={"tau_star": result.stage3.tau_star}))
    manifest.add(write_bloch_grid(out / "husimi.csv", result.husimi))
    manifest.add(write_json(out / "report.json", {
        "stage": "pipeline",
        "tau1": result.stage1.tau1,
        "zeta": result.stage1.zeta,
        "stage1_squeezing": result.stage1.report.to_json(),
        "rotation": result.rotation_info,
        "rotated_squeezing": result.report_rotated.to_json(),
        "tau_star": result.stage3.tau_star,
        "profile_match": {"matched": result.profile_matched,
                          "swapped": result.profile_swapped},
    }))


def cmd_scan_region(doc: dict, out: Path, manifest: Manifest) -> None:
    scan_doc = doc.get("scan")
    if not isinstance(scan_doc, dict):
        raise ConfigError("scan", "missing scan section")
    counts = scan_doc.get("atom_counts")
    if (not isinstance(counts, list) or not counts
            or not all(isinstance(n, int) and n >= 1 for n in counts)):
        raise ConfigError("scan.atom_counts", "expected a list of positive integers")
    kwargs = {}
    for key in ("alphas", "tau1_values", "theta_r_values", "chi_values"):
        if key in scan_doc:
            kwargs[key] = list(map(float, scan_doc[key]))
    for key in ("tau3_points", "sample_threshold", "sample_budget", "seed"):
        if key in scan_doc:
            if not isinstance(scan_doc[key], int):
                raise ConfigError(f"scan.{key}", "expected an integer")
            kwargs[key] = scan_doc[key]
    result = scan_achievable_region(counts, **kwargs)
    manifest.add(write_region_csv(out / "region.csv", result.rows))
    summary = {
        "seed": result.seed,
        "params": result.params,
        "per_n": {
            str(n): {
                "points": int(len(data["points"])),
                "max_amp": data["max_amp"],
                "hull": None if data["hull"] is None else data["hull"].tolist(),
            } for n, data in result.per_n.items()
        },
    }
    manifest.add(write_json(out / "region_summary.json", summary))


def _load_state_for_grid(doc: dict, state_path: str | None):
    if state_path:
        return read_state_json(state_path)
    config = load_config(doc)
    # no state given: use the bare excited-atoms + vacuum product
    dicke = DickeSpace(config.num_atoms)
    fock = FockSpace(config.n_max or config.num_atoms)
    return product_state(excited_spin_state(dicke), fock_state(0, fock))


def cmd_qfunc(doc: dict, out: Path, manifest: Manifest, state_path: str | None,
              pgm: bool) -> None:
    state = _load_state_for_grid(doc, state_path)
    grid = field_q(state)
    manifest.add(write_qgrid(out / "qgrid.csv", grid))
    if pgm:
        manifest.add(write_pgm(out / "qgrid.pgm", grid.values))


def cmd_husimi(doc: dict, out: Path, manifest: Manifest, state_path: str | None,
               pgm: bool) -> None:
    if state_path:
        state = read_state_json(state_path)
    else:
        config = load_config(doc)
        state = excited_spin_state(DickeSpace(config.num_atoms))
    grid = spin_husimi(state)
    manifest.add(write_bloch_grid(out / "husimi.csv", grid))
    if pgm:
        manifest.add(write_pgm(out / "husimi.pgm", grid.values))


def cmd_verify(doc: dict, out: Path, manifest: Manifest) -> None:
    """Identity and conservation suite; exits nonzero when residuals exceed
    their tolerances."""
    ver = doc.get("verify", {})
    num_atoms = ver.get("atom_counts", [1, 2])
    cutoffs = ver.get("cutoffs", [4, 8])
    phis = ver.get("phis", [0.0, math.pi / 4, math.pi / 2])
    identity_tol = ver.get("identity_tol", 1e-12)
    conservation_tol = ver.get("conservation_tol", 1e-10)

    identities = []
    worst = 0.0
    for n in num_atoms:
        for cutoff in cutoffs:
            joint = JointSpace(DickeSpace(n), FockSpace(cutoff))
            for phi in phis:
                res = check_heisenberg_identities(joint, phi)
                identities.append({
                    "num_atoms": n, "cutoff": cutoff, "phi": phi,
                    "eq_field": res.eq_field,
                    "eq_field_truncation": res.eq_field_truncation,
                    "eq_spin": res.eq_spin,
                    "eq_sz": res.eq_sz,
                })
                worst = max(worst, res.max_residual)

    # vacuum Rabi against the closed form
    dicke, fock = DickeSpace(1), FockSpace(4)
    joint = JointSpace(dicke, fock)
    ham = interaction_hamiltonian(joint)
    prop = diagonalize(ham)
    psi0 = product_state(excited_spin_state(dicke), fock_state(0, fock), joint)
    taus = np.linspace(0.0, 10.0, 201)
    rabi_dev = 0.0
    for tau in taus:
        psi = evolve(prop, psi0, tau)
        p_excited = abs(psi.amplitudes[joint.joint_index(1, 0)]) ** 2
        rabi_dev = max(rabi_dev, abs(p_excited - math.cos(tau) ** 2))

    # conservation along a generic radiating trajectory
    from .dynamics import series
    from .operators import excitation_kron, hamiltonian_kron
    from .states import bloch_state
    dicke4 = DickeSpace(4)
    fock4 = FockSpace(4)
    joint4 = JointSpace(dicke4, fock4)
    prop4 = diagonalize(interaction_hamiltonian(joint4))
    psi4 = product_state(bloch_state(2.3, 0.4, dicke4), fock_state(0, fock4), joint4)
    trace = series(prop4, psi4, np.linspace(0.0, 4.0, 81), observables={
        "excitation": excitation_kron(joint4),
        "energy": hamiltonian_kron(joint4),
    })
    exc = trace.values["excitation"].real
    ene = trace.values["energy"].real
    conservation_dev = max(
        (exc.max() - exc.min()) / max(1.0, abs(exc.mean())),
        (ene.max() - ene.min()) / max(1.0, abs(ene.mean())))

    report = {
        "identities": identities,
        "max_identity_residual": worst,
        "vacuum_rabi_deviation": rabi_dev,
        "conservation_deviation": conservation_dev,
        "propagator_residual": prop.max_residual,
        "pass": bool(worst <= identity_tol and rabi_dev <= conservation_tol
                     and conservation_dev <= conservation_tol),
        "identity_tol": identity_tol,
        "conservation_tol": conservation_tol,
    }
    manifest.add(write_json(out / "verify_report.json", report))
    manifest.add(write_sector_table(out / "sectors.json", joint))
    manifest.add(write_blocked_operator_csv(out / "hamiltonian_blocks", ham))
    if not report["pass"]:
        raise SpinCavityError(
            f"verification failed: identity residual {worst:.3e}, "
            f"rabi deviation {rabi_dev:.3e}, conservation {conservation_dev:.3e}")


def cmd_feasibility(doc: dict, out: Path, manifest: Manifest) -> None:
    sec = doc.get("feasibility")
    if not isinstance(sec, dict):
        raise ConfigError("feasibility", "missing feasibility section")
    try:
        rep = feasibility_report(float(sec["g_hz"]), float(sec["tau"]),
                                 float(sec["lifetime_s"]),
                                 float(sec["cavity_lifetime_s"]))
    except KeyError as exc:
        raise ConfigError(f"feasibility.{exc.args[0]}", "missing field") from exc
    out_doc = rep.to_json()
    text = rep.to_text()
    if "frequency_hz" in sec and "temperature_k" in sec:
        occ = thermal_occupancy(float(sec["frequency_hz"]),
                                float(sec["temperature_k"]))
        out_doc["thermal_occupancy"] = occ
        text += (f"\nthermal occupancy at {sec['frequency_hz']:.3e} Hz, "
                 f"{sec['temperature_k']} K: {occ:.4g}")
    print(text)
    manifest.add(write_json(out / "feasibility.json", out_doc))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincavity",
        description="Squeezed collective atoms radiating tailored few-photon "
                    "states (resonant rotating frame, tau = g t).")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_state in [
        ("prep", False), ("rotate", True), ("radiate", True), ("pipeline", False),
        ("scan-region", False), ("qfunc", False), ("husimi", False),
        ("verify", False), ("feasibility", False),
    ]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON configuration file")
        p.add_argument("--out", default=None, help="output directory override")
        if needs_state:
            p.add_argument("--state", required=True, help="input state JSON")
        if name in ("qfunc", "husimi"):
            p.add_argument("--state", default=None, help="input state JSON")
            p.add_argument("--pgm", action="store_true", help="also dump a PGM heatmap")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        doc = _read_config(args.config)
        out = _out_dir(doc, args.out)
        manifest = Manifest(out, config=doc)
        if args.command == "prep":
            cmd_prep(doc, out, manifest)
        elif args.command == "rotate":
            cmd_rotate(doc, out, manifest, args.state)
        elif args.command == "radiate":
            cmd_radiate(doc, out, manifest, args.state)
        elif args.command == "pipeline":
            cmd_pipeline(doc, out, manifest)
        elif args.command == "scan-region":
            cmd_scan_region(doc, out, manifest)
        elif args.command == "qfunc":
            cmd_qfunc(doc, out, manifest, args.state, args.pgm)
        elif args.command == "husimi":
            cmd_husimi(doc, out, manifest, args.state, args.pgm)
        elif args.command == "verify":
            cmd_verify(doc, out, manifest)
        elif args.command == "feasibility":
            cmd_feasibility(doc, out, manifest)
        manifest.write()
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "field": exc.field,
                          "message": str(exc)}))
        return 2
    except SpinCavityError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
