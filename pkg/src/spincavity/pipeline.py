"""The three-stage radiation protocol and the achievable-region scan.

Stage 1 squeezes the excited atoms by resonant interaction with a coherent
field and traces the field out.  Stage 2 rotates the (generally mixed)
reduced state so the mean spin points at a chosen angle from the -z axis
with the squeezed covariance axis along a chosen lab direction.  Stage 3
radiates into a fresh vacuum cavity and tracks the field moments; the
optimal emission time minimizes the phi-minimized quadrature variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .dynamics import (
    Evolver,
    ObservableSeries,
    StateEnsemble,
    diagonalize,
    series,
)
from .errors import ConfigError, DegenerateMeanSpin
from .operators import (
    build_field_matrices,
    build_spin_matrices,
    euler_zyz_unitary,
    excitation_kron,
    field_only,
    hamiltonian_kron,
    interaction_hamiltonian,
    rotation_operator,
    spin_only,
)
from .quasiprob import BlochGrid, QGrid, field_q, profile_match, spin_husimi
from .spaces import DickeSpace, FockSpace, JointSpace
from .squeezing import (
    SqueezingReport,
    min_transverse_variance,
    squeezing_report,
)
from .states import (
    DensityMatrix,
    PureState,
    coherent_state,
    excited_spin_state,
    fock_cutoff_for,
    fock_state,
    partial_trace,
    product_state,
    spin_vector,
)


def emission_window(s0: float, margin: float = 1.25) -> float:
    """Length of the radiation stage: the quadrature-variance minimum sits at
    the transfer time pi/(2 sqrt(2 S0)); the protocol extracts the field
    before reabsorption, so the window ends shortly after that minimum."""
    return margin * math.pi / (2 * math.sqrt(2 * max(s0, 0.25)))


def stage1_cutoff(num_atoms: int, alpha: complex, tail_tol: float = 1e-12) -> int:
    """Fock cutoff policy for the preparation cavity: the smallest coherent
    cutoff with tail mass <= tail_tol, plus 2S headroom.

    The headroom keeps every excitation sector that carries initial weight
    complete (the atoms can dump at most 2S extra quanta into the field), so
    doubling the cutoff moves observables at the tail-tolerance level only.
    """
    return num_atoms + fock_cutoff_for(alpha, tail_tol)


class PreparationEngine:
    """Excited atoms + coherent field under the resonant coupling; exposes
    the reduced atomic state and the squeezing figure of merit at any tau."""

    def __init__(self, num_atoms: int, alpha: complex,
                 n_max: int | None = None, tail_tol: float = 1e-12):
        self.num_atoms = num_atoms
        self.alpha = complex(alpha)
        self.dicke = DickeSpace(num_atoms)
        cutoff = n_max if n_max is not None else stage1_cutoff(num_atoms, alpha, tail_tol)
        self.fock = FockSpace(cutoff, tail_tol=tail_tol)
        self.joint = JointSpace(self.dicke, self.fock)
        self.propagator = diagonalize(interaction_hamiltonian(self.joint))
        field_state = coherent_state(alpha, self.fock, tail_tol)
        self.tail_mass = field_state.metadata.get("tail_mass", 0.0)
        psi0 = product_state(excited_spin_state(self.dicke), field_state, self.joint)
        self._evolver = Evolver(self.propagator, psi0)

    def reduced_at(self, tau: float) -> DensityMatrix:
        (_, psi), = self._evolver.at(tau)
        return partial_trace(psi, "atom")

    def joint_at(self, tau: float) -> PureState:
        (_, psi), = self._evolver.at(tau)
        return psi

    def merit_at(self, tau: float, spin_floor: float) -> tuple[float, float, float]:
        """(zeta, lambda_min, |<S>|); zeta = inf when infeasible."""
        rho = self.reduced_at(tau)
        mean_len = spin_vector(rho).magnitude
        try:
            trans = min_transverse_variance(rho)
        except DegenerateMeanSpin:
            return math.inf, math.nan, mean_len
        zeta = trans.lambda_min / (trans.mean_magnitude / 2)
        if mean_len < spin_floor:
            return math.inf, trans.lambda_min, mean_len
        return zeta, trans.lambda_min, mean_len


@dataclass
class Stage1Result:
    rho_atom: DensityMatrix
    report: SqueezingReport
    num_atoms: int
    alpha: complex
    tau1: float
    fock_cutoff: int
    tail_mass: float
    zeta: float
    curve: np.ndarray       # columns: tau, zeta, lambda_min, |<S>|


def _golden_min(fn, a: float, b: float, tol: float = 1e-6,
                max_iter: int = 80) -> tuple[float, float]:
    invphi = (math.sqrt(5) - 1) / 2
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = fn(x1), fn(x2)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = fn(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = fn(x2)
    return (x1, f1) if f1 <= f2 else (x2, f2)


def stage1_prepare(num_atoms: int, alpha: complex,
                   tau1: float | None = None,
                   tau1_range: tuple[float, float, int] | None = None,
                   spin_floor_frac: float = 0.4,
                   n_max: int | None = None,
                   tail_tol: float = 1e-12,
                   refine: bool = True) -> Stage1Result:
    """Squeeze by interaction with |alpha>, then trace out the field.

    With `tau1_range` = (start, stop, points) the interaction time is chosen
    to minimize zeta = lambda_min / (|<S>|/2) on the grid, subject to
    |<S>| >= spin_floor_frac * S, then refined by golden section between the
    neighbours of the best grid point.
    """
    if (tau1 is None) == (tau1_range is None):
        raise ValueError("provide exactly one of tau1 or tau1_range")
    engine = PreparationEngine(num_atoms, alpha, n_max=n_max, tail_tol=tail_tol)
    floor = spin_floor_frac * engine.dicke.spin

    if tau1 is not None:
        z, lam, mlen = engine.merit_at(tau1, floor)
        curve = np.array([[tau1, z, lam, mlen]])
        best_tau = tau1
    else:
        start, stop, points = tau1_range
        taus = np.linspace(start, stop, points)
        rows = [(t, *engine.merit_at(t, floor)) for t in taus]
        curve = np.array(rows)
        feasible = np.isfinite(curve[:, 1])
        if not feasible.any():
            raise DegenerateMeanSpin(
                "no tau in the search range keeps |<S>| above the floor")
        best = int(np.nanargmin(np.where(feasible, curve[:, 1], np.inf)))
        best_tau = float(taus[best])
        if refine and 0 < best < len(taus) - 1:
            t_ref, z_ref = _golden_min(
                lambda t: engine.merit_at(t, floor)[0],
                float(taus[best - 1]), float(taus[best + 1]))
            if math.isfinite(z_ref) and z_ref <= curve[best, 1]:
                best_tau = t_ref

    rho = engine.reduced_at(best_tau)
    report = squeezing_report(rho)
    return Stage1Result(
        rho_atom=rho,
        report=report,
        num_atoms=num_atoms,
        alpha=complex(alpha),
        tau1=best_tau,
        fock_cutoff=engine.fock.cutoff,
        tail_mass=engine.tail_mass,
        zeta=report.squeezing_ratio,
        curve=curve,
    )


def stage2_rotate(rho_atom: DensityMatrix | PureState, theta_r: float,
                  phi_r: float) -> DensityMatrix:
    """U rho U^dag with U = exp(-i phi_r Sz) exp(-i theta_r Sy)."""
    u = rotation_operator(theta_r, phi_r, rho_atom.space)
    rho = rho_atom.matrix if isinstance(rho_atom, DensityMatrix) \
        else rho_atom.density().matrix
    return DensityMatrix(rho_atom.space, u @ rho @ u.conj().T)


def _euler_zyz(r: np.ndarray) -> tuple[float, float, float]:
    """Angles (a, b, c) with R = Rz(a) Ry(b) Rz(c)."""
    cb = max(-1.0, min(1.0, r[2, 2]))
    b = math.acos(cb)
    if abs(math.sin(b)) > 1e-12:
        a = math.atan2(r[1, 2], r[0, 2])
        c = math.atan2(r[2, 1], -r[2, 0])
    elif cb > 0:
        a = math.atan2(r[1, 0], r[0, 0])
        c = 0.0
    else:
        a = math.atan2(-r[1, 0], r[1, 1])
        c = 0.0
    return a, b, c


def stage2_auto_orient(rho_atom: DensityMatrix | PureState, theta_target: float,
                       squeeze_axis: str | float = "y",
                       azimuth: float = math.pi / 2) -> tuple[DensityMatrix, dict]:
    """Rotate so the mean spin sits at `theta_target` from the -z axis (tilted
    towards +y by default, so <Sx> = 0) with the minimum-variance transverse
    axis along the requested lab direction: "x" for phase squeezing, "y" for
    amplitude squeezing, or an explicit angle chi in the transverse plane.
    """
    if isinstance(rho_atom, PureState):
        rho_atom = rho_atom.density()
    trans = min_transverse_variance(rho_atom)
    n_cur = trans.mean / trans.mean_magnitude
    u_cur = trans.min_direction
    u_cur = u_cur - (u_cur @ n_cur) * n_cur
    u_cur = u_cur / np.linalg.norm(u_cur)

    st, ct = math.sin(theta_target), math.cos(theta_target)
    m_tgt = np.array([st * math.cos(azimuth), st * math.sin(azimuth), -ct])
    if squeeze_axis == "x":
        chi = 0.0
    elif squeeze_axis == "y":
        chi = math.pi / 2
    else:
        chi = float(squeeze_axis)
    e_x = np.array([1.0, 0.0, 0.0])
    e_x = e_x - (e_x @ m_tgt) * m_tgt
    e_x = e_x / np.linalg.norm(e_x)
    e_y = np.cross(m_tgt, e_x)
    t_tgt = math.cos(chi) * e_x + math.sin(chi) * e_y

    a_mat = np.column_stack([n_cur, u_cur, np.cross(n_cur, u_cur)])
    b_mat = np.column_stack([m_tgt, t_tgt, np.cross(m_tgt, t_tgt)])
    rot = b_mat @ a_mat.T
    alpha_e, beta_e, gamma_e = _euler_zyz(rot)
    u = euler_zyz_unitary(alpha_e, beta_e, gamma_e, rho_atom.space)
    rotated = DensityMatrix(rho_atom.space, u @ rho_atom.matrix @ u.conj().T)
    info = {
        "mode": "auto",
        "theta_target": theta_target,
        "azimuth": azimuth,
        "chi": chi,
        "euler_zyz": [alpha_e, beta_e, gamma_e],
    }
    return rotated, info


@dataclass
class Stage3Result:
    """Radiation-stage series plus derived quadrature diagnostics."""

    series: ObservableSeries
    tau_grid: np.ndarray
    phi_grid: np.ndarray
    var_phi: np.ndarray          # (n_tau, n_phi)
    var_min: np.ndarray
    phi_star: np.ndarray
    var_fixed: np.ndarray        # var(a_{pi/2}), the a_2 quadrature
    var_amp: np.ndarray          # radial quadrature; NaN while |<a>| < amp_floor
    var_tan: np.ndarray          # tangential quadrature; NaN likewise
    amp: np.ndarray              # |<a>|
    mean_spin_len: np.ndarray
    theta_from_minus_z: np.ndarray
    tau_star: float
    tau_star_index: int
    field_rho: DensityMatrix
    atom_rho_at_star: DensityMatrix
    conservation: dict
    amp_floor: float


class RadiationEngine:
    """Vacuum-cavity emission stage for a fixed atom number.

    Builds the sector-blocked propagator once (the joint space holds the full
    2S excitations) and reuses it for every initial atomic state.
    """

    def __init__(self, dicke: DickeSpace, n_max: int | None = None):
        self.dicke = dicke
        self.fock = FockSpace(n_max if n_max is not None else dicke.twice_spin)
        self.joint = JointSpace(self.dicke, self.fock)
        self.propagator = diagonalize(interaction_hamiltonian(self.joint))
        s = build_spin_matrices(self.dicke)
        f = build_field_matrices(self.fock)
        self.observables = {
            "a": field_only(f.a, self.joint),
            "a2": field_only(f.a @ f.a, self.joint),
            "n": field_only(f.a_dagger @ f.a, self.joint),
            "sx": spin_only(s.sx, self.joint),
            "sy": spin_only(s.sy, self.joint),
            "sz": spin_only(s.sz, self.joint),
            "energy": hamiltonian_kron(self.joint),
            "excitation": excitation_kron(self.joint),
        }
        self.vacuum = fock_state(0, self.fock)

    def _initial(self, atomic_state) -> PureState | StateEnsemble:
        if isinstance(atomic_state, PureState):
            return product_state(atomic_state, self.vacuum, self.joint)
        return StateEnsemble.from_atomic_density(atomic_state, self.vacuum, self.joint)

    def run(self, atomic_state, tau_grid: np.ndarray,
            phi_grid: np.ndarray | None = None,
            amp_floor: float = 1e-6) -> Stage3Result:
        tau_grid = np.asarray(tau_grid, dtype=float)
        if phi_grid is None:
            phi_grid = np.linspace(0.0, math.pi, 8, endpoint=False)
        phi_grid = np.asarray(phi_grid, dtype=float)
        state0 = self._initial(atomic_state)
        out = series(self.propagator, state0, tau_grid, observables=self.observables,
                     provenance={
                         "stage": "radiate",
                         "num_atoms": self.dicke.num_atoms,
                         "fock_cutoff": self.fock.cutoff,
                         "sector_count": len(self.joint.sectors),
                         "propagator_residual": self.propagator.max_residual,
                     })

        a = out.values["a"]
        m2 = out.values["a2"] - a**2
        base = 0.25 + 0.5 * (out.values["n"].real - np.abs(a) ** 2)
        var_phi = base[:, None] + 0.5 * (np.exp(-2j * phi_grid)[None, :]
                                         * m2[:, None]).real
        var_min = base - 0.5 * np.abs(m2)
        phi_star = np.mod((np.angle(m2) + math.pi) / 2, math.pi)
        var_fixed = base + 0.5 * (np.exp(-2j * (math.pi / 2)) * m2).real

        amp = np.abs(a)
        radial = np.angle(a)
        with_amp = amp >= amp_floor
        var_amp = np.where(with_amp,
                           base + 0.5 * (np.exp(-2j * radial) * m2).real, np.nan)
        var_tan = np.where(with_amp,
                           base - 0.5 * (np.exp(-2j * radial) * m2).real, np.nan)

        svec = np.vstack([out.values["sx"].real, out.values["sy"].real,
                          out.values["sz"].real])
        mean_len = np.linalg.norm(svec, axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            theta = np.arccos(np.clip(-svec[2] / np.where(mean_len > 0, mean_len, np.nan),
                                      -1.0, 1.0))

        idx = int(np.argmin(var_min))
        tau_star = float(tau_grid[idx])
        branches = Evolver(self.propagator, state0).at(tau_star)
        rho_f = np.zeros((self.fock.dim, self.fock.dim), dtype=complex)
        rho_a = np.zeros((self.dicke.dim, self.dicke.dim), dtype=complex)
        for w, psi in branches:
            rho_f += w * partial_trace(psi, "field").matrix
            rho_a += w * partial_trace(psi, "atom").matrix

        exc = out.values["excitation"].real
        ene = out.values["energy"].real
        conservation = {
            "excitation_spread": float(exc.max() - exc.min()),
            "excitation_variance": float(np.var(exc)),
            "energy_spread": float(ene.max() - ene.min()),
            "energy_mean": float(ene.mean()),
        }

        return Stage3Result(
            series=out,
            tau_grid=tau_grid,
            phi_grid=phi_grid,
            var_phi=var_phi,
            var_min=var_min,
            phi_star=phi_star,
            var_fixed=var_fixed,
            var_amp=var_amp,
            var_tan=var_tan,
            amp=amp,
            mean_spin_len=mean_len,
            theta_from_minus_z=theta,
            tau_star=tau_star,
            tau_star_index=idx,
            field_rho=DensityMatrix(self.fock, rho_f),
            atom_rho_at_star=DensityMatrix(self.dicke, rho_a),
            conservation=conservation,
            amp_floor=amp_floor,
        )


def stage3_radiate(rho_atom, tau3_grid: np.ndarray,
                   phi_grid: np.ndarray | None = None,
                   n_max: int | None = None,
                   amp_floor: float = 1e-6) -> Stage3Result:
    """One-shot radiation run; see RadiationEngine for batch use."""
    space = rho_atom.space
    engine = RadiationEngine(space, n_max=n_max)
    return engine.run(rho_atom, tau3_grid, phi_grid, amp_floor)


@dataclass
class PrepConfig:
    num_atoms: int
    alpha: complex
    tau1: float | None
    tau1_range: tuple[float, float, int] | None
    rotation: dict
    tau3_grid: np.ndarray | None        # None: sized from the emission window
    phi_grid: np.ndarray
    n_max: int | None
    seed: int
    output_dir: str
    spin_floor_frac: float = 0.4
    projective: bool = False

    def to_json(self) -> dict:
        return {
            "num_atoms": self.num_atoms,
            "alpha": {"re": self.alpha.real, "im": self.alpha.imag},
            "tau1": self.tau1,
            "tau1_range": list(self.tau1_range) if self.tau1_range else None,
            "rotation": self.rotation,
            "tau3_grid": None if self.tau3_grid is None else self.tau3_grid.tolist(),
            "phi_grid": self.phi_grid.tolist(),
            "n_max": self.n_max,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "spin_floor_frac": self.spin_floor_frac,
            "projective": self.projective,
        }


def _grid_from(doc, name: str) -> np.ndarray:
    if isinstance(doc, dict):
        for key in ("start", "stop", "points"):
            if key not in doc:
                raise ConfigError(name, f"grid spec missing '{key}'")
        if doc["points"] < 2:
            raise ConfigError(name, "grid needs at least 2 points")
        grid = np.linspace(doc["start"], doc["stop"], int(doc["points"]))
    elif isinstance(doc, list):
        grid = np.asarray(doc, dtype=float)
    else:
        raise ConfigError(name, f"expected grid spec or list, got {type(doc).__name__}")
    if len(grid) > 1 and not np.all(np.diff(grid) > 0):
        raise ConfigError(name, "grid must be strictly increasing")
    return grid


_MISSING = object()


def load_config(doc: dict) -> PrepConfig:
    """Validate a JSON run configuration; ConfigError names the bad field."""
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "configuration must be a JSON object")

    def need(name, types, default=_MISSING):
        if name not in doc:
            if default is not _MISSING:
                return default
            raise ConfigError(name, "missing required field")
        val = doc[name]
        if not isinstance(val, types):
            raise ConfigError(name, f"expected {types}, got {type(val).__name__}")
        return val

    num_atoms = need("num_atoms", int)
    if num_atoms < 1:
        raise ConfigError("num_atoms", "must be >= 1")
    alpha_doc = need("alpha", dict, {"re": 0.0, "im": 0.0})
    try:
        alpha = complex(float(alpha_doc["re"]), float(alpha_doc.get("im", 0.0)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("alpha", f"expected {{re, im}} numbers: {exc}") from exc

    tau1 = doc.get("tau1")
    tau1_range = None
    if "tau1_range" in doc:
        tr = doc["tau1_range"]
        if not isinstance(tr, dict):
            raise ConfigError("tau1_range", "expected {start, stop, points}")
        try:
            tau1_range = (float(tr["start"]), float(tr["stop"]), int(tr["points"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError("tau1_range", str(exc)) from exc
        if tau1_range[0] < 0 or tau1_range[1] <= tau1_range[0]:
            raise ConfigError("tau1_range", "need 0 <= start < stop")
    if tau1 is not None:
        if not isinstance(tau1, (int, float)):
            raise ConfigError("tau1", "expected a number")
        if tau1 < 0:
            raise ConfigError("tau1", "must be >= 0")
        tau1 = float(tau1)
    if (tau1 is None) == (tau1_range is None):
        raise ConfigError("tau1", "provide exactly one of tau1 or tau1_range")

    rot_doc = doc.get("rotation", "auto")
    if rot_doc == "auto":
        rotation = {"mode": "auto", "theta": math.pi / 6, "axis": "y"}
    elif isinstance(rot_doc, dict) and rot_doc.get("mode") == "auto":
        axis = rot_doc.get("axis", "y")
        if axis not in ("x", "y") and not isinstance(axis, (int, float)):
            raise ConfigError("rotation.axis", "expected 'x', 'y', or an angle")
        rotation = {"mode": "auto",
                    "theta": float(rot_doc.get("theta", math.pi / 6)),
                    "axis": axis}
    elif isinstance(rot_doc, dict) and "theta" in rot_doc:
        rotation = {"mode": "manual", "theta": float(rot_doc["theta"]),
                    "phi": float(rot_doc.get("phi", 0.0))}
    elif rot_doc in (None, "none"):
        rotation = {"mode": "none"}
    else:
        raise ConfigError("rotation", "expected 'auto', 'none', or {theta, phi}")

    tau3_doc = doc.get("tau3_grid", "auto")
    if tau3_doc == "auto":
        tau3_grid = None        # sized from the emission window after stage 2
    else:
        tau3_grid = _grid_from(tau3_doc, "tau3_grid")
        if tau3_grid[0] < 0:
            raise ConfigError("tau3_grid", "times must be >= 0")
    phi_grid = _grid_from(doc.get("phi_grid",
                                  list(np.linspace(0, math.pi, 8, endpoint=False))),
                          "phi_grid")

    n_max_doc = doc.get("n_max", "auto")
    if n_max_doc == "auto":
        n_max = None
    elif isinstance(n_max_doc, int) and n_max_doc > 0:
        n_max = n_max_doc
    else:
        raise ConfigError("n_max", "expected 'auto' or a positive integer")

    seed = need("seed", int, 0)
    output_dir = need("output_dir", str, "out")
    floor = need("spin_floor_frac", (int, float), 0.4)
    projective = need("projective", bool, False)
    return PrepConfig(
        num_atoms=num_atoms, alpha=alpha, tau1=tau1, tau1_range=tau1_range,
        rotation=rotation, tau3_grid=tau3_grid, phi_grid=phi_grid, n_max=n_max,
        seed=seed, output_dir=output_dir, spin_floor_frac=float(floor),
        projective=projective,
    )


@dataclass
class PipelineResult:
    config: PrepConfig
    stage1: Stage1Result
    rho_rotated: DensityMatrix
    rotation_info: dict
    report_rotated: SqueezingReport
    stage3: Stage3Result
    qgrid: QGrid
    husimi: BlochGrid
    profile_matched: float
    profile_swapped: float


def run_pipeline(config: PrepConfig) -> PipelineResult:
    """Full protocol: prepare, orient, radiate, and compute the phase-space
    grids of the oriented atoms and of the field at the optimal time."""
    stage1 = stage1_prepare(
        config.num_atoms, config.alpha, tau1=config.tau1,
        tau1_range=config.tau1_range, spin_floor_frac=config.spin_floor_frac,
        n_max=config.n_max)
    rho = stage1.rho_atom
    if config.projective:
        w, v = np.linalg.eigh(rho.matrix)
        top = v[:, -1] / np.linalg.norm(v[:, -1])
        rho = DensityMatrix(rho.space, np.outer(top, top.conj()),
                            metadata={"projective": True, "weight": float(w[-1])})

    rot = config.rotation
    if rot["mode"] == "auto":
        rotated, info = stage2_auto_orient(rho, rot["theta"], rot["axis"])
    elif rot["mode"] == "manual":
        rotated = stage2_rotate(rho, rot["theta"], rot["phi"])
        info = dict(rot)
    else:
        rotated, info = rho, {"mode": "none"}
    report_rotated = squeezing_report(rotated)

    tau3_grid = config.tau3_grid
    if tau3_grid is None:
        s0 = spin_vector(rotated).magnitude
        tau3_grid = np.linspace(0.0, emission_window(s0), 121)
    stage3 = stage3_radiate(rotated, tau3_grid, config.phi_grid)
    # the radiation space holds the full 2S excitations, so support at the
    # top Fock level is physical rather than a truncation artifact
    qgrid = field_q(stage3.field_rho, top_occupancy_tol=None)
    husimi = spin_husimi(rotated)
    matched = profile_match(qgrid, husimi, mapping="transfer")
    swapped = profile_match(qgrid, husimi, mapping="swapped")
    return PipelineResult(
        config=config, stage1=stage1, rho_rotated=rotated, rotation_info=info,
        report_rotated=report_rotated, stage3=stage3, qgrid=qgrid, husimi=husimi,
        profile_matched=matched, profile_swapped=swapped,
    )


@dataclass
class RegionScan:
    atom_counts: list[int]
    rows: list[dict]
    per_n: dict[int, dict]
    seed: int
    params: dict = field(default_factory=dict)


def _hull_vertices(points: np.ndarray) -> np.ndarray | None:
    uniq = np.unique(points, axis=0)
    if len(uniq) < 3:
        return None
    try:
        hull = ConvexHull(uniq)
    except QhullError:
        return None
    return uniq[hull.vertices]


def scan_achievable_region(atom_counts,
                           alphas=None,
                           tau1_values=None,
                           theta_r_values=None,
                           chi_values=(0.0, math.pi / 4, math.pi / 2),
                           tau3_points: int = 61,
                           sample_threshold: int = 50,
                           sample_budget: int = 60,
                           seed: int = 0,
                           amp_floor: float = 1e-6,
                           spin_floor_frac: float = 0.1) -> RegionScan:
    """Sweep preparations and orientations, radiate, and record the
    (|<a>|, quadrature variance) pairs reached at every series time.

    Atom numbers at or above `sample_threshold` are subsampled to
    `sample_budget` (seeded) combinations; smaller ones run exhaustively.
    Results are merged in sorted job order, so reruns are deterministic.
    """
    if alphas is None:
        alphas = [0.75, 1.5, 2.5, 4.0, 6.0]
    if tau1_values is None:
        tau1_values = list(np.linspace(0.25, 3.0, 6))
    if theta_r_values is None:
        theta_r_values = list(np.linspace(math.pi / 12, 11 * math.pi / 12, 9))
    rng = np.random.default_rng(seed)

    rows: list[dict] = []
    per_n: dict[int, dict] = {}
    for num_atoms in sorted(atom_counts):
        dicke = DickeSpace(num_atoms)
        engine = RadiationEngine(dicke)
        preps: list[tuple[complex, float]] = [(0.0 + 0.0j, 0.0)]
        preps += [(complex(a), float(t)) for a in alphas for t in tau1_values]
        combos = [(alpha, tau1, float(th), float(chi))
                  for alpha, tau1 in preps
                  for th in theta_r_values
                  for chi in chi_values]
        if num_atoms >= sample_threshold and len(combos) > sample_budget:
            pick = rng.choice(len(combos), size=sample_budget, replace=False)
            combos = [combos[i] for i in sorted(pick)]

        prep_cache: dict[tuple[complex, float], DensityMatrix | None] = {}
        engines: dict[complex, PreparationEngine] = {}
        n_points = []
        for alpha, tau1, theta_r, chi in combos:
            key = (alpha, tau1)
            if key not in prep_cache:
                if alpha == 0 or tau1 == 0.0:
                    prep_cache[key] = excited_spin_state(dicke).density()
                else:
                    if alpha not in engines:
                        engines[alpha] = PreparationEngine(num_atoms, alpha)
                    prep_cache[key] = engines[alpha].reduced_at(tau1)
            rho = prep_cache[key]
            if spin_vector(rho).magnitude < spin_floor_frac * dicke.spin:
                continue
            try:
                rotated, _ = stage2_auto_orient(rho, theta_r, chi)
            except DegenerateMeanSpin:
                continue
            s0 = spin_vector(rotated).magnitude
            tau_grid = np.linspace(0.0, emission_window(s0), tau3_points)
            result = engine.run(rotated, tau_grid, phi_grid=np.array([math.pi / 2]),
                                amp_floor=amp_floor)
            for i, tau in enumerate(result.tau_grid):
                point = {
                    "num_atoms": num_atoms,
                    "amp": float(result.amp[i]),
                    "var_min_phi": float(result.var_min[i]),
                    "var_fixed_phi": float(result.var_fixed[i]),
                    "tau": float(tau),
                    "alpha_re": alpha.real,
                    "alpha_im": alpha.imag,
                    "tau1": tau1,
                    "theta_r": theta_r,
                    "chi": chi,
                }
                rows.append(point)
                n_points.append([point["amp"], point["var_min_phi"],
                                 point["var_fixed_phi"]])
        pts = np.asarray(n_points) if n_points else np.empty((0, 3))
        per_n[num_atoms] = {
            "points": pts,
            "hull": _hull_vertices(pts[:, :2]) if len(pts) else None,
            "max_amp": float(pts[:, 0].max()) if len(pts) else 0.0,
        }
    return RegionScan(
        atom_counts=sorted(atom_counts), rows=rows, per_n=per_n, seed=seed,
        params={
            "alphas": [complex(a) for a in alphas],
            "tau1_values": list(map(float, tau1_values)),
            "theta_r_values": list(map(float, theta_r_values)),
            "chi_values": list(map(float, chi_values)),
            "tau3_points": tau3_points,
            "sample_threshold": sample_threshold,
            "sample_budget": sample_budget,
        },
    )
