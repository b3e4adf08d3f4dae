"""Squeezing criteria and diagnostics: minimum transverse spin variance,
the squeezed-radiation and tailor-made predicates, the popular fixed-axis
criterion, the large-spin approximate variance dynamics, and experimental
feasibility numbers.

The inequalities are strict.  Values within a narrow band of the bound
(BOUNDARY_TOL, relative to the spin size) are reported as *not* squeezed and
flagged as boundary cases, so exactly-critical states (e.g. Bloch states)
classify deterministically instead of following rounding noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.constants

from .errors import DegenerateMeanSpin
from .operators import build_spin_matrices
from .spaces import DickeSpace, FockSpace, JointSpace
from .states import (
    DensityMatrix,
    PureState,
    covariance_sym,
    expectation,
    fock_state,
    product_state,
    spin_vector,
    variance,
)

BOUNDARY_TOL = 1e-9


def _strict_below(value: float, bound: float, scale: float) -> tuple[bool, bool]:
    """Strict `value < bound` with a deterministic tie band.

    Returns (satisfied, boundary); inside the band the predicate is False
    and boundary is True.
    """
    band = BOUNDARY_TOL * max(abs(scale), 1.0)
    if abs(value - bound) <= band:
        return False, True
    return value < bound, False


@dataclass(frozen=True)
class TransverseCovariance:
    """Symmetrized 2x2 covariance in a frame orthogonal to the mean spin."""

    mean: np.ndarray
    frame: np.ndarray       # rows e1, e2, orthonormal, both perpendicular to mean
    matrix: np.ndarray      # 2x2 real symmetric
    lambda_min: float
    lambda_max: float
    min_direction: np.ndarray   # 3-vector of the minimum-variance axis

    @property
    def mean_magnitude(self) -> float:
        return float(np.linalg.norm(self.mean))


def _transverse_frame(direction: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.array([0.0, 0.0, 1.0])
    e1 = np.cross(direction, z)
    if np.linalg.norm(e1) < 1e-8:
        e1 = np.array([1.0, 0.0, 0.0])
    e1 = e1 / np.linalg.norm(e1)
    e2 = np.cross(direction, e1)
    e2 = e2 / np.linalg.norm(e2)
    return e1, e2


def min_transverse_variance(rho_atom: DensityMatrix | PureState,
                            eps_dir: float | None = None,
                            frame: np.ndarray | None = None) -> TransverseCovariance:
    """Covariance of the spin components perpendicular to the mean spin.

    Eigenvalues come from the closed form for a symmetric 2x2 matrix; the
    smaller one is the minimum variance over all transverse directions and
    is frame independent.  Raises DegenerateMeanSpin when the mean spin is
    too short to define the transverse plane.
    """
    space: DickeSpace = rho_atom.space
    if eps_dir is None:
        eps_dir = 1e-6 * space.spin
    mean = spin_vector(rho_atom).as_array()
    norm = np.linalg.norm(mean)
    if norm < eps_dir:
        raise DegenerateMeanSpin(f"|<S>| = {norm:.3e} below {eps_dir:.3e}")
    direction = mean / norm
    if frame is None:
        e1, e2 = _transverse_frame(direction)
    else:
        e1, e2 = frame[0], frame[1]
    s = build_spin_matrices(space)
    ops = [e[0] * s.sx + e[1] * s.sy + e[2] * s.sz for e in (e1, e2)]
    c11 = variance(ops[0], rho_atom)
    c22 = variance(ops[1], rho_atom)
    c12 = covariance_sym(ops[0], ops[1], rho_atom)
    half_sum = 0.5 * (c11 + c22)
    radius = math.hypot(0.5 * (c11 - c22), c12)
    lam_min = half_sum - radius
    lam_max = half_sum + radius
    vec = np.array([c12, lam_min - c11])
    if np.linalg.norm(vec) < 1e-14 * max(1.0, abs(lam_min)):
        vec = np.array([1.0, 0.0]) if c11 <= c22 else np.array([0.0, 1.0])
    vec = vec / np.linalg.norm(vec)
    return TransverseCovariance(
        mean=mean,
        frame=np.vstack([e1, e2]),
        matrix=np.array([[c11, c12], [c12, c22]]),
        lambda_min=lam_min,
        lambda_max=lam_max,
        min_direction=vec[0] * e1 + vec[1] * e2,
    )


def condition_field_squeeze(rho_atom, phi: float) -> bool:
    """True iff the atoms would radiate a_phi squeezed below vacuum:
    Var(S_{-phi+pi/2}) < |<Sz>|/2 and <Sz> < 0 (strict)."""
    ok, _ = _field_squeeze_detail(rho_atom, phi)
    return ok


def _field_squeeze_detail(rho_atom, phi: float) -> tuple[bool, bool]:
    from .operators import directional_spin_op
    space: DickeSpace = rho_atom.space
    s = build_spin_matrices(space)
    var_s = variance(directional_spin_op(-phi + math.pi / 2, space), rho_atom)
    mean_sz = expectation(s.sz, rho_atom).real
    below, boundary = _strict_below(var_s, abs(mean_sz) / 2, space.spin)
    negative = mean_sz < 0
    boundary = boundary or abs(mean_sz) <= BOUNDARY_TOL * space.spin
    return below and negative, boundary


def condition_popular(rho_atom, axis: str) -> bool:
    """Fixed-axis criterion Var(S_i) < |<Sz>|/2, i in {x, y} (strict).

    Unlike the transverse-minimum criterion this can be satisfied by a
    tilted Bloch state, so it does not certify tailor-made radiation.
    """
    ok, _ = _popular_detail(rho_atom, axis)
    return ok


def _popular_detail(rho_atom, axis: str) -> tuple[bool, bool]:
    space: DickeSpace = rho_atom.space
    s = build_spin_matrices(space)
    op = {"x": s.sx, "y": s.sy}[axis]
    var_i = variance(op, rho_atom)
    mean_sz = expectation(s.sz, rho_atom).real
    return _strict_below(var_i, abs(mean_sz) / 2, space.spin)


@dataclass(frozen=True)
class SqueezingReport:
    """All squeezing diagnostics of an atomic state in one record."""

    transverse: TransverseCovariance
    cond_field_squeeze: dict[float, bool]
    boundary_field_squeeze: dict[float, bool]
    cond_tailor_made: bool
    boundary_tailor_made: bool
    cond_popular_x: bool
    cond_popular_y: bool
    boundary_popular_x: bool
    boundary_popular_y: bool
    squeezing_ratio: float

    def to_json(self) -> dict:
        t = self.transverse
        return {
            "mean_spin": {"sx": t.mean[0], "sy": t.mean[1], "sz": t.mean[2],
                          "magnitude": t.mean_magnitude},
            "transverse": {
                "frame": t.frame.tolist(),
                "matrix": t.matrix.tolist(),
                "lambda_min": t.lambda_min,
                "lambda_max": t.lambda_max,
                "min_direction": t.min_direction.tolist(),
            },
            "cond_field_squeeze": {str(phi): ok for phi, ok
                                   in self.cond_field_squeeze.items()},
            "boundary_field_squeeze": {str(phi): b for phi, b
                                       in self.boundary_field_squeeze.items()},
            "cond_tailor_made": self.cond_tailor_made,
            "boundary_tailor_made": self.boundary_tailor_made,
            "cond_popular_x": self.cond_popular_x,
            "cond_popular_y": self.cond_popular_y,
            "squeezing_ratio": self.squeezing_ratio,
        }


def squeezing_report(rho_atom, phis=(0.0, math.pi / 4, math.pi / 2)) -> SqueezingReport:
    space: DickeSpace = rho_atom.space
    trans = min_transverse_variance(rho_atom)
    tailor, tailor_b = _strict_below(trans.lambda_min, trans.mean_magnitude / 2,
                                     space.spin)
    pop_x, bx = _popular_detail(rho_atom, "x")
    pop_y, by = _popular_detail(rho_atom, "y")
    field, field_b = {}, {}
    for phi in phis:
        ok, b = _field_squeeze_detail(rho_atom, phi)
        field[phi] = ok
        field_b[phi] = b
    return SqueezingReport(
        transverse=trans,
        cond_field_squeeze=field,
        boundary_field_squeeze=field_b,
        cond_tailor_made=tailor,
        boundary_tailor_made=tailor_b,
        cond_popular_x=pop_x,
        cond_popular_y=pop_y,
        boundary_popular_x=bx,
        boundary_popular_y=by,
        squeezing_ratio=trans.lambda_min / (trans.mean_magnitude / 2),
    )


def min_spin_quadrature(rho_atom) -> tuple[float, float]:
    """(psi*, Var(S_psi*)) minimizing the equatorial quadrature variance.

    Var(S_psi) is quadratic in exp(2i psi), so the minimum is closed form:
    base - |m2|/2 at psi* = (arg m2 + pi)/2 with m2 = <S+^2> - <S+>^2.
    """
    s = build_spin_matrices(rho_atom.space)
    mean_p = expectation(s.splus, rho_atom)
    m2 = expectation(s.splus @ s.splus, rho_atom) - mean_p**2
    base = (0.25 * expectation(s.splus @ s.sminus + s.sminus @ s.splus, rho_atom).real
            - 0.5 * abs(mean_p) ** 2)
    if abs(m2) < 1e-15:
        return 0.0, base
    psi_star = (np.angle(m2) + math.pi) / 2
    return float(psi_star), float(base - abs(m2) / 2)


def spin_quadrature_variance(rho_atom, psi: float) -> float:
    s = build_spin_matrices(rho_atom.space)
    mean_p = expectation(s.splus, rho_atom)
    m2 = expectation(s.splus @ s.splus, rho_atom) - mean_p**2
    base = (0.25 * expectation(s.splus @ s.sminus + s.sminus @ s.splus, rho_atom).real
            - 0.5 * abs(mean_p) ** 2)
    return float(base + 0.5 * (np.exp(-2j * psi) * m2).real)


@dataclass(frozen=True)
class FieldQuadratureStats:
    """Quadrature variance of the field from its first/second moments.

    var(a_phi) = 1/4 + (<n> - |<a>|^2)/2 + Re(e^{-2i phi} m2)/2 with
    m2 = <a^2> - <a>^2; the minimum over phi is closed form.
    """

    mean_a: complex
    mean_a2: complex
    mean_n: float

    @property
    def m2(self) -> complex:
        return self.mean_a2 - self.mean_a**2

    @property
    def base(self) -> float:
        return 0.25 + 0.5 * (self.mean_n - abs(self.mean_a) ** 2)

    def var_at(self, phi) -> np.ndarray | float:
        return self.base + 0.5 * (np.exp(-2j * np.asarray(phi)) * self.m2).real

    @property
    def var_min(self) -> float:
        return self.base - 0.5 * abs(self.m2)

    @property
    def phi_min(self) -> float:
        if abs(self.m2) < 1e-15:
            return 0.0
        return float((np.angle(self.m2) + math.pi) / 2)


def approx_variances(s0: float, var0: float, tau) -> tuple[np.ndarray, np.ndarray]:
    """Large-spin approximate field/spin quadrature variances.

    field = cos^2(sqrt(2 S0) tau)/4 + var0/(2 S0) sin^2(...)
    spin  = var0 cos^2(...) + (S0/2) sin^2(...)

    Valid when S0 is large and the mean spin points near -z; both curves
    have period pi / sqrt(2 S0) and the field minimum var0/(2 S0) occurs at
    tau = pi / (2 sqrt(2 S0)).
    """
    if s0 <= 0:
        raise ValueError("s0 must be positive")
    if var0 < 0:
        raise ValueError("var0 must be nonnegative")
    x = math.sqrt(2 * s0) * np.asarray(tau, dtype=float)
    c2 = np.cos(x) ** 2
    s2 = np.sin(x) ** 2
    return 0.25 * c2 + var0 / (2 * s0) * s2, var0 * c2 + s0 / 2 * s2


@dataclass(frozen=True)
class ApproxComparisonReport:
    s0: float
    var0: float
    phi: float
    theta_from_minus_z: float
    tau_grid: np.ndarray
    exact: np.ndarray
    approx: np.ndarray
    max_rel_deviation: float
    exact_min: float
    exact_argmin: float
    approx_min: float
    approx_argmin: float
    measured_period: float | None


def _refine_minimum(tau: np.ndarray, values: np.ndarray, idx: int) -> tuple[float, float]:
    """Parabolic refinement of a grid minimum."""
    if idx == 0 or idx == len(tau) - 1:
        return float(tau[idx]), float(values[idx])
    y0, y1, y2 = values[idx - 1], values[idx], values[idx + 1]
    denom = y0 - 2 * y1 + y2
    if denom <= 0:
        return float(tau[idx]), float(values[idx])
    shift = 0.5 * (y0 - y2) / denom
    h = tau[idx + 1] - tau[idx]
    return float(tau[idx] + shift * h), float(y1 - 0.25 * (y0 - y2) * shift)


def local_minima(values: np.ndarray) -> list[int]:
    idx = []
    for i in range(1, len(values) - 1):
        if values[i] < values[i - 1] and values[i] <= values[i + 1]:
            idx.append(i)
    return idx


def compare_exact_vs_approx(prepared_atom, tau_grid: np.ndarray | None = None,
                            phi: float | None = None,
                            fock_cutoff: int | None = None) -> ApproxComparisonReport:
    """Exact var(a_phi)(tau) from a vacuum-field radiation run versus the
    large-spin approximation, over (a bit more than) one approximate period.

    S0 is the initial mean-spin length, var0 the initial variance of the
    conjugate quadrature S_{-phi+pi/2}; phi defaults to the quadrature whose
    conjugate spin direction is most squeezed.
    """
    from .dynamics import StateEnsemble, diagonalize, series
    from .operators import directional_field_op, field_only, interaction_hamiltonian

    space: DickeSpace = prepared_atom.space
    mean = spin_vector(prepared_atom)
    s0 = mean.magnitude
    if s0 <= 0:
        raise DegenerateMeanSpin("prepared state has zero mean spin")
    theta = math.acos(max(-1.0, min(1.0, -mean.sz / s0)))
    if phi is None:
        psi_star, _ = min_spin_quadrature(prepared_atom)
        phi = math.pi / 2 - psi_star
    var0 = spin_quadrature_variance(prepared_atom, -phi + math.pi / 2)

    period = math.pi / math.sqrt(2 * s0)
    if tau_grid is None:
        # span two variance minima (at period/2 and 3 period/2) so the
        # period itself is measurable from the exact curve
        tau_grid = np.linspace(0.0, 1.75 * period, 449)
    tau_grid = np.asarray(tau_grid, dtype=float)

    fock = FockSpace(fock_cutoff if fock_cutoff is not None else space.twice_spin)
    joint = JointSpace(space, fock)
    prop = diagonalize(interaction_hamiltonian(joint))
    vacuum = fock_state(0, fock)
    if isinstance(prepared_atom, PureState):
        state0 = product_state(prepared_atom, vacuum, joint)
    else:
        state0 = StateEnsemble.from_atomic_density(prepared_atom, vacuum, joint)
    a_phi = field_only(directional_field_op(phi, fock), joint)
    out = series(prop, state0, tau_grid, observables={}, variances={"var": a_phi})
    exact = out.values["var"]
    approx = approx_variances(s0, var0, tau_grid)[0]

    in_period = tau_grid <= period
    rel = np.abs(exact[in_period] - approx[in_period]) / np.maximum(approx[in_period], 1e-12)
    minima = local_minima(exact)
    if minima:
        argmin, vmin = _refine_minimum(tau_grid, exact, minima[0])
    else:
        i = int(np.argmin(exact))
        argmin, vmin = float(tau_grid[i]), float(exact[i])
    measured_period = None
    if len(minima) >= 2:
        t0, _ = _refine_minimum(tau_grid, exact, minima[0])
        t1, _ = _refine_minimum(tau_grid, exact, minima[1])
        measured_period = t1 - t0

    return ApproxComparisonReport(
        s0=s0, var0=var0, phi=phi, theta_from_minus_z=theta,
        tau_grid=tau_grid, exact=exact, approx=approx,
        max_rel_deviation=float(rel.max()),
        exact_min=vmin, exact_argmin=argmin,
        approx_min=var0 / (2 * s0),
        approx_argmin=period / 2,
        measured_period=measured_period,
    )


def thermal_occupancy(frequency_hz: float, temperature_k: float) -> float:
    """Bose-Einstein mean photon number 1/(exp(h nu / k T) - 1)."""
    if frequency_hz <= 0 or temperature_k <= 0:
        raise ValueError("frequency and temperature must be positive")
    x = scipy.constants.h * frequency_hz / (scipy.constants.k * temperature_k)
    if x > 700:     # exp would overflow; occupancy underflows to zero
        return 0.0
    return float(1.0 / np.expm1(x))


@dataclass(frozen=True)
class FeasibilityReport:
    g_hz: float
    tau: float
    physical_time_s: float
    atomic_lifetime_s: float
    cavity_lifetime_s: float
    within_atomic_lifetime: bool
    within_cavity_lifetime: bool

    @property
    def feasible(self) -> bool:
        return self.within_atomic_lifetime and self.within_cavity_lifetime

    def to_json(self) -> dict:
        return {
            "g_hz": self.g_hz,
            "tau": self.tau,
            "physical_time_s": self.physical_time_s,
            "atomic_lifetime_s": self.atomic_lifetime_s,
            "cavity_lifetime_s": self.cavity_lifetime_s,
            "within_atomic_lifetime": self.within_atomic_lifetime,
            "within_cavity_lifetime": self.within_cavity_lifetime,
            "feasible": self.feasible,
        }

    def to_text(self) -> str:
        lines = [
            f"coupling g = {self.g_hz:.3e} Hz, tau = g t = {self.tau:g}",
            f"physical interaction time t = {self.physical_time_s:.3e} s",
            f"atomic lifetime {self.atomic_lifetime_s:.3e} s: "
            + ("ok" if self.within_atomic_lifetime else "EXCEEDED"),
            f"cavity lifetime {self.cavity_lifetime_s:.3e} s: "
            + ("ok" if self.within_cavity_lifetime else "EXCEEDED"),
            "feasible" if self.feasible else "NOT feasible",
        ]
        return "\n".join(lines)


def feasibility_report(g_hz: float, tau: float, lifetime_s: float,
                       cavity_lifetime_s: float) -> FeasibilityReport:
    """Physical interaction time t = tau / g checked against lifetimes."""
    if g_hz <= 0 or tau < 0 or lifetime_s <= 0 or cavity_lifetime_s <= 0:
        raise ValueError("inputs must be positive (tau may be zero)")
    t = tau / g_hz
    return FeasibilityReport(
        g_hz=g_hz, tau=tau, physical_time_s=t,
        atomic_lifetime_s=lifetime_s, cavity_lifetime_s=cavity_lifetime_s,
        within_atomic_lifetime=t < lifetime_s,
        within_cavity_lifetime=t < cavity_lifetime_s,
    )
