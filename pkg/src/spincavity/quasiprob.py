"""Field Q-function and atomic (Bloch-state) quasi-probability grids, plus
the profile correlation that quantifies how faithfully the spin uncertainty
pattern is transferred to the radiated field.

Phase-space conventions: the field grid stores Q(alpha) with Re(alpha) along
columns and Im(alpha) along rows, both ascending.  The spin distribution is
viewed from the negative z axis; under the transfer dynamics Sx and Sy map
onto -Im(alpha) and -Re(alpha).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.special import gammaln

from .errors import CutoffTooSmall, DimensionMismatch, GridMismatch
from .operators import build_spin_matrices
from .spaces import DickeSpace, FockSpace, JointSpace
from .states import DensityMatrix, PureState, partial_trace


@dataclass(frozen=True)
class QGrid:
    """Field Q-function samples; values[i, j] = Q(re[j] + 1i im[i])."""

    re_values: np.ndarray
    im_values: np.ndarray
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.re_values[1] - self.re_values[0])
                     * (self.im_values[1] - self.im_values[0]))

    def total_mass(self) -> float:
        """Riemann sum of Q times the cell area (should be ~1)."""
        return float(self.values.sum() * self.cell_area)


@dataclass(frozen=True)
class BlochGrid:
    """Overlaps <theta,phi|rho|theta,phi> on a (theta, phi) grid."""

    theta_values: np.ndarray
    phi_values: np.ndarray
    values: np.ndarray
    twice_spin: int

    def identity_integral(self) -> float:
        """(2S+1)/(4 pi) * integral of the overlap over the sphere (~1)."""
        sin_weighted = self.values * np.sin(self.theta_values)[:, None]
        dphi = 2 * math.pi / len(self.phi_values)
        per_theta = sin_weighted.sum(axis=1) * dphi
        integral = np.trapezoid(per_theta, self.theta_values)
        return float((self.twice_spin + 1) / (4 * math.pi) * integral)


def coherent_overlaps(alphas: np.ndarray, space: FockSpace) -> np.ndarray:
    """<n|alpha> for every alpha (rows) and n <= cutoff (columns).

    Log-factorial accumulation; the coefficients are exact for the
    untruncated coherent state, deliberately not renormalized, so
    <alpha|rho|alpha> is exact for any rho supported on the cutoff space.
    """
    alphas = np.asarray(alphas, dtype=complex).ravel()
    n = space.n_values
    out = np.zeros((alphas.size, space.dim), dtype=complex)
    zero = alphas == 0
    out[zero, 0] = 1.0
    nz = ~zero
    if np.any(nz):
        al = alphas[nz]
        log_mod = (-0.5 * np.abs(al)[:, None] ** 2
                   + n[None, :] * np.log(np.abs(al))[:, None]
                   - 0.5 * gammaln(n + 1)[None, :])
        out[nz] = np.exp(log_mod) * np.exp(1j * np.outer(np.angle(al), n))
    return out


def _reduce_to_field(state) -> DensityMatrix | PureState:
    if isinstance(state.space, JointSpace):
        return partial_trace(state, "field")
    if isinstance(state.space, FockSpace):
        return state
    raise DimensionMismatch("field_q needs a field or joint state")


def field_q(state, re_range: tuple[float, float] | None = None,
            im_range: tuple[float, float] | None = None,
            resolution: int = 201,
            top_occupancy_tol: float | None = 1e-10) -> QGrid:
    """Q(alpha) = <alpha|rho|alpha> / pi on a rectangular grid.

    Joint input is reduced over the atoms first.  The cutoff is considered
    inadequate (CutoffTooSmall) when the state itself occupies the top Fock
    level beyond `top_occupancy_tol`: the probe overlaps are exact at any
    cutoff, so pressure against the truncation is the only failure mode.
    Pass None to disable the guard for states whose support is exactly
    bounded by the cutoff (e.g. radiation from 2S excitations into a
    cutoff-2S space, or a deliberately constructed |n_max> state).
    """
    field_state = _reduce_to_field(state)
    fock: FockSpace = field_state.space
    if top_occupancy_tol is not None:
        if isinstance(field_state, DensityMatrix):
            top = float(field_state.matrix[-1, -1].real)
        else:
            top = float(abs(field_state.amplitudes[-1]) ** 2)
        if top > top_occupancy_tol:
            raise CutoffTooSmall(
                f"top Fock level occupancy {top:.3e} exceeds "
                f"{top_occupancy_tol:.1e}; raise the cutoff before sampling Q")
    if re_range is None or im_range is None:
        extent = math.sqrt(fock.cutoff) + 3.0 if fock.cutoff else 3.0
        re_range = re_range or (-extent, extent)
        im_range = im_range or (-extent, extent)
    re = np.linspace(re_range[0], re_range[1], resolution)
    im = np.linspace(im_range[0], im_range[1], resolution)
    alphas = re[None, :] + 1j * im[:, None]
    overlaps = coherent_overlaps(alphas.ravel(), fock)
    if isinstance(field_state, DensityMatrix):
        vals = np.einsum("kn,nm,km->k", overlaps.conj(), field_state.matrix,
                         overlaps, optimize=True).real
    else:
        vals = np.abs(overlaps.conj() @ field_state.amplitudes) ** 2
    return QGrid(re_values=re, im_values=im,
                 values=(vals / math.pi).reshape(resolution, resolution))


def spin_husimi(rho_atom, n_theta: int = 181, n_phi: int = 361) -> BlochGrid:
    """<theta,phi|rho|theta,phi> on the default 1-degree-class grid.

    Bloch states are generated by the same rotation convention as
    `bloch_state`: exp(-i phi Sz) exp(-i theta Sy) |S, S>.
    """
    space = rho_atom.space
    if not isinstance(space, DickeSpace):
        raise DimensionMismatch("spin_husimi needs an atomic state")
    theta = np.linspace(0.0, math.pi, n_theta)
    phi = np.linspace(0.0, 2 * math.pi, n_phi, endpoint=False)
    s = build_spin_matrices(space)
    w, v = np.linalg.eigh(s.sy)
    coeff0 = v.conj().T[:, -1]          # V^dag |S, m=S>
    phases = np.exp(-1j * np.outer(space.m_values, phi))   # dim x n_phi
    values = np.empty((n_theta, n_phi))
    pure = isinstance(rho_atom, PureState)
    for i, th in enumerate(theta):
        wvec = v @ (np.exp(-1j * th * w) * coeff0)          # |theta, 0>
        states = phases * wvec[:, None]                     # dim x n_phi
        if pure:
            values[i] = np.abs(states.conj().T @ rho_atom.amplitudes) ** 2
        else:
            values[i] = np.einsum("ic,ik,kc->c", states.conj(), rho_atom.matrix,
                                  states, optimize=True).real
    return BlochGrid(theta_values=theta, phi_values=phi, values=values,
                     twice_spin=space.twice_spin)


def _project_husimi(q: QGrid, husimi: BlochGrid, scale: float,
                    swap_axes: bool) -> np.ndarray:
    """Sample the viewer-side hemisphere (seen from -z) at the spin-plane
    preimage of every field grid node; outside the projected disk -> 0."""
    spin = husimi.twice_spin / 2
    if husimi.theta_values[-1] < math.pi - 1e-9:
        raise GridMismatch("husimi grid must reach theta = pi for the -z view")
    re, im = np.meshgrid(q.re_values, q.im_values)
    if swap_axes:
        sx, sy = -re / scale, -im / scale
    else:
        sx, sy = -im / scale, -re / scale
    r = np.hypot(sx, sy) / spin
    inside = r <= 1.0
    theta = math.pi - np.arcsin(np.clip(r, 0.0, 1.0))
    phi = np.mod(np.arctan2(sy, sx), 2 * math.pi)
    # periodic pad in phi for interpolation across the wrap
    phi_ext = np.append(husimi.phi_values, 2 * math.pi)
    vals_ext = np.concatenate([husimi.values, husimi.values[:, :1]], axis=1)
    interp = RegularGridInterpolator((husimi.theta_values, phi_ext), vals_ext,
                                     method="linear", bounds_error=False,
                                     fill_value=0.0)
    out = np.zeros_like(r)
    pts = np.column_stack([theta[inside], phi[inside]])
    out[inside] = interp(pts)
    return out


def profile_match(q: QGrid, husimi: BlochGrid, mapping: str = "transfer",
                  scale: float | None = None) -> float:
    """Normalized cross-correlation between Q and the projected spin profile.

    mapping "transfer" uses the transfer correspondence (Sx, Sy) -> (-Im alpha,
    -Re alpha); "swapped" exchanges the axes, which should always score
    lower for anisotropic states.  `scale` is the alpha-per-spin conversion,
    defaulting to 1/sqrt(2S), the excitation-preserving amplitude map.
    """
    if mapping not in ("transfer", "swapped"):
        raise ValueError(f"mapping must be 'transfer' or 'swapped', got {mapping!r}")
    if q.values.shape != (len(q.im_values), len(q.re_values)):
        raise GridMismatch("QGrid values shape does not match its axes")
    spin = husimi.twice_spin / 2
    if scale is None:
        scale = 1.0 / math.sqrt(2 * spin)
    proj = _project_husimi(q, husimi, scale, swap_axes=(mapping == "swapped"))
    x = q.values.ravel() - q.values.mean()
    y = proj.ravel() - proj.mean()
    denom = np.linalg.norm(x) * np.linalg.norm(y)
    if denom < 1e-300:
        raise GridMismatch("one of the profiles is constant; correlation undefined")
    return float(np.dot(x, y) / denom)
