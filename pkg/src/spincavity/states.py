"""State construction, partial traces, expectation values, and symmetrized
covariances.

Pure states are bare complex vectors in the fixed basis order of their
space; joint vectors are m-major (see `spaces`).  Density matrices are
dense.  Truncated coherent states are renormalized and carry the discarded
tail mass in their metadata so the truncation stays auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import CutoffTooSmall, DimensionMismatch
from .operators import BlockedOperator, KronOperator, build_spin_matrices, rotation_operator
from .spaces import DickeSpace, FockSpace, JointSpace

NORM_TOL = 1e-12

Space = DickeSpace | FockSpace | JointSpace


@dataclass(frozen=True)
class PureState:
    space: Space
    amplitudes: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        dim = self.space.dim
        if self.amplitudes.shape != (dim,):
            raise DimensionMismatch(
                f"amplitude vector of length {self.amplitudes.shape} for dim {dim}")
        norm = np.linalg.norm(self.amplitudes)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} differs from 1 beyond {NORM_TOL}")

    @property
    def matrix(self) -> np.ndarray:
        """Joint amplitudes reshaped to (dicke.dim, fock.dim)."""
        if not isinstance(self.space, JointSpace):
            raise DimensionMismatch("matrix view only defined for joint states")
        return self.amplitudes.reshape(self.space.dicke.dim, self.space.fock.dim)

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    space: Space
    matrix: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        dim = self.space.dim
        if self.matrix.shape != (dim, dim):
            raise DimensionMismatch(f"matrix shape {self.matrix.shape} for dim {dim}")
        if np.abs(self.matrix - self.matrix.conj().T).max() > 1e-12:
            raise ValueError("density matrix not Hermitian to 1e-12")
        tr = np.trace(self.matrix).real
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"density matrix trace {tr!r} differs from 1 beyond 1e-10")

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def purity(self) -> float:
        return float(np.einsum("ij,ji->", self.matrix, self.matrix).real)

    def eigenvalues(self) -> np.ndarray:
        """Opt-in spectral check; costs O(dim^3)."""
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class SpinVector:
    sx: float
    sy: float
    sz: float

    @property
    def magnitude(self) -> float:
        return math.sqrt(self.sx**2 + self.sy**2 + self.sz**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz])


def excited_spin_state(space: DickeSpace) -> PureState:
    """|S, m = S>, all atoms excited (last vector in ascending-m order)."""
    amp = np.zeros(space.dim, dtype=complex)
    amp[-1] = 1.0
    return PureState(space, amp)


def ground_spin_state(space: DickeSpace) -> PureState:
    amp = np.zeros(space.dim, dtype=complex)
    amp[0] = 1.0
    return PureState(space, amp)


def fock_state(n: int, space: FockSpace) -> PureState:
    amp = np.zeros(space.dim, dtype=complex)
    amp[n] = 1.0
    return PureState(space, amp)


def bloch_state(theta: float, phi: float, space: DickeSpace) -> PureState:
    """Spin coherent state: exp(-i phi Sz) exp(-i theta Sy) |S, m=S>."""
    u = rotation_operator(theta, phi, space)
    amp = u[:, -1].copy()
    amp /= np.linalg.norm(amp)
    return PureState(space, amp)


def coherent_tail_mass(alpha: complex, cutoff: int) -> float:
    """Probability the photon number of |alpha> exceeds `cutoff` (Poisson tail)."""
    lam = abs(alpha) ** 2
    if lam == 0.0:
        return 0.0
    return float(gammainc(cutoff + 1, lam))


def fock_cutoff_for(alpha: complex, tail_tol: float = 1e-12, headroom: int = 0) -> int:
    """Smallest cutoff with coherent tail mass <= tail_tol, plus `headroom`."""
    lam = abs(alpha) ** 2
    n = int(math.ceil(lam))
    while coherent_tail_mass(alpha, n) > tail_tol:
        n += 1
    return n + headroom


def coherent_state(alpha: complex, space: FockSpace,
                   tail_tol: float | None = None) -> PureState:
    """Truncated coherent state |alpha>, renormalized.

    Amplitudes are accumulated in log space (stable up to cutoffs of a few
    hundred).  Raises CutoffTooSmall when the discarded Poisson tail exceeds
    the tolerance; the actual tail mass is stored in the state metadata.
    """
    if tail_tol is None:
        tail_tol = space.tail_tol
    tail = coherent_tail_mass(alpha, space.cutoff)
    if tail > tail_tol:
        raise CutoffTooSmall(
            f"coherent tail mass {tail:.3e} beyond cutoff {space.cutoff} "
            f"exceeds {tail_tol:.1e}")
    n = space.n_values
    if alpha == 0:
        amp = np.zeros(space.dim, dtype=complex)
        amp[0] = 1.0
    else:
        log_mod = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
        amp = np.exp(log_mod) * np.exp(1j * n * np.angle(alpha))
        amp /= np.linalg.norm(amp)
    return PureState(space, amp, metadata={"tail_mass": tail, "alpha": alpha})


def product_state(spin, field, joint: JointSpace | None = None):
    """Tensor product in the fixed m-major joint ordering.

    pure x pure stays pure; any density factor yields a joint DensityMatrix.
    """
    if joint is None:
        joint = JointSpace(dicke=spin.space, fock=field.space)
    if joint.dicke != spin.space or joint.fock != field.space:
        raise DimensionMismatch("factor spaces do not match the joint space")
    meta = {**spin.metadata, **field.metadata}
    if isinstance(spin, PureState) and isinstance(field, PureState):
        return PureState(joint, np.kron(spin.amplitudes, field.amplitudes), metadata=meta)
    rho_s = spin.matrix if isinstance(spin, DensityMatrix) else spin.density().matrix
    rho_f = field.matrix if isinstance(field, DensityMatrix) else field.density().matrix
    return DensityMatrix(joint, np.kron(rho_s, rho_f), metadata=meta)


def partial_trace(state: PureState | DensityMatrix, keep: str) -> DensityMatrix:
    """Reduced density matrix of a joint state; keep is 'atom' or 'field'."""
    if not isinstance(state.space, JointSpace):
        raise DimensionMismatch("partial_trace requires a joint state")
    if keep not in ("atom", "field"):
        raise ValueError(f"keep must be 'atom' or 'field', got {keep!r}")
    ds, df = state.space.dicke.dim, state.space.fock.dim
    if isinstance(state, PureState):
        psi = state.matrix
        if keep == "atom":
            return DensityMatrix(state.space.dicke, psi @ psi.conj().T)
        return DensityMatrix(state.space.fock, psi.T @ psi.conj())
    r4 = state.matrix.reshape(ds, df, ds, df)
    if keep == "atom":
        return DensityMatrix(state.space.dicke, np.einsum("ambm->ab", r4))
    return DensityMatrix(state.space.fock, np.einsum("aman->mn", r4))


def _expect_pure(op, state: PureState) -> complex:
    if isinstance(op, KronOperator):
        psi = state.matrix
        return complex(np.vdot(psi, op.apply(psi)))
    if isinstance(op, BlockedOperator):
        total = 0.0 + 0.0j
        for sec, blk in zip(op.joint.sectors, op.blocks):
            seg = state.amplitudes[sec.joint_indices]
            total += np.vdot(seg, blk @ seg)
        return complex(total)
    op = np.asarray(op)
    if op.shape != (state.space.dim, state.space.dim):
        raise DimensionMismatch(f"operator {op.shape} on dim {state.space.dim}")
    return complex(np.vdot(state.amplitudes, op @ state.amplitudes))


def _expect_density(op, state: DensityMatrix) -> complex:
    if isinstance(op, KronOperator):
        ds, df = state.space.dicke.dim, state.space.fock.dim
        r4 = state.matrix.reshape(ds, df, ds, df)
        return complex(sum(
            np.einsum("ambn,ba,nm->", r4, a, b) for a, b in op.terms))
    if isinstance(op, BlockedOperator):
        op = op.to_dense()
    op = np.asarray(op)
    if op.shape != state.matrix.shape:
        raise DimensionMismatch(f"operator {op.shape} on dim {state.space.dim}")
    return complex(np.einsum("ij,ji->", state.matrix, op))


def expectation(op, state) -> complex:
    """<op> for a pure state or density matrix.

    `op` may be a dense array on the state's space, a KronOperator, or a
    BlockedOperator (joint states only).
    """
    if isinstance(state, PureState):
        return _expect_pure(op, state)
    if isinstance(state, DensityMatrix):
        return _expect_density(op, state)
    raise TypeError(f"unsupported state type {type(state)!r}")


def _product(a, b):
    if isinstance(a, KronOperator) or isinstance(b, KronOperator):
        return a @ b
    return np.asarray(a) @ np.asarray(b)


def covariance_sym(op_a, op_b, state) -> float:
    """Symmetrized covariance <{dA, dB}>/2; real for Hermitian A, B."""
    mean_a = expectation(op_a, state).real
    mean_b = expectation(op_b, state).real
    cross = 0.5 * (expectation(_product(op_a, op_b), state)
                   + expectation(_product(op_b, op_a), state))
    return cross.real - mean_a * mean_b


def variance(op, state) -> float:
    return covariance_sym(op, op, state)


def spin_vector(state) -> SpinVector:
    """Mean collective-spin vector of an atomic state."""
    if not isinstance(state.space, DickeSpace):
        raise DimensionMismatch("spin_vector requires an atomic state")
    s = build_spin_matrices(state.space)
    return SpinVector(
        sx=expectation(s.sx, state).real,
        sy=expectation(s.sy, state).real,
        sz=expectation(s.sz, state).real,
    )
