"""Collective-spin and photon-field operators, directional quadratures,
rotations, and the sector-blocked resonant interaction Hamiltonian.

Everything is dimensionless: the interaction is H = a S+ + a^dag S- with the
coupling set to one, so time enters only through tau = g t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .spaces import DickeSpace, FockSpace, JointSpace


@dataclass(frozen=True)
class SpinMatrices:
    """Dense matrices of Sx, Sy, Sz, S+, S- in the ascending-m basis."""

    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    splus: np.ndarray
    sminus: np.ndarray


@dataclass(frozen=True)
class FieldMatrices:
    a: np.ndarray
    a_dagger: np.ndarray


def ladder_coefficients(space: DickeSpace) -> np.ndarray:
    """sqrt(S(S+1) - m(m+1)) for the transitions m -> m+1, m ascending.

    Evaluated from integers (N and 2m) so the radicand is exact.
    """
    n = space.num_atoms
    i = np.arange(n)            # index of the source state, m = i - S
    two_m = 2 * i - n
    radicand = n * (n + 2) - two_m * (two_m + 2)
    return 0.5 * np.sqrt(radicand.astype(float))


def build_spin_matrices(space: DickeSpace) -> SpinMatrices:
    """Collective spin operators for N two-level atoms (S = N/2).

    <S, m+1|S+|S, m> = sqrt(S(S+1) - m(m+1)); Sz is diagonal with entries m;
    Sx = (S+ + S-)/2 and Sy = (S+ - S-)/(2i).
    """
    c = ladder_coefficients(space)
    splus = np.diag(c, -1).astype(complex)      # row m+1, column m
    sminus = splus.conj().T
    sx = 0.5 * (splus + sminus)
    sy = -0.5j * (splus - sminus)
    sz = np.diag(space.m_values).astype(complex)
    return SpinMatrices(sx=sx, sy=sy, sz=sz, splus=splus, sminus=sminus)


def build_field_matrices(space: FockSpace) -> FieldMatrices:
    """Annihilation/creation operators on the truncated Fock basis.

    <n-1|a|n> = sqrt(n).  Note [a, a^dag] = 1 only on n < cutoff; the last
    diagonal entry of the truncated commutator is -cutoff.
    """
    a = np.diag(np.sqrt(np.arange(1, space.dim)), 1).astype(complex)
    return FieldMatrices(a=a, a_dagger=a.conj().T)


def _canonical_angle(phi: float) -> float:
    """Reduce to (-pi, pi] so a lossless 2 pi shift leaves matrices identical."""
    return math.remainder(phi, 2 * math.pi)


def directional_field_op(phi: float, space: FockSpace) -> np.ndarray:
    """Quadrature a_phi = (a e^{-i phi} + a^dag e^{i phi}) / 2 (Hermitian)."""
    phi = _canonical_angle(phi)
    f = build_field_matrices(space)
    return 0.5 * (f.a * np.exp(-1j * phi) + f.a_dagger * np.exp(1j * phi))


def directional_spin_op(phi: float, space: DickeSpace) -> np.ndarray:
    """S_phi = (S+ e^{-i phi} + S- e^{i phi}) / 2; S_0 = Sx, S_{pi/2} = Sy."""
    phi = _canonical_angle(phi)
    s = build_spin_matrices(space)
    return 0.5 * (s.splus * np.exp(-1j * phi) + s.sminus * np.exp(1j * phi))


def rotation_operator(theta: float, phi: float, space: DickeSpace) -> np.ndarray:
    """Unitary U = exp(-i phi Sz) exp(-i theta Sy).

    exp(-i theta Sy) is computed from the spectral decomposition of Sy;
    exp(-i phi Sz) is diagonal.
    """
    s = build_spin_matrices(space)
    w, v = np.linalg.eigh(s.sy)
    exp_y = (v * np.exp(-1j * theta * w)) @ v.conj().T
    phase_z = np.exp(-1j * phi * space.m_values)
    return phase_z[:, None] * exp_y


def z_rotation(angle: float, space: DickeSpace) -> np.ndarray:
    """Diagonal unitary exp(-i angle Sz)."""
    return np.diag(np.exp(-1j * angle * space.m_values))


def euler_zyz_unitary(alpha: float, beta: float, gamma: float,
                      space: DickeSpace) -> np.ndarray:
    """exp(-i alpha Sz) exp(-i beta Sy) exp(-i gamma Sz); rotates spin
    expectation vectors by Rz(alpha) Ry(beta) Rz(gamma)."""
    return rotation_operator(beta, alpha, space) @ z_rotation(gamma, space)


@dataclass(frozen=True)
class BlockedOperator:
    """Operator stored as one dense block per excitation sector.

    Off-sector matrix elements are zero by construction, never stored.
    """

    joint: JointSpace
    blocks: tuple[np.ndarray, ...]
    hermitian: bool = False

    def __post_init__(self):
        if len(self.blocks) != len(self.joint.sectors):
            raise DimensionMismatch(
                f"{len(self.blocks)} blocks for {len(self.joint.sectors)} sectors")
        for sec, blk in zip(self.joint.sectors, self.blocks):
            if blk.shape != (sec.dim, sec.dim):
                raise DimensionMismatch(
                    f"sector {sec.k}: block shape {blk.shape} != {(sec.dim, sec.dim)}")
            if self.hermitian and np.abs(blk - blk.conj().T).max() > 1e-14:
                raise ValueError(f"sector {sec.k}: block not Hermitian to 1e-14")

    def to_dense(self) -> np.ndarray:
        """Scatter the blocks into the full m-major joint matrix."""
        out = np.zeros((self.joint.dim, self.joint.dim), dtype=complex)
        for sec, blk in zip(self.joint.sectors, self.blocks):
            out[np.ix_(sec.joint_indices, sec.joint_indices)] = blk
        return out


def interaction_hamiltonian(joint: JointSpace) -> BlockedOperator:
    """Resonant coupling H = a S+ + a^dag S- assembled per sector.

    Within sector k the members (m, n) and (m+1, n-1) are coupled with
    strength sqrt(S(S+1) - m(m+1)) * sqrt(n); each block is a real symmetric
    tridiagonal matrix with zero diagonal.
    """
    c = ladder_coefficients(joint.dicke)
    blocks = []
    for sec in joint.sectors:
        blk = np.zeros((sec.dim, sec.dim), dtype=complex)
        if sec.dim > 1:
            coup = c[sec.m_indices[:-1]] * np.sqrt(sec.n_values[:-1])
            idx = np.arange(sec.dim - 1)
            blk[idx + 1, idx] = coup
            blk[idx, idx + 1] = coup
        blocks.append(blk)
    return BlockedOperator(joint=joint, blocks=tuple(blocks), hermitian=True)


@dataclass(frozen=True)
class KronOperator:
    """Joint-space operator as a sum of (spin factor, field factor) products.

    Keeps expectation values cheap on large joint spaces: no dense
    joint-dimension matrix is ever materialized unless `to_dense` is called.
    """

    joint: JointSpace
    terms: tuple[tuple[np.ndarray, np.ndarray], ...]

    def __post_init__(self):
        ds, df = self.joint.dicke.dim, self.joint.fock.dim
        for spin_f, field_f in self.terms:
            if spin_f.shape != (ds, ds) or field_f.shape != (df, df):
                raise DimensionMismatch(
                    f"term shapes {spin_f.shape}x{field_f.shape}, "
                    f"expected ({ds},{ds})x({df},{df})")

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.joint.dim, self.joint.dim), dtype=complex)
        for spin_f, field_f in self.terms:
            out += np.kron(spin_f, field_f)
        return out

    def apply(self, psi_matrix: np.ndarray) -> np.ndarray:
        """Apply to a joint state reshaped as (dicke.dim, fock.dim)."""
        out = np.zeros_like(psi_matrix, dtype=complex)
        for spin_f, field_f in self.terms:
            out += spin_f @ psi_matrix @ field_f.T
        return out

    def __matmul__(self, other: "KronOperator") -> "KronOperator":
        if other.joint is not self.joint and other.joint != self.joint:
            raise DimensionMismatch("KronOperator product across different joint spaces")
        terms = tuple(
            (a1 @ a2, b1 @ b2)
            for a1, b1 in self.terms
            for a2, b2 in other.terms
        )
        return KronOperator(joint=self.joint, terms=terms)

    def __add__(self, other: "KronOperator") -> "KronOperator":
        return KronOperator(joint=self.joint, terms=self.terms + other.terms)

    def scaled(self, factor: complex) -> "KronOperator":
        return KronOperator(
            joint=self.joint,
            terms=tuple((factor * a, b) for a, b in self.terms))


def spin_only(matrix: np.ndarray, joint: JointSpace) -> KronOperator:
    return KronOperator(joint, ((np.asarray(matrix, dtype=complex),
                                 np.eye(joint.fock.dim, dtype=complex)),))


def field_only(matrix: np.ndarray, joint: JointSpace) -> KronOperator:
    return KronOperator(joint, ((np.eye(joint.dicke.dim, dtype=complex),
                                 np.asarray(matrix, dtype=complex)),))


def hamiltonian_kron(joint: JointSpace) -> KronOperator:
    """H = a S+ + a^dag S- as kron terms (for oracles and expectations)."""
    s = build_spin_matrices(joint.dicke)
    f = build_field_matrices(joint.fock)
    return KronOperator(joint, ((s.splus, f.a), (s.sminus, f.a_dagger)))


def excitation_kron(joint: JointSpace) -> KronOperator:
    """Conserved excitation number a^dag a + Sz + S."""
    s = build_spin_matrices(joint.dicke)
    f = build_field_matrices(joint.fock)
    shifted_sz = s.sz + joint.dicke.spin * np.eye(joint.dicke.dim)
    return KronOperator(joint, (
        (np.eye(joint.dicke.dim, dtype=complex), f.a_dagger @ f.a),
        (shifted_sz, np.eye(joint.fock.dim, dtype=complex)),
    ))
