"""Hilbert spaces: collective-spin (Dicke) basis, truncated Fock basis, and
their tensor product decomposed into conserved excitation sectors.

Basis conventions (fixed for serialization):
  * Dicke basis |S, m> ordered by m ascending, m = -S ... S, with S = N/2.
  * Fock basis |n> ordered by n ascending, n = 0 ... n_max.
  * Joint index is m-major: index(m, n) = (m + S) * (n_max + 1) + n.

The resonant interaction a S+ + a^dag S- conserves k = n + m + S, so the
joint space splits into sectors labelled by that integer.  Sector members
are listed with m ascending (equivalently n descending).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class DickeSpace:
    """Symmetric subspace of N two-level atoms, collective spin S = N/2.

    The half-integer spin is never stored as a float: `num_atoms` equals 2S
    exactly, and all sector arithmetic uses the integer index m + S.
    """

    num_atoms: int

    def __post_init__(self):
        if self.num_atoms < 1:
            raise ValueError(f"num_atoms must be >= 1, got {self.num_atoms}")

    @property
    def twice_spin(self) -> int:
        return self.num_atoms

    @property
    def spin(self) -> float:
        return self.num_atoms / 2

    @property
    def dim(self) -> int:
        return self.num_atoms + 1

    @property
    def m_values(self) -> np.ndarray:
        """Quantum numbers m in ascending order (exact halves)."""
        return np.arange(self.dim) - self.num_atoms / 2


@dataclass(frozen=True)
class FockSpace:
    """Photon-number basis truncated at `cutoff` (inclusive)."""

    cutoff: int
    tail_tol: float = 1e-12

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")

    @property
    def dim(self) -> int:
        return self.cutoff + 1

    @property
    def n_values(self) -> np.ndarray:
        return np.arange(self.dim)


@dataclass(frozen=True)
class ExcitationSector:
    """All joint basis states (m, n) with n + (m + S) = k.

    `m_indices` holds the integer index m + S, ascending; `n_values[j]`
    equals k - m_indices[j]; `joint_indices` are positions in the m-major
    joint ordering.
    """

    k: int
    m_indices: np.ndarray
    n_values: np.ndarray
    joint_indices: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.m_indices)


@dataclass(frozen=True)
class JointSpace:
    """Tensor product of a Dicke and a Fock space with its sector table."""

    dicke: DickeSpace
    fock: FockSpace

    @cached_property
    def dim(self) -> int:
        return self.dicke.dim * self.fock.dim

    @cached_property
    def sectors(self) -> tuple[ExcitationSector, ...]:
        two_s = self.dicke.twice_spin
        n_max = self.fock.cutoff
        fdim = self.fock.dim
        out = []
        for k in range(two_s + n_max + 1):
            lo = max(0, k - n_max)
            hi = min(two_s, k)
            m_idx = np.arange(lo, hi + 1)
            n_val = k - m_idx
            out.append(ExcitationSector(
                k=k,
                m_indices=m_idx,
                n_values=n_val,
                joint_indices=m_idx * fdim + n_val,
            ))
        return tuple(out)

    def joint_index(self, m_index: int, n: int) -> int:
        return m_index * self.fock.dim + n

    def sector_of(self, m_index: int, n: int) -> ExcitationSector:
        return self.sectors[m_index + n]

    def sector_table(self) -> list[dict]:
        """JSON-ready sector summary: k, dim, and (m, n) member list."""
        s = self.dicke.spin
        return [
            {
                "k": sec.k,
                "dim": sec.dim,
                "members": [
                    {"m": float(mi - s), "n": int(n)}
                    for mi, n in zip(sec.m_indices, sec.n_values)
                ],
            }
            for sec in self.sectors
        ]
