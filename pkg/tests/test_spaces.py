import numpy as np
import pytest

from spincavity import DickeSpace, FockSpace, JointSpace


@pytest.mark.parametrize("num_atoms", [1, 2, 3, 7, 50])
def test_dicke_dimensions(num_atoms):
    space = DickeSpace(num_atoms)
    assert space.twice_spin == num_atoms
    assert space.dim == num_atoms + 1
    assert space.spin == num_atoms / 2
    m = space.m_values
    assert m[0] == -space.spin and m[-1] == space.spin
    assert np.all(np.diff(m) == 1.0)


def test_dicke_rejects_zero_atoms():
    with pytest.raises(ValueError):
        DickeSpace(0)


def test_fock_dimensions():
    space = FockSpace(7)
    assert space.dim == 8
    assert space.n_values[-1] == 7
    with pytest.raises(ValueError):
        FockSpace(-1)


@pytest.mark.parametrize("num_atoms,cutoff", [(1, 4), (2, 3), (5, 9), (11, 6)])
def test_sector_partition_is_exact(num_atoms, cutoff):
    joint = JointSpace(DickeSpace(num_atoms), FockSpace(cutoff))
    assert joint.dim == (num_atoms + 1) * (cutoff + 1)
    seen = set()
    for sec in joint.sectors:
        assert np.all(np.diff(sec.m_indices) == 1)      # m ascending
        for mi, n, j in zip(sec.m_indices, sec.n_values, sec.joint_indices):
            assert 0 <= n <= cutoff and 0 <= mi <= num_atoms
            assert mi + n == sec.k
            assert j == joint.joint_index(mi, n)
            assert j not in seen
            seen.add(j)
    assert len(seen) == joint.dim
    assert sum(sec.dim for sec in joint.sectors) == joint.dim


def test_sector_dims_match_enumeration():
    joint = JointSpace(DickeSpace(4), FockSpace(6))
    # brute-force enumeration oracle
    by_k = {}
    for mi in range(5):
        for n in range(7):
            by_k.setdefault(mi + n, []).append((mi, n))
    for sec in joint.sectors:
        assert sec.dim == len(by_k[sec.k])
        assert [(mi, n) for mi, n in zip(sec.m_indices, sec.n_values)] == \
            sorted(by_k[sec.k])


def test_sector_of_lookup():
    joint = JointSpace(DickeSpace(3), FockSpace(5))
    sec = joint.sector_of(2, 3)
    assert sec.k == 5
    table = joint.sector_table()
    assert table[5]["dim"] == sec.dim
    assert {"m": 0.5, "n": 3} in table[5]["members"]
