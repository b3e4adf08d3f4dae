import math

import numpy as np
import pytest

from spincavity import (
    CutoffTooSmall,
    DickeSpace,
    FockSpace,
    GridMismatch,
    bloch_state,
    coherent_state,
    excited_spin_state,
    field_q,
    fock_state,
    min_transverse_variance,
    profile_match,
    spin_husimi,
)
from spincavity.operators import z_rotation
from spincavity.pipeline import stage1_prepare, stage2_auto_orient
from spincavity.quasiprob import BlochGrid, QGrid
from spincavity.states import DensityMatrix


def test_q_vacuum():
    grid = field_q(fock_state(0, FockSpace(25)), resolution=151)
    center = grid.values[75, 75]
    assert center == pytest.approx(1 / math.pi, abs=1e-12)
    re, im = np.meshgrid(grid.re_values, grid.im_values)
    expected = np.exp(-(re**2 + im**2)) / math.pi
    assert np.abs(grid.values - expected).max() <= 1e-12
    assert grid.total_mass() == pytest.approx(1.0, abs=1e-3)


def test_q_coherent_displaced_gaussian():
    beta = 0.9 - 1.4j
    grid = field_q(coherent_state(beta, FockSpace(30)), resolution=121)
    re, im = np.meshgrid(grid.re_values, grid.im_values)
    expected = np.exp(-np.abs(re + 1j * im - beta) ** 2) / math.pi
    assert np.abs(grid.values - expected).max() <= 1e-10
    assert grid.total_mass() == pytest.approx(1.0, abs=1e-3)


def test_q_single_photon():
    grid = field_q(fock_state(1, FockSpace(20)), resolution=101)
    i0 = len(grid.im_values) // 2
    j0 = len(grid.re_values) // 2
    assert grid.values[i0, j0] == pytest.approx(0.0, abs=1e-14)
    re, im = np.meshgrid(grid.re_values, grid.im_values)
    r2 = re**2 + im**2
    expected = r2 * np.exp(-r2) / math.pi
    assert np.abs(grid.values - expected).max() <= 1e-12


def test_q_nonnegative_and_cutoff_guard():
    grid = field_q(coherent_state(1.2, FockSpace(25)))
    assert grid.values.min() >= -1e-14
    with pytest.raises(CutoffTooSmall):
        field_q(fock_state(6, FockSpace(6)))


def test_q_reduces_joint_input():
    from spincavity import JointSpace, product_state

    dicke, fock = DickeSpace(2), FockSpace(22)
    joint = JointSpace(dicke, fock)
    psi = product_state(excited_spin_state(dicke), coherent_state(0.7, fock), joint)
    grid = field_q(psi, resolution=81)
    direct = field_q(coherent_state(0.7, fock), resolution=81)
    assert np.abs(grid.values - direct.values).max() <= 1e-12


def test_husimi_top_state_profile():
    dicke = DickeSpace(2)   # S = 1
    grid = spin_husimi(bloch_state(0.0, 0.0, dicke).density())
    i_pole = 0
    assert grid.values[i_pole].max() == pytest.approx(1.0, abs=1e-12)
    i_equator = np.argmin(np.abs(grid.theta_values - math.pi / 2))
    assert grid.values[i_equator, 0] == pytest.approx(0.25, abs=1e-10)
    theta = grid.theta_values
    expected = np.cos(theta / 2) ** 4
    assert np.abs(grid.values[:, 0] - expected).max() <= 1e-10


def test_husimi_maximally_mixed_flat():
    dicke = DickeSpace(6)
    rho = DensityMatrix(dicke, np.eye(dicke.dim, dtype=complex) / dicke.dim)
    grid = spin_husimi(rho, n_theta=61, n_phi=121)
    assert np.abs(grid.values - 1 / dicke.dim).max() <= 1e-12


def test_husimi_identity_resolution():
    for num_atoms in (2, 9, 50):
        state = bloch_state(0.8, 1.1, DickeSpace(num_atoms))
        grid = spin_husimi(state.density())
        assert grid.identity_integral() == pytest.approx(1.0, abs=1e-3)
        assert grid.values.min() >= -1e-14
        assert grid.values.max() <= 1 + 1e-12


def test_husimi_z_rotation_shifts_phi():
    dicke = DickeSpace(8)
    state = bloch_state(1.9, 0.7, dicke).density()
    grid = spin_husimi(state, n_theta=41, n_phi=90)
    cells = 12
    delta = cells * 2 * math.pi / 90
    u = z_rotation(delta, dicke)
    rotated = DensityMatrix(dicke, u @ state.matrix @ u.conj().T)
    grid_rot = spin_husimi(rotated, n_theta=41, n_phi=90)
    assert np.abs(grid_rot.values - np.roll(grid.values, cells, axis=1)).max() <= 1e-10


def _gaussian_q(center, sigmas, angle=0.0, extent=4.0, resolution=161):
    re = np.linspace(-extent, extent, resolution)
    im = np.linspace(-extent, extent, resolution)
    x, y = np.meshgrid(re, im)
    c, s = math.cos(angle), math.sin(angle)
    u = c * (x - center[0]) + s * (y - center[1])
    v = -s * (x - center[0]) + c * (y - center[1])
    vals = np.exp(-0.5 * (u / sigmas[0]) ** 2 - 0.5 * (v / sigmas[1]) ** 2)
    return QGrid(re_values=re, im_values=im, values=vals)


def _husimi_from_plane_function(fn, twice_spin, n_theta=181, n_phi=361,
                                scale=None):
    """Bloch grid whose viewer-hemisphere projection equals fn(re, im)."""
    spin = twice_spin / 2
    if scale is None:
        scale = 1 / math.sqrt(2 * spin)
    theta = np.linspace(0, math.pi, n_theta)
    phi = np.linspace(0, 2 * math.pi, n_phi, endpoint=False)
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    sx = spin * np.sin(th) * np.cos(ph)
    sy = spin * np.sin(th) * np.sin(ph)
    re, im = -sy * scale, -sx * scale
    return BlochGrid(theta_values=theta, phi_values=phi,
                     values=fn(re, im), twice_spin=twice_spin)


def test_profile_match_identical_gaussians():
    def fn(re, im):
        return np.exp(-0.5 * ((re - 0.9) / 0.7) ** 2 - 0.5 * ((im + 0.4) / 0.5) ** 2)

    q = _gaussian_q((0.9, -0.4), (0.7, 0.5))
    husimi = _husimi_from_plane_function(fn, twice_spin=50)
    score = profile_match(q, husimi, mapping="transfer")
    assert score >= 1 - 1e-6


def test_profile_match_orientation_ordering():
    def fn(re, im):
        return np.exp(-0.5 * (re / 1.4) ** 2 - 0.5 * (im / 0.4) ** 2)

    q = _gaussian_q((0.0, 0.0), (1.4, 0.4))
    husimi = _husimi_from_plane_function(fn, twice_spin=50)
    matched = profile_match(q, husimi, mapping="transfer")
    swapped = profile_match(q, husimi, mapping="swapped")
    assert matched > swapped
    # orthogonal ellipse scores strictly lower than the matched orientation
    q_orth = _gaussian_q((0.0, 0.0), (0.4, 1.4))
    assert profile_match(q_orth, husimi, mapping="transfer") < matched


def test_profile_match_grid_guards():
    q = _gaussian_q((0.0, 0.0), (1.0, 1.0))
    theta = np.linspace(0, math.pi / 2, 91)     # misses the viewer hemisphere
    phi = np.linspace(0, 2 * math.pi, 90, endpoint=False)
    partial = BlochGrid(theta_values=theta, phi_values=phi,
                        values=np.ones((91, 90)), twice_spin=20)
    with pytest.raises(GridMismatch):
        profile_match(q, partial, mapping="transfer")
    with pytest.raises(ValueError):
        profile_match(q, partial, mapping="diagonal")


def test_husimi_ellipse_tracks_covariance():
    # squeezed state oriented to -z with the minor axis along lab y:
    # the projected Husimi second moments are the state covariance widened
    # by the S/2 coherent floor
    prep = stage1_prepare(10, 4.0, tau1_range=(0.3, 0.7, 21), spin_floor_frac=0.8)
    rho, _ = stage2_auto_orient(prep.rho_atom, 0.0, "y")
    trans = min_transverse_variance(rho)
    spin = rho.space.spin
    grid = spin_husimi(rho)
    th, ph = np.meshgrid(grid.theta_values, grid.phi_values, indexing="ij")
    weight = grid.values * np.sin(th)
    mask = th >= math.pi / 2
    weight = np.where(mask, weight, 0.0)
    sx = spin * np.sin(th) * np.cos(ph)
    sy = spin * np.sin(th) * np.sin(ph)
    total = weight.sum()
    mx, my = (weight * sx).sum() / total, (weight * sy).sum() / total
    cxx = (weight * (sx - mx) ** 2).sum() / total
    cyy = (weight * (sy - my) ** 2).sum() / total
    cxy = (weight * (sx - mx) * (sy - my)).sum() / total
    expected_ratio = (trans.lambda_min + spin / 2) / (trans.lambda_max + spin / 2)
    measured_ratio = cyy / cxx
    assert cyy < cxx                      # minor axis along the squeezed y
    assert abs(cxy) <= 0.1 * cxx
    assert measured_ratio == pytest.approx(expected_ratio, rel=0.15)
