import math

import numpy as np
import pytest

from spincavity import (
    DegenerateMeanSpin,
    DickeSpace,
    FockSpace,
    JointSpace,
    approx_variances,
    bloch_state,
    build_spin_matrices,
    compare_exact_vs_approx,
    condition_field_squeeze,
    condition_popular,
    diagonalize,
    evolve,
    excited_spin_state,
    expectation,
    feasibility_report,
    fock_state,
    ground_spin_state,
    interaction_hamiltonian,
    min_spin_quadrature,
    min_transverse_variance,
    partial_trace,
    product_state,
    spin_quadrature_variance,
    squeezing_report,
    thermal_occupancy,
    variance,
)
from spincavity.states import DensityMatrix
from spincavity.pipeline import stage1_prepare, stage2_auto_orient


@pytest.fixture(scope="module")
def squeezed_ten():
    """Strongly squeezed 10-atom state (used by several criteria tests)."""
    return stage1_prepare(10, 4.0, tau1_range=(0.3, 0.7, 41), spin_floor_frac=0.8)


def test_top_state_isotropic():
    state = excited_spin_state(DickeSpace(50))
    trans = min_transverse_variance(state)
    assert trans.lambda_min == pytest.approx(12.5, abs=1e-10)
    assert trans.lambda_max == pytest.approx(12.5, abs=1e-10)


def test_frame_independence(squeezed_ten):
    rho = squeezed_ten.rho_atom
    base = min_transverse_variance(rho)
    rng = np.random.default_rng(3)
    direction = base.mean / np.linalg.norm(base.mean)
    for _ in range(5):
        # random orthonormal frame in the transverse plane
        angle = rng.uniform(0, 2 * math.pi)
        e1 = math.cos(angle) * base.frame[0] + math.sin(angle) * base.frame[1]
        e2 = np.cross(direction, e1)
        rotated = min_transverse_variance(rho, frame=np.vstack([e1, e2]))
        assert rotated.lambda_min == pytest.approx(base.lambda_min, abs=1e-10)
        assert rotated.lambda_max == pytest.approx(base.lambda_max, abs=1e-10)


def test_degenerate_mean_spin():
    dicke = DickeSpace(4)
    rho = DensityMatrix(dicke, np.eye(dicke.dim, dtype=complex) / dicke.dim)
    with pytest.raises(DegenerateMeanSpin):
        min_transverse_variance(rho)


def test_field_squeeze_boundary_cases():
    dicke = DickeSpace(12)
    bottom = ground_spin_state(dicke)
    # variance equals the bound exactly: strict condition is false
    assert not condition_field_squeeze(bottom, 0.0)
    top = excited_spin_state(dicke)
    assert not condition_field_squeeze(top, 0.0)   # <Sz> > 0


def test_field_squeeze_on_prepared_state(squeezed_ten):
    rho, _ = stage2_auto_orient(squeezed_ten.rho_atom, math.pi / 12, "y")
    # squeezed axis along y -> the phi = 0 quadrature radiates squeezed
    assert condition_field_squeeze(rho, 0.0)


def test_popular_condition_tilted_bloch():
    dicke = DickeSpace(50)
    tilted = bloch_state(3 * math.pi / 4, 0.0, dicke)
    s = build_spin_matrices(dicke)
    assert variance(s.sx, tilted) == pytest.approx(6.25, abs=1e-10)
    assert abs(expectation(s.sz, tilted).real) / 2 == \
        pytest.approx(25 * math.sqrt(2) / 4, abs=1e-10)
    assert condition_popular(tilted, "x")
    report = squeezing_report(tilted.density())
    assert report.cond_popular_x
    assert not report.cond_tailor_made          # boundary case reports false
    assert report.boundary_tailor_made


def test_popular_condition_top_state_boundary():
    top = excited_spin_state(DickeSpace(10))
    report = squeezing_report(top.density())
    assert not report.cond_popular_x
    assert report.boundary_popular_x


def test_tailor_made_implies_some_phi(squeezed_ten):
    # orient the mean spin to -z: condition (tailor-made) must then be
    # witnessed by at least one quadrature angle
    rho, _ = stage2_auto_orient(squeezed_ten.rho_atom, 0.0, "y")
    report = squeezing_report(rho)
    assert report.cond_tailor_made
    assert any(condition_field_squeeze(rho, phi)
               for phi in np.linspace(0, math.pi, 16, endpoint=False))


def test_transverse_uncertainty_bound():
    # lambda_min * lambda_max >= |<S>|^2 / 4 on pure states
    rng = np.random.default_rng(11)
    dicke = DickeSpace(14)
    states = [bloch_state(rng.uniform(0.2, 2.9), rng.uniform(0, 2 * math.pi), dicke)
              for _ in range(6)]
    fock = FockSpace(45)
    joint = JointSpace(dicke, fock)
    prop = diagonalize(interaction_hamiltonian(joint))
    from spincavity.states import coherent_state
    psi0 = product_state(excited_spin_state(dicke), coherent_state(2.5, fock), joint)
    for tau in (0.3, 0.5, 0.8):
        psi = evolve(prop, psi0, tau)
        rho = partial_trace(psi, "atom")
        w, v = np.linalg.eigh(rho.matrix)
        from spincavity.states import PureState
        states.append(PureState(dicke, v[:, -1] / np.linalg.norm(v[:, -1])))
    for state in states:
        try:
            t = min_transverse_variance(state)
        except DegenerateMeanSpin:
            continue
        assert t.lambda_min * t.lambda_max >= t.mean_magnitude**2 / 4 - 1e-8


def test_min_spin_quadrature_closed_form(squeezed_ten):
    rho = squeezed_ten.rho_atom
    psi_star, var_star = min_spin_quadrature(rho)
    grid = np.linspace(0, math.pi, 720, endpoint=False)
    sampled = [spin_quadrature_variance(rho, p) for p in grid]
    assert var_star <= min(sampled) + 1e-10
    i = int(np.argmin(sampled))
    assert min(abs(grid[i] - psi_star % math.pi),
               math.pi - abs(grid[i] - psi_star % math.pi)) <= math.pi / 360


def test_approx_variances_formulas():
    field0, spin0 = approx_variances(25.0, 2.93, 0.0)
    assert field0 == pytest.approx(0.25)
    assert spin0 == pytest.approx(2.93)
    s0, var0 = 25.0, 2.93
    t_min = math.pi / (2 * math.sqrt(2 * s0))
    f_min, s_at = approx_variances(s0, var0, t_min)
    assert f_min == pytest.approx(var0 / (2 * s0), abs=1e-12)
    assert s_at == pytest.approx(s0 / 2, abs=1e-9)
    period = math.pi / math.sqrt(2 * s0)
    taus = np.linspace(0, 2 * period, 9)
    f1, _ = approx_variances(s0, var0, taus)
    f2, _ = approx_variances(s0, var0, taus + period)
    assert np.abs(f1 - f2).max() <= 1e-10


def test_approx_bloch_input_is_flat():
    s0 = 12.0
    taus = np.linspace(0, 2.0, 50)
    field, _ = approx_variances(s0, s0 / 2, taus)
    assert np.abs(field - 0.25).max() <= 1e-12


def test_compare_exact_vs_approx_regimes(squeezed_ten):
    # inside the validity regime: oriented near -z
    rho, _ = stage2_auto_orient(squeezed_ten.rho_atom, math.pi / 12, "y")
    rep = compare_exact_vs_approx(rho)
    assert rep.theta_from_minus_z <= math.pi / 12 + 1e-6
    assert abs(rep.exact_min - rep.approx_min) / rep.approx_min <= 0.25
    # far outside (single atom): large deviation is expected, report-only
    half = bloch_state(0.4, 0.0, DickeSpace(1))
    rep_half = compare_exact_vs_approx(half)
    assert rep_half.max_rel_deviation > 0.0
    # Bloch input: approximation predicts a flat curve at 1/4
    bloch = bloch_state(math.pi, 0.2, DickeSpace(10))
    rep_b = compare_exact_vs_approx(bloch)
    assert np.abs(rep_b.approx - 0.25).max() <= 1e-10
    assert rep_b.max_rel_deviation >= 0.0


def test_thermal_occupancy_values():
    # independent Bose-Einstein evaluation with CODATA constants typed here
    h = 6.62607015e-34
    k = 1.380649e-23
    x = h * 21.5e9 / (k * 0.2)
    oracle = 1.0 / math.expm1(x)
    got = thermal_occupancy(21.5e9, 0.2)
    assert got < 0.01
    assert got == pytest.approx(oracle, rel=1e-6)
    assert got == pytest.approx(0.0058, abs=2e-4)
    # analytic inversion: occupancy exactly 1 at h nu / k T = ln 2
    t_ln2 = h * 1e9 / (k * math.log(2))
    assert thermal_occupancy(1e9, t_ln2) == pytest.approx(1.0, abs=1e-12)
    # T -> 0 limit
    assert thermal_occupancy(21.5e9, 1e-3) == 0.0


def test_feasibility_report_values():
    rep = feasibility_report(1e4, 1.0, 1e-3, 0.1)
    assert rep.physical_time_s == pytest.approx(1e-4)
    assert rep.within_atomic_lifetime and rep.within_cavity_lifetime
    assert rep.feasible
    rep0 = feasibility_report(1e4, 0.0, 1e-3, 0.1)
    assert rep0.physical_time_s == 0.0 and rep0.feasible
    tight = feasibility_report(1e4, 1.0, 1e-5, 0.1)
    assert not tight.within_atomic_lifetime and not tight.feasible
    assert "NOT feasible" in tight.to_text()
