"""Acceptance suite: one test per criterion, each ending with a printed
verdict line (run with -s to stream them).

The expensive 50-atom preparation search is shared across the criteria that
need it.  Tolerances are fixed here, not tuned at runtime.
"""

import math
import time

import numpy as np
import pytest

from spincavity import (
    DickeSpace,
    FockSpace,
    JointSpace,
    RadiationEngine,
    StateEnsemble,
    bloch_state,
    build_field_matrices,
    build_spin_matrices,
    check_heisenberg_identities,
    check_variance_dynamics,
    coherent_state,
    compare_exact_vs_approx,
    condition_field_squeeze,
    diagonalize,
    directional_spin_op,
    emission_window,
    evolve,
    excited_spin_state,
    expectation,
    field_q,
    fock_state,
    interaction_hamiltonian,
    min_transverse_variance,
    partial_trace,
    product_state,
    profile_match,
    scan_achievable_region,
    series,
    spin_husimi,
    spin_vector,
    stage2_auto_orient,
    thermal_occupancy,
    variance,
)
from spincavity.operators import excitation_kron, field_only, hamiltonian_kron, spin_only
from spincavity.pipeline import PreparationEngine, stage1_prepare
from spincavity.squeezing import spin_quadrature_variance
from spincavity.states import PureState


def verdict(ok: bool, name: str, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def fig1_search():
    """Stage-1 search over the stated box: alpha in [1, 6], tau1 in [0, 3]."""
    best = None
    for alpha in np.linspace(1.0, 6.0, 11):
        result = stage1_prepare(50, alpha, tau1_range=(0.0, 3.0, 121),
                                spin_floor_frac=0.8)
        if best is None or result.zeta < best.zeta:
            best = result
    return best


def test_operator_identity_suite():
    t0 = time.monotonic()
    worst_field = worst_spin = worst_sz = worst_trunc = 0.0
    for num_atoms in (1, 2, 10, 50):            # S = 1/2, 1, 5, 25
        for cutoff in (4, 20, 60):
            joint = JointSpace(DickeSpace(num_atoms), FockSpace(cutoff))
            for phi in (0.0, math.pi / 4, math.pi / 2):
                res = check_heisenberg_identities(joint, phi)
                worst_field = max(worst_field, res.eq_field)
                worst_trunc = max(worst_trunc, res.eq_field_truncation)
                worst_spin = max(worst_spin, res.eq_spin)
                worst_sz = max(worst_sz, res.eq_sz)
    elapsed = time.monotonic() - t0
    ok = (worst_field <= 1e-12 and worst_spin <= 1e-12 and worst_sz <= 1e-12
          and worst_trunc <= 1e-12 and elapsed < 60.0)
    verdict(ok, "operator-identity suite",
            f"residuals field={worst_field:.2e} (boundary={worst_trunc:.2e}) "
            f"spin={worst_spin:.2e} sz={worst_sz:.2e} in {elapsed:.1f}s")


def test_vacuum_rabi():
    dicke, fock = DickeSpace(1), FockSpace(4)
    joint = JointSpace(dicke, fock)
    prop = diagonalize(interaction_hamiltonian(joint))
    psi0 = product_state(excited_spin_state(dicke), fock_state(0, fock), joint)
    f = build_field_matrices(fock)
    number = field_only(f.a_dagger @ f.a, joint)
    worst = 0.0
    for tau in np.linspace(0.0, 10.0, 1001):
        psi = evolve(prop, psi0, tau)
        worst = max(worst, abs(expectation(number, psi).real - math.sin(tau) ** 2))
    verdict(worst <= 1e-10, "vacuum Rabi", f"max |<n> - sin^2| = {worst:.2e}")


def test_block_vs_dense_evolution():
    worst = 0.0
    for num_atoms, cutoff in ((2, 8), (4, 10), (6, 10)):    # S <= 3, n_max <= 10
        dicke, fock = DickeSpace(num_atoms), FockSpace(cutoff)
        joint = JointSpace(dicke, fock)
        prop = diagonalize(interaction_hamiltonian(joint))
        psi0 = product_state(excited_spin_state(dicke),
                             coherent_state(0.8, fock, tail_tol=5e-3), joint)
        dense = hamiltonian_kron(joint).to_dense()
        w, v = np.linalg.eigh(dense)
        for tau in (0.4, 1.3, 3.7):
            blocked = evolve(prop, psi0, tau).amplitudes
            full = v @ (np.exp(-1j * w * tau) * (v.conj().T @ psi0.amplitudes))
            worst = max(worst, np.abs(blocked - full).max())
    verdict(worst <= 1e-10, "block-vs-dense oracle", f"max entrywise = {worst:.2e}")


def test_conservation_suite():
    worst_norm = worst_exc = worst_energy = 0.0
    runs = []
    # pure product runs
    for num_atoms, alpha in ((4, 1.2), (10, 2.0)):
        dicke = DickeSpace(num_atoms)
        fock = FockSpace(num_atoms + 40)
        joint = JointSpace(dicke, fock)
        prop = diagonalize(interaction_hamiltonian(joint))
        psi0 = product_state(excited_spin_state(dicke),
                             coherent_state(alpha, fock), joint)
        runs.append((prop, psi0, joint))
    # a mixed ensemble run
    prep = stage1_prepare(8, 2.5, tau1=0.5)
    dicke = DickeSpace(8)
    fock = FockSpace(8)
    joint = JointSpace(dicke, fock)
    prop = diagonalize(interaction_hamiltonian(joint))
    ens = StateEnsemble.from_atomic_density(prep.rho_atom, fock_state(0, fock), joint)
    runs.append((prop, ens, joint))

    for prop, state0, joint in runs:
        grid = np.linspace(0.0, 3.0, 61)
        out = series(prop, state0, grid, observables={
            "excitation": excitation_kron(joint),
            "energy": hamiltonian_kron(joint),
        })
        exc = out.values["excitation"].real
        ene = out.values["energy"].real
        worst_exc = max(worst_exc, (exc.max() - exc.min()) / max(1.0, abs(exc.mean())))
        worst_energy = max(worst_energy,
                           (ene.max() - ene.min()) / max(1.0, abs(ene.mean())))
        # norm along the trajectory (PureState construction enforces 1e-12;
        # measure it explicitly anyway)
        from spincavity.dynamics import Evolver
        ev = Evolver(prop, state0)
        for tau in grid[::10]:
            for _, psi in ev.at(tau):
                worst_norm = max(worst_norm,
                                 abs(np.linalg.norm(psi.amplitudes) - 1.0))
    ok = worst_norm <= 1e-10 and worst_exc <= 1e-10 and worst_energy <= 1e-10
    verdict(ok, "conservation suite",
            f"norm={worst_norm:.2e} excitation={worst_exc:.2e} "
            f"energy={worst_energy:.2e}")


def _prepared_states_for_iff():
    """Mixed bag of Bloch, squeezed, and anti-squeezed atomic states."""
    states = []
    rng = np.random.default_rng(20)
    for theta in (0.4, 1.2, 2.0, 2.6, 2.9):
        states.append(bloch_state(theta, rng.uniform(0, 2 * math.pi), DickeSpace(6)))
    for num_atoms, alpha, tau1 in ((4, 2.0, 0.7), (6, 3.0, 0.64), (10, 4.0, 0.49)):
        prep = stage1_prepare(num_atoms, alpha, tau1=tau1)
        w, v = np.linalg.eigh(prep.rho_atom.matrix)
        pure = PureState(prep.rho_atom.space, v[:, -1] / np.linalg.norm(v[:, -1]))
        for theta_r in (math.pi / 12, math.pi / 6, math.pi / 3):
            for axis in ("x", "y"):
                rot, _ = stage2_auto_orient(pure.density(), theta_r, axis)
                w2, v2 = np.linalg.eigh(rot.matrix)
                states.append(PureState(rot.space, v2[:, -1] / np.linalg.norm(v2[:, -1])))
    return states


def test_field_squeeze_curvature_iff():
    states = _prepared_states_for_iff()
    props = {}
    cases = disagreements = 0
    for state in states:
        num_atoms = state.space.num_atoms
        if num_atoms not in props:
            fock = FockSpace(num_atoms)
            joint = JointSpace(state.space, fock)
            props[num_atoms] = (joint, diagonalize(interaction_hamiltonian(joint)))
        joint, prop = props[num_atoms]
        psi0 = product_state(state, fock_state(0, joint.fock), joint)
        for phi in (0.0, math.pi / 4, math.pi / 2):
            s_psi = directional_spin_op(-phi + math.pi / 2, state.space)
            s = build_spin_matrices(state.space)
            margin = (expectation(s.sz, state).real
                      + 2 * variance(s_psi, state))
            if abs(margin) < 1e-4:
                continue
            rep = check_variance_dynamics(prop, psi0, phi=phi, tau=0.0)
            cases += 1
            predicted = condition_field_squeeze(state, phi)
            assert predicted == rep.condition_field_squeeze
            if (rep.second_derivative_fd < 0) != predicted:
                disagreements += 1
    ok = cases >= 20 and disagreements == 0
    verdict(ok, "curvature iff-test",
            f"{cases} cases, {disagreements} disagreements")


def test_approx_dynamics_regime(fig1_search):
    rotated, _ = stage2_auto_orient(fig1_search.rho_atom, math.pi / 12, "y")
    rep = compare_exact_vs_approx(rotated)
    period = math.pi / math.sqrt(2 * rep.s0)
    dev_min = abs(rep.exact_min - rep.approx_min) / rep.approx_min
    dev_argmin = abs(rep.exact_argmin - rep.approx_argmin) / rep.approx_argmin
    dev_period = abs(rep.measured_period - period) / period
    ok = (rep.theta_from_minus_z <= math.pi / 12 + 1e-9
          and dev_min <= 0.25 and dev_argmin <= 0.20 and dev_period <= 0.10)
    verdict(ok, "approximate-dynamics regime",
            f"min dev {dev_min:.1%}, tau* dev {dev_argmin:.1%}, "
            f"period dev {dev_period:.1%} (theta={rep.theta_from_minus_z:.3f})")


def test_fig1_neighborhood(fig1_search):
    lam = fig1_search.report.transverse.lambda_min
    mean_len = fig1_search.report.transverse.mean_magnitude
    found = lam <= 3.5 and mean_len >= 20.0
    detail = (f"search box alpha in [1,6], tau1 in [0,3]: lambda_min={lam:.3f}, "
              f"|<S>|={mean_len:.3f} at alpha={fig1_search.alpha.real:g}, "
              f"tau1={fig1_search.tau1:.4f} (reference 2.93, 24.2)")
    if not found:
        # closest Pareto point is reported rather than failing the build
        print(f"[INFO] Fig.1 target unreachable in the stated box; {detail}")
    assert found, detail

    engine = RadiationEngine(DickeSpace(50))
    below_sql = {}
    scores = {}
    for axis, label in (("y", "amplitude"), ("x", "phase")):
        rotated, _ = stage2_auto_orient(fig1_search.rho_atom, math.pi / 6, axis)
        s0 = spin_vector(rotated).magnitude
        grid = np.linspace(0.0, emission_window(s0), 121)
        result = engine.run(rotated, grid)
        below_sql[label] = float(result.var_min[result.tau_star_index])
        qgrid = field_q(result.field_rho, top_occupancy_tol=None)
        husimi = spin_husimi(rotated)
        scores[label] = (profile_match(qgrid, husimi, "transfer"),
                         profile_match(qgrid, husimi, "swapped"))
    ok = (below_sql["amplitude"] < 0.25 and below_sql["phase"] < 0.25
          and scores["phase"][0] > scores["phase"][1])
    verdict(ok, "Fig.1 neighborhood",
            detail + f"; var_min amp={below_sql['amplitude']:.4f} "
            f"phase={below_sql['phase']:.4f}; phase-run profile "
            f"matched={scores['phase'][0]:.3f} > swapped={scores['phase'][1]:.3f}")


def test_popular_vs_tailor_separation():
    dicke = DickeSpace(50)
    tilted = bloch_state(3 * math.pi / 4, 0.0, dicke)
    s = build_spin_matrices(dicke)
    var_x = variance(s.sx, tilted)
    bound = abs(expectation(s.sz, tilted).real) / 2
    from spincavity import condition_popular, squeezing_report
    report = squeezing_report(tilted.density())
    eq9 = condition_popular(tilted, "x")
    eq8_fails = (not report.cond_tailor_made)

    # one radiation run of the tilted Bloch state over the emission window
    engine = RadiationEngine(dicke)
    s0 = spin_vector(tilted).magnitude
    grid = np.linspace(0.0, emission_window(s0), 121)
    result = engine.run(tilted.density(), grid, amp_floor=0.05)
    min_tan = float(np.nanmin(result.var_tan))
    min_amp = float(np.nanmin(result.var_amp))
    never_phase = min_tan >= 0.25
    amp_exists = min_amp < 0.25
    ok = (eq9 and abs(var_x - 6.25) < 1e-9
          and abs(bound - 25 * math.sqrt(2) / 4) < 1e-9
          and eq8_fails and never_phase and amp_exists)
    verdict(ok, "popular vs tailor-made separation",
            f"Var(Sx)={var_x:.4f} < {bound:.4f} (eq9={eq9}), "
            f"lambda_min={report.transverse.lambda_min:.4f} not < "
            f"{report.transverse.mean_magnitude / 2:.4f} "
            f"(boundary={report.boundary_tailor_made}); radiation: "
            f"min tangential={min_tan:.4f} (>= SQL), min amplitude={min_amp:.4f}")


def test_quasiprob_normalizations():
    worst_q = worst_h = 0.0
    for num_atoms, alpha in ((10, 1.3), (50, 2.2)):
        fock = FockSpace(num_atoms + 30)
        state = coherent_state(alpha, fock)
        worst_q = max(worst_q, abs(field_q(state).total_mass() - 1.0))
        atom = bloch_state(0.9, 0.7, DickeSpace(num_atoms))
        worst_h = max(worst_h, abs(spin_husimi(atom.density()).identity_integral() - 1.0))
    # and the pipeline-produced field state
    prep = stage1_prepare(10, 4.0, tau1=0.49)
    rot, _ = stage2_auto_orient(prep.rho_atom, math.pi / 6, "y")
    engine = RadiationEngine(DickeSpace(10))
    result = engine.run(rot, np.linspace(0, 0.5, 41))
    worst_q = max(worst_q, abs(field_q(result.field_rho,
                                       top_occupancy_tol=None).total_mass() - 1.0))
    ok = worst_q <= 1e-3 and worst_h <= 1e-3
    verdict(ok, "quasi-probability normalizations",
            f"|mass-1|={worst_q:.2e}, |identity-1|={worst_h:.2e}")


def test_region_trend_desk_scale():
    t0 = time.monotonic()
    scan = scan_achievable_region([2, 5, 10, 20], seed=2026)
    elapsed = time.monotonic() - t0

    from shapely.geometry import MultiPoint, Polygon
    hulls = {}
    for num_atoms, data in scan.per_n.items():
        pts = data["points"][:, :2]
        hulls[num_atoms] = MultiPoint([tuple(p) for p in pts]).convex_hull
    counts = sorted(scan.per_n)
    worst_excess = 0.0
    for small, large in zip(counts, counts[1:]):
        excess = hulls[small].difference(hulls[large]).area
        worst_excess = max(worst_excess, excess / hulls[small].area)
    amps = [scan.per_n[n]["max_amp"] for n in counts]
    nondecreasing = all(a <= b + 1e-9 for a, b in zip(amps, amps[1:]))
    bounded = all(scan.per_n[n]["max_amp"] <= math.sqrt(n) + 1e-6 for n in counts)
    ok = (worst_excess <= 0.02 and nondecreasing and bounded
          and elapsed <= 1800.0)
    verdict(ok, "achievable-region trend",
            f"hull excess {worst_excess:.2%} (tol 2%), max|<a>| {np.round(amps, 3)} "
            f"nondecreasing={nondecreasing}, bounded={bounded}, {elapsed:.0f}s")


def test_thermal_feasibility():
    got = thermal_occupancy(21.5e9, 0.2)
    h, k = 6.62607015e-34, 1.380649e-23          # independent evaluation
    oracle = 1.0 / math.expm1(h * 21.5e9 / (k * 0.2))
    ok = got < 0.01 and abs(got - oracle) <= 1e-6 * oracle
    verdict(ok, "thermal feasibility",
            f"occupancy={got:.6f} (< 0.01), oracle agreement "
            f"{abs(got - oracle) / oracle:.1e}")
