"""Simulation of squeezed collective atomic states radiating quantum-controlled
few-photon fields through the resonant Jaynes-Cummings interaction.

Everything runs in the resonant rotating frame: the dynamics are generated by
the dimensionless coupling H = a S+ + a^dag S- and time is tau = g t.
"""

from .errors import (
    ConfigError,
    ConvergenceFailure,
    CutoffTooSmall,
    DegenerateMeanSpin,
    DimensionMismatch,
    GridMismatch,
    SpinCavityError,
    StepTooLarge,
)
from .spaces import DickeSpace, ExcitationSector, FockSpace, JointSpace
from .operators import (
    BlockedOperator,
    KronOperator,
    build_field_matrices,
    build_spin_matrices,
    directional_field_op,
    directional_spin_op,
    excitation_kron,
    hamiltonian_kron,
    interaction_hamiltonian,
    rotation_operator,
)
from .states import (
    DensityMatrix,
    PureState,
    SpinVector,
    bloch_state,
    coherent_state,
    covariance_sym,
    excited_spin_state,
    expectation,
    fock_cutoff_for,
    fock_state,
    ground_spin_state,
    partial_trace,
    product_state,
    spin_vector,
    variance,
)
from .dynamics import (
    Evolver,
    ObservableSeries,
    SpectralPropagator,
    StateEnsemble,
    check_heisenberg_identities,
    check_variance_dynamics,
    diagonalize,
    evolve,
    series,
)
from .squeezing import (
    FieldQuadratureStats,
    SqueezingReport,
    TransverseCovariance,
    approx_variances,
    compare_exact_vs_approx,
    condition_field_squeeze,
    condition_popular,
    feasibility_report,
    min_spin_quadrature,
    min_transverse_variance,
    spin_quadrature_variance,
    squeezing_report,
    thermal_occupancy,
)
from .quasiprob import BlochGrid, QGrid, field_q, profile_match, spin_husimi
from .pipeline import (
    PipelineResult,
    PrepConfig,
    RadiationEngine,
    Stage1Result,
    Stage3Result,
    emission_window,
    load_config,
    run_pipeline,
    scan_achievable_region,
    stage1_prepare,
    stage2_auto_orient,
    stage2_rotate,
    stage3_radiate,
)

__version__ = "0.1.0"
