"""Heralded recovery of a qubit from partial collapse: channels, Monte Carlo
trajectories, simulated tomography and the experiment harness."""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    CollapseRecoveryError,
    DegenerateHeraldError,
    DimensionError,
    FileError,
    NotPSDError,
    ValidationError,
)
from .linalg import HermitianEigen, hermitian_eig, psd_sqrt
from .states import (
    EPSILON_BRANCHING,
    BlochVector,
    DensityMatrix,
    HeraldedChannel,
    HeraldedResult,
    apply_Cp,
    apply_Dp,
    apply_unitary,
    bloch_from_rho,
    dephase,
    deshelve_channel,
    fidelity,
    kraus_identity_check,
    partial_measure_Mp,
    pi_pulse_y,
    pure_fidelity_FM,
    qubit_state,
    recover_Rp,
    recover_Rp_prime,
    rho_from_bloch,
    ry,
    rz,
    trace_distance,
)
from .tomography import (
    CountRecord,
    ProcessMap,
    fidelity_with_errorbars,
    measurement_probability,
    reconstruct_process,
    reconstruct_state,
    simulate_counts,
)
from .trajectories import (
    BatchStats,
    NoiseModel,
    PulseSequence,
    TrajectoryOutcome,
    build_recovery_sequence,
    build_repeated_recovery_sequence,
    evaluate_deterministic,
    run_batch,
    sample_shot,
)
from .experiments import (
    ExperimentConfig,
    SweepRow,
    average_fidelity,
    default_p_grid,
    dfs_two_qubit,
    repeated_recovery,
    sweep_p,
)
from .bloch_svg import render_bloch_svg
