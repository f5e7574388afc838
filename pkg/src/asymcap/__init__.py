"""Reliable communication when the decoder holds a perturbed codebook.

The encoder codes with cx while the decoder only knows cu, a symbol-wise
random perturbation of cx.  This package computes the resulting capacity
max over p(x) of I(U; Y), simulates block transmission under typicality
and MAP decoding, and verifies the structural entropy identities of the
binary symmetric case exactly.
"""

from .capacity import (
    AlphabetLimitError,
    CapacityResult,
    SolverOptions,
    capacity_closed_form_bsc,
    capacity_gap,
    capacity_grid,
    capacity_optimize,
    input_mutual_information,
    mutual_information_gradient,
    simplex_project,
    sweep_capacity_surface,
)
from .codec import (
    CODEBOOK_CELL_CAP,
    CodebookLimitError,
    CodebookPair,
    SimConfig,
    TrialReport,
    collision_experiment,
    generate_codebooks,
    induced_channel,
    map_decode,
    run_experiment,
    transmit,
    typicality_decode,
)
from .info import (
    DimensionMismatch,
    DomainError,
    JointPmf,
    MatrixFileError,
    Pmf,
    TransitionMatrix,
    binary_entropy,
    bsc,
    build_joint_uy,
    build_joint_xuyv,
    check_markov,
    conditional_entropy,
    entropy,
    load_matrix,
    mutual_information,
)
from .rng import derive_seed, sample_pmf, sample_rows, stream
from .verify import (
    CheckResult,
    VerificationReport,
    codebook_iid_zscores,
    corrupted_joint_violation,
    default_grid,
    identity_residuals,
    run_verification,
    sampled_pair_tv,
)

__version__ = "0.1.0"

__all__ = [
    "AlphabetLimitError",
    "CapacityResult",
    "SolverOptions",
    "capacity_closed_form_bsc",
    "capacity_gap",
    "capacity_grid",
    "capacity_optimize",
    "input_mutual_information",
    "mutual_information_gradient",
    "simplex_project",
    "sweep_capacity_surface",
    "CODEBOOK_CELL_CAP",
    "CodebookLimitError",
    "CodebookPair",
    "SimConfig",
    "TrialReport",
    "collision_experiment",
    "generate_codebooks",
    "induced_channel",
    "map_decode",
    "run_experiment",
    "transmit",
    "typicality_decode",
    "DimensionMismatch",
    "DomainError",
    "JointPmf",
    "MatrixFileError",
    "Pmf",
    "TransitionMatrix",
    "binary_entropy",
    "bsc",
    "build_joint_uy",
    "build_joint_xuyv",
    "check_markov",
    "conditional_entropy",
    "entropy",
    "load_matrix",
    "mutual_information",
    "derive_seed",
    "sample_pmf",
    "sample_rows",
    "stream",
    "CheckResult",
    "VerificationReport",
    "codebook_iid_zscores",
    "corrupted_joint_violation",
    "default_grid",
    "identity_residuals",
    "run_verification",
    "sampled_pair_tv",
    "__version__",
]
