"""Existence oracle, certificates and solver for penalised Gaussian precision matrices."""
from .existence import (
    EXISTS,
    NOT_EXISTS,
    UNDETERMINED,
    DivergenceCertificate,
    ExistenceVerdict,
    build_certificate,
    decide_existence,
    probe_divergence,
    verify_certificate,
)
from .matrix import (
    DefinitenessClass,
    EigenDecomposition,
    SymMatrix,
    cholesky_pd_check,
    classify_definiteness,
    eigendecompose,
    null_space,
)
from .objective import ObjectiveValue, log_likelihood, log_likelihood_eigen, objective, penalty_value
from .penalties import (
    MCP,
    SCAD,
    L1,
    Custom,
    LogShift,
    Monomial,
    PenaltySpec,
    Zero,
    classify_growth,
    glasso,
    mle,
    odglasso,
    parse_atom,
)
from .sampling import GaussianModel, existence_study, rank_census, sample_covariance
from .solver import Estimate, SolverConfig, brute_force_solve, check_kkt, multi_start_uniqueness, solve

__version__ = "0.1.0"
