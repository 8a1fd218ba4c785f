"""
Application configuration settings
Contains centralized numerical settings and tolerances for the Meixner toolkit
"""

import os
from dataclasses import dataclass, field, asdict
from pathlib import Path

# Application metadata
APP_TITLE = "Meixner Toolkit"
APP_VERSION = "1.0.0"
LOGGER_NAME = "meixner"

# Logging
LOG_LEVEL = "WARNING"  # Console level; CLI --verbose lowers it to INFO
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
AUDIT_FORMAT = '%(asctime)s - AUDIT - %(message)s'
APP_LOG_NAME = "meixner.log"
AUDIT_LOG_NAME = "audit.log"

# Paths
BASE_DIR = Path(__file__).resolve().parent.parent.parent
SCHEMA_DIR = os.path.join(BASE_DIR, "schemas")

# Core
ORTHOGONALITY_TOL = 1e-10  # Spectral norm of U^T U - I
ENTRY_CONFLICT_REL_TOL = 1e-12  # Duplicate tensor entries must agree to this
SINGULAR_COV_REL = 1e-12  # Smallest covariance eigenvalue relative to trace

# Moments
DEFAULT_DEGREE_CAP = 16  # K^n n! overflows doubles near n=20 for K~2.5
EXACT_DEGREE_CAP = 9  # 2N+1 moments for the default chaos degree
PIVOT_REL_TOL = 1e-9
PIVOT_ABS_TOL = 1e-12
PIVOT_POLICIES = ("lowest-index", "highest-count", "all-and-compare")

# Integrability
OBSTRUCTION_TOL = 1e-9

# Chaos oracle
DEFAULT_CHAOS_DEGREE = 4
CHAOS_RANK_REL_CUTOFF = 1e-13  # Relative eigenvalue cutoff inside a degree block
CHAOS_MAX_CONDITION = 1e12

# Classification
CLASSIFY_TOL = 1e-9
EIGEN_GAP_REL = 1e-8
GAUSSIAN_B_TOL = 1e-10  # |b| below this is a Gaussian component
CLASSIFY_RNG_SEED = 7  # Fixed combination weights for joint diagonalization

# Quadrature
GAUSS_LAGUERRE_ORDER = 64
PHI_QUAD_EPSREL = 1e-10
BESSEL_SERIES_CUTOFF = 1e-18

# Sampling
DEFAULT_SEED = 20240607  # Used whenever --seed is not given
SAMPLE_CHUNK_SIZE = 65536  # Draws per counter-based stream block
SAMPLE_WORKERS = 4

# Finite differences
FD_REL_STEP = 1e-6


@dataclass(frozen=True)
class Tolerances:
    """Every verification tolerance, in one place."""
    exact_identity: float = 1e-12
    symbolic_vs_float: float = 1e-9
    operator_residual: float = 1e-7
    axiom_residual: float = 1e-8
    quadrature_rel: float = 1e-6
    cylinder_rel: float = 1e-8
    finite_difference: float = 1e-7
    monte_carlo_sigmas: float = 4.0
    pivot_rel: float = PIVOT_REL_TOL
    orthogonality: float = ORTHOGONALITY_TOL

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class VerifyConfig:
    """Settings for one verification run."""
    profile: str = "quick"
    seed: int = DEFAULT_SEED
    samples: int = 200_000
    chaos_degree: int = DEFAULT_CHAOS_DEGREE
    taylor_degree: int = 6
    pde_points: int = 20
    workers: int = SAMPLE_WORKERS
    tolerances: Tolerances = field(default_factory=Tolerances)

    @classmethod
    def for_profile(cls, profile: str, seed: int = DEFAULT_SEED) -> 'VerifyConfig':
        """Build the documented defaults for the quick or full profile."""
        if profile == "quick":
            return cls(profile="quick", seed=seed, samples=200_000)
        if profile == "full":
            return cls(profile="full", seed=seed, samples=1_000_000, taylor_degree=8)
        raise ValueError(f"Unknown verify profile: {profile}")

    def to_dict(self):
        return asdict(self)
