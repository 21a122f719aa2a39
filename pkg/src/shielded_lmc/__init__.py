"""Shielded Langevin Monte Carlo: sampling on domains with convex obstacles.

Submodules
----------
obstacle     sign functions for spheres, ellipsoids and cylinders
target       Gaussian-mixture targets and the potential U = -log p + C
sampler      ULA, the navigation-potential step and the shielded step
mimo         annealed Langevin MIMO detectors and the exhaustive ML oracle
diagnostics  feasibility, mode occupancy, boundary mass, histogram TV
cli          ``shielded-lmc`` command line (gmm, mimo, naive)
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateConstraintError,
    DetectionError,
    DomainError,
    InitializationError,
    NumericalFailure,
    ShieldedLMCError,
    UnsupportedOperation,
)
from .obstacle import Obstacle, ObstacleSet, gmm_benchmark_obstacles  # noqa: E402
from .sampler import (  # noqa: E402
    ChainResult,
    SamplerConfig,
    naive_shielded_step,
    rk_gradient,
    rk_potential,
    run_chain,
    shielded_step,
    ula_step,
)
from .target import GaussianMixture, PotentialView, calibrate_offset, gmm_benchmark  # noqa: E402
