"""Kernel-differentiation linear response for random dynamical systems."""
from .core import (
    Domain,
    InitialDistribution,
    NonFiniteError,
    Observable,
    SystemSpec,
    check_map_derivative,
    point_mass,
    standard_normal,
    step,
    uniform_torus,
)
from .noise import DirectionalGaussian, GeneralScore, IsotropicGaussian, NoiseSample
from .estimators import (
    ChartCorrections,
    CorrectionsUnavailable,
    ErgodicConfig,
    EstimatorResult,
    FiniteTimeConfig,
    chart_corrections,
    ergodic_estimator,
    finite_time_estimator,
    one_step_response,
)
from .models import Problem, build_ar1, build_network, build_tent
from .oracle import FDOracleConfig, GridDensity, fd_ensemble_response, grid_linear_response, stationary_density

__version__ = "0.1.0"
