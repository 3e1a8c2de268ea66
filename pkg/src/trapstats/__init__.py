"""Atom-number statistics of a trap loaded against one-body and rho-body losses.

Three backends cross-validate each other: direct master-equation work on a
truncated occupancy space (steady_state, evolve), exact event-driven
stochastic trajectories (sample), and the linear-noise fluctuation ODEs
(vk_evolve, vk_steady). run_sweep drives all of them over a loading-rate
grid. The headline steady-state result for dominant pair loss is a Fano
factor of 3/4.
"""

__version__ = "0.1.0"

from .errors import (
    NonUniqueSteadyStateError,
    NoClosedFormError,
    NumericalError,
    StiffnessError,
    TrapstatsError,
    ValidationError,
)
from .model import (
    LossChannel,
    ModelParams,
    event_rate,
    mean_field_mean,
    mean_field_outflow,
    predict_steady_mean,
    total_loss_rate,
)
from .generator import (
    Generator,
    TruncationDiagnostic,
    build_generator,
    default_n_max,
    truncation_check,
)
from .master import (
    Moments,
    StateDistribution,
    evolve,
    moment_rhs,
    moments,
    steady_state,
)
from .mc import EnsembleMoments, TrajectoryEnsemble, bootstrap_se_fano, histogram, sample
from .vankampen import VanKampenState, to_dimensionless, vk_evolve, vk_steady
from .sweep import (
    SweepRow,
    SweepSpec,
    default_grid,
    gaussian_check,
    run_sweep,
    spectral_gap,
)

__all__ = [
    "__version__",
    "TrapstatsError", "ValidationError", "NoClosedFormError",
    "NumericalError", "StiffnessError", "NonUniqueSteadyStateError",
    "LossChannel", "ModelParams", "event_rate", "total_loss_rate",
    "predict_steady_mean", "mean_field_outflow", "mean_field_mean",
    "Generator", "TruncationDiagnostic", "build_generator", "default_n_max",
    "truncation_check",
    "StateDistribution", "Moments", "moments", "moment_rhs",
    "steady_state", "evolve",
    "TrajectoryEnsemble", "EnsembleMoments", "sample", "histogram",
    "bootstrap_se_fano",
    "VanKampenState", "to_dimensionless", "vk_evolve", "vk_steady",
    "SweepSpec", "SweepRow", "default_grid", "run_sweep", "spectral_gap",
    "gaussian_check",
]
