"""Penalised-complexity priors for stationary autoregressive processes."""

from .arcore import (
    ArProcess,
    NonStationaryError,
    autocorrelations,
    coef_to_pacf,
    correlation_matrix,
    innovation_variance,
    log_likelihood,
    pacf_to_coef,
    simulate,
)
from .inference import McmcConfig, PosteriorSamples, PriorConfig, fit_ar, hpd_interval, posterior_summary
from .priors import (
    CalibrationError,
    CalibrationInfeasible,
    SequentialPcPrior,
    ShrinkageSchedule,
    TailStatement,
    expected_shrinkage,
    theta_from_tail_base0,
    theta_from_tail_base1,
    theta_schedule,
)

__version__ = "0.1.0"
