"""Robustness certificates for predictor feedback with distributed input delay."""

__version__ = "0.1.0"

from .certificate import (CorollaryBound, RobustnessCertificate, WeightChoice, certify,
                          corollary_single_delay, robustness_threshold)
from .delay_model import (ControllerSpec, DelaySystem, IntegralKernel, SampledKernel, Tap,
                          beta_eval, shared_horizon, with_shared_horizon)
from .errors import (CertificationError, ConfigurationError, DelayCertError, DimensionError,
                     DivergenceError, DomainError, NumericalError)
from .history import InitialHistory, InputHistory
from .reduction import (compute_kernel, delta_kernel_norm, gram_matrix, kernel_grid_for,
                        q_at_zero, reduce_state, single_delay_delta_bound)
from .scenario import Scenario, dump_scenario, load_scenario, parse_scenario
from .simulator import SimConfig, Trajectory, simulate, verify_envelope

__all__ = [
    "__version__",
    "CorollaryBound", "RobustnessCertificate", "WeightChoice", "certify",
    "corollary_single_delay", "robustness_threshold",
    "ControllerSpec", "DelaySystem", "IntegralKernel", "SampledKernel", "Tap",
    "beta_eval", "shared_horizon", "with_shared_horizon",
    "CertificationError", "ConfigurationError", "DelayCertError", "DimensionError",
    "DivergenceError", "DomainError", "NumericalError",
    "InitialHistory", "InputHistory",
    "compute_kernel", "delta_kernel_norm", "gram_matrix", "kernel_grid_for", "q_at_zero",
    "reduce_state", "single_delay_delta_bound",
    "Scenario", "dump_scenario", "load_scenario", "parse_scenario",
    "SimConfig", "Trajectory", "simulate", "verify_envelope",
]
