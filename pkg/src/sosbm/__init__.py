"""Simulation and inference for skew-oscillating-sticky Brownian motion."""

from .estimators import EstimateReport, estimate_full, estimate_rho_beta, estimate_sigmas
from .kernel import SkewStickyParams, SosBmParams, TransitionCdf, atom_probability, transition_density
from .paths import SamplePath, read_path_csv, write_path_csv
from .sampler import RngStream, sample_transition, simulate_path
from .statistics import (
    Interval,
    NormalizingSequence,
    TestFunction,
    local_time_statistic,
    occupation_statistic,
    test_function,
)
from .transforms import map_params, t1, t1_inverse

__version__ = "0.1.0"

__all__ = [
    "EstimateReport", "Interval", "NormalizingSequence", "RngStream", "SamplePath", "SkewStickyParams",
    "SosBmParams", "TestFunction", "TransitionCdf", "atom_probability", "estimate_full", "estimate_rho_beta",
    "estimate_sigmas", "local_time_statistic", "map_params", "occupation_statistic", "read_path_csv",
    "sample_transition", "simulate_path", "t1", "t1_inverse", "test_function", "transition_density",
    "write_path_csv",
]
