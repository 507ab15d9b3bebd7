"""Transition kernel of the skew-sticky Brownian motion and its audits."""

from .audit import (
    chapman_kolmogorov_gap,
    density_scaling_gap,
    kernel_bound_constant,
    normalization_gap,
    verify_gamma_growth,
    verify_kernel_bound,
    verify_scaling,
    verify_semigroup_bounds,
)
from .density import (
    TransitionCdf,
    atom_probability,
    continuous_density,
    continuous_mass,
    gamma_n,
    killed_density,
    measure_integral,
    semigroup_apply,
    sticky_term,
    transition_cdf,
    transition_density,
    transition_quantile,
    u1,
    u2,
    v_rho,
)
from .joint import (
    JointLawPoint,
    first_passage_density,
    joint_density,
    joint_expectation,
    joint_singular_density,
    joint_terminal_marginal,
    local_occupation_density,
    no_hit_probability,
    positive_share,
)
from .params import AnyParams, SkewStickyParams, SosBmParams, SpeedMeasure, skew_weight

__all__ = [
    "AnyParams", "JointLawPoint", "SkewStickyParams", "SosBmParams", "SpeedMeasure", "TransitionCdf",
    "atom_probability", "chapman_kolmogorov_gap", "continuous_density", "continuous_mass",
    "density_scaling_gap", "first_passage_density", "gamma_n", "joint_density", "joint_expectation",
    "joint_singular_density", "joint_terminal_marginal", "kernel_bound_constant", "killed_density",
    "local_occupation_density", "measure_integral", "no_hit_probability", "normalization_gap",
    "positive_share", "semigroup_apply", "skew_weight", "sticky_term", "transition_cdf",
    "transition_density", "transition_quantile", "u1", "u2", "v_rho", "verify_gamma_growth",
    "verify_kernel_bound", "verify_scaling", "verify_semigroup_bounds",
]
