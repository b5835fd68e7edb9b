"""Routing paths as polymer chains: samplers, analytic densities and network routing experiments."""

from ._core import (
    Deployment,
    NonConvergenceError,
    StrategyParams,
    analytic_moment,
    angular_propagator,
    capacity_scaling,
    drs_concentration,
    drs_fourth_moment_asymptotic,
    drs_second_moment,
    effective_radius,
    estimate_moments,
    exact_rrs_cdf,
    exact_rrs_density,
    fit_critical_exponent,
    fit_power_law,
    gaussian_rrs_density,
    generate_deployment,
    histogram,
    ks_distance,
    ors_path,
    recover_persistence_radius,
    route,
    rrs_moment_exact,
    rrs_moment_limit,
    run_cli,
    sample_distances,
    sample_path,
    scaling_experiment,
)

__version__ = "0.1.0"
