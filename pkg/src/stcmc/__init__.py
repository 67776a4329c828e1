"""Toolkit for surfaces of constant spacetime mean curvature and asymptotic charges.

Builds surfaces with constant sqrt(H^2 - P^2) in asymptotically Euclidean
initial data sets, sweeps them into foliations, and evaluates the associated
flux integrals: ADM energy/momentum, the Beig-O Murchadha center, the
momentum-squared correction term, and their sum (the center attached to the
constant-spacetime-mean-curvature foliation).

All grids, providers, and transform plans are immutable after construction;
the pointwise and per-surface computations are pure functions, so concurrent
read-only use is safe.
"""

from .chart import (
    DataProviderSpec,
    EuclideanProvider,
    GraphicalSchwarzschildProvider,
    MetricJet,
    ExtrinsicJet,
    PerturbationProvider,
    RotatedProvider,
    SchwarzschildProvider,
    TranslatedProvider,
    build_provider,
    christoffel,
    conjugate_momentum,
    constraint_densities,
    decay_check,
    evaluate_extrinsic,
    evaluate_metric,
    ricci_scalar_curvature,
)
from .charges import (
    adm_energy,
    adm_mass,
    adm_momentum,
    bom_center,
    correction_z,
    euclidean_motion_transform,
    fit_power_tail,
    sphere_fluxes,
    stcmc_center_coordinate,
    stcmc_center_foliation,
    velocity_integral,
)
from .solver import (
    SolveConfig,
    SolveResult,
    assemble_linearization,
    center_variation_check,
    continuation_in_tau,
    foliate,
    graph_jacobian,
    laplace_spectrum,
    newton_solve,
    operator_bound_check,
    uniqueness_cross_check,
)
from .spectral import build_grid, laplace_round
from .surfaces import (
    GraphSurface,
    apriori_class_check,
    appendix_graph_residual,
    euclidean_comparison,
    rebase,
    solve_graph_residual,
    surface_frames,
    surface_scalars,
    surface_to_csv,
)

__all__ = [
    "DataProviderSpec",
    "EuclideanProvider",
    "GraphicalSchwarzschildProvider",
    "MetricJet",
    "ExtrinsicJet",
    "PerturbationProvider",
    "RotatedProvider",
    "SchwarzschildProvider",
    "TranslatedProvider",
    "build_provider",
    "christoffel",
    "conjugate_momentum",
    "constraint_densities",
    "decay_check",
    "evaluate_extrinsic",
    "evaluate_metric",
    "ricci_scalar_curvature",
    "adm_energy",
    "adm_mass",
    "adm_momentum",
    "bom_center",
    "correction_z",
    "euclidean_motion_transform",
    "fit_power_tail",
    "sphere_fluxes",
    "stcmc_center_coordinate",
    "stcmc_center_foliation",
    "velocity_integral",
    "SolveConfig",
    "SolveResult",
    "assemble_linearization",
    "center_variation_check",
    "continuation_in_tau",
    "foliate",
    "graph_jacobian",
    "laplace_spectrum",
    "newton_solve",
    "operator_bound_check",
    "uniqueness_cross_check",
    "build_grid",
    "laplace_round",
    "GraphSurface",
    "apriori_class_check",
    "appendix_graph_residual",
    "euclidean_comparison",
    "rebase",
    "solve_graph_residual",
    "surface_frames",
    "surface_scalars",
    "surface_to_csv",
]

__version__ = "0.1.0"
