"""Sparse semiparametric regression with two functional covariates.

A scalar response is modeled as a sparse linear effect of one
discretized curve plus a nonparametric single-index effect of a second
curve. The package provides the fast thinned-grid selection algorithm,
its two-stage refinement, the full-grid penalized baseline, and a
reproducible simulation bench.
"""

from .directions import (
    BSplineBasis,
    Direction,
    DirectionSet,
    basis_eval,
    default_quad_grid,
    enumerate_directions,
    project,
    render_matrix,
)
from .errors import (
    BandwidthError,
    BifregError,
    DataError,
    DomainError,
    EnumerationCapError,
    GridMismatchError,
    NumericalError,
    ReductionError,
    ValidationError,
)
from .fassmr import (
    FassmrConfig,
    FitResult,
    ReductionScheme,
    build_reduction,
    fassmr_fit,
    msep,
    predict,
    predict_many,
    standard_pls_fit,
)
from .grids import (
    BiFunctionalDataset,
    Curve,
    Grid,
    SupportSet,
    inner_product,
    load_csv,
    save_csv,
    split_dataset,
    trapezoid_weights,
)
from .iassmr import (
    IassmrConfig,
    SecondStageSet,
    final_support,
    iassmr_fit,
    second_stage_set,
    stage_two_fit,
    write_stage_trace,
)
from .kernels import (
    KernelSpec,
    LinkEstimate,
    LinkSmoother,
    WeightMatrix,
    bandwidth_grid,
    epanechnikov,
    estimate_link,
    nw_weights,
    projections,
    semimetric,
    transform,
)
from .scad import (
    PathResult,
    PenalizedFit,
    PenaltyScaling,
    ScadConfig,
    bic_score,
    lambda_path,
    ols_scaling,
    penalized_fit,
    scad_derivative,
    scad_penalty,
    solve_path,
)
from .simlab import (
    DesignSpec,
    GroundTruth,
    MetricsSummary,
    ReplicateResult,
    default_basis,
    default_configs,
    default_direction_set,
    gen_brownian,
    gen_design,
    gen_lines,
    gen_xcurves,
    impact_metrics,
    monte_carlo,
    replicate_rng,
    run_replicate,
    true_direction,
)

__version__ = "0.1.0"

__all__ = [
    "BSplineBasis",
    "Direction",
    "DirectionSet",
    "basis_eval",
    "default_quad_grid",
    "enumerate_directions",
    "project",
    "render_matrix",
    "BandwidthError",
    "BifregError",
    "DataError",
    "DomainError",
    "EnumerationCapError",
    "GridMismatchError",
    "NumericalError",
    "ReductionError",
    "ValidationError",
    "FassmrConfig",
    "FitResult",
    "ReductionScheme",
    "build_reduction",
    "fassmr_fit",
    "msep",
    "predict",
    "predict_many",
    "standard_pls_fit",
    "BiFunctionalDataset",
    "Curve",
    "Grid",
    "SupportSet",
    "inner_product",
    "load_csv",
    "save_csv",
    "split_dataset",
    "trapezoid_weights",
    "IassmrConfig",
    "SecondStageSet",
    "final_support",
    "iassmr_fit",
    "second_stage_set",
    "stage_two_fit",
    "write_stage_trace",
    "KernelSpec",
    "LinkEstimate",
    "LinkSmoother",
    "WeightMatrix",
    "bandwidth_grid",
    "epanechnikov",
    "estimate_link",
    "nw_weights",
    "projections",
    "semimetric",
    "transform",
    "PathResult",
    "PenalizedFit",
    "PenaltyScaling",
    "ScadConfig",
    "bic_score",
    "lambda_path",
    "ols_scaling",
    "penalized_fit",
    "scad_derivative",
    "scad_penalty",
    "solve_path",
    "DesignSpec",
    "GroundTruth",
    "MetricsSummary",
    "ReplicateResult",
    "default_basis",
    "default_configs",
    "default_direction_set",
    "gen_brownian",
    "gen_design",
    "gen_lines",
    "gen_xcurves",
    "impact_metrics",
    "monte_carlo",
    "replicate_rng",
    "run_replicate",
    "true_direction",
    "__version__",
]
