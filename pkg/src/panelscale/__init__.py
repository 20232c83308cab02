"""Multiscale heterogeneity testing and clustering for time-varying panel
regression coefficients."""

from .cluster import (
    ClusterResult,
    Dissimilarity,
    GroupDifferenceReport,
    Merge,
    dissimilarity_matrix,
    group_difference_intervals,
    hac_cluster,
    partition_at,
    select_k,
)
from .critvals import (
    CriticalValue,
    critical_value,
    gaussian_critical_value,
    simulate_phi,
)
from .errors import (
    DegenerateCovarianceError,
    GridError,
    PanelFormatError,
    PanelScaleError,
    QuantileError,
    SingularDesignError,
)
from .estimate import LocalDesign, beta_hat, coefficient_curve, local_design
from .grid import Grid, build_grid_application, build_grid_custom
from .kernels import (
    SmoothingKernel,
    kernel_eval,
    kernel_weights,
    lambda_correction,
)
from .lrv import (
    HacConfig,
    LongRunCov,
    hac_estimate,
    long_run_covariances,
    pair_normalizer,
    residual_series,
)
from .multiscale import (
    LocalStatTable,
    Rejection,
    TestResult,
    aggregate,
    build_normalizers,
    compute_stat_table,
    local_stat,
    prune_minimal,
    run_test,
    unit_pairs,
)
from .panel import (
    CoefficientCurve,
    Panel,
    demean_units,
    deseasonalize,
    panel_from_csv,
    panel_to_csv,
)
from .simulate import (
    Bump,
    Constant,
    DgpSpec,
    ExperimentReport,
    GroundTruth,
    Linear,
    Sine,
    generate_panel,
    homogeneous_spec,
    mixed_heterogeneity_spec,
    planted_bump_spec,
    run_cluster_experiment,
    run_fwer_experiment,
    run_power_experiment,
    run_size_experiment,
    separation_height,
    two_group_spec,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
