"""stoptree: interpretable binary-tree policies for optimal stopping.

Learn axis-aligned stopping trees from sampled trajectories with exact
split-point optimization, cross-validate the growth tolerance, and compare
against regression and closed-form baselines.
"""

from .baselines import (
    LsPolicy,
    ThresholdPolicy,
    exact_uniform_dp,
    fit_longstaff_schwartz,
    parse_basis,
    threshold_policy_action,
    write_ls_coefficients_csv,
)
from .core_model import (
    GO,
    STOP,
    Leaf,
    PolicyEvaluation,
    Split,
    StoppingInstance,
    TrajectorySet,
    TreePolicy,
    action,
    clairvoyant_value,
    evaluate,
    leaf_assignment,
    read_trajectories,
    route,
    single_leaf_policy,
    stop_mask,
    stopping_time,
    tree_depth,
    write_trajectories,
)
from .cross_validation import (
    CvBreakpointSet,
    CvCurve,
    compute_breakpoints,
    fit_with_cv,
    fold_indices,
    select_gamma,
    write_cv_curve_csv,
)
from .errors import ConfigError, DataError, InternalError, StopTreeError
from .generators import (
    MaxCallParams,
    StateLayout,
    ingest_price_windows,
    simulate_maxcall,
    simulate_uniform_1d,
)
from .reporting import run_benchmark
from .split_optimizer import (
    SplitResult,
    TreeScanContext,
    candidate_objective,
    optimize_split_point,
)
from .tree_builder import BuildConfig, BuildTrace, TraceRecord, build, grow_tree

__version__ = "0.1.0"

__all__ = [
    "BuildConfig",
    "BuildTrace",
    "ConfigError",
    "CvBreakpointSet",
    "CvCurve",
    "DataError",
    "GO",
    "InternalError",
    "Leaf",
    "LsPolicy",
    "MaxCallParams",
    "PolicyEvaluation",
    "Split",
    "SplitResult",
    "StateLayout",
    "StopTreeError",
    "StoppingInstance",
    "ThresholdPolicy",
    "TraceRecord",
    "TrajectorySet",
    "TreePolicy",
    "TreeScanContext",
    "action",
    "build",
    "candidate_objective",
    "clairvoyant_value",
    "compute_breakpoints",
    "evaluate",
    "exact_uniform_dp",
    "fit_longstaff_schwartz",
    "fit_with_cv",
    "fold_indices",
    "grow_tree",
    "ingest_price_windows",
    "leaf_assignment",
    "optimize_split_point",
    "parse_basis",
    "read_trajectories",
    "route",
    "run_benchmark",
    "select_gamma",
    "simulate_maxcall",
    "simulate_uniform_1d",
    "single_leaf_policy",
    "stop_mask",
    "stopping_time",
    "threshold_policy_action",
    "tree_depth",
    "write_cv_curve_csv",
    "write_ls_coefficients_csv",
    "write_trajectories",
]
