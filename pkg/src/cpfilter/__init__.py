"""Changepoint estimation and filtering toolkit.

Fused-lasso style estimators (1-d, linear trend, general graphs), a
moving-window filter that prunes spurious changepoints, permutation
selection of its threshold, structural interpolants used to certify
detection distances, and a simulation harness.
"""

__version__ = "0.1.0"

from .exceptions import ConvergenceError
from .filtering import (FilteredSet, FilterProfile, auto_bandwidth,
                        ball_linear_max, ball_linear_min, candidate_set,
                        full_filter_set, haar_filter, local_maxima,
                        reduced_filter_set)
from .fused import (FusedLassoFit, check_kkt, cv_select_lambda,
                    default_lambda_grid, fused_lasso_1d,
                    fused_lasso_objective, lambda_max)
from .graph import (Graph, graph_changepoints, graph_fused_lasso,
                    graph_min_gap, graph_min_spacing_bruteforce,
                    graph_objective, graph_screening_distance, grid2d)
from .interpolant import (InterpolantResult, check_class_M,
                          lower_interpolant,
                          verify_interpolant_properties)
from .metrics import (changepoints, default_jump_tol, hausdorff, knots2,
                      min_gap, min_gap2, min_spacing, screening_distance,
                      second_differences, tv, tv2)
from .simulate import (GeneratorSpec, PipelineConfig, TrialRecord,
                       experiment_haus_vs_n, experiment_l2_scaling,
                       experiment_q_sweep, experiment_tau_sweep, fpr_tpr,
                       gen_data, gen_signal, run_trial, sweep)
from .tauselect import TauSelection, select_tau, upper_quantile
from .trend import (TrendFit, piecewise_linear_lsq, trend_filter_linear,
                    trend_lambda_max, trend_objective)

__all__ = [
    "ConvergenceError",
    "FilteredSet", "FilterProfile", "auto_bandwidth", "ball_linear_max",
    "ball_linear_min", "candidate_set", "full_filter_set", "haar_filter",
    "local_maxima", "reduced_filter_set",
    "FusedLassoFit", "check_kkt", "cv_select_lambda", "default_lambda_grid",
    "fused_lasso_1d", "fused_lasso_objective", "lambda_max",
    "Graph", "graph_changepoints", "graph_fused_lasso", "graph_min_gap",
    "graph_min_spacing_bruteforce", "graph_objective",
    "graph_screening_distance", "grid2d",
    "InterpolantResult", "check_class_M", "lower_interpolant",
    "verify_interpolant_properties",
    "changepoints", "default_jump_tol", "hausdorff", "knots2", "min_gap",
    "min_gap2", "min_spacing", "screening_distance", "second_differences",
    "tv", "tv2",
    "GeneratorSpec", "PipelineConfig", "TrialRecord",
    "experiment_haus_vs_n", "experiment_l2_scaling", "experiment_q_sweep",
    "experiment_tau_sweep", "fpr_tpr", "gen_data", "gen_signal", "run_trial",
    "sweep",
    "TauSelection", "select_tau", "upper_quantile",
    "TrendFit", "piecewise_linear_lsq", "trend_filter_linear",
    "trend_lambda_max", "trend_objective",
    "__version__",
]
