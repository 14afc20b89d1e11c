"""Sparse structured variable selection with error control.

Sub-algorithms (lasso, group lasso, structured input-output lasso) live in
:mod:`stabsel.solvers`; the stability-selection, screen-and-clean and
cross-validation regimes in :mod:`stabsel.meta`; the false-positive bound and
tuning heuristics in :mod:`stabsel.control`; synthetic data in
:mod:`stabsel.datagen`; experiment running and metrics in :mod:`stabsel.harness`.
"""

from .control import BoundEstimate, ObjectiveSpec, calibrate_lambda, model_choice, nfp_bound
from .core import (
    ConfusionCounts,
    DataError,
    DatasetBundle,
    GroundTruth,
    GroupStructure,
    ProblemShape,
    Selection,
    confusion,
    load_bundle,
    save_bundle,
    standardize,
)
from .datagen import DataConfig, config_table, generate
from .meta import (
    CVConfig,
    SacConfig,
    StabilityConfig,
    StabilityProfile,
    SubAlgorithm,
    cross_validate,
    screen_and_clean,
    stability_select,
)
from .solvers import FitReport, PenaltyConfig, fit_group_lasso, fit_lasso, fit_siol, lambda_grid, lambda_max
from .stats import bh_fdr, ols_tstats

__all__ = [
    "BoundEstimate",
    "CVConfig",
    "ConfusionCounts",
    "DataConfig",
    "DataError",
    "DatasetBundle",
    "FitReport",
    "GroundTruth",
    "GroupStructure",
    "ObjectiveSpec",
    "PenaltyConfig",
    "ProblemShape",
    "SacConfig",
    "Selection",
    "StabilityConfig",
    "StabilityProfile",
    "SubAlgorithm",
    "bh_fdr",
    "calibrate_lambda",
    "config_table",
    "confusion",
    "cross_validate",
    "fit_group_lasso",
    "fit_lasso",
    "fit_siol",
    "generate",
    "lambda_grid",
    "lambda_max",
    "load_bundle",
    "model_choice",
    "nfp_bound",
    "ols_tstats",
    "save_bundle",
    "screen_and_clean",
    "stability_select",
    "standardize",
]

__version__ = "0.1.0"
