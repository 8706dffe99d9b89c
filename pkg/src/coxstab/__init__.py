"""Graph-regularized sparse Cox regression with bootstrap feature-stability tools."""

__version__ = "0.1.0"

from .cox import CoxObjectiveParts, log_partial_likelihood, objective, smooth_gradient
from .data import FeatureMeta, SurvivalDataset, aggregate_events, load_dataset, standardize, write_dataset
from .errors import ContractError, CoxStabError, NumericalError, ParseError
from .evaluation import HorizonLabeling, auc, auc_pairs, auc_ranks, risk_score
from .graph import FeatureGraph, Laplacian, build_graph, laplacian, quad_form
from .optimizer import CoxModel, FitOptions, fit, soft_threshold
from .stability import (
    FeatureSubsetCollection,
    StabilityReport,
    bootstrap_stability,
    consistency_pair,
    importance,
    jaccard_pair,
    stability_report,
    top_k,
)
from .synth import SynthConfig, generate

__all__ = [
    "ContractError",
    "CoxModel",
    "CoxObjectiveParts",
    "CoxStabError",
    "FeatureGraph",
    "FeatureMeta",
    "FeatureSubsetCollection",
    "FitOptions",
    "HorizonLabeling",
    "Laplacian",
    "NumericalError",
    "ParseError",
    "StabilityReport",
    "SurvivalDataset",
    "SynthConfig",
    "aggregate_events",
    "auc",
    "auc_pairs",
    "auc_ranks",
    "bootstrap_stability",
    "build_graph",
    "consistency_pair",
    "fit",
    "generate",
    "importance",
    "jaccard_pair",
    "laplacian",
    "load_dataset",
    "log_partial_likelihood",
    "objective",
    "quad_form",
    "risk_score",
    "smooth_gradient",
    "soft_threshold",
    "stability_report",
    "standardize",
    "top_k",
    "write_dataset",
]
