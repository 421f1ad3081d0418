"""Equally good and dissimilar linear SVMs, and the feature structure they reveal."""

from .data import (Dataset, GroundTruth, SyntheticSpec, apply_standardize, fit_standardize,
                   generate_synthetic, load_dataset, save_dataset, split)
from .metrics import (EgdReport, EgdThresholds, accuracy, dissimilarity_score,
                      egd_check, empirical_agreement, feature_dissimilarity,
                      predictive_agreement)
from .solver import (SolverResult, SolverSettings, SubproblemSpec, oracle_solve,
                     solve_subproblem)
from .structure import (FeatureSet, FeatureStructure, cardinality_report,
                        extract_structure, support, verify_cfs)
from .trainer import (LinearModel, MdsvmHyper, ModelSet, disjointness_penalty,
                      global_objective, init_modelset, load_models, predict, save_models,
                      train_ensvm, train_mdsvm, train_svm)
from .tuning import (ExperimentReport, TuningConfig, run_experiment, tune_ensvm,
                     tune_mdsvm, z_score)

__all__ = [
    "accuracy",
    "apply_standardize",
    "cardinality_report",
    "Dataset",
    "disjointness_penalty",
    "dissimilarity_score",
    "egd_check",
    "EgdReport",
    "EgdThresholds",
    "empirical_agreement",
    "ExperimentReport",
    "extract_structure",
    "feature_dissimilarity",
    "FeatureSet",
    "FeatureStructure",
    "fit_standardize",
    "generate_synthetic",
    "global_objective",
    "GroundTruth",
    "init_modelset",
    "LinearModel",
    "load_dataset",
    "load_models",
    "MdsvmHyper",
    "ModelSet",
    "oracle_solve",
    "predict",
    "predictive_agreement",
    "run_experiment",
    "save_dataset",
    "save_models",
    "solve_subproblem",
    "SolverResult",
    "SolverSettings",
    "split",
    "SubproblemSpec",
    "support",
    "SyntheticSpec",
    "train_ensvm",
    "train_mdsvm",
    "train_svm",
    "tune_ensvm",
    "tune_mdsvm",
    "TuningConfig",
    "verify_cfs",
    "z_score",
]

__version__ = "0.1.0"
