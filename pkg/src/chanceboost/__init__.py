"""Chance-corrected boosting: AdaBook, AdaKap, MultiBook and MultiKap."""

from .boosting import (
    BoostConfig,
    BoostedEnsemble,
    StopReason,
    adaboost_m1,
    boost_round,
    ensemble_predict,
    fit,
    multiboost,
    wagging_weights,
)
from .data import Attribute, Dataset, DatasetDescriptor, load_arff, load_csv, validate
from .evaluation import CVReport, equivalence_compare, run_repeated_cv, stratified_kfold, summarize_stats
from .learners import LearnerSpec, TreeParams, predict, train_naive_bayes, train_stump, train_tree
from .metrics import (
    ContingencyTable,
    MeasureKind,
    cohen_kappa,
    generalized_error,
    informedness,
    kappa_rescale,
    markedness,
    matthews_correlation,
    per_class_stats,
    rand_accuracy,
    tabulate,
)

__version__ = "0.1.0"
