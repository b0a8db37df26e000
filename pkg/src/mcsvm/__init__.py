"""Multiclass SVM benchmark for the Cleveland coronary heart-disease data."""
from .dataset import (CLASS_NAMES, PatientRecord, SplitSpec, apply_normalization,
                      fit_normalization, load_cleveland, parse_cleveland, stratified_split)
from .harness import ExperimentConfig, ExperimentReport, render_tables, run_experiment
from .metrics import (BinaryCounts, ConfusionMatrix, build_confusion, f_measure,
                      one_vs_rest_counts, overall_accuracy, precision, recall)
from .multiclass import STRATEGIES, MulticlassModel, predict, train
from .stats import pairwise_class_recall_tests, student_t_sf, welch_t_test
from .svm import (BinarySvmModel, KernelSpec, TrainerConfig, decision_value, kernel_eval,
                  predict_sign, train_smo)

__version__ = "0.1.0"
