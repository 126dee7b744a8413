"""Time-resolved and subject-level decoding of group differences in epoched EEG."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, EegDecodeError, EmptySelectionError  # noqa: E402
from .dataset import (ChannelLayout, Dataset, DatasetWriter, EpochedTrial, SubjectRecord,  # noqa: E402
                      TrialMeta, load_dataset, save_dataset, validate)
from .logreg import FitConfig, LogRegModel, fit, predict_proba  # noqa: E402
from .stats import auc, auc_with_ci, bootstrap_ci, perm_test_vs_chance, spearman  # noqa: E402
from .cluster import ClusterConfig, cluster_test, enumerate_null  # noqa: E402
from .mvpa import build_erps, channel_importance, decode_timecourse, group_labels  # noqa: E402
from .subject_clf import (BootstrapConfig, ClassifierSpec, run_subject_classification,  # noqa: E402
                          transfer_eval)
from .synth import SynthConfig, calibration_preset, generate, paper_shaped_preset  # noqa: E402

__all__ = [
    "ChannelLayout", "ConfigError", "DataError", "Dataset", "DatasetWriter", "EegDecodeError",
    "EmptySelectionError", "EpochedTrial", "SubjectRecord", "TrialMeta", "load_dataset",
    "save_dataset", "validate", "FitConfig", "LogRegModel", "fit", "predict_proba", "auc",
    "auc_with_ci", "bootstrap_ci", "perm_test_vs_chance", "spearman", "ClusterConfig",
    "cluster_test", "enumerate_null", "build_erps", "channel_importance", "decode_timecourse",
    "group_labels", "BootstrapConfig", "ClassifierSpec", "run_subject_classification",
    "transfer_eval", "SynthConfig", "calibration_preset", "generate", "paper_shaped_preset",
]
