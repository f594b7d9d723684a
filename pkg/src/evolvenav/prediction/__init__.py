"""Relation-conditioned trajectory prediction: decoder, relation evolution, losses, training."""
from .data import WindowSet, make_windows, to_batch
from .decoder import RelationDecoder, effective_incidence
from .evolution import RelationEvolver
from .losses import (LossBreakdown, compute_losses, entropy, kl_categorical, kl_to_no_relation,
                     kl_to_uniform, reconstruction_loss)
from .metrics import MetricError, hyperedge_labels, majority_cluster_accuracy, minade_minfde
from .model import (ABLATIONS, PredictionRollout, PredictorConfig, RelationalPredictor,
                    RelationStep, ablation_config, gaussian_log_density)
from .training import CURVE_COLUMNS, TrainConfig, TrainingError, TrainResult, evaluate, train_predictor, write_curves

__all__ = [
    "ABLATIONS", "CURVE_COLUMNS", "LossBreakdown", "MetricError", "PredictionRollout", "PredictorConfig",
    "RelationDecoder", "RelationEvolver", "RelationStep", "RelationalPredictor", "TrainConfig",
    "TrainResult", "TrainingError", "WindowSet", "ablation_config", "compute_losses",
    "effective_incidence", "entropy", "evaluate", "gaussian_log_density", "hyperedge_labels",
    "kl_categorical", "majority_cluster_accuracy",
    "kl_to_no_relation", "kl_to_uniform", "make_windows", "minade_minfde",
    "reconstruction_loss", "to_batch", "train_predictor", "write_curves",
]
