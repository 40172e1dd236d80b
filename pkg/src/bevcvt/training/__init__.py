from .loop import EpochEntry, RunRecord, TrainConfig, TrainingError, train_model
from .evaluate import evaluate
from .matrix import MATRIX_CELLS, MatrixCell, run_experiment_matrix

__all__ = [
    "EpochEntry",
    "MATRIX_CELLS",
    "MatrixCell",
    "RunRecord",
    "TrainConfig",
    "TrainingError",
    "evaluate",
    "run_experiment_matrix",
    "train_model",
]
