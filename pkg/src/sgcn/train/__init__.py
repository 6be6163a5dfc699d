from .config import TrainConfig
from .loop import MetricReport, TrainingDiverged, evaluate, fit, predict
from .losses import cross_entropy, mse
from .metrics import UndefinedMetricError, accuracy, rmse, roc_auc
from .optim import SGD, Adam, AdamState, NonFiniteGradientError, adam_step
