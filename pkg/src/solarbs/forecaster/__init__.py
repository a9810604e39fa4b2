from .adam import AdamState, adam_step
from .lstm import LstmWeights, lstm_step, param_count
from .model import (
    CondLstmModel,
    TrainConfig,
    TrainingLog,
    backward,
    forward,
    load_checkpoint,
    predict_features,
    predict_series,
    save_checkpoint,
    train,
)
from .scaling import ScalerParams, fit_scaler
