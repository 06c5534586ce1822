"""Minimal float64 dense/LSTM layers, Adam and gradient checking."""
from .gradcheck import GradCheckReport, grad_check, relative_error
from .layers import (
    Dense,
    DenseCache,
    LstmCache,
    LstmCell,
    dense_backward,
    dense_forward,
    lstm_step,
    lstm_step_backward,
    sigmoid,
)
from .optim import Adam, AdamState, adam_step

__all__ = [
    "Adam", "AdamState", "Dense", "DenseCache", "GradCheckReport", "LstmCache",
    "LstmCell", "adam_step", "dense_backward", "dense_forward", "grad_check",
    "lstm_step", "lstm_step_backward", "relative_error", "sigmoid",
]
