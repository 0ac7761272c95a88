"""Minimal trainable neural toolkit with hand-written backward passes.

The layer set is closed and small (dense, conv2d, maxpool, batchnorm,
dropout, LSTM, additive attention, relu/linear, softmax), so each backward
pass is written and finite-difference tested individually instead of going
through a general autodiff graph.
"""

from .layers import (
    BatchNorm,
    Conv2d,
    Dense,
    Dropout,
    Linear,
    MaxPool2,
    ReLU,
    SoftmaxCrossEntropy,
    activation_layer,
    cross_entropy,
    glorot_uniform,
    l2_penalty,
    l2_grad,
    softmax,
)
from .recurrent import LSTM, Attention, BiLSTM
from .optim import Adam
from .gradcheck import grad_check

__all__ = [
    "Adam", "Attention", "BatchNorm", "BiLSTM", "Conv2d", "Dense", "Dropout",
    "LSTM", "Linear", "MaxPool2", "ReLU", "SoftmaxCrossEntropy",
    "activation_layer", "cross_entropy", "glorot_uniform", "grad_check",
    "l2_grad", "l2_penalty", "softmax",
]
