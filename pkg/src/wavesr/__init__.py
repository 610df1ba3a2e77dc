"""Wavelet-domain super-resolution toolkit with differential amplifier layers."""

from .dwa import DwaConfig, DwaParams, dwa_forward, dwa_init
from .models import Model, ModelConfig, ModelKind, build_model, count_params, model_forward
from .tensor import ConvParams, GradReport, Tensor, grad_check, tensor_new
from .training import TrainConfig, TrainHistory, train
from .wavelet import dwt2, dwt_multi, idwt2

__version__ = "0.1.0"

__all__ = [
    "ConvParams",
    "DwaConfig",
    "DwaParams",
    "GradReport",
    "Model",
    "ModelConfig",
    "ModelKind",
    "Tensor",
    "TrainConfig",
    "TrainHistory",
    "build_model",
    "count_params",
    "dwa_forward",
    "dwa_init",
    "dwt2",
    "dwt_multi",
    "grad_check",
    "idwt2",
    "model_forward",
    "tensor_new",
    "train",
]
