"""Acoustic model, cycle predictor, and the autodiff engine beneath them."""

from . import tensor
from .gradcheck import gradient_check
from .layers import (
    Conv1d,
    Embedding,
    FeedForward,
    LayerNorm,
    Linear,
    Module,
    MultiHeadSelfAttention,
    Postnet,
    TransformerBlock,
)
from .model import (
    AcousticModel,
    ModelConfig,
    PredictorModule,
    acoustic_forward,
    closed_form_parameter_count,
    decode_from_hidden,
    length_regulate,
    positional_encoding,
    predictor_forward,
)
from .tensor import Tensor

__all__ = [
    "AcousticModel",
    "Conv1d",
    "Embedding",
    "FeedForward",
    "LayerNorm",
    "Linear",
    "ModelConfig",
    "Module",
    "MultiHeadSelfAttention",
    "Postnet",
    "PredictorModule",
    "Tensor",
    "TransformerBlock",
    "acoustic_forward",
    "closed_form_parameter_count",
    "decode_from_hidden",
    "gradient_check",
    "length_regulate",
    "positional_encoding",
    "predictor_forward",
    "tensor",
]
