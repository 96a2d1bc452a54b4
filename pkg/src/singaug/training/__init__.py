"""Loss stack, optimizer, normalization, checkpointing, and the train loop."""

from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from .loop import (
    NormStats,
    Sample,
    Trainer,
    TrainSettings,
    batch_total_loss,
    compute_norm_stats,
    denormalize,
    normalize,
    stream,
)
from .losses import (
    LossWeights,
    combined_svs_loss,
    cycle_losses,
    frame_cross_entropy,
    masked_l1,
    mixture_loss,
    total_loss,
)
from .optim import Adam, clip_gradients, noam_lr

__all__ = [
    "Adam",
    "LossWeights",
    "NormStats",
    "Sample",
    "TrainSettings",
    "Trainer",
    "batch_total_loss",
    "clip_gradients",
    "combined_svs_loss",
    "compute_norm_stats",
    "cycle_losses",
    "denormalize",
    "frame_cross_entropy",
    "load_checkpoint",
    "masked_l1",
    "mixture_loss",
    "noam_lr",
    "normalize",
    "read_checkpoint",
    "save_checkpoint",
    "stream",
    "total_loss",
]
