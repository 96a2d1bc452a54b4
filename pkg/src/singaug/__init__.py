"""singaug: a desk-scale singing-voice-synthesis toolkit with pitch and
mix-up data augmentation, cycle-consistent training, and objective metrics.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND

__all__ = ["KERNEL_BACKEND", "__version__"]
