"""Adam with the Noam warm-up schedule and global-norm gradient clipping."""

from __future__ import annotations

import numpy as np

from ..errors import ParameterError
from ..nn.tensor import Tensor


def noam_lr(step: int, base_lr: float, warmup: int, d_model: int) -> float:
    """base_lr * d_model^-0.5 * min(step^-0.5, step * warmup^-1.5).

    Ramps linearly to the peak at ``step == warmup`` (the peak scales with
    ``base_lr``), then decays as inverse square root.
    """
    if step < 1:
        raise ParameterError(f"step must be >= 1, got {step}")
    if warmup < 1 or d_model < 1 or base_lr <= 0:
        raise ParameterError("warmup, d_model, and base_lr must be positive")
    return base_lr * d_model**-0.5 * min(step**-0.5, step * warmup**-1.5)


def clip_gradients(params: dict[str, Tensor], max_norm: float) -> float:
    """Scale all gradients so their global L2 norm is at most ``max_norm``;
    returns the pre-clip norm."""
    total = 0.0
    for p in params.values():
        if p.grad is not None:
            total += float(np.sum(p.grad.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if max_norm > 0 and norm > max_norm:
        scale = max_norm / norm
        for p in params.values():
            if p.grad is not None:
                p.grad *= np.asarray(scale, dtype=p.grad.dtype)
    return norm


class Adam:
    """Adam over a named parameter dict, with serializable moments."""

    def __init__(self, params: dict[str, Tensor], base_lr: float = 1.0,
                 warmup: int = 200, d_model: int = 64,
                 betas=(0.9, 0.98), eps: float = 1e-9, grad_clip: float = 1.0):
        self.params = params
        self.base_lr = float(base_lr)
        self.warmup = int(warmup)
        self.d_model = int(d_model)
        self.beta1, self.beta2 = betas
        self.eps = float(eps)
        self.grad_clip = float(grad_clip)
        self.step_count = 0
        self.m = {n: np.zeros_like(p.data) for n, p in params.items()}
        self.v = {n: np.zeros_like(p.data) for n, p in params.items()}

    def current_lr(self) -> float:
        return noam_lr(self.step_count + 1, self.base_lr, self.warmup, self.d_model)

    def step(self) -> float:
        """One update from the accumulated gradients; returns the lr used."""
        self.step_count += 1
        lr = noam_lr(self.step_count, self.base_lr, self.warmup, self.d_model)
        if self.grad_clip > 0:
            clip_gradients(self.params, self.grad_clip)
        t = self.step_count
        bc1 = 1.0 - self.beta1**t
        bc2 = 1.0 - self.beta2**t
        for name, p in self.params.items():
            if p.grad is None:
                continue
            dt = p.data.dtype.type
            m = self.m[name]
            v = self.v[name]
            m *= dt(self.beta1)
            m += dt(1.0 - self.beta1) * p.grad
            v *= dt(self.beta2)
            v += dt(1.0 - self.beta2) * (p.grad * p.grad)
            m_hat = m / dt(bc1)
            v_hat = v / dt(bc2)
            p.data -= dt(lr) * m_hat / (np.sqrt(v_hat) + dt(self.eps))
        return lr

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()
