"""Finite-difference verification of reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from ..errors import GradientHealthError, ParameterError
from .tensor import Tensor

REL_FLOOR = 1e-6  # denominator floor so exact-zero gradients compare sanely


def gradient_check(
    fn,
    params: list[Tensor],
    rng: np.random.Generator,
    n_samples: int = 20,
    eps: float = 1e-5,
) -> float:
    """Compare analytic gradients of ``fn()`` against central differences.

    ``fn`` rebuilds its graph on every call and returns a scalar Tensor.
    For each parameter a random subset of coordinates is perturbed by
    +-eps.  Returns the maximum relative error over all sampled
    coordinates; raises if an analytic gradient is non-finite.
    """
    for p in params:
        if p.dtype != np.float64:
            raise ParameterError("gradient_check requires float64 parameters")
        p.zero_grad()
    loss = fn()
    loss.backward()
    analytic = []
    for p in params:
        g = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        if not np.all(np.isfinite(g)):
            raise GradientHealthError("non-finite analytic gradient")
        analytic.append(g)

    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.data.reshape(-1)
        size = flat.shape[0]
        count = min(n_samples, size)
        coords = rng.choice(size, size=count, replace=False)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + eps
            up = fn().item()
            flat[c] = orig - eps
            down = fn().item()
            flat[c] = orig
            numeric = (up - down) / (2.0 * eps)
            a = g.reshape(-1)[c]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), REL_FLOOR)
            worst = max(worst, rel)
    return worst
