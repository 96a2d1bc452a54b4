"""The loss stack: L1 reconstruction, mix-up mixture loss, cycle-consistency
cross-entropies, and their weighted combination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ParameterError, ShapeError
from ..nn import tensor as T
from ..nn.model import AcousticModel, PredictorModule, acoustic_forward
from ..nn.tensor import Tensor


@dataclass(frozen=True)
class LossWeights:
    """Weights combining the reconstruction and cycle losses (w_svs, w_si,
    w_pd) plus the mix-up blend w_mix inside the reconstruction term."""

    w_svs: float = 1.0
    w_si: float = 0.0
    w_pd: float = 0.0
    w_mix: float = 0.0

    def __post_init__(self):
        if min(self.w_svs, self.w_si, self.w_pd) < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.w_svs + self.w_si + self.w_pd <= 0:
            raise ConfigError("at least one of w_svs/w_si/w_pd must be positive")
        if not 0.0 <= self.w_mix <= 1.0:
            raise ConfigError("w_mix must lie in [0, 1]")

    @property
    def cycle_enabled(self) -> bool:
        return self.w_si > 0 or self.w_pd > 0


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def masked_l1(pred, target) -> Tensor:
    """Mean absolute difference over the first min(T_p, T_t) frames."""
    pred = _as_tensor(pred)
    target = _as_tensor(target)
    if pred.shape[1] != target.shape[1]:
        raise ShapeError(f"width mismatch: {pred.shape} vs {target.shape}")
    frames = min(pred.shape[0], target.shape[0])
    if pred.shape[0] > frames:
        pred = T.slice_rows(pred, 0, frames)
    if target.shape[0] > frames:
        target = T.slice_rows(target, 0, frames)
    return T.mean_all(T.abs_(pred - target))


def frame_cross_entropy(logits, labels) -> Tensor:
    """Mean over frames of -log softmax(logits)[label]."""
    logits = _as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.shape[0] != logits.shape[0]:
        raise ShapeError("one label per frame required")
    picked = T.take_per_row(T.log_softmax_rows(logits), labels)
    return T.mean_all(picked) * -1.0


def mixture_loss(y_mix, y_i, y_j, lam: float) -> Tensor:
    """lam * L1(y_mix, y_i) + (1 - lam) * L1(y_mix, y_j), each L1 truncated
    to its own target's frame count."""
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lam}")
    return masked_l1(y_mix, y_i) * float(lam) + masked_l1(y_mix, y_j) * float(1.0 - lam)


def combined_svs_loss(l_ori, l_mix, w_mix: float) -> Tensor:
    """(1 - w_mix) * original loss + w_mix * mixture loss."""
    if not 0.0 <= w_mix <= 1.0:
        raise ParameterError(f"w_mix must lie in [0, 1], got {w_mix}")
    return _as_tensor(l_ori) * float(1.0 - w_mix) + _as_tensor(l_mix) * float(w_mix)


def total_loss(l_svs, l_si, l_pd, weights: LossWeights) -> Tensor:
    """w_svs * L_svs + w_si * L_si + w_pd * L_pd."""
    out = _as_tensor(l_svs) * float(weights.w_svs)
    if weights.w_si > 0:
        out = out + _as_tensor(l_si) * float(weights.w_si)
    if weights.w_pd > 0:
        out = out + _as_tensor(l_pd) * float(weights.w_pd)
    return out


def _mean_tensors(parts: list[Tensor]) -> Tensor:
    acc = parts[0]
    for p in parts[1:]:
        acc = acc + p
    return acc * (1.0 / len(parts))


def cycle_losses(batch, model: AcousticModel, predictor: PredictorModule,
                 yhats=None, training: bool = False, rng=None):
    """Score-information and prediction cycle losses.

    L_si runs the predictor on ground-truth features; L_pd runs it on the
    acoustic model's predictions (recomputed unless ``yhats`` is supplied),
    so its gradient reaches both parameter sets.  Each loss averages the
    phoneme-branch and pitch-branch cross-entropies with equal weight and
    then averages over the batch.
    """
    if yhats is None:
        yhats = [
            acoustic_forward(s.score, s.durations, model, training, rng)[0]
            for s in batch
        ]
    si_parts, pd_parts = [], []
    for sample, y_hat in zip(batch, yhats):
        if y_hat.shape[0] != sample.labels_ph.shape[0]:
            raise ShapeError(
                f"{sample.labels_ph.shape[0]} frame labels vs "
                f"{y_hat.shape[0]} predicted frames"
            )
        drop = rng if training else None
        ph_gt, pi_gt = predictor(Tensor(sample.target), drop)
        si_parts.append(
            (frame_cross_entropy(ph_gt, sample.labels_ph)
             + frame_cross_entropy(pi_gt, sample.labels_pi)) * 0.5
        )
        ph_pr, pi_pr = predictor(y_hat, drop)
        pd_parts.append(
            (frame_cross_entropy(ph_pr, sample.labels_ph)
             + frame_cross_entropy(pi_pr, sample.labels_pi)) * 0.5
        )
    return _mean_tensors(si_parts), _mean_tensors(pd_parts)
