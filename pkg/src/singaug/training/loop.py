"""Training loop: batching, mix-up wiring, cycle losses, optimization,
validation-based model selection, logging, and resume.

Randomness discipline: every random decision draws from a generator derived
from (run seed, purpose, epoch, step), so runs are bit-reproducible, resumed
runs rejoin the identical trajectory, and disabling one feature (say mix-up)
cannot shift the random numbers another feature sees.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..augment import MixupConfig, sample_lambda, select_mixup_pairs
from ..dsp import AcousticFeature
from ..errors import DivergenceError, ShapeError
from ..nn import tensor as T
from ..nn.model import AcousticModel, PredictorModule, acoustic_forward
from ..nn.tensor import Tensor
from ..score import FrameDurations, MusicScore, expand_labels
from .checkpoint import load_checkpoint, read_checkpoint, save_checkpoint
from .losses import (
    LossWeights,
    combined_svs_loss,
    cycle_losses,
    masked_l1,
    mixture_loss,
    total_loss,
)
from .optim import Adam

_PURPOSES = {"model_init": 0, "predictor_init": 1, "batch": 2, "dropout": 3,
             "mixup": 4, "synth": 5}


def stream(seed: int, purpose: str, *counters: int) -> np.random.Generator:
    """Deterministic per-purpose generator, independent of other purposes."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), _PURPOSES[purpose], *map(int, counters)])
    )


@dataclass(frozen=True)
class NormStats:
    """Global per-dimension mean of the training features."""

    mean: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.mean, dtype=np.float32).reshape(1, -1)
        if not np.all(np.isfinite(arr)):
            raise ShapeError("normalization mean contains non-finite values")
        arr.flags.writeable = False
        object.__setattr__(self, "mean", arr)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"mean": [float(x) for x in self.mean[0]]}, fh)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(np.asarray(json.load(fh)["mean"]))


def compute_norm_stats(features: list[AcousticFeature]) -> NormStats:
    if not features:
        raise ShapeError("no features to compute statistics from")
    total = np.zeros(features[0].n_dims, dtype=np.float64)
    frames = 0
    for f in features:
        total += f.mel.astype(np.float64).sum(axis=0)
        frames += f.n_frames
    return NormStats(total / frames)


def normalize(y: np.ndarray, stats: NormStats) -> np.ndarray:
    y = np.asarray(y)
    if y.shape[1] != stats.mean.shape[1]:
        raise ShapeError(f"feature width {y.shape[1]} != stats width {stats.mean.shape[1]}")
    return (y - stats.mean).astype(np.float32)


def denormalize(y: np.ndarray, stats: NormStats) -> np.ndarray:
    y = np.asarray(y)
    if y.shape[1] != stats.mean.shape[1]:
        raise ShapeError(f"feature width {y.shape[1]} != stats width {stats.mean.shape[1]}")
    return (y + stats.mean).astype(np.float32)


@dataclass(frozen=True)
class Sample:
    """One training item: score, durations, normalized target, frame labels."""

    sample_id: str
    score: MusicScore
    durations: FrameDurations
    target: np.ndarray

    labels_ph: np.ndarray = field(init=False)
    labels_pi: np.ndarray = field(init=False)

    def __post_init__(self):
        if self.durations.total_frames != self.target.shape[0]:
            raise ShapeError(
                f"{self.sample_id}: durations give {self.durations.total_frames} "
                f"frames, target has {self.target.shape[0]}"
            )
        ph, pi = expand_labels(self.score, self.durations)
        object.__setattr__(self, "labels_ph", ph)
        object.__setattr__(self, "labels_pi", pi)


@dataclass(frozen=True)
class TrainSettings:
    epochs: int = 50
    batch_size: int = 8
    base_lr: float = 1.0
    warmup_steps: int = 200
    grad_clip: float = 1.0
    checkpoint_every: int = 1
    keep_checkpoints: int = 2
    ma_enabled: bool = False
    cc_enabled: bool = False


def batch_total_loss(batch, model: AcousticModel, predictor: PredictorModule | None,
                     weights: LossWeights, mixup_plan=(), training: bool = False,
                     rng: np.random.Generator | None = None):
    """Compose the full objective for one batch.

    ``mixup_plan`` is a pre-drawn list of (i, j, lambda); the plan rather
    than a generator makes the composed loss a pure function of parameters,
    which the gradient checks rely on.  Returns (total, parts) where parts
    maps component names to Tensors (absent components omitted).
    """
    outputs = [
        acoustic_forward(s.score, s.durations, model, training, rng) for s in batch
    ]
    l1_terms = [masked_l1(y_hat, s.target) for (y_hat, _), s in zip(outputs, batch)]
    l_ori = l1_terms[0]
    for term in l1_terms[1:]:
        l_ori = l_ori + term
    l_ori = l_ori * (1.0 / len(l1_terms))

    parts = {"l_svs_ori": l_ori}
    l_svs = l_ori
    if mixup_plan:
        mix_terms = []
        for i, j, lam in mixup_plan:
            (_, h_i), (_, h_j) = outputs[i], outputs[j]
            t_max = max(h_i.shape[0], h_j.shape[0])
            h_mix = (T.pad_rows(h_i, t_max) * float(lam)
                     + T.pad_rows(h_j, t_max) * float(1.0 - lam))
            y_mix = model.decode(h_mix, rng if training else None)
            mix_terms.append(mixture_loss(y_mix, batch[i].target, batch[j].target, lam))
        l_mix = mix_terms[0]
        for term in mix_terms[1:]:
            l_mix = l_mix + term
        l_mix = l_mix * (1.0 / len(mix_terms))
        parts["l_mix"] = l_mix
        l_svs = combined_svs_loss(l_ori, l_mix, weights.w_mix)
    parts["l_svs"] = l_svs

    l_si = l_pd = None
    if weights.cycle_enabled:
        if predictor is None:
            raise ShapeError("cycle losses need a predictor module")
        yhats = [y for y, _ in outputs]
        l_si, l_pd = cycle_losses(batch, model, predictor, yhats=yhats,
                                  training=training, rng=rng)
        parts["l_si"] = l_si
        parts["l_pd"] = l_pd
    total = total_loss(l_svs, l_si, l_pd, weights)
    parts["total"] = total
    return total, parts


class Trainer:
    """Owns one model + predictor + optimizer and runs seeded epochs."""

    def __init__(self, model: AcousticModel, predictor: PredictorModule,
                 train_samples: list[Sample], valid_samples: list[Sample],
                 weights: LossWeights, mixup: MixupConfig,
                 settings: TrainSettings, seed: int,
                 run_dir: str | Path | None = None, config_hash: str = "unconfigured"):
        self.model = model
        self.predictor = predictor
        self.train_samples = list(train_samples)
        self.valid_samples = list(valid_samples)
        self.weights = weights
        self.mixup = mixup
        self.settings = settings
        self.seed = int(seed)
        self.config_hash = config_hash
        self.run_dir = Path(run_dir) if run_dir is not None else None
        params = dict(
            [(f"model.{n}", p) for n, p in model.parameters().items()]
            + [(f"predictor.{n}", p) for n, p in predictor.parameters().items()]
        )
        self.optimizer = Adam(
            params,
            base_lr=settings.base_lr,
            warmup=settings.warmup_steps,
            d_model=model.config.d_hidden,
            grad_clip=settings.grad_clip,
        )
        self.epoch = 0
        self.best_val = math.inf
        self.best_val_history: list[float] = []
        self.val_history: list[float] = []
        if self.run_dir is not None:
            (self.run_dir / "checkpoints").mkdir(parents=True, exist_ok=True)

    # -- plumbing -----------------------------------------------------------

    @property
    def mixup_active(self) -> bool:
        return (self.settings.ma_enabled and self.weights.w_mix > 0
                and self.mixup.proportion > 0)

    def _batches(self, epoch: int):
        order = stream(self.seed, "batch", epoch).permutation(len(self.train_samples))
        size = self.settings.batch_size
        for start in range(0, len(order), size):
            yield [self.train_samples[i] for i in order[start : start + size]]

    def _log(self, record: dict):
        if self.run_dir is None:
            return
        with open(self.run_dir / "train_log.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # -- steps and epochs ----------------------------------------------------

    def train_step(self, batch, epoch: int, step_in_epoch: int) -> dict:
        drop_rng = stream(self.seed, "dropout", epoch, step_in_epoch)
        plan = []
        if self.mixup_active and len(batch) >= 2:
            mix_rng = stream(self.seed, "mixup", epoch, step_in_epoch)
            pairs = select_mixup_pairs(len(batch), self.mixup.proportion, mix_rng)
            plan = [(i, j, sample_lambda(self.mixup.alpha, mix_rng)) for i, j in pairs]
        cycle_pred = self.predictor if self.weights.cycle_enabled else None
        total, parts = batch_total_loss(batch, self.model, cycle_pred, self.weights,
                                        mixup_plan=plan, training=True, rng=drop_rng)
        value = total.item()
        if not math.isfinite(value):
            raise DivergenceError(
                f"non-finite loss {value} at epoch {epoch} step {step_in_epoch}"
            )
        self.optimizer.zero_grad()
        total.backward()
        lr = self.optimizer.step()
        metrics = {"epoch": epoch, "step": self.optimizer.step_count, "lr": lr,
                   "seed": self.seed}
        for name, tensor_value in parts.items():
            metrics[name] = tensor_value.item()
        return metrics

    def validation_loss(self) -> float:
        """Mean L_svs over the validation split, no mix-up, no dropout."""
        if not self.valid_samples:
            return math.nan
        values = []
        for s in self.valid_samples:
            y_hat, _ = acoustic_forward(s.score, s.durations, self.model)
            values.append(masked_l1(y_hat, s.target).item())
        return float(np.mean(values))

    def run_epoch(self) -> list[dict]:
        records = []
        for step_in_epoch, batch in enumerate(self._batches(self.epoch)):
            record = self.train_step(batch, self.epoch, step_in_epoch)
            self._log(record)
            records.append(record)
        self.epoch += 1
        return records

    def run(self, epochs: int | None = None) -> dict:
        epochs = self.settings.epochs if epochs is None else epochs
        while self.epoch < epochs:
            self.run_epoch()
            val = self.validation_loss()
            self.val_history.append(val)
            improved = math.isfinite(val) and val < self.best_val
            if improved:
                self.best_val = val
                self.best_val_history.append(val)
            self._log({"epoch": self.epoch - 1, "validation_l_svs": val,
                       "best": improved, "seed": self.seed})
            self._checkpoint_epoch(self.epoch - 1, val, improved)
        return {"best_val": self.best_val, "epochs": self.epoch,
                "best_val_history": list(self.best_val_history),
                "val_history": list(self.val_history)}

    # -- persistence ----------------------------------------------------------

    def _meta(self, val: float | None) -> dict:
        return {
            "epoch": self.epoch,
            "optimizer_step": self.optimizer.step_count,
            "best_val": None if math.isinf(self.best_val) else self.best_val,
            "best_val_history": self.best_val_history,
            "val_history": self.val_history,
            "validation_l_svs": val,
            "seed": self.seed,
        }

    def _checkpoint_epoch(self, epoch: int, val: float, improved: bool):
        if self.run_dir is None:
            return
        ckpt_dir = self.run_dir / "checkpoints"
        if improved:
            self.save(self.run_dir / "best.ckpt", val)
        if (epoch + 1) % self.settings.checkpoint_every != 0 and epoch + 1 != self.settings.epochs:
            return
        self.save(ckpt_dir / f"epoch_{epoch}.ckpt", val)
        keep = self.settings.keep_checkpoints
        if keep > 0:
            existing = sorted(
                ckpt_dir.glob("epoch_*.ckpt"),
                key=lambda p: int(re.search(r"epoch_(\d+)", p.name).group(1)),
            )
            for old in existing[:-keep]:
                old.unlink()

    def save(self, path, val: float | None = None):
        save_checkpoint(path, self.model, self.predictor, self.optimizer,
                        self.config_hash, self._meta(val))

    def restore(self, path):
        meta = load_checkpoint(path, self.model, self.predictor, self.optimizer,
                               expected_hash=self.config_hash)
        self.epoch = int(meta["epoch"])
        best = meta.get("best_val")
        self.best_val = math.inf if best is None else float(best)
        self.best_val_history = list(meta.get("best_val_history", []))
        self.val_history = list(meta.get("val_history", []))
        return meta

    def latest_checkpoint(self) -> Path | None:
        if self.run_dir is None:
            return None
        ckpts = sorted(
            (self.run_dir / "checkpoints").glob("epoch_*.ckpt"),
            key=lambda p: int(re.search(r"epoch_(\d+)", p.name).group(1)),
        )
        return ckpts[-1] if ckpts else None
