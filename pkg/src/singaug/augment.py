"""Data augmentation primitives: semitone shift policies over (score, audio)
pairs and mix-up interpolation over expanded hidden states.

Pitch augmentation is an offline corpus transform (shifted copies are
materialized next to the originals); mix-up happens inside the training
step, which wires the pure primitives below into the loss.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dsp import (
    AcousticFeature,
    AudioBuffer,
    AudioParams,
    DEFAULT_PARAMS,
    mel_spectrogram,
    pitch_shift_audio,
)
from .errors import ConfigError, ParameterError, ShapeError, ValidationError
from .score import (
    FrameDurations,
    MusicScore,
    durations_to_frames,
    mean_pitch,
    transpose_score,
)

P1 = "P1"
P2 = "P2"
P_ADAPTIVE = "P_ADAPTIVE"
POLICY_KINDS = (P1, P2, P_ADAPTIVE)

ADAPTIVE_TOLERANCE = 0.5  # semitones; "equal" window around the dataset mean


@dataclass(frozen=True)
class ShiftPolicy:
    """How to pick the semitone shift for one phrase."""

    kind: str = P1
    dataset_mean_pitch: float | None = None

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ConfigError(f"unknown shift policy {self.kind!r}")
        if self.kind == P_ADAPTIVE and self.dataset_mean_pitch is None:
            raise ConfigError("P_ADAPTIVE needs dataset_mean_pitch")


@dataclass(frozen=True)
class MixupConfig:
    """Beta shape, batch proportion, and loss weight for mix-up."""

    alpha: float = 0.5
    proportion: float = 0.15
    w_mix: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if not 0.0 <= self.proportion <= 1.0:
            raise ConfigError("proportion must lie in [0, 1]")
        if not 0.0 <= self.w_mix <= 1.0:
            raise ConfigError("w_mix must lie in [0, 1]")


@dataclass(frozen=True)
class HiddenSequence:
    """Frame-level hidden states (T x D) plus the valid (pre-padding) length."""

    values: np.ndarray
    length: int
    source_lengths: tuple[int, int] | None = None

    def __post_init__(self):
        arr = np.asarray(self.values)
        if arr.ndim != 2:
            raise ShapeError("hidden states must be a (T, D) matrix")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("hidden states contain non-finite values")
        if not 0 < self.length <= arr.shape[0]:
            raise ValidationError("length must be in (0, rows]")
        object.__setattr__(self, "values", arr)


@dataclass(frozen=True)
class TrainingPair:
    """A phrase's score, audio, cached features, and frame durations."""

    score: MusicScore
    audio: AudioBuffer
    feature: AcousticFeature
    durations: FrameDurations

    def __post_init__(self):
        if self.durations.total_frames != self.feature.n_frames:
            raise ValidationError(
                f"durations cover {self.durations.total_frames} frames, "
                f"feature has {self.feature.n_frames}"
            )
        if len(self.durations) != len(self.score):
            raise ValidationError("durations and score disagree on event count")


def shift_support(policy: ShiftPolicy, score: MusicScore) -> tuple[int, ...]:
    """The semitone window this policy draws from for the given phrase."""
    if policy.kind == P1:
        return (-1, 0, 1)
    if policy.kind == P2:
        return (-2, -1, 0, 1, 2)
    sample_mean = mean_pitch(score)
    delta = sample_mean - policy.dataset_mean_pitch
    if abs(delta) <= ADAPTIVE_TOLERANCE:
        return (-1, 0, 1)
    if delta < 0:
        return (0, 1, 2)  # sample sits low: shift upward toward the mean
    return (-2, -1, 0)


def sample_shift(policy: ShiftPolicy, score: MusicScore, rng: np.random.Generator) -> int:
    """Draw one shift uniformly from the policy's window."""
    support = shift_support(policy, score)
    return int(support[rng.integers(len(support))])


def sample_lambda(alpha: float, rng: np.random.Generator) -> float:
    """One Beta(alpha, alpha) draw via two Gamma(alpha, 1) variates."""
    if alpha <= 0:
        raise ParameterError(f"alpha must be positive, got {alpha}")
    g1 = rng.gamma(alpha)
    g2 = rng.gamma(alpha)
    return float(g1 / (g1 + g2))


def mix_hidden(h_i: HiddenSequence, h_j: HiddenSequence, lam: float) -> HiddenSequence:
    """Right-pad both sequences to a common length and convex-combine them."""
    if h_i.values.shape[1] != h_j.values.shape[1]:
        raise ShapeError(
            f"hidden widths differ: {h_i.values.shape[1]} vs {h_j.values.shape[1]}"
        )
    if not 0.0 <= lam <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lam}")
    t_max = max(h_i.length, h_j.length)
    a = pad_rows(h_i.values[: h_i.length], t_max)
    b = pad_rows(h_j.values[: h_j.length], t_max)
    mixed = lam * a + (1.0 - lam) * b
    return HiddenSequence(mixed, t_max, source_lengths=(h_i.length, h_j.length))


def pad_rows(values: np.ndarray, total_rows: int) -> np.ndarray:
    if values.shape[0] > total_rows:
        raise ShapeError("cannot pad to fewer rows")
    if values.shape[0] == total_rows:
        return values
    pad = np.zeros((total_rows - values.shape[0], values.shape[1]), dtype=values.dtype)
    return np.vstack([values, pad])


def select_mixup_pairs(batch_size: int, proportion: float,
                       rng: np.random.Generator) -> list[tuple[int, int]]:
    """Disjoint (i, j) index pairs covering round(proportion * batch) mixtures."""
    if not 0.0 <= proportion <= 1.0:
        raise ParameterError("proportion must lie in [0, 1]")
    if proportion == 0.0:
        return []
    if batch_size < 2:
        warnings.warn("mix-up requested on a batch smaller than 2; skipping")
        return []
    n_pairs = min(round(proportion * batch_size), batch_size // 2)
    if n_pairs < 1:
        return []
    chosen = rng.permutation(batch_size)[: 2 * n_pairs]
    return [(int(chosen[2 * k]), int(chosen[2 * k + 1])) for k in range(n_pairs)]


def apply_pitch_augmentation(
    pair: TrainingPair,
    semitones: int,
    params: AudioParams = DEFAULT_PARAMS,
    seed: int = 0,
) -> TrainingPair:
    """Transpose the score and shift the audio by the same semitone count,
    re-extracting features and durations for the new pair."""
    score = transpose_score(pair.score, semitones)
    audio = pitch_shift_audio(pair.audio, semitones, params, seed=seed)
    feature = mel_spectrogram(audio, params)
    durations = durations_to_frames(score, params.frame_shift, feature.n_frames)
    return TrainingPair(score, audio, feature, durations)


def pa_suffix(semitones: int) -> str:
    """Naming suffix for materialized shifted copies, e.g. ``__pa+1``."""
    return f"__pa{semitones:+d}"
