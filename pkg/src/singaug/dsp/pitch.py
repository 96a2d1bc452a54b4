"""Fundamental-frequency estimation via normalized autocorrelation.

Each frame is correlated against itself over the lag range implied by
[f0_min, f0_max]; the shortest lag whose peak comes close to the global
maximum wins (suppressing octave-down errors), and is refined by parabolic
interpolation.  A frame counts as voiced when the correlation peak is clear
enough and the frame is not near-silent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._kernels import nccf_frames
from ..errors import ParameterError, ValidationError
from .audio import AudioBuffer
from .mel import frame_signal

PEAK_KEEP_RATIO = 0.9  # shorter lags within this fraction of the best peak win


@dataclass(frozen=True)
class F0Track:
    """Per-frame F0 in Hz (0 when unvoiced) plus the voicing decisions."""

    f0_hz: np.ndarray
    voiced: np.ndarray
    frame_shift: float

    def __post_init__(self):
        f0 = np.asarray(self.f0_hz, dtype=np.float64).copy()
        vd = np.asarray(self.voiced, dtype=bool).copy()
        if f0.shape != vd.shape or f0.ndim != 1:
            raise ValidationError("f0_hz and voiced must be equal-length vectors")
        if not np.all(np.isfinite(f0)):
            raise ValidationError("f0 contains non-finite values")
        if np.any((f0 > 0) != vd):
            raise ValidationError("f0_hz must be positive exactly on voiced frames")
        f0.flags.writeable = False
        vd.flags.writeable = False
        object.__setattr__(self, "f0_hz", f0)
        object.__setattr__(self, "voiced", vd)

    def __len__(self):
        return self.f0_hz.shape[0]

    def scaled(self, factor: float) -> "F0Track":
        return F0Track(np.where(self.voiced, self.f0_hz * factor, 0.0),
                       self.voiced, self.frame_shift)


def hz_to_midi(f: float) -> float:
    """MIDI note value of a frequency (A4 = 440 Hz = 69)."""
    if f <= 0:
        raise ParameterError(f"frequency must be positive, got {f}")
    return 69.0 + 12.0 * math.log2(f / 440.0)


def midi_to_hz(m: float) -> float:
    return 440.0 * 2.0 ** ((m - 69.0) / 12.0)


def _parabolic(r: np.ndarray, j: int) -> tuple[float, float]:
    """Refine peak index j on curve r; returns (delta, peak_value)."""
    if j <= 0 or j >= r.shape[0] - 1:
        return 0.0, float(r[j])
    a, b, c = float(r[j - 1]), float(r[j]), float(r[j + 1])
    denom = a - 2.0 * b + c
    if abs(denom) < 1e-12:
        return 0.0, b
    delta = 0.5 * (a - c) / denom
    delta = float(np.clip(delta, -1.0, 1.0))
    return delta, b - 0.25 * (a - c) * delta


def estimate_f0(
    audio: AudioBuffer,
    frame_shift: float = 0.0125,
    f0_min: float = 60.0,
    f0_max: float = 800.0,
    voicing_threshold: float = 0.6,
    rms_threshold: float = 1e-4,
) -> F0Track:
    if frame_shift <= 0:
        raise ParameterError("frame_shift must be positive")
    if not 0 < f0_min < f0_max:
        raise ParameterError("need 0 < f0_min < f0_max")
    fs = audio.sample_rate
    if f0_max >= fs / 2:
        raise ParameterError("f0_max must stay below Nyquist")
    if len(audio) == 0:
        raise ParameterError("audio is empty")
    hop = round(fs * frame_shift)
    min_lag = max(2, int(math.floor(fs / f0_max)))
    max_lag = int(math.ceil(fs / f0_min))
    corr_win = max_lag
    n_frames = 1 + len(audio) // hop
    frames = frame_signal(audio.samples, corr_win + max_lag, hop, n_frames,
                          pad_mode="constant")
    r = nccf_frames(frames, corr_win, min_lag, max_lag)
    rms = np.sqrt(np.mean(frames[:, :corr_win] ** 2, axis=1))

    f0 = np.zeros(n_frames, dtype=np.float64)
    voiced = np.zeros(n_frames, dtype=bool)
    for t in range(n_frames):
        row = r[t]
        j_best = int(np.argmax(row))
        r_best = row[j_best]
        if r_best < voicing_threshold or rms[t] < rms_threshold:
            continue
        # prefer the shortest lag among peaks nearly as strong as the best
        interior = np.arange(1, row.shape[0] - 1)
        local = interior[(row[interior] >= row[interior - 1])
                         & (row[interior] > row[interior + 1])
                         & (row[interior] >= PEAK_KEEP_RATIO * r_best)]
        j = int(local[0]) if local.size else j_best
        delta, clarity = _parabolic(row, j)
        if clarity < voicing_threshold:
            continue
        lag = min_lag + j + delta
        f0[t] = float(np.clip(fs / lag, f0_min, f0_max))
        voiced[t] = True
    return F0Track(f0, voiced, frame_shift)
