"""STFT framing, mel filterbank, log-mel features, and mel cepstra."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.fft import dct

from ..errors import DataError, ParameterError, ShapeError, ValidationError
from .audio import AudioBuffer
from .params import DEFAULT_PARAMS, AudioParams


@dataclass(frozen=True)
class AcousticFeature:
    """Frame-level log-mel magnitudes (T x n_mels) at a fixed frame shift."""

    mel: np.ndarray
    frame_shift: float

    def __post_init__(self):
        arr = np.asarray(self.mel)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ShapeError("mel must be a (T, D) matrix with T >= 1")
        if not np.all(np.isfinite(arr)):
            raise DataError("mel contains non-finite values")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "mel", arr)

    @property
    def n_frames(self) -> int:
        return self.mel.shape[0]

    @property
    def n_dims(self) -> int:
        return self.mel.shape[1]


def hann_window(length: int) -> np.ndarray:
    # periodic Hann, the STFT-friendly variant
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(length) / length)


def frame_signal(x: np.ndarray, frame_len: int, hop: int, n_frames: int,
                 pad_mode: str = "reflect") -> np.ndarray:
    """Cut ``n_frames`` frames of ``frame_len`` samples centered at t*hop."""
    half = frame_len // 2
    pad_right = max(0, (n_frames - 1) * hop + frame_len - half - x.shape[0])
    if pad_mode == "reflect" and max(half, pad_right) > x.shape[0] - 1:
        pad_mode = "constant"  # reflect cannot pad beyond the signal length
    padded = np.pad(x, (half, pad_right), mode=pad_mode)
    frames = sliding_window_view(padded, frame_len)[::hop][:n_frames]
    return np.ascontiguousarray(frames, dtype=np.float64)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (np.power(10.0, np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@lru_cache(maxsize=8)
def mel_filterbank(n_mels: int, n_fft: int, sample_rate: int) -> np.ndarray:
    """Triangular mel filterbank (n_mels x n_fft//2+1) over [0, Nyquist]."""
    n_bins = n_fft // 2 + 1
    bin_hz = np.arange(n_bins) * (sample_rate / n_fft)
    edges = mel_to_hz(np.linspace(0.0, hz_to_mel(sample_rate / 2.0), n_mels + 2))
    lower = edges[:-2][:, None]
    center = edges[1:-1][:, None]
    upper = edges[2:][:, None]
    rising = (bin_hz[None, :] - lower) / np.maximum(center - lower, 1e-12)
    falling = (upper - bin_hz[None, :]) / np.maximum(upper - center, 1e-12)
    weights = np.maximum(0.0, np.minimum(rising, falling))
    weights.flags.writeable = False
    return weights


def stft_magnitude(audio: AudioBuffer, params: AudioParams = DEFAULT_PARAMS) -> np.ndarray:
    """Magnitude STFT (T x n_bins) using the shared framing convention."""
    x = audio.samples
    if x.shape[0] < params.win:
        raise ValidationError(
            f"audio of {x.shape[0]} samples is shorter than one window ({params.win})"
        )
    n_frames = params.n_frames(x.shape[0])
    frames = frame_signal(x, params.win, params.hop, n_frames)
    frames = frames * hann_window(params.win)[None, :]
    return np.abs(np.fft.rfft(frames, n=params.n_fft, axis=1))


def mel_spectrogram(audio: AudioBuffer, params: AudioParams = DEFAULT_PARAMS) -> AcousticFeature:
    """80-dim (by default) log-mel magnitudes with a fixed log floor."""
    mag = stft_magnitude(audio, params)
    fb = mel_filterbank(params.n_mels, params.n_fft, audio.sample_rate)
    mel = mag @ fb.T
    mel = np.log(np.maximum(mel, params.mel_floor))
    return AcousticFeature(mel.astype(np.float32), params.frame_shift)


def mel_cepstra(feature: AcousticFeature, order: int) -> np.ndarray:
    """Orthonormal DCT-II cepstra per frame, coefficients 1..order (c0 dropped)."""
    n_dims = feature.n_dims
    if not 1 <= order < n_dims:
        raise ParameterError(f"order must be in [1, {n_dims - 1}], got {order}")
    coeffs = dct(np.asarray(feature.mel, dtype=np.float64), type=2, norm="ortho", axis=1)
    return coeffs[:, 1 : order + 1]
