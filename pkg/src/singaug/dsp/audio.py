"""WAV I/O and resampling.

Only RIFF PCM 16-bit mono is accepted; everything else is a format error.
Loading resamples to the configured target rate with a windowed-sinc
polyphase filter.
"""

from __future__ import annotations

import wave
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.signal import resample_poly

from ..errors import FormatError

INT16_SCALE = 32768.0


@dataclass(frozen=True)
class AudioBuffer:
    """Immutable mono audio: float64 samples in [-1, 1] plus sample rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.float64)
        if arr.ndim != 1:
            raise FormatError("audio must be a 1-D sample sequence")
        if not np.all(np.isfinite(arr)):
            raise FormatError("audio contains non-finite samples")
        if arr.size and (arr.min() < -1.0 or arr.max() > 1.0):
            raise FormatError("audio samples exceed [-1, 1]")
        if int(self.sample_rate) <= 0:
            raise FormatError("sample rate must be positive")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


def normalized(samples, sample_rate) -> AudioBuffer:
    """Build an AudioBuffer, rescaling if the waveform peaks beyond 1."""
    arr = np.asarray(samples, dtype=np.float64)
    peak = np.max(np.abs(arr)) if arr.size else 0.0
    if peak > 1.0:
        arr = arr / peak
    return AudioBuffer(arr, sample_rate)


def resample(buffer: AudioBuffer, target_rate: int) -> AudioBuffer:
    if target_rate == buffer.sample_rate:
        return buffer
    ratio = Fraction(int(target_rate), int(buffer.sample_rate))
    out = resample_poly(buffer.samples, ratio.numerator, ratio.denominator)
    return normalized(out, target_rate)


def load_audio(path, target_rate: int = 24000) -> AudioBuffer:
    """Load a PCM 16-bit mono WAV file, resampled to ``target_rate``."""
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getcomptype() != "NONE":
                raise FormatError(f"{path}: compressed WAV not supported")
            if wf.getnchannels() != 1:
                raise FormatError(f"{path}: only mono WAV is supported")
            if wf.getsampwidth() != 2:
                raise FormatError(f"{path}: only 16-bit PCM is supported")
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except FileNotFoundError:
        raise FormatError(f"{path}: no such file") from None
    except (wave.Error, EOFError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64) / INT16_SCALE
    return resample(AudioBuffer(samples, rate), target_rate)


def save_audio(path, buffer: AudioBuffer) -> None:
    """Write an AudioBuffer as PCM 16-bit mono WAV."""
    quantized = np.clip(np.round(buffer.samples * INT16_SCALE), -32768, 32767)
    data = quantized.astype("<i2").tobytes()
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(buffer.sample_rate)
        wf.writeframes(data)
