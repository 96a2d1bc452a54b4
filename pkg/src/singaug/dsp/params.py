"""Shared analysis parameters for the DSP front end.

Everything that downstream code needs to agree on (rates, hops, FFT sizes,
floors) lives here so the mel front end, the pitch tracker, the vocoder,
and Griffin-Lim all frame audio identically: frames are centered at
``t * hop`` and every per-frame product has ``1 + n_samples // hop`` rows.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParameterError


def next_pow2(n: int) -> int:
    p = 1
    while p < n:
        p *= 2
    return p


@dataclass(frozen=True)
class AudioParams:
    sample_rate: int = 24000
    frame_shift: float = 0.0125
    frame_length: float = 0.05
    n_mels: int = 80
    mel_floor: float = 1e-5
    sp_floor: float = 1e-8
    f0_min: float = 60.0
    f0_max: float = 800.0
    voicing_threshold: float = 0.6
    rms_threshold: float = 1e-4
    envelope_order: int = 48
    aperiodicity_bands: int = 8

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ParameterError("sample_rate must be positive")
        if self.frame_shift <= 0 or self.frame_length <= 0:
            raise ParameterError("frame_shift and frame_length must be positive")
        if not 0 < self.f0_min < self.f0_max:
            raise ParameterError("need 0 < f0_min < f0_max")
        if self.n_mels < 1:
            raise ParameterError("n_mels must be >= 1")

    @property
    def hop(self) -> int:
        return round(self.sample_rate * self.frame_shift)

    @property
    def win(self) -> int:
        return round(self.sample_rate * self.frame_length)

    @property
    def n_fft(self) -> int:
        return next_pow2(self.win)

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        return 1 + n_samples // self.hop


DEFAULT_PARAMS = AudioParams()
