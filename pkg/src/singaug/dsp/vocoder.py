"""Simplified analysis/synthesis vocoder.

Decomposes audio into three independent channels: an F0 track, a cepstrally
smoothed spectral envelope (SP), and per-band aperiodicity ratios (AP).
Synthesis drives a pulse-train + noise excitation through the envelope with
per-bin periodic/noise mixing.  The contract that matters downstream is
that F0 can be rescaled while SP and AP pass through untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .._kernels import corr_at_lag, pitch_marks
from ..errors import ParameterError, RangeError, ShapeError, ValidationError
from .audio import AudioBuffer, normalized
from .mel import frame_signal, hann_window
from .params import DEFAULT_PARAMS, AudioParams, next_pow2
from .pitch import F0Track, estimate_f0

_TINY = 1e-12


@dataclass(frozen=True)
class VocoderParams:
    """F0 track + spectral envelope + aperiodicity, one row per frame."""

    f0: F0Track
    sp: np.ndarray
    ap: np.ndarray
    n_samples: int | None = None

    def __post_init__(self):
        sp = np.asarray(self.sp, dtype=np.float64)
        ap = np.asarray(self.ap, dtype=np.float64)
        if sp.ndim != 2 or ap.ndim != 2:
            raise ShapeError("sp and ap must be (T, n_bins) matrices")
        if sp.shape != ap.shape or sp.shape[0] != len(self.f0):
            raise ShapeError(
                f"frame-count mismatch: f0 {len(self.f0)}, sp {sp.shape}, ap {ap.shape}"
            )
        if not (np.all(np.isfinite(sp)) and np.all(np.isfinite(ap))):
            raise ValidationError("sp/ap contain non-finite values")
        if sp.min() <= 0:
            raise ValidationError("sp must be strictly positive (apply the floor)")
        if ap.min() < 0 or ap.max() > 1:
            raise ValidationError("ap must lie in [0, 1]")
        sp = sp.copy()
        ap = ap.copy()
        sp.flags.writeable = False
        ap.flags.writeable = False
        object.__setattr__(self, "sp", sp)
        object.__setattr__(self, "ap", ap)

    @property
    def n_frames(self) -> int:
        return len(self.f0)


def _lag_range(params: AudioParams) -> tuple[int, int]:
    fs = params.sample_rate
    min_lag = max(2, int(math.floor(fs / params.f0_max)))
    max_lag = int(math.ceil(fs / params.f0_min))
    return min_lag, max_lag


def _smooth_envelope(log_mag: np.ndarray, n_fft: int, order: int) -> np.ndarray:
    """Cepstral liftering: keep quefrencies below ``order`` coefficients."""
    cep = np.fft.irfft(log_mag, n=n_fft, axis=1)
    mask = np.zeros(n_fft)
    mask[0] = 1.0
    mask[1:order] = 1.0
    mask[n_fft - order + 1 :] = 1.0
    return np.fft.rfft(cep * mask[None, :], axis=1).real


def _fill_harmonic_valleys(power: np.ndarray, f0: F0Track, params: AudioParams) -> np.ndarray:
    """Triangular smoothing of per-frame power spectra, one pitch period wide,
    so the envelope follows harmonic peaks instead of the gaps between them."""
    bins_per_hz = params.n_fft / params.sample_rate
    out = np.empty_like(power)
    for t in range(power.shape[0]):
        half = int(round(f0.f0_hz[t] * bins_per_hz)) if f0.voiced[t] else 1
        if half < 2:
            out[t] = power[t]
            continue
        kernel = 1.0 - np.abs(np.arange(-half, half + 1)) / (half + 1)
        kernel /= kernel.sum()
        padded = np.pad(power[t], half, mode="edge")
        out[t] = np.convolve(padded, kernel, mode="valid")
    return out


def analyze(audio: AudioBuffer, params: AudioParams = DEFAULT_PARAMS) -> VocoderParams:
    """Extract F0, smoothed spectral envelope, and band aperiodicity."""
    x = audio.samples
    if x.shape[0] == 0:
        raise ParameterError("audio is empty")
    fs = audio.sample_rate
    n_frames = params.n_frames(x.shape[0])

    f0 = estimate_f0(
        audio,
        frame_shift=params.frame_shift,
        f0_min=params.f0_min,
        f0_max=params.f0_max,
        voicing_threshold=params.voicing_threshold,
        rms_threshold=params.rms_threshold,
    )

    frames = frame_signal(x, params.win, params.hop, n_frames)
    windowed = frames * hann_window(params.win)[None, :]
    mag = np.abs(np.fft.rfft(windowed, n=params.n_fft, axis=1))
    power = _fill_harmonic_valleys(mag**2, f0, params)
    log_mag = 0.5 * np.log(np.maximum(power, params.sp_floor**2))
    sp = np.maximum(np.exp(_smooth_envelope(log_mag, params.n_fft, params.envelope_order)),
                    params.sp_floor)

    ap = _band_aperiodicity(x, f0, params, n_frames)
    return VocoderParams(f0, sp, ap, n_samples=x.shape[0])


def _band_aperiodicity(x, f0: F0Track, params: AudioParams, n_frames: int) -> np.ndarray:
    """Residual-to-total amplitude ratio per band, from band-limited
    autocorrelation at the frame's pitch lag.  Unvoiced frames are fully
    aperiodic."""
    fs = params.sample_rate
    min_lag, max_lag = _lag_range(params)
    corr_win = max_lag
    frame_len = corr_win + max_lag
    n_fft_b = next_pow2(frame_len)
    n_bins_b = n_fft_b // 2 + 1

    frames = frame_signal(x, frame_len, params.hop, n_frames, pad_mode="constant")
    spectra = np.fft.rfft(frames, n=n_fft_b, axis=1)
    lags = np.where(f0.voiced, np.round(fs / np.maximum(f0.f0_hz, 1.0)), 0).astype(np.int64)

    n_bands = params.aperiodicity_bands
    edges = np.linspace(0, n_bins_b, n_bands + 1).astype(int)
    band_ap = np.ones((n_frames, n_bands), dtype=np.float64)
    any_voiced = bool(f0.voiced.any())
    if any_voiced:
        for b in range(n_bands):
            mask = np.zeros(n_bins_b)
            mask[edges[b] : edges[b + 1]] = 1.0
            band_sig = np.fft.irfft(spectra * mask[None, :], n=n_fft_b, axis=1)[:, :frame_len]
            r = corr_at_lag(band_sig, lags, corr_win)
            band_ap[:, b] = np.sqrt(np.clip(1.0 - r, 0.0, 1.0))
    band_ap[~f0.voiced, :] = 1.0

    # resample the coarse band values onto the envelope's bin grid
    band_centers = (edges[:-1] + edges[1:]) / 2.0 * (fs / n_fft_b)
    bin_hz = np.arange(params.n_bins) * (fs / params.n_fft)
    ap = np.empty((n_frames, params.n_bins), dtype=np.float64)
    for t in range(n_frames):
        ap[t] = np.interp(bin_hz, band_centers, band_ap[t])
    return np.clip(ap, 0.0, 1.0)


def synthesize(vp: VocoderParams, params: AudioParams = DEFAULT_PARAMS,
               seed: int = 0) -> AudioBuffer:
    """Pulse+noise resynthesis from vocoder parameters (seeded noise)."""
    fs = params.sample_rate
    hop, win, n_fft = params.hop, params.win, params.n_fft
    t_frames = vp.n_frames
    n_out = vp.n_samples if vp.n_samples is not None else t_frames * hop
    if n_out <= 0:
        raise ParameterError("nothing to synthesize")

    # per-sample F0 by frame hold
    idx = np.minimum(np.arange(n_out) // hop, t_frames - 1)
    sample_f0 = np.where(vp.f0.voiced[idx], vp.f0.f0_hz[idx], 0.0)

    exc_pulse = np.zeros(n_out)
    marks = pitch_marks(sample_f0, fs)
    if marks.size:
        exc_pulse[marks] = np.sqrt(fs / sample_f0[marks])
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    exc_noise = rng.standard_normal(n_out)

    window = hann_window(win)
    pulse_frames = frame_signal(exc_pulse, win, hop, t_frames, pad_mode="constant")
    noise_frames = frame_signal(exc_noise, win, hop, t_frames, pad_mode="constant")
    ev = np.fft.rfft(pulse_frames * window[None, :], n=n_fft, axis=1)
    en = np.fft.rfft(noise_frames * window[None, :], n=n_fft, axis=1)

    def unit_rows(spec):
        rms = np.sqrt(np.mean(np.abs(spec) ** 2, axis=1, keepdims=True))
        return spec / np.maximum(rms, _TINY)

    periodic_w = np.sqrt(np.clip(1.0 - vp.ap**2, 0.0, 1.0))
    mixed = (periodic_w * unit_rows(ev) + vp.ap * unit_rows(en)) * vp.sp
    y_frames = np.fft.irfft(mixed, n=n_fft, axis=1)

    half = win // 2
    total = half + n_out + n_fft + hop * t_frames
    out = np.zeros(total)
    wacc = np.zeros(total)
    for t in range(t_frames):
        start = t * hop
        out[start : start + n_fft] += y_frames[t]
        wacc[start : start + win] += window
    result = out[half : half + n_out] / np.maximum(wacc[half : half + n_out], 1e-3)
    return normalized(result, fs)


def shift_pitch_params(vp: VocoderParams, semitones: int, sample_rate: int) -> VocoderParams:
    """Scale the F0 track by 2^(semitones/12); SP and AP pass through as-is."""
    if abs(semitones) > 24:
        raise ParameterError(f"|semitones| must be <= 24, got {semitones}")
    factor = 2.0 ** (semitones / 12.0)
    shifted = vp.f0.scaled(factor)
    limit = sample_rate / 4.0
    if shifted.voiced.any() and shifted.f0_hz.max() > limit:
        raise RangeError(
            f"shift {semitones:+d} pushes F0 to {shifted.f0_hz.max():.1f} Hz, "
            f"beyond the {limit:.0f} Hz safety bound"
        )
    return VocoderParams(shifted, vp.sp, vp.ap, n_samples=vp.n_samples)


def pitch_shift_audio(audio: AudioBuffer, semitones: int,
                      params: AudioParams = DEFAULT_PARAMS, seed: int = 0) -> AudioBuffer:
    """Shift by whole semitones: scale F0 by 2^(k/12), SP and AP untouched."""
    vp = analyze(audio, params)
    moved = shift_pitch_params(vp, semitones, audio.sample_rate)
    return synthesize(moved, params, seed=seed)
