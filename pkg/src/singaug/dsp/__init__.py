"""Audio DSP front end: I/O, features, pitch, vocoder, and inversion."""

from .audio import AudioBuffer, load_audio, normalized, resample, save_audio
from .griffinlim import griffin_lim, magnitude_consistency, mel_to_linear
from .mel import (
    AcousticFeature,
    frame_signal,
    hann_window,
    mel_cepstra,
    mel_filterbank,
    mel_spectrogram,
    stft_magnitude,
)
from .params import DEFAULT_PARAMS, AudioParams
from .pitch import F0Track, estimate_f0, hz_to_midi, midi_to_hz
from .vocoder import (
    VocoderParams,
    analyze,
    pitch_shift_audio,
    shift_pitch_params,
    synthesize,
)

__all__ = [
    "AcousticFeature",
    "AudioBuffer",
    "AudioParams",
    "DEFAULT_PARAMS",
    "F0Track",
    "VocoderParams",
    "analyze",
    "estimate_f0",
    "frame_signal",
    "griffin_lim",
    "hann_window",
    "hz_to_midi",
    "load_audio",
    "magnitude_consistency",
    "mel_cepstra",
    "mel_filterbank",
    "mel_spectrogram",
    "mel_to_linear",
    "midi_to_hz",
    "normalized",
    "pitch_shift_audio",
    "resample",
    "save_audio",
    "shift_pitch_params",
    "stft_magnitude",
    "synthesize",
]
