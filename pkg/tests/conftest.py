import numpy as np
import pytest

from singaug.dsp import AudioBuffer
from singaug.score import FrameDurations, MusicScore, ScoreEvent
from singaug.training import Sample

SR = 24000


def make_structured_sample(seed, n_frames=24, d_acoustic=16, vocab=10):
    """A learnable toy sample: targets are smooth functions of the frame's
    phoneme/pitch labels plus a positional ripple."""
    ph = [1 + seed % (vocab - 5), 1 + (seed + 1) % (vocab - 5)]
    pi = [60 + seed % 12, 62 + seed % 12]
    score = MusicScore(
        (ScoreEvent(ph[0], pi[0], 0.0, 0.1), ScoreEvent(ph[1], pi[1], 0.1, 0.2)),
        f"s{seed}",
    )
    durations = FrameDurations((n_frames // 2, n_frames - n_frames // 2), n_frames)
    t = np.arange(n_frames)[:, None]
    d = np.arange(d_acoustic)[None, :]
    lab = np.repeat(ph, durations.frames_per_event)[:, None]
    pit = np.repeat(pi, durations.frames_per_event)[:, None]
    target = (
        np.sin(0.3 * lab * d) + 0.5 * np.cos(0.05 * pit * d) + 0.1 * np.sin(0.2 * t)
    ).astype(np.float32)
    return Sample(f"s{seed}", score, durations, target)


def make_tone(freq, duration=1.0, sr=SR, amp=0.4):
    t = np.arange(int(sr * duration)) / sr
    return AudioBuffer(amp * np.sin(2 * np.pi * freq * t), sr)


def make_vowel(freq, duration=1.0, sr=SR):
    """Harmonic stack with a formant-ish rolloff; a stand-in for a sung vowel."""
    t = np.arange(int(sr * duration)) / sr
    x = np.zeros_like(t)
    for k, (a, ph) in enumerate([(0.30, 0.0), (0.15, 0.7), (0.08, 1.1), (0.05, 0.3)], start=1):
        x += a * np.sin(2 * np.pi * freq * k * t + ph)
    return AudioBuffer(x, sr)


@pytest.fixture
def tone_220():
    return make_tone(220.0)


@pytest.fixture
def vowel_220():
    return make_vowel(220.0)
