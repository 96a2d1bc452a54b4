"""Synthetic singing corpus for desk-scale experiments and the acceptance
suite: short "songs" of harmonic vowel-like notes with per-phoneme spectral
colors, separated by silences so the preparation step has real phrase
boundaries to find.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dsp import AudioBuffer, midi_to_hz, save_audio
from .score import REST_SYMBOL

TOY_SYMBOLS = ["a", "e", "i", "o", "u", "ka", "ke", "ki", "ku"]  # plus the rest
TOY_PITCH_LOW = 57  # A3; the 12 usable pitches are 57..68
TOY_PITCH_COUNT = 12


def _note_wave(freq: float, n_samples: int, sr: int,
               phoneme_idx: int) -> np.ndarray:
    """Harmonic stack with phoneme-specific harmonic weights and a fade.

    Fully determined by (frequency, length, phoneme), so the mapping from
    score to spectrum is learnable rather than memorizable.
    """
    t = np.arange(n_samples) / sr
    shape_rng = np.random.default_rng(1000 + phoneme_idx)
    weights = shape_rng.uniform(0.05, 1.0, size=6) / np.arange(1, 7)
    phases = shape_rng.uniform(0, 2 * np.pi, size=6)
    x = np.zeros(n_samples)
    for k, (w, phase) in enumerate(zip(weights, phases), start=1):
        if freq * k >= sr / 2:
            break
        x += w * np.sin(2 * np.pi * freq * k * t + phase)
    fade = min(n_samples // 8, round(0.02 * sr))
    if fade > 0:
        ramp = np.linspace(0.0, 1.0, fade)
        x[:fade] *= ramp
        x[-fade:] *= ramp[::-1]
    x *= 0.25 / max(np.max(np.abs(x)), 1e-9)
    return x


def make_toy_corpus(out_dir, n_songs: int = 8, phrases_per_song: int = 4,
                    events_per_phrase: int = 5, seed: int = 0,
                    sample_rate: int = 24000, note_seconds=(0.2, 0.32),
                    gap_seconds: float = 0.45,
                    rest_probability: float = 0.18) -> list[Path]:
    """Write ``n_songs`` (wav, lab) pairs; returns the wav paths.

    Defaults produce 32 phrases over a 10-symbol vocabulary (9 vowels plus
    the rest) and 12 pitches.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    wav_paths = []
    for song_idx in range(n_songs):
        chunks = []
        lines = []
        cursor = 0.0
        for phrase_idx in range(phrases_per_song):
            if phrase_idx > 0:
                gap = int(gap_seconds * sample_rate)
                chunks.append(np.zeros(gap))
                cursor += gap / sample_rate
            for _ in range(events_per_phrase):
                symbol_idx = int(rng.integers(len(TOY_SYMBOLS)))
                pitch = TOY_PITCH_LOW + int(rng.integers(TOY_PITCH_COUNT))
                dur = float(rng.uniform(*note_seconds))
                n = int(round(dur * sample_rate))
                if rng.random() < rest_probability:
                    chunks.append(np.zeros(n))
                    lines.append(f"{REST_SYMBOL}\t0\t{cursor:.6f}\t{cursor + n / sample_rate:.6f}")
                else:
                    chunks.append(
                        _note_wave(midi_to_hz(pitch), n, sample_rate, symbol_idx)
                    )
                    lines.append(
                        f"{TOY_SYMBOLS[symbol_idx]}\t{pitch}\t{cursor:.6f}"
                        f"\t{cursor + n / sample_rate:.6f}"
                    )
                cursor += n / sample_rate
        audio = AudioBuffer(np.concatenate(chunks), sample_rate)
        wav_path = out_dir / f"song{song_idx:02d}.wav"
        save_audio(wav_path, audio)
        (out_dir / f"song{song_idx:02d}.lab").write_text(
            "\n".join(lines) + "\n", encoding="utf-8"
        )
        wav_paths.append(wav_path)
    return wav_paths
