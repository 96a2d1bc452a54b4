import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from singaug.dsp import AudioBuffer, estimate_f0, hz_to_midi, midi_to_hz
from singaug.errors import ParameterError

from conftest import SR, make_tone


def cents(a, b):
    return 1200.0 * math.log2(a / b)


class TestMidiConversion:
    def test_a4(self):
        assert hz_to_midi(440.0) == pytest.approx(69.0)

    def test_octave(self):
        assert hz_to_midi(880.0) == pytest.approx(81.0)

    def test_semitone_ratio_matches_twelfth_root_of_two(self):
        ratio = midi_to_hz(70) / midi_to_hz(69)
        assert ratio == pytest.approx(2 ** (1 / 12), rel=1e-12)
        assert round(ratio, 3) == 1.059

    def test_nonpositive_frequency(self):
        with pytest.raises(ParameterError):
            hz_to_midi(0.0)
        with pytest.raises(ParameterError):
            hz_to_midi(-10.0)

    @given(st.floats(50.0, 2000.0))
    def test_round_trip(self, f):
        assert midi_to_hz(hz_to_midi(f)) == pytest.approx(f, rel=1e-9)


class TestEstimateF0:
    def test_pure_tone_within_five_cents(self, tone_220):
        track = estimate_f0(tone_220)
        med = np.median(track.f0_hz[track.voiced])
        assert abs(cents(med, 220.0)) <= 5.0

    def test_white_noise_mostly_unvoiced(self):
        rng = np.random.default_rng(1234)
        noise = AudioBuffer(np.clip(0.3 * rng.standard_normal(SR), -1, 1), SR)
        track = estimate_f0(noise)
        assert (~track.voiced).mean() >= 0.9

    def test_silence_all_unvoiced(self):
        track = estimate_f0(AudioBuffer(np.zeros(SR), SR))
        assert not track.voiced.any()
        assert (track.f0_hz == 0).all()

    def test_bad_frame_shift(self, tone_220):
        with pytest.raises(ParameterError):
            estimate_f0(tone_220, frame_shift=0.0)

    def test_bad_range(self, tone_220):
        with pytest.raises(ParameterError):
            estimate_f0(tone_220, f0_min=500.0, f0_max=100.0)

    def test_high_tone(self):
        tone = make_tone(660.0)
        track = estimate_f0(tone)
        med = np.median(track.f0_hz[track.voiced])
        assert abs(cents(med, 660.0)) <= 5.0

    def test_frame_count_matches_convention(self, tone_220):
        track = estimate_f0(tone_220)
        assert len(track) == 1 + len(tone_220) // 300
