import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singaug.dsp import (
    AudioBuffer,
    AudioParams,
    DEFAULT_PARAMS,
    F0Track,
    VocoderParams,
    analyze,
    estimate_f0,
    pitch_shift_audio,
    shift_pitch_params,
    synthesize,
)
from singaug.errors import ParameterError, RangeError, ShapeError, ValidationError

from conftest import SR, make_tone, make_vowel


def median_f0(buf):
    track = estimate_f0(buf)
    assert track.voiced.any()
    return float(np.median(track.f0_hz[track.voiced]))


def cents(a, b):
    return 1200.0 * math.log2(a / b)


def broad_sp(n_frames):
    bin_hz = np.arange(DEFAULT_PARAMS.n_bins) * SR / DEFAULT_PARAMS.n_fft
    row = 0.05 * np.exp(-bin_hz / 4000.0) + 1e-8
    return np.tile(row, (n_frames, 1))


class TestAnalyzeSynthesize:
    def test_round_trip_preserves_f0(self, vowel_220):
        vp = analyze(vowel_220)
        resynth = synthesize(vp)
        vp2 = analyze(resynth)
        m1 = np.median(vp.f0.f0_hz[vp.f0.voiced])
        m2 = np.median(vp2.f0.f0_hz[vp2.f0.voiced])
        assert abs(cents(m2, m1)) <= 20.0

    def test_all_unvoiced_params_give_noise(self):
        n_frames = 81
        f0 = F0Track(np.zeros(n_frames), np.zeros(n_frames, bool), 0.0125)
        vp = VocoderParams(f0, broad_sp(n_frames), np.ones((n_frames, DEFAULT_PARAMS.n_bins)),
                           n_samples=SR)
        out = synthesize(vp)
        assert out.samples.std() > 1e-5  # audible noise, not silence
        assert not estimate_f0(out).voiced.any()

    def test_constant_f0_params(self):
        n_frames = 81
        f0 = F0Track(np.full(n_frames, 220.0), np.ones(n_frames, bool), 0.0125)
        ap = np.full((n_frames, DEFAULT_PARAMS.n_bins), 0.05)
        vp = VocoderParams(f0, broad_sp(n_frames), ap, n_samples=SR)
        out = synthesize(vp)
        assert abs(cents(median_f0(out), 220.0)) <= 20.0

    def test_shape_mismatch(self):
        f0 = F0Track(np.full(10, 220.0), np.ones(10, bool), 0.0125)
        with pytest.raises(ShapeError):
            VocoderParams(f0, np.ones((9, 5)), np.ones((9, 5)))

    def test_empty_audio(self):
        with pytest.raises(ParameterError):
            analyze(AudioBuffer(np.zeros(0), SR))

    @settings(max_examples=10, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_params_invariants_on_random_audio(self, seed):
        rng = np.random.default_rng(seed)
        x = np.clip(0.5 * rng.standard_normal(6000), -1, 1)
        vp = analyze(AudioBuffer(x, SR))  # constructor enforces invariants
        assert vp.sp.min() > 0
        assert 0.0 <= vp.ap.min() and vp.ap.max() <= 1.0
        assert np.all((vp.f0.f0_hz > 0) == vp.f0.voiced)


class TestPitchShift:
    def test_zero_shift_is_plain_resynthesis(self, vowel_220):
        shifted = pitch_shift_audio(vowel_220, 0)
        plain = synthesize(analyze(vowel_220))
        assert np.array_equal(shifted.samples, plain.samples)

    def test_octave_up(self, vowel_220):
        out = pitch_shift_audio(vowel_220, 12)
        assert abs(cents(median_f0(out), 440.0)) <= 20.0
        assert len(out) == len(vowel_220)

    def test_octave_down(self, vowel_220):
        out = pitch_shift_audio(vowel_220, -12)
        assert abs(cents(median_f0(out), 110.0)) <= 20.0

    def test_one_semitone(self, vowel_220):
        target = 220.0 * 2 ** (1 / 12)  # 233.081880759...
        assert target == pytest.approx(233.0818807590449, rel=1e-12)
        out = pitch_shift_audio(vowel_220, 1)
        assert abs(cents(median_f0(out), target)) <= 20.0

    def test_sp_ap_pass_through_unchanged(self, vowel_220):
        vp = analyze(vowel_220)
        moved = shift_pitch_params(vp, 3, SR)
        assert np.array_equal(moved.sp, vp.sp)
        assert np.array_equal(moved.ap, vp.ap)
        ratio = moved.f0.f0_hz[moved.f0.voiced] / vp.f0.f0_hz[vp.f0.voiced]
        assert np.allclose(ratio, 2 ** (3 / 12), rtol=1e-12)

    def test_semitone_bound(self, vowel_220):
        with pytest.raises(ParameterError):
            pitch_shift_audio(vowel_220, 25)

    def test_nyquist_safety_bound(self):
        params = AudioParams(f0_min=200.0, f0_max=3000.0)
        tone = make_tone(1800.0)
        with pytest.raises(RangeError):
            pitch_shift_audio(tone, 24, params)

    def test_up_down_round_trip(self, vowel_220):
        back = pitch_shift_audio(pitch_shift_audio(vowel_220, 2), -2)
        ref = estimate_f0(vowel_220)
        got = estimate_f0(back)
        both = ref.voiced & got.voiced
        assert both.any()
        diff = 1200.0 * np.abs(np.log2(got.f0_hz[both] / ref.f0_hz[both]))
        assert np.median(diff) <= 35.0
