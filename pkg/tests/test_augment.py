import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from singaug.augment import (
    HiddenSequence,
    MixupConfig,
    ShiftPolicy,
    TrainingPair,
    apply_pitch_augmentation,
    mix_hidden,
    pa_suffix,
    sample_lambda,
    sample_shift,
    select_mixup_pairs,
    shift_support,
)
from singaug.dsp import mel_spectrogram
from singaug.errors import ConfigError, ParameterError, ShapeError
from singaug.score import MusicScore, ScoreEvent, durations_to_frames

from conftest import make_vowel


def score_with_mean(pitch):
    return MusicScore((ScoreEvent(1, pitch, 0.0, 0.5),), "s")


class TestShiftPolicy:
    def test_p1_frequencies_within_one_percent(self):
        rng = np.random.default_rng(99)
        policy = ShiftPolicy("P1")
        score = score_with_mean(60)
        draws = np.array([sample_shift(policy, score, rng) for _ in range(100_000)])
        for value in (-1, 0, 1):
            freq = (draws == value).mean()
            assert abs(freq - 1 / 3) <= 0.01 * (1 / 3) + 0.003

    def test_adaptive_low_sample_shifts_upward(self):
        # the worked example: sample mean 63, dataset mean 65
        policy = ShiftPolicy("P_ADAPTIVE", dataset_mean_pitch=65.0)
        assert shift_support(policy, score_with_mean(63)) == (0, 1, 2)

    def test_adaptive_high_sample_shifts_downward(self):
        policy = ShiftPolicy("P_ADAPTIVE", dataset_mean_pitch=65.0)
        assert shift_support(policy, score_with_mean(67)) == (-2, -1, 0)

    def test_adaptive_near_mean_is_symmetric(self):
        policy = ShiftPolicy("P_ADAPTIVE", dataset_mean_pitch=65.0)
        assert shift_support(policy, score_with_mean(65)) == (-1, 0, 1)

    def test_p2_support_bound(self):
        rng = np.random.default_rng(3)
        policy = ShiftPolicy("P2")
        draws = [sample_shift(policy, score_with_mean(60), rng) for _ in range(2000)]
        assert set(draws) == {-2, -1, 0, 1, 2}

    def test_adaptive_requires_dataset_mean(self):
        with pytest.raises(ConfigError):
            ShiftPolicy("P_ADAPTIVE")

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            ShiftPolicy("P3")

    def test_reproducible(self):
        policy = ShiftPolicy("P2")
        a = [sample_shift(policy, score_with_mean(60), np.random.default_rng(5))
             for _ in range(1)]
        b = [sample_shift(policy, score_with_mean(60), np.random.default_rng(5))
             for _ in range(1)]
        assert a == b


class TestSampleLambda:
    def test_mean_is_half(self):
        rng = np.random.default_rng(17)
        draws = np.array([sample_lambda(0.5, rng) for _ in range(100_000)])
        assert abs(draws.mean() - 0.5) <= 0.01
        assert draws.min() >= 0.0 and draws.max() <= 1.0

    def test_variance_matches_beta_formula(self):
        # Beta(a, a) variance oracle: a^2 / ((2a)^2 (2a+1))
        a = 0.5
        expected = a * a / ((2 * a) ** 2 * (2 * a + 1))
        assert expected == pytest.approx(0.125)
        rng = np.random.default_rng(23)
        draws = np.array([sample_lambda(a, rng) for _ in range(100_000)])
        assert abs(draws.var() - expected) <= 0.005

    def test_alpha_must_be_positive(self):
        with pytest.raises(ParameterError):
            sample_lambda(0.0, np.random.default_rng(0))


class TestMixHidden:
    def rand_pair(self, rng, t_i=7, t_j=4, d=6):
        a = HiddenSequence(rng.standard_normal((t_i, d)), t_i)
        b = HiddenSequence(rng.standard_normal((t_j, d)), t_j)
        return a, b

    def test_lambda_one_keeps_first_source(self):
        rng = np.random.default_rng(0)
        a, b = self.rand_pair(rng)
        mixed = mix_hidden(a, b, 1.0)
        assert np.array_equal(mixed.values[:7], a.values)
        assert mixed.length == 7
        assert mixed.source_lengths == (7, 4)

    def test_lambda_zero_keeps_padded_second(self):
        rng = np.random.default_rng(1)
        a, b = self.rand_pair(rng)
        mixed = mix_hidden(a, b, 0.0)
        assert np.array_equal(mixed.values[:4], b.values)
        assert np.array_equal(mixed.values[4:], np.zeros((3, 6)))

    def test_opposites_cancel(self):
        rng = np.random.default_rng(2)
        vals = rng.standard_normal((5, 6))
        a = HiddenSequence(vals, 5)
        b = HiddenSequence(-vals, 5)
        assert np.all(mix_hidden(a, b, 0.5).values == 0.0)

    def test_symmetry_on_dyadic_lambdas(self):
        # lambda on a 1/1024 grid makes 1-(1-lam) exact, so symmetry is bitwise
        rng = np.random.default_rng(3)
        for _ in range(100):
            a, b = self.rand_pair(rng, t_i=int(rng.integers(2, 9)),
                                  t_j=int(rng.integers(2, 9)))
            lam = float(rng.integers(0, 1025)) / 1024.0
            left = mix_hidden(a, b, lam)
            right = mix_hidden(b, a, 1.0 - lam)
            assert np.array_equal(left.values, right.values)

    def test_width_mismatch(self):
        a = HiddenSequence(np.zeros((3, 4)), 3)
        b = HiddenSequence(np.zeros((3, 5)), 3)
        with pytest.raises(ShapeError):
            mix_hidden(a, b, 0.5)

    def test_lambda_out_of_range(self):
        a = HiddenSequence(np.zeros((3, 4)), 3)
        with pytest.raises(ParameterError):
            mix_hidden(a, a, 1.5)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000), st.floats(0.0, 1.0))
    def test_convex_bounds_property(self, seed, lam):
        rng = np.random.default_rng(seed)
        a, b = self.rand_pair(rng, t_i=5, t_j=3)
        mixed = mix_hidden(a, b, lam)
        overlap = min(a.length, b.length)
        lo = np.minimum(a.values[:overlap], b.values[:overlap])
        hi = np.maximum(a.values[:overlap], b.values[:overlap])
        assert np.all(mixed.values[:overlap] >= lo - 1e-12)
        assert np.all(mixed.values[:overlap] <= hi + 1e-12)


class TestSelectPairs:
    def test_batch_twenty_at_fifteen_percent(self):
        pairs = select_mixup_pairs(20, 0.15, np.random.default_rng(0))
        assert len(pairs) == 3

    def test_zero_proportion(self):
        assert select_mixup_pairs(20, 0.0, np.random.default_rng(0)) == []

    def test_pairs_are_disjoint_and_distinct(self):
        for seed in range(10_000):
            rng = np.random.default_rng(seed)
            pairs = select_mixup_pairs(8, 0.5, rng)
            flat = [x for p in pairs for x in p]
            assert len(flat) == len(set(flat))
            assert all(i != j for i, j in pairs)

    def test_small_batch_warns_and_skips(self):
        with pytest.warns(UserWarning):
            assert select_mixup_pairs(1, 0.5, np.random.default_rng(0)) == []

    def test_proportion_capped_by_batch(self):
        pairs = select_mixup_pairs(4, 1.0, np.random.default_rng(0))
        assert len(pairs) == 2


class TestMixupConfig:
    def test_defaults_match_recipe(self):
        cfg = MixupConfig()
        assert (cfg.alpha, cfg.proportion, cfg.w_mix) == (0.5, 0.15, 0.1)

    def test_validation(self):
        with pytest.raises(ConfigError):
            MixupConfig(alpha=-1.0)
        with pytest.raises(ConfigError):
            MixupConfig(proportion=1.5)
        with pytest.raises(ConfigError):
            MixupConfig(w_mix=2.0)


@pytest.fixture(scope="module")
def vowel_pair():
    audio = make_vowel(220.0, duration=0.6)
    score = MusicScore(
        (ScoreEvent(1, 57, 0.0, 0.3), ScoreEvent(2, 57, 0.3, 0.6)), "pair"
    )
    feature = mel_spectrogram(audio)
    durations = durations_to_frames(score, 0.0125, feature.n_frames)
    return TrainingPair(score, audio, feature, durations)


class TestApplyPitchAugmentation:
    def test_zero_shift_keeps_score(self, vowel_pair):
        out = apply_pitch_augmentation(vowel_pair, 0)
        assert out.score == vowel_pair.score
        assert out.feature.n_frames == vowel_pair.feature.n_frames

    def test_one_semitone_shifts_score_and_audio(self, vowel_pair):
        out = apply_pitch_augmentation(vowel_pair, 1)
        assert [e.pitch for e in out.score.events] == [58, 58]
        from singaug.dsp import estimate_f0

        ref = estimate_f0(vowel_pair.audio)
        got = estimate_f0(out.audio)
        ratio = (np.median(got.f0_hz[got.voiced])
                 / np.median(ref.f0_hz[ref.voiced]))
        assert abs(1200 * math.log2(ratio / 2 ** (1 / 12))) <= 20.0

    def test_symbolic_additivity(self, vowel_pair):
        twice = apply_pitch_augmentation(
            apply_pitch_augmentation(vowel_pair, 1), 1
        )
        once = apply_pitch_augmentation(vowel_pair, 2)
        assert twice.score == once.score

    def test_only_pitch_and_audio_change(self, vowel_pair):
        out = apply_pitch_augmentation(vowel_pair, 2)
        assert len(out.score) == len(vowel_pair.score)
        for a, b in zip(out.score.events, vowel_pair.score.events):
            assert (a.phoneme, a.onset, a.offset) == (b.phoneme, b.onset, b.offset)
        assert out.durations.total_frames == out.feature.n_frames

    def test_suffix_format(self):
        assert pa_suffix(1) == "__pa+1"
        assert pa_suffix(-2) == "__pa-2"
