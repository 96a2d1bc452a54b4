import math

import numpy as np
import pytest

from singaug.dsp import mel_spectrogram
from singaug.dsp.pitch import F0Track
from singaug.errors import ParameterError, ShapeError
from singaug.metrics import EvalPair, MetricReport, evaluate, f0_metrics, mcd

from conftest import make_vowel

RNG = np.random.default_rng(515)


def track(f0_values, voiced=None):
    arr = np.asarray(f0_values, dtype=np.float64)
    voiced = arr > 0 if voiced is None else np.asarray(voiced, dtype=bool)
    return F0Track(np.where(voiced, arr, 0.0), voiced, 0.0125)


class TestMcd:
    def test_identical_is_zero(self):
        cep = RNG.standard_normal((5, 24))
        assert mcd(cep, cep) == 0.0

    def test_single_coefficient_closed_form(self):
        # oracle: one coefficient off by d on every frame
        # -> (10/ln10) * sqrt(2) * |d|
        d = 0.37
        ref = np.zeros((6, 24))
        syn = np.zeros((6, 24))
        syn[:, 3] = d
        expected = 10.0 / math.log(10.0) * math.sqrt(2.0) * abs(d)
        assert mcd(ref, syn) == pytest.approx(expected, abs=1e-9)

    def test_matches_brute_force_double_loop(self):
        ref = RNG.standard_normal((4, 6))
        syn = RNG.standard_normal((4, 6))
        acc = 0.0
        for t in range(4):
            inner = 0.0
            for k in range(6):
                inner += (ref[t, k] - syn[t, k]) ** 2
            acc += 10.0 / math.log(10.0) * math.sqrt(2.0 * inner)
        assert mcd(ref, syn) == pytest.approx(acc / 4.0, abs=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            mcd(np.zeros((3, 4)), np.zeros((3, 5)))

    def test_frame_permutation_invariance(self):
        ref = RNG.standard_normal((7, 5))
        syn = RNG.standard_normal((7, 5))
        perm = RNG.permutation(7)
        assert mcd(ref, syn) == pytest.approx(mcd(ref[perm], syn[perm]), abs=1e-12)


class TestF0Metrics:
    def test_perfect_match(self):
        ref = track([220.0, 230.0, 0.0, 240.0])
        lf0, corr, st, vuv, n = f0_metrics(ref, ref)
        assert (lf0, corr, st, vuv, n) == (0.0, 1.0, 100.0, 0.0, 3)

    def test_uniform_semitone_shift_closed_form(self):
        base = np.array([200.0, 220.0, 250.0, 300.0, 330.0])
        ref = track(base)
        syn = track(base * 2 ** (1 / 12))
        lf0, corr, st, vuv, _ = f0_metrics(ref, syn)
        assert lf0 == pytest.approx(math.log(2 ** (1 / 12)), abs=1e-9)
        assert math.log(2 ** (1 / 12)) == pytest.approx(0.0577622650466621, abs=1e-12)
        assert corr == pytest.approx(1.0, abs=1e-9)
        assert st == 0.0

    def test_within_forty_cents_at_semitone_centers(self):
        # quantization tolerance: +-40 cents around exact semitones
        # still rounds to the same MIDI note
        midis = np.array([57.0, 60.0, 64.0, 69.0])
        ref_hz = 440.0 * 2 ** ((midis - 69.0) / 12.0)
        offset_cents = np.array([40.0, -40.0, 25.0, -25.0])
        syn_hz = ref_hz * 2 ** (offset_cents / 1200.0)
        _, _, st, _, _ = f0_metrics(track(ref_hz), track(syn_hz))
        assert st == 100.0

    def test_vuv_disagreement_counted(self):
        ref = track([220.0, 0.0, 220.0, 0.0])
        syn = track([220.0, 220.0, 0.0, 0.0])
        _, _, _, vuv, n = f0_metrics(ref, syn)
        assert vuv == 50.0
        assert n == 1

    def test_no_mutually_voiced_frames_absent(self):
        ref = track([220.0, 0.0])
        syn = track([0.0, 220.0])
        lf0, corr, st, vuv, n = f0_metrics(ref, syn)
        assert lf0 is None and corr is None and st is None
        assert n == 0 and vuv == 100.0

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            f0_metrics(track([220.0]), track([220.0, 220.0]))

    def test_corr_affine_invariance(self):
        base = np.array([200.0, 230.0, 260.0, 290.0])
        other = np.array([210.0, 225.0, 280.0, 300.0])
        _, c1, _, _, _ = f0_metrics(track(base), track(other))
        _, c2, _, _, _ = f0_metrics(track(2.0 * base + 5.0), track(2.0 * other + 5.0))
        assert c1 == pytest.approx(c2, abs=1e-12)

    def test_st_acc_joint_transposition_invariance(self):
        # frequencies kept away from the .5-midi rounding boundary
        midis = np.array([57.2, 60.1, 63.9, 69.25])
        ref_hz = 440.0 * 2 ** ((midis - 69.0) / 12.0)
        syn_hz = ref_hz * 2 ** (0.2 / 12.0)
        _, _, st1, _, _ = f0_metrics(track(ref_hz), track(syn_hz))
        shift = 2 ** (3 / 12.0)
        _, _, st2, _, _ = f0_metrics(track(ref_hz * shift), track(syn_hz * shift))
        assert st1 == st2


class TestEvaluate:
    def make_pair(self, pair_id="p", freq=220.0, syn_audio=None):
        ref = make_vowel(freq, duration=0.6)
        syn = syn_audio if syn_audio is not None else ref
        return EvalPair(pair_id, ref, syn, mel_spectrogram(ref), mel_spectrogram(syn))

    def test_perfect_pair(self):
        summary, per_pair = evaluate([self.make_pair()])
        assert summary.mcd == 0.0
        assert summary.lf0_rmse == 0.0
        assert summary.f0_corr == pytest.approx(1.0, abs=1e-9)
        assert summary.st_acc == 100.0
        assert summary.vuv_err == 0.0
        assert len(per_pair) == 1
        assert set(per_pair[0]) == {"pair_id", "mcd", "lf0_rmse", "f0_corr",
                                    "st_acc", "vuv_err", "n_frames_voiced_both"}

    def test_corpus_mcd_weighted_mean(self):
        # two equal-length pairs with different distortions average evenly
        a = self.make_pair("a", 220.0)
        b_audio = make_vowel(220.0, duration=0.6)
        shifted = np.roll(b_audio.samples, 7) * 0.8
        from singaug.dsp import AudioBuffer

        b_syn = AudioBuffer(shifted, 24000)
        b = EvalPair("b", b_audio, b_syn, mel_spectrogram(b_audio),
                     mel_spectrogram(b_syn))
        sa, _ = evaluate([a])
        sb, _ = evaluate([b])
        both, _ = evaluate([a, b])
        assert both.mcd == pytest.approx((sa.mcd + sb.mcd) / 2.0, rel=1e-9)

    def test_empty_list_rejected(self):
        with pytest.raises(ParameterError):
            evaluate([])

    def test_report_field_ranges(self):
        with pytest.raises(ShapeError):
            MetricReport(1.0, 0.1, 2.0, 50.0, 1.0, 3)
        with pytest.raises(ShapeError):
            MetricReport(1.0, 0.1, 0.5, 150.0, 1.0, 3)
