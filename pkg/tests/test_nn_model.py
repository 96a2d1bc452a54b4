import numpy as np
import pytest

from singaug.augment import HiddenSequence, mix_hidden
from singaug.errors import ConfigError, ShapeError, VocabularyError
from singaug.nn import (
    AcousticModel,
    ModelConfig,
    PredictorModule,
    Tensor,
    acoustic_forward,
    closed_form_parameter_count,
    decode_from_hidden,
    length_regulate,
    positional_encoding,
    predictor_forward,
)
from singaug.nn import tensor as T
from singaug.score import FrameDurations, MusicScore, ScoreEvent

TOY = ModelConfig(vocab_size=12, d_hidden=16, n_heads=2, ff_hidden=32,
                  encoder_blocks=1, decoder_blocks=1, postnet_channels=8,
                  postnet_layers=2, predictor_blocks=1, predictor_ff=32,
                  d_acoustic=10, predictor_heads=2)


def toy_score():
    return MusicScore(
        (
            ScoreEvent(1, 60, 0.0, 0.05),
            ScoreEvent(2, 62, 0.05, 0.0875),
            ScoreEvent(3, 64, 0.0875, 0.15),
        ),
        "toy",
    )


def toy_durations(total=10):
    return FrameDurations((total - 2, 1, 1), total)


@pytest.fixture
def model():
    return AcousticModel(TOY, np.random.default_rng(11))


@pytest.fixture
def predictor():
    return PredictorModule(TOY, np.random.default_rng(12))


class TestLengthRegulate:
    def test_identity_expansion(self):
        x = Tensor(np.arange(12.0).reshape(3, 4))
        out = length_regulate(x, FrameDurations((1, 1, 1), 3))
        assert np.array_equal(out.data, x.data)

    def test_direct_repetition(self):
        x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
        out = length_regulate(x, FrameDurations((2, 3), 5))
        assert out.shape == (5, 2)
        assert np.array_equal(out.data[:2], np.tile([1.0, 2.0], (2, 1)))
        assert np.array_equal(out.data[2:], np.tile([3.0, 4.0], (3, 1)))

    def test_spot_check_row_four(self):
        # index oracle: with durations [2, 3], rows 2..4 hold token 1
        x = Tensor(np.array([[1.0, 2.0], [3.0, 4.0]]))
        out = length_regulate(x, FrameDurations((2, 3), 5))
        assert np.array_equal(out.data[4], x.data[1])

    def test_mismatch(self):
        x = Tensor(np.zeros((3, 4)))
        with pytest.raises(ShapeError):
            length_regulate(x, FrameDurations((2, 3), 5))


class TestPositionalEncoding:
    def test_t_zero_row(self):
        enc = positional_encoding(4, 8)
        assert np.all(enc[0, 0::2] == 0.0)
        assert np.all(enc[0, 1::2] == 1.0)

    def test_range(self):
        enc = positional_encoding(50, 16)
        assert enc.min() >= -1.0 and enc.max() <= 1.0

    def test_sin_one(self):
        assert positional_encoding(2, 8)[1, 0] == pytest.approx(np.sin(1.0), abs=1e-12)

    def test_odd_width_rejected(self):
        with pytest.raises(ConfigError):
            positional_encoding(4, 7)


class TestAcousticForward:
    def test_output_shapes(self, model):
        y, h = acoustic_forward(toy_score(), toy_durations(), model)
        assert y.shape == (10, TOY.d_acoustic)
        assert h.shape == (10, TOY.d_hidden)

    def test_zero_model_constant_output(self):
        model = AcousticModel(TOY, np.random.default_rng(0))
        for p in model.parameters().values():
            p.data[:] = 0.0
        y1, _ = acoustic_forward(toy_score(), toy_durations(), model)
        other = MusicScore(
            (ScoreEvent(5, 70, 0.0, 0.1), ScoreEvent(6, 71, 0.1, 0.15)), "other"
        )
        y2, _ = acoustic_forward(other, FrameDurations((6, 4), 10), model)
        assert np.array_equal(y1.data, y2.data)
        assert np.allclose(y1.data, y1.data[0, 0])

    def test_eval_deterministic(self, model):
        y1, _ = acoustic_forward(toy_score(), toy_durations(), model)
        y2, _ = acoustic_forward(toy_score(), toy_durations(), model)
        assert np.array_equal(y1.data, y2.data)

    def test_training_dropout_reproducible(self, model):
        y1, _ = acoustic_forward(toy_score(), toy_durations(), model,
                                 training=True, rng=np.random.default_rng(5))
        y2, _ = acoustic_forward(toy_score(), toy_durations(), model,
                                 training=True, rng=np.random.default_rng(5))
        y3, _ = acoustic_forward(toy_score(), toy_durations(), model,
                                 training=True, rng=np.random.default_rng(6))
        assert np.array_equal(y1.data, y2.data)
        assert not np.array_equal(y1.data, y3.data)

    def test_unknown_phoneme_id(self, model):
        bad = MusicScore((ScoreEvent(99, 60, 0.0, 0.1),), "bad")
        with pytest.raises(VocabularyError):
            acoustic_forward(bad, FrameDurations((10,), 10), model)

    def test_frame_exactness(self, model):
        for total in (3, 10, 23):
            y, _ = acoustic_forward(toy_score(), toy_durations(total), model)
            assert y.shape[0] == total


class TestDecodeFromHidden:
    def test_path_consistency(self, model):
        y, h = acoustic_forward(toy_score(), toy_durations(), model)
        again = decode_from_hidden(h, model)
        assert np.array_equal(y.data, again.data)

    def test_lambda_one_endpoint(self, model):
        _, h_long = acoustic_forward(toy_score(), toy_durations(10), model)
        _, h_short = acoustic_forward(toy_score(), toy_durations(7), model)
        hs_i = HiddenSequence(h_long.data.astype(np.float64), 10)
        hs_j = HiddenSequence(h_short.data.astype(np.float64), 7)
        mixed = mix_hidden(hs_i, hs_j, 1.0)
        a = decode_from_hidden(mixed, model)
        b = decode_from_hidden(Tensor(hs_i.values), model)
        assert np.array_equal(a.data, b.data)

    def test_row_count_is_t_max(self, model):
        mixed = mix_hidden(
            HiddenSequence(np.zeros((8, 16)) + 0.1, 8),
            HiddenSequence(np.ones((5, 16)), 5),
            0.4,
        )
        out = decode_from_hidden(mixed, model)
        assert out.shape == (8, TOY.d_acoustic)

    def test_width_mismatch(self, model):
        with pytest.raises(ShapeError):
            decode_from_hidden(Tensor(np.zeros((4, 9))), model)


class TestPredictor:
    def test_shapes(self, predictor):
        y = Tensor(np.random.default_rng(0).standard_normal((7, TOY.d_acoustic)))
        ph, pi = predictor_forward(y, predictor)
        assert ph.shape == (7, TOY.vocab_size)
        assert pi.shape == (7, TOY.n_pitches)

    def test_permutation_equivariance_without_positions(self, predictor):
        rng = np.random.default_rng(1)
        y = rng.standard_normal((3, TOY.d_acoustic))
        perm = np.array([2, 0, 1])
        ph, pi = predictor_forward(Tensor(y), predictor)
        ph_p, pi_p = predictor_forward(Tensor(y[perm]), predictor)
        assert np.allclose(ph.data[perm], ph_p.data, atol=1e-6)
        assert np.allclose(pi.data[perm], pi_p.data, atol=1e-6)

    def test_positional_flag_breaks_equivariance(self):
        cfg = ModelConfig(vocab_size=12, d_hidden=16, n_heads=2, ff_hidden=32,
                          encoder_blocks=1, decoder_blocks=1, postnet_channels=8,
                          postnet_layers=2, predictor_blocks=1, predictor_ff=32,
                          d_acoustic=10, predictor_heads=2, predictor_positional=True)
        predictor = PredictorModule(cfg, np.random.default_rng(12))
        rng = np.random.default_rng(1)
        y = rng.standard_normal((3, cfg.d_acoustic))
        perm = np.array([2, 0, 1])
        ph, _ = predictor_forward(Tensor(y), predictor)
        ph_p, _ = predictor_forward(Tensor(y[perm]), predictor)
        assert not np.allclose(ph.data[perm], ph_p.data, atol=1e-6)

    def test_eval_deterministic(self, predictor):
        y = Tensor(np.random.default_rng(0).standard_normal((5, TOY.d_acoustic)))
        a, _ = predictor_forward(y, predictor)
        b, _ = predictor_forward(y, predictor)
        assert np.array_equal(a.data, b.data)

    def test_width_mismatch(self, predictor):
        with pytest.raises(ShapeError):
            predictor_forward(Tensor(np.zeros((4, 11))), predictor)


class TestArchitectureGuards:
    def test_attention_rows_sum_to_one_float32(self):
        rng = np.random.default_rng(0)
        logits = Tensor(rng.standard_normal((100, 100)).astype(np.float32) * 4)
        p = T.softmax_rows(logits)
        assert np.max(np.abs(p.data.sum(axis=1) - 1.0)) < 1e-6

    def test_parameter_count_matches_closed_form(self, model, predictor):
        acoustic_expected, predictor_expected = closed_form_parameter_count(TOY)
        assert model.parameter_count() == acoustic_expected
        assert predictor.parameter_count() == predictor_expected

    def test_parameter_count_default_config(self):
        cfg = ModelConfig()
        acoustic_expected, predictor_expected = closed_form_parameter_count(cfg)
        model = AcousticModel(cfg, np.random.default_rng(0))
        predictor = PredictorModule(cfg, np.random.default_rng(1))
        assert model.parameter_count() == acoustic_expected
        assert predictor.parameter_count() == predictor_expected

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            ModelConfig(d_hidden=15)
        with pytest.raises(ConfigError):
            ModelConfig(d_hidden=16, n_heads=3)
        with pytest.raises(ConfigError):
            ModelConfig(dropout=1.0)
