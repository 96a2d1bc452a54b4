"""The non-autoregressive acoustic model and the cycle predictor.

The acoustic model embeds phoneme and pitch tokens, encodes the phoneme
branch with self-attention blocks, expands both branches to frame level
with the length regulator, sums them with a sinusoidal positional encoding,
and decodes the sum to mel frames (plus a residual postnet).  The predictor
maps acoustic frames back to frame-level phoneme and pitch logits through
two independent self-attention stacks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..errors import ConfigError, ShapeError
from ..score import FrameDurations, MusicScore
from . import tensor as T
from .layers import Embedding, Linear, Module, Postnet, TransformerBlock
from .tensor import Tensor


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions for the acoustic model and predictor.

    The defaults are the desk-scale ("toy") configuration; the full-scale
    sizes (6 blocks, 384-dim hidden, 1536 feed-forward, 4 predictor blocks
    with 512 filters) are plain config values away.
    """

    vocab_size: int = 40
    d_hidden: int = 64
    n_heads: int = 4
    ff_hidden: int = 256
    encoder_blocks: int = 2
    decoder_blocks: int = 2
    postnet_channels: int = 64
    postnet_kernel: int = 5
    postnet_layers: int = 3
    predictor_blocks: int = 2
    predictor_heads: int = 4
    predictor_ff: int = 256
    d_acoustic: int = 80
    n_pitches: int = 128
    dropout: float = 0.1
    predictor_positional: bool = False

    def __post_init__(self):
        if self.vocab_size < 1:
            raise ConfigError("vocab_size must be >= 1")
        if self.d_hidden % 2 != 0:
            raise ConfigError("d_hidden must be even for the positional encoding")
        if self.d_hidden % self.n_heads != 0:
            raise ConfigError("d_hidden must divide evenly into heads")
        if self.d_acoustic % self.predictor_heads != 0:
            raise ConfigError("d_acoustic must divide evenly into predictor heads")
        if self.encoder_blocks < 1 or self.decoder_blocks < 1:
            raise ConfigError("encoder/decoder need at least one block")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must lie in [0, 1)")


@lru_cache(maxsize=64)
def _positional_cached(n_frames: int, d: int) -> np.ndarray:
    pos = np.arange(n_frames, dtype=np.float64)[:, None]
    k2 = np.arange(0, d, 2, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, k2 / d)
    enc = np.empty((n_frames, d))
    enc[:, 0::2] = np.sin(angle)
    enc[:, 1::2] = np.cos(angle)
    enc.flags.writeable = False
    return enc


def positional_encoding(n_frames: int, d: int) -> np.ndarray:
    """Sinusoidal table: entry (t, 2k) = sin(t / 10000^(2k/d)), odd cols cos."""
    if d % 2 != 0:
        raise ConfigError(f"positional encoding needs an even width, got {d}")
    if n_frames < 1:
        raise ConfigError("positional encoding needs at least one frame")
    return _positional_cached(n_frames, d)


def length_regulate(token_states: Tensor, durations: FrameDurations) -> Tensor:
    """Expand token-level rows to frame level by per-token repetition."""
    if token_states.shape[0] != len(durations):
        raise ShapeError(
            f"{token_states.shape[0]} token rows vs {len(durations)} durations"
        )
    return T.repeat_rows(token_states, durations.frames_per_event)


class AcousticModel(Module):
    """FastSpeech-style score-to-mel model (f in the training objective)."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator,
                 dtype=np.float32):
        super().__init__()
        self.config = config
        d = config.d_hidden
        self.phoneme_embedding = self.child(
            "phoneme_embedding", Embedding(config.vocab_size, d, rng, dtype)
        )
        self.pitch_embedding = self.child(
            "pitch_embedding", Embedding(config.n_pitches, d, rng, dtype)
        )
        self.encoder = [
            self.child(f"encoder{i}",
                       TransformerBlock(d, config.n_heads, config.ff_hidden,
                                        config.dropout, rng, dtype))
            for i in range(config.encoder_blocks)
        ]
        self.decoder = [
            self.child(f"decoder{i}",
                       TransformerBlock(d, config.n_heads, config.ff_hidden,
                                        config.dropout, rng, dtype))
            for i in range(config.decoder_blocks)
        ]
        self.out_proj = self.child("out_proj", Linear(d, config.d_acoustic, rng, dtype))
        self.postnet = self.child(
            "postnet",
            Postnet(config.d_acoustic, config.postnet_channels,
                    config.postnet_kernel, config.postnet_layers,
                    config.dropout, rng, dtype),
        )

    def encode(self, score: MusicScore, durations: FrameDurations,
               rng=None) -> Tensor:
        """Build the frame-level hidden sum H = H_ph + H_pi + positions."""
        d = self.config.d_hidden
        ph = self.phoneme_embedding(score.phonemes)
        ph = T.add_const(ph, positional_encoding(ph.shape[0], d))
        for block in self.encoder:
            ph = block(ph, rng)
        h_ph = length_regulate(ph, durations)
        h_pi = length_regulate(self.pitch_embedding(score.pitches), durations)
        h = h_ph + h_pi
        return T.add_const(h, positional_encoding(h.shape[0], d))

    def decode(self, hidden: Tensor, rng=None) -> Tensor:
        if hidden.shape[1] != self.config.d_hidden:
            raise ShapeError(
                f"hidden width {hidden.shape[1]} != configured {self.config.d_hidden}"
            )
        x = hidden
        for block in self.decoder:
            x = block(x, rng)
        before = self.out_proj(x)
        return before + self.postnet(before, rng)


class PredictorModule(Module):
    """Cycle predictor (g): acoustic frames -> phoneme and pitch logits,
    through two independent stacks."""

    def __init__(self, config: ModelConfig, rng: np.random.Generator,
                 dtype=np.float32):
        super().__init__()
        self.config = config
        d = config.d_acoustic

        def stack(prefix):
            return [
                self.child(f"{prefix}{i}",
                           TransformerBlock(d, config.predictor_heads,
                                            config.predictor_ff, config.dropout,
                                            rng, dtype))
                for i in range(config.predictor_blocks)
            ]

        self.phoneme_blocks = stack("phoneme_block")
        self.phoneme_head = self.child("phoneme_head",
                                       Linear(d, config.vocab_size, rng, dtype))
        self.pitch_blocks = stack("pitch_block")
        self.pitch_head = self.child("pitch_head",
                                     Linear(d, config.n_pitches, rng, dtype))

    def _run(self, y: Tensor, blocks, head, rng):
        x = y
        if self.config.predictor_positional:
            x = T.add_const(x, positional_encoding(x.shape[0], x.shape[1]))
        for block in blocks:
            x = block(x, rng)
        return head(x)

    def __call__(self, y: Tensor, rng=None) -> tuple[Tensor, Tensor]:
        if y.shape[1] != self.config.d_acoustic:
            raise ShapeError(
                f"predictor expects width {self.config.d_acoustic}, got {y.shape[1]}"
            )
        return (
            self._run(y, self.phoneme_blocks, self.phoneme_head, rng),
            self._run(y, self.pitch_blocks, self.pitch_head, rng),
        )


def acoustic_forward(score: MusicScore, durations: FrameDurations,
                     model: AcousticModel, training: bool = False,
                     rng: np.random.Generator | None = None):
    """Full forward pass; returns (mel prediction, hidden sum H).

    H is returned so the training step can splice mixed hidden states back
    through the identical decoder path.
    """
    drop_rng = rng if training else None
    h = model.encode(score, durations, drop_rng)
    y_hat = model.decode(h, drop_rng)
    return y_hat, h


def decode_from_hidden(hidden, model: AcousticModel, training: bool = False,
                       rng: np.random.Generator | None = None) -> Tensor:
    """Decoder-only path from a frame-level hidden matrix (Tensor or array)."""
    if not isinstance(hidden, Tensor):
        values = getattr(hidden, "values", hidden)
        hidden = Tensor(np.asarray(values))
    return model.decode(hidden, rng if training else None)


def predictor_forward(y, predictor: PredictorModule, training: bool = False,
                      rng: np.random.Generator | None = None):
    """Frame-level (phoneme logits, pitch logits) from acoustic frames."""
    if not isinstance(y, Tensor):
        y = Tensor(np.asarray(y))
    return predictor(y, rng if training else None)


def closed_form_parameter_count(config: ModelConfig) -> tuple[int, int]:
    """Parameter counts (acoustic model, predictor) from the architecture
    alone; guards against silent drift.

    Per attention block of width d with feed-forward width f:
        4*(d*d + d)  attention projections
        2*(2*d)      two layer norms
        d*f + f + f*d + d   feed-forward
    Acoustic model: phoneme and pitch embeddings (V*d + 128*d), E encoder +
    E' decoder blocks, output projection (d*a + a), postnet (L tanh convs of
    kernel k plus one linear conv).  Predictor: two independent stacks of P
    blocks at width a plus one head each (a*V + V and a*128 + 128).
    """

    def block(d, f):
        return 4 * (d * d + d) + 2 * (2 * d) + (d * f + f) + (f * d + d)

    c = config
    d, a = c.d_hidden, c.d_acoustic
    acoustic = c.vocab_size * d + c.n_pitches * d
    acoustic += (c.encoder_blocks + c.decoder_blocks) * block(d, c.ff_hidden)
    acoustic += d * a + a
    k, ch = c.postnet_kernel, c.postnet_channels
    acoustic += k * a * ch + ch
    acoustic += (c.postnet_layers - 1) * (k * ch * ch + ch)
    acoustic += k * ch * a + a

    pred_stack = c.predictor_blocks * block(a, c.predictor_ff)
    predictor = 2 * pred_stack
    predictor += a * c.vocab_size + c.vocab_size
    predictor += a * c.n_pitches + c.n_pitches
    return acoustic, predictor
