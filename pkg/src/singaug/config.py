"""Run configuration: strict JSON schema, canonical freezing, and hashing.

Unknown keys are rejected rather than ignored, so a typo like ``w_mxi``
fails loudly instead of silently running a different experiment.  The
canonical JSON dump is hashed into every checkpoint and frozen into every
run directory.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field

from .augment import POLICY_KINDS
from .dsp import AudioParams
from .errors import ConfigError, SingaugError
from .nn import ModelConfig


@dataclass(frozen=True)
class DataConfig:
    min_gap: float = 0.3
    train_fraction: float = 0.85
    valid_fraction: float = 0.075

    def __post_init__(self):
        if self.min_gap <= 0:
            raise ConfigError("min_gap must be positive")
        if not 0 < self.train_fraction < 1 or not 0 < self.valid_fraction < 1:
            raise ConfigError("split fractions must lie in (0, 1)")
        if self.train_fraction + self.valid_fraction >= 1:
            raise ConfigError("train + valid fractions must leave room for test")


@dataclass(frozen=True)
class ModelSection:
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
    dropout: float = 0.1
    predictor_positional: bool = False


@dataclass(frozen=True)
class AugmentSection:
    policy: str = "P1"

    def __post_init__(self):
        if self.policy not in POLICY_KINDS:
            raise ConfigError(
                f"policy must be one of {POLICY_KINDS}, got {self.policy!r}"
            )


@dataclass(frozen=True)
class MixupSection:
    alpha: float = 0.5
    proportion: float = 0.15
    w_mix: float = 0.1

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigError("alpha must be positive")
        if not 0 <= self.proportion <= 1:
            raise ConfigError("proportion must lie in [0, 1]")
        if not 0 <= self.w_mix <= 1:
            raise ConfigError("w_mix must lie in [0, 1]")


@dataclass(frozen=True)
class LossSection:
    w_svs: float = 1.0
    w_si: float = 0.0
    w_pd: float = 0.0

    def __post_init__(self):
        if min(self.w_svs, self.w_si, self.w_pd) < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.w_svs + self.w_si + self.w_pd <= 0:
            raise ConfigError("at least one loss weight must be positive")


@dataclass(frozen=True)
class OptimizerSection:
    base_lr: float = 1.0
    warmup_steps: int = 200
    grad_clip: float = 1.0

    def __post_init__(self):
        if self.base_lr <= 0 or self.warmup_steps < 1:
            raise ConfigError("base_lr and warmup_steps must be positive")


@dataclass(frozen=True)
class TrainingSection:
    epochs: int = 50
    batch_size: int = 8
    checkpoint_every: int = 1
    keep_checkpoints: int = 2

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be positive")


@dataclass(frozen=True)
class TogglesSection:
    pa: bool = False
    ma: bool = False
    cc: bool = False


@dataclass(frozen=True)
class SynthSection:
    griffin_lim_iterations: int = 60

    def __post_init__(self):
        if self.griffin_lim_iterations < 1:
            raise ConfigError("griffin_lim_iterations must be >= 1")


_SECTIONS = {
    "data": DataConfig,
    "audio": AudioParams,
    "model": ModelSection,
    "augment": AugmentSection,
    "mixup": MixupSection,
    "loss": LossSection,
    "optimizer": OptimizerSection,
    "training": TrainingSection,
    "toggles": TogglesSection,
    "synth": SynthSection,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    data: DataConfig = field(default_factory=DataConfig)
    audio: AudioParams = field(default_factory=AudioParams)
    model: ModelSection = field(default_factory=ModelSection)
    augment: AugmentSection = field(default_factory=AugmentSection)
    mixup: MixupSection = field(default_factory=MixupSection)
    loss: LossSection = field(default_factory=LossSection)
    optimizer: OptimizerSection = field(default_factory=OptimizerSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    toggles: TogglesSection = field(default_factory=TogglesSection)
    synth: SynthSection = field(default_factory=SynthSection)

    def model_config(self, vocab_size: int) -> ModelConfig:
        m = self.model
        return ModelConfig(
            vocab_size=vocab_size,
            d_hidden=m.d_hidden,
            n_heads=m.n_heads,
            ff_hidden=m.ff_hidden,
            encoder_blocks=m.encoder_blocks,
            decoder_blocks=m.decoder_blocks,
            postnet_channels=m.postnet_channels,
            postnet_kernel=m.postnet_kernel,
            postnet_layers=m.postnet_layers,
            predictor_blocks=m.predictor_blocks,
            predictor_heads=m.predictor_heads,
            predictor_ff=m.predictor_ff,
            d_acoustic=self.audio.n_mels,
            dropout=m.dropout,
            predictor_positional=m.predictor_positional,
        )

    def to_dict(self) -> dict:
        out = {"seed": self.seed}
        for name in _SECTIONS:
            out[name] = dataclasses.asdict(getattr(self, name))
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """Hash of everything except the seed, so checkpoints stay loadable
        when only the random seed differs."""
        payload = self.to_dict()
        payload.pop("seed")
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def replaced(self, **kwargs) -> "RunConfig":
        return dataclasses.replace(self, **kwargs)


def _build_section(name: str, cls, payload) -> object:
    if not isinstance(payload, dict):
        raise ConfigError(f"section {name!r} must be an object")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(payload) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {name!r}: {sorted(unknown)}")
    try:
        return cls(**payload)
    except ConfigError:
        raise
    except (TypeError, SingaugError) as exc:
        raise ConfigError(f"section {name!r}: {exc}") from None


def config_from_dict(payload: dict) -> RunConfig:
    if not isinstance(payload, dict):
        raise ConfigError("configuration root must be an object")
    unknown = set(payload) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {sorted(unknown)}")
    kwargs = {}
    if "seed" in payload:
        seed = payload["seed"]
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        kwargs["seed"] = seed
    for name, cls in _SECTIONS.items():
        if name in payload:
            kwargs[name] = _build_section(name, cls, payload[name])
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such config file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(payload)


def save_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
