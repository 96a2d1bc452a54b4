"""Command-line interface.

Subcommands: ``prepare`` (segment + featurize a corpus), ``augment``
(materialize pitch-shifted copies), ``train``, ``synth``, ``eval``.
Exit codes: 0 success, 1 usage/config problem, 2 data problem,
3 training divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config, save_config
from .corpus import Manifest, augment_corpus, build_samples, load_pair, prepare_corpus
from .dsp import AcousticFeature, griffin_lim, save_audio
from .errors import (
    CompatibilityError,
    ConfigError,
    DivergenceError,
    ParameterError,
    SingaugError,
)
from .augment import MixupConfig
from .metrics import EvalPair, evaluate
from .nn import AcousticModel, PredictorModule, acoustic_forward
from .score import durations_to_frames, parse_phrase_label
from .training import (
    LossWeights,
    Trainer,
    TrainSettings,
    denormalize,
    load_checkpoint,
    stream,
)

log = logging.getLogger("singaug")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_DIVERGED = 3


class UsageError(SingaugError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map usage to 1
        raise UsageError(message)


def _load_run_config(args) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        config = config.replaced(seed=args.seed)
    return config


def _build_models(config: RunConfig, vocab_size: int):
    model_config = config.model_config(vocab_size)
    model = AcousticModel(model_config, stream(config.seed, "model_init"))
    predictor = PredictorModule(model_config, stream(config.seed, "predictor_init"))
    return model, predictor


def cmd_prepare(args) -> int:
    config = _load_run_config(args)
    manifest = prepare_corpus(args.corpus, args.out, config)
    counts = {s: len(manifest.split(s)) for s in ("train", "valid", "test")}
    log.info("prepared %d phrases: %s", len(manifest.entries), counts)
    save_config(config, Path(args.out) / "config.json")
    return EXIT_OK


def cmd_augment(args) -> int:
    config = _load_run_config(args)
    manifest = Manifest.load(args.manifest)
    out_dir = Path(args.out) if args.out else manifest.root
    before = len(manifest.entries)
    augmented = augment_corpus(manifest, out_dir, config)
    log.info(
        "augmented with policy %s: %d -> %d items",
        config.augment.policy, before, len(augmented.entries),
    )
    return EXIT_OK


def _make_trainer(config: RunConfig, manifest: Manifest, run_dir: Path) -> Trainer:
    model, predictor = _build_models(config, len(manifest.vocab))
    weights = LossWeights(
        w_svs=config.loss.w_svs,
        w_si=config.loss.w_si if config.toggles.cc else 0.0,
        w_pd=config.loss.w_pd if config.toggles.cc else 0.0,
        w_mix=config.mixup.w_mix if config.toggles.ma else 0.0,
    )
    settings = TrainSettings(
        epochs=config.training.epochs,
        batch_size=config.training.batch_size,
        base_lr=config.optimizer.base_lr,
        warmup_steps=config.optimizer.warmup_steps,
        grad_clip=config.optimizer.grad_clip,
        checkpoint_every=config.training.checkpoint_every,
        keep_checkpoints=config.training.keep_checkpoints,
        ma_enabled=config.toggles.ma,
        cc_enabled=config.toggles.cc,
    )
    return Trainer(
        model,
        predictor,
        build_samples(manifest, config, "train"),
        build_samples(manifest, config, "valid"),
        weights,
        MixupConfig(config.mixup.alpha, config.mixup.proportion, config.mixup.w_mix),
        settings,
        seed=config.seed,
        run_dir=run_dir,
        config_hash=config.config_hash(),
    )


def cmd_train(args) -> int:
    config = _load_run_config(args)
    manifest = Manifest.load(args.manifest)
    run_dir = Path(args.run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    save_config(config, run_dir / "config.json")
    trainer = _make_trainer(config, manifest, run_dir)
    if args.resume:
        latest = trainer.latest_checkpoint()
        if latest is not None:
            meta = trainer.restore(latest)
            log.info("resumed from %s at epoch %d", latest.name, meta["epoch"])
    try:
        result = trainer.run()
    except DivergenceError as exc:
        log.error("training diverged: %s (last-good checkpoint retained)", exc)
        return EXIT_DIVERGED
    log.info("finished %d epochs, best validation L_svs %.6f",
             result["epochs"], result["best_val"])
    return EXIT_OK


def _synthesize_phrase(score, config: RunConfig, manifest: Manifest, model):
    t0 = score.events[0].onset
    t1 = score.events[-1].offset
    total_frames = max(len(score),
                       int(round((t1 - t0) / config.audio.frame_shift)))
    durations = durations_to_frames(score.rebased(), config.audio.frame_shift,
                                    total_frames)
    y_hat, _ = acoustic_forward(score.rebased(), durations, model)
    mel = denormalize(y_hat.data, manifest.stats)
    return AcousticFeature(mel, config.audio.frame_shift)


def cmd_synth(args) -> int:
    config = _load_run_config(args)
    manifest = Manifest.load(args.manifest)
    model, predictor = _build_models(config, len(manifest.vocab))
    load_checkpoint(args.checkpoint, model, predictor, None,
                    expected_hash=config.config_hash())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    score_paths = []
    for item in args.scores:
        path = Path(item)
        score_paths.extend(sorted(path.glob("*.lab")) if path.is_dir() else [path])
    if not score_paths:
        raise UsageError("no label files given")
    for lab_path in score_paths:
        score = parse_phrase_label(lab_path.read_text(encoding="utf-8"),
                                   manifest.vocab, lab_path.stem)
        feature = _synthesize_phrase(score, config, manifest, model)
        np.save(out_dir / f"{lab_path.stem}.npy", feature.mel)
        audio = griffin_lim(feature, config.synth.griffin_lim_iterations,
                            seed=config.seed, params=config.audio)
        save_audio(out_dir / f"{lab_path.stem}.wav", audio)
        log.info("synthesized %s (%d frames)", lab_path.stem, feature.n_frames)
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load_run_config(args)
    manifest = Manifest.load(args.manifest)
    test_entries = manifest.split("test")
    if not test_entries:
        raise UsageError("manifest has no test split")
    model = None
    if not args.oracle:
        model, predictor = _build_models(config, len(manifest.vocab))
        load_checkpoint(args.checkpoint, model, predictor, None,
                        expected_hash=config.config_hash())
    pairs = []
    for entry in test_entries:
        pair = load_pair(manifest, entry, config)
        if args.oracle:
            # identity pipeline check: ground truth plays both roles
            syn_feature = pair.feature
            syn_audio = pair.audio
        else:
            y_hat, _ = acoustic_forward(pair.score, pair.durations, model)
            mel = denormalize(y_hat.data, manifest.stats)
            syn_feature = AcousticFeature(mel, config.audio.frame_shift)
            syn_audio = griffin_lim(syn_feature, config.synth.griffin_lim_iterations,
                                    seed=config.seed, params=config.audio)
        pairs.append(EvalPair(entry.phrase_id, pair.audio, syn_audio,
                              pair.feature, syn_feature))
    summary, per_pair = evaluate(pairs)
    report = {"summary": vars(summary), "pairs": per_pair}
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")
    log.info("evaluation summary: %s", report["summary"])
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="singaug", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a run-config JSON file")
    common.add_argument("--seed", type=int, help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", parents=[common],
                       help="segment songs and extract features")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("augment", parents=[common],
                       help="materialize pitch-shifted training copies")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", help="output directory (defaults to the manifest's)")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("train", parents=[common], help="train the acoustic model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--resume", action="store_true",
                   help="continue from the newest checkpoint in the run dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("synth", parents=[common], help="synthesize label files")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True,
                   help="manifest supplying vocabulary and normalization stats")
    p.add_argument("--out", required=True)
    p.add_argument("scores", nargs="+", help="label files or directories")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", parents=[common], help="evaluate on the test split")
    p.add_argument("--checkpoint")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="where to write eval_report.json")
    p.add_argument("--oracle", action="store_true",
                   help="score ground-truth features against themselves")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "eval" and not args.oracle and not args.checkpoint:
            raise UsageError("eval needs --checkpoint unless --oracle is given")
        return args.func(args)
    except (UsageError, ConfigError, ParameterError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except DivergenceError as exc:
        log.error("%s", exc)
        return EXIT_DIVERGED
    except SingaugError as exc:
        log.error("%s", exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
