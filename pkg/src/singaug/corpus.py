"""Corpus preparation and manifests.

``prepare_corpus`` turns (song wav, song label) pairs into segmented
phrases with cached features, a phoneme vocabulary, normalization stats,
and a deterministic train/valid/test split, all recorded in a JSON
manifest.  ``augment_corpus`` materializes pitch-shifted copies of the
training phrases next to the originals.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .augment import apply_pitch_augmentation, pa_suffix, shift_support, ShiftPolicy, TrainingPair
from .config import RunConfig
from .dsp import AcousticFeature, AudioBuffer, load_audio, mel_spectrogram, save_audio
from .errors import DataError, RangeError, SingaugError
from .score import (
    MusicScore,
    PhonemeVocab,
    durations_to_frames,
    mean_pitch,
    parse_phrase_label,
    segment_song,
    serialize_phrase_label,
)
from .training import NormStats, Sample, compute_norm_stats, normalize

log = logging.getLogger("singaug")

MANIFEST_NAME = "manifest.json"
VOCAB_NAME = "vocab.json"
STATS_NAME = "stats.json"


@dataclass(frozen=True)
class ManifestEntry:
    phrase_id: str
    wav: str
    lab: str
    feature: str
    n_frames: int
    split: str


@dataclass
class Manifest:
    root: Path
    entries: list[ManifestEntry]
    vocab: PhonemeVocab
    stats: NormStats
    seed: int

    def split(self, name: str) -> list[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def save(self, path=None):
        path = Path(path) if path else self.root / MANIFEST_NAME
        payload = {
            "seed": self.seed,
            "vocab": VOCAB_NAME,
            "stats": STATS_NAME,
            "phrases": [vars(e) for e in self.entries],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Manifest":
        path = Path(path)
        root = path.parent
        try:
            with open(path, encoding="utf-8") as fh:
                payload = json.load(fh)
        except FileNotFoundError:
            raise DataError(f"{path}: no such manifest") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
        entries = [ManifestEntry(**e) for e in payload["phrases"]]
        vocab = PhonemeVocab.load(root / payload["vocab"])
        stats = NormStats.load(root / payload["stats"])
        return cls(root, entries, vocab, stats, int(payload["seed"]))


def split_name(phrase_id: str, seed: int, train_fraction: float,
               valid_fraction: float, all_ids: list[str]) -> str:
    """Deterministic hash-ordered split mirroring the corpus proportions."""
    ordered = sorted(
        all_ids,
        key=lambda i: hashlib.sha256(f"{seed}:{i}".encode()).hexdigest(),
    )
    n = len(ordered)
    n_train = round(train_fraction * n)
    n_valid = round(valid_fraction * n)
    rank = ordered.index(phrase_id)
    if rank < n_train:
        return "train"
    if rank < n_train + n_valid:
        return "valid"
    return "test"


def _phrase_paths(root: Path, phrase_id: str):
    return (root / f"{phrase_id}.wav", root / f"{phrase_id}.lab",
            root / f"{phrase_id}.npy")


def _write_phrase(root: Path, phrase_id: str, pair: TrainingPair,
                  vocab: PhonemeVocab, split: str) -> ManifestEntry:
    wav_path, lab_path, feat_path = _phrase_paths(root, phrase_id)
    save_audio(wav_path, pair.audio)
    lab_path.write_text(serialize_phrase_label(pair.score, vocab), encoding="utf-8")
    np.save(feat_path, pair.feature.mel.astype(np.float32))
    return ManifestEntry(phrase_id, wav_path.name, lab_path.name, feat_path.name,
                         pair.feature.n_frames, split)


def prepare_corpus(corpus_dir, out_dir, config: RunConfig) -> Manifest:
    """Segment songs into phrases, extract features, compute stats, split."""
    corpus_dir = Path(corpus_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    wavs = sorted(corpus_dir.glob("*.wav"))
    if not wavs:
        raise DataError(f"{corpus_dir}: no wav files found")

    # pass 1: vocabulary over every label file
    symbols: set[str] = set()
    songs = []
    failures = []
    for wav_path in wavs:
        lab_path = wav_path.with_suffix(".lab")
        if not lab_path.exists():
            failures.append(f"{wav_path.name}: missing {lab_path.name}")
            continue
        songs.append((wav_path, lab_path))
        for line in lab_path.read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                symbols.add(line.split("\t")[0])
    if not songs:
        raise DataError(
            f"{corpus_dir}: no usable (wav, lab) pairs: {'; '.join(failures)}"
        )
    vocab = PhonemeVocab.from_corpus_symbols(symbols)
    vocab.save(out_dir / VOCAB_NAME)

    # pass 2: segment, slice, extract
    pairs: list[tuple[str, TrainingPair]] = []
    for wav_path, lab_path in songs:
        try:
            song_score = parse_phrase_label(
                lab_path.read_text(encoding="utf-8"), vocab, wav_path.stem
            )
            audio = load_audio(wav_path, target_rate=config.audio.sample_rate)
            phrases = segment_song(song_score.events, config.data.min_gap,
                                   phrase_id_prefix=wav_path.stem)
            for phrase in phrases:
                t0 = phrase.events[0].onset
                t1 = phrase.events[-1].offset
                lo = int(round(t0 * audio.sample_rate))
                hi = min(int(round(t1 * audio.sample_rate)), len(audio))
                clip = AudioBuffer(audio.samples[lo:hi], audio.sample_rate)
                rebased = phrase.rebased()
                feature = mel_spectrogram(clip, config.audio)
                durations = durations_to_frames(
                    rebased, config.audio.frame_shift, feature.n_frames
                )
                pairs.append(
                    (phrase.phrase_id,
                     TrainingPair(rebased, clip, feature, durations))
                )
        except SingaugError as exc:
            failures.append(f"{wav_path.name}: {exc}")
    if failures:
        for message in failures:
            log.warning("prepare: skipped %s", message)
    if not pairs:
        raise DataError(f"{corpus_dir}: every song failed: {'; '.join(failures)}")

    all_ids = [pid for pid, _ in pairs]
    entries = []
    train_features: list[AcousticFeature] = []
    for pid, pair in pairs:
        split = split_name(pid, config.seed, config.data.train_fraction,
                           config.data.valid_fraction, all_ids)
        entries.append(_write_phrase(out_dir, pid, pair, vocab, split))
        if split == "train":
            train_features.append(pair.feature)
    stats = compute_norm_stats(train_features if train_features
                               else [p.feature for _, p in pairs])
    stats.save(out_dir / STATS_NAME)
    manifest = Manifest(out_dir, entries, vocab, stats, config.seed)
    manifest.save()
    return manifest


def load_pair(manifest: Manifest, entry: ManifestEntry,
              config: RunConfig) -> TrainingPair:
    score = parse_phrase_label(
        (manifest.root / entry.lab).read_text(encoding="utf-8"),
        manifest.vocab, entry.phrase_id,
    )
    audio = load_audio(manifest.root / entry.wav, config.audio.sample_rate)
    mel = np.load(manifest.root / entry.feature)
    feature = AcousticFeature(mel, config.audio.frame_shift)
    durations = durations_to_frames(score, config.audio.frame_shift,
                                    feature.n_frames)
    return TrainingPair(score, audio, feature, durations)


def dataset_mean_pitch(manifest: Manifest, config: RunConfig) -> float:
    """Duration-weighted mean pitch over the training split."""
    total_weight = 0.0
    total = 0.0
    for entry in manifest.split("train"):
        score = parse_phrase_label(
            (manifest.root / entry.lab).read_text(encoding="utf-8"),
            manifest.vocab, entry.phrase_id,
        )
        for e in score.events:
            if not e.is_rest:
                total += e.pitch * e.duration
                total_weight += e.duration
    if total_weight == 0:
        raise DataError("training split has no pitched events")
    return total / total_weight


def _augment_seed(seed: int, phrase_id: str, shift: int) -> int:
    digest = hashlib.sha256(f"{seed}:pa:{phrase_id}:{shift}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def augment_corpus(manifest: Manifest, out_dir, config: RunConfig) -> Manifest:
    """Materialize every non-zero shift in the policy window for each
    training phrase; phrases whose transposition leaves the MIDI range are
    logged and skipped."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    policy_kind = config.augment.policy
    mean = dataset_mean_pitch(manifest, config) if policy_kind == "P_ADAPTIVE" else None
    policy = ShiftPolicy(policy_kind, dataset_mean_pitch=mean)

    new_entries = list(manifest.entries)
    if out_dir != manifest.root:
        for entry in manifest.entries:
            for name in (entry.wav, entry.lab, entry.feature):
                data = (manifest.root / name).read_bytes()
                (out_dir / name).write_bytes(data)
    for entry in manifest.split("train"):
        pair = load_pair(manifest, entry, config)
        for shift in shift_support(policy, pair.score):
            if shift == 0:
                continue  # the original already covers it
            shifted_id = f"{entry.phrase_id}{pa_suffix(shift)}"
            try:
                moved = apply_pitch_augmentation(
                    pair, shift, config.audio,
                    seed=_augment_seed(config.seed, entry.phrase_id, shift),
                )
            except (RangeError, SingaugError) as exc:
                log.warning("augment: skipped %s: %s", shifted_id, exc)
                continue
            new_entries.append(
                _write_phrase(out_dir, shifted_id, moved, manifest.vocab, "train")
            )
    manifest.vocab.save(out_dir / VOCAB_NAME)
    manifest.stats.save(out_dir / STATS_NAME)
    augmented = Manifest(out_dir, new_entries, manifest.vocab, manifest.stats,
                         manifest.seed)
    augmented.save()
    return augmented


def build_samples(manifest: Manifest, config: RunConfig,
                  split: str) -> list[Sample]:
    samples = []
    for entry in manifest.split(split):
        pair = load_pair(manifest, entry, config)
        target = normalize(pair.feature.mel, manifest.stats)
        samples.append(
            Sample(entry.phrase_id, pair.score, pair.durations, target)
        )
    return samples
