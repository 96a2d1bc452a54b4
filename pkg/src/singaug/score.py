"""Music-score handling: label parsing, transposition, segmentation, and
conversion of note timings to frame-level durations.

A score is a sequence of non-overlapping timed events, each carrying a
phoneme token id and a MIDI pitch.  Pitch 0 and phoneme id 0 are reserved
for rest/silence; usable note pitches live in [1, 127].

Label file format (UTF-8, one event per line):

    phoneme<TAB>midi_pitch<TAB>onset_sec<TAB>offset_sec

Lines starting with ``#`` are comments.  Phonemes appear as symbols in the
file and are resolved to integer ids through a :class:`PhonemeVocab`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    InfeasibleError,
    ParameterError,
    ParseError,
    RangeError,
    UndefinedPitchError,
    ValidationError,
    VocabularyError,
)

REST_SYMBOL = "sil"
REST_PHONEME_ID = 0
REST_PITCH = 0


class PhonemeVocab:
    """Bidirectional phoneme symbol/id mapping; id 0 is always the rest."""

    def __init__(self, symbols):
        symbols = list(symbols)
        if not symbols or symbols[0] != REST_SYMBOL:
            raise ValidationError(f"vocabulary must start with {REST_SYMBOL!r}")
        if len(set(symbols)) != len(symbols):
            raise ValidationError("duplicate phoneme symbols in vocabulary")
        self._symbols = tuple(symbols)
        self._ids = {s: i for i, s in enumerate(symbols)}

    @classmethod
    def from_corpus_symbols(cls, symbols):
        """Build a deterministic vocabulary: rest first, the rest sorted."""
        extra = sorted(set(symbols) - {REST_SYMBOL})
        return cls([REST_SYMBOL] + extra)

    def __len__(self):
        return len(self._symbols)

    def __eq__(self, other):
        return isinstance(other, PhonemeVocab) and self._symbols == other._symbols

    def id(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise VocabularyError(f"unknown phoneme symbol {symbol!r}") from None

    def symbol(self, phoneme_id: int) -> str:
        if not 0 <= phoneme_id < len(self._symbols):
            raise VocabularyError(f"phoneme id {phoneme_id} out of range")
        return self._symbols[phoneme_id]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(list(self._symbols), fh, ensure_ascii=False, indent=0)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))


@dataclass(frozen=True)
class ScoreEvent:
    """One timed note or rest: phoneme token id, MIDI pitch, onset/offset."""

    phoneme: int
    pitch: int
    onset: float
    offset: float

    def __post_init__(self):
        if self.phoneme < 0:
            raise ValidationError(f"negative phoneme id {self.phoneme}")
        if not 0 <= self.pitch <= 127:
            raise ValidationError(f"pitch {self.pitch} outside [0, 127]")
        if self.onset < 0:
            raise ValidationError(f"negative onset {self.onset}")
        if not self.offset > self.onset:
            raise ValidationError(
                f"offset {self.offset} must exceed onset {self.onset}"
            )

    @property
    def is_rest(self) -> bool:
        return self.pitch == REST_PITCH

    @property
    def duration(self) -> float:
        return self.offset - self.onset


@dataclass(frozen=True)
class MusicScore:
    """An ordered, non-overlapping event sequence for one singing phrase."""

    events: tuple[ScoreEvent, ...]
    phrase_id: str = "phrase"

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if len(self.events) < 1:
            raise ValidationError("a score needs at least one event")
        for prev, cur in zip(self.events, self.events[1:]):
            if cur.onset < prev.onset:
                raise ValidationError("events not sorted by onset")
            if cur.onset < prev.offset:
                raise ValidationError(
                    f"overlapping events at onset {cur.onset}"
                )

    def __len__(self):
        return len(self.events)

    @property
    def phonemes(self):
        return [e.phoneme for e in self.events]

    @property
    def pitches(self):
        return [e.pitch for e in self.events]

    def rebased(self, phrase_id=None) -> "MusicScore":
        """Shift timings so the first event starts at t=0."""
        t0 = self.events[0].onset
        events = tuple(
            ScoreEvent(e.phoneme, e.pitch, e.onset - t0, e.offset - t0)
            for e in self.events
        )
        return MusicScore(events, phrase_id or self.phrase_id)


@dataclass(frozen=True)
class FrameDurations:
    """Per-event frame counts used by the length regulator."""

    frames_per_event: tuple[int, ...]
    total_frames: int

    def __post_init__(self):
        object.__setattr__(
            self, "frames_per_event", tuple(int(n) for n in self.frames_per_event)
        )
        if any(n < 1 for n in self.frames_per_event):
            raise ValidationError("every event needs at least one frame")
        if sum(self.frames_per_event) != self.total_frames:
            raise ValidationError("frame counts do not sum to total_frames")

    def __len__(self):
        return len(self.frames_per_event)


def parse_phrase_label(text: str, vocab: PhonemeVocab, phrase_id="phrase") -> MusicScore:
    """Parse one phrase label file into a :class:`MusicScore`.

    Malformed lines raise :class:`ParseError` with their line number;
    semantic problems (offset <= onset, overlap) raise
    :class:`ValidationError`.
    """
    events = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ParseError(
                f"expected 4 tab-separated fields, got {len(parts)}", line_no
            )
        symbol, pitch_s, onset_s, offset_s = parts
        try:
            pitch = int(pitch_s)
            onset = float(onset_s)
            offset = float(offset_s)
        except ValueError as exc:
            raise ParseError(str(exc), line_no) from None
        events.append(ScoreEvent(vocab.id(symbol), pitch, onset, offset))
    return MusicScore(tuple(events), phrase_id)


def _format_seconds(value: float) -> str:
    # exact round trip with at least 4 decimals
    return np.format_float_positional(value, unique=True, min_digits=4)


def serialize_phrase_label(score: MusicScore, vocab: PhonemeVocab) -> str:
    lines = [
        "\t".join(
            (
                vocab.symbol(e.phoneme),
                str(e.pitch),
                _format_seconds(e.onset),
                _format_seconds(e.offset),
            )
        )
        for e in score.events
    ]
    return "\n".join(lines) + "\n"


def transpose_score(score: MusicScore, semitones: int) -> MusicScore:
    """Shift every non-rest pitch by ``semitones``; rests and timings stay."""
    events = []
    for idx, e in enumerate(score.events):
        if e.is_rest:
            events.append(e)
            continue
        pitch = e.pitch + semitones
        if not 1 <= pitch <= 127:
            raise RangeError(
                f"event {idx} of {score.phrase_id!r}: pitch {e.pitch} "
                f"{semitones:+d} leaves [1, 127]"
            )
        events.append(ScoreEvent(e.phoneme, pitch, e.onset, e.offset))
    return MusicScore(tuple(events), score.phrase_id)


def segment_song(events, min_gap: float, phrase_id_prefix="phrase"):
    """Split an event list into phrases at silences of at least ``min_gap``.

    Events must already be sorted by onset.  Concatenating the returned
    phrases reproduces the input exactly; an empty input yields no phrases.
    """
    if min_gap <= 0:
        raise ParameterError("min_gap must be positive")
    events = list(events)
    if not events:
        return []
    phrases = []
    start = 0
    for i in range(1, len(events)):
        if events[i].onset - events[i - 1].offset >= min_gap:
            phrases.append(events[start:i])
            start = i
    phrases.append(events[start:])
    return [
        MusicScore(tuple(chunk), f"{phrase_id_prefix}_{i:03d}")
        for i, chunk in enumerate(phrases)
    ]


def durations_to_frames(
    score: MusicScore, frame_shift: float, total_frames: int
) -> FrameDurations:
    """Allocate ``total_frames`` frames to events, one frame minimum each.

    Each event starts from round(duration/frame_shift) (min 1); leftover
    frames are then granted one at a time in descending fractional-remainder
    order (ties to the earlier event), or reclaimed in the mirrored order
    when rounding overshot.
    """
    if frame_shift <= 0:
        raise ParameterError("frame_shift must be positive")
    n = len(score)
    if total_frames < n:
        raise InfeasibleError(
            f"{total_frames} frames cannot cover {n} events at 1 frame each"
        )
    targets = [e.duration / frame_shift for e in score.events]
    base = [max(1, round(t)) for t in targets]
    residual = total_frames - sum(base)
    if residual > 0:
        order = sorted(range(n), key=lambda i: (-(targets[i] - base[i]), i))
        k = 0
        while residual > 0:
            base[order[k % n]] += 1
            residual -= 1
            k += 1
    elif residual < 0:
        order = sorted(range(n), key=lambda i: (targets[i] - base[i], -i))
        k = 0
        while residual < 0:
            i = order[k % n]
            if base[i] > 1:
                base[i] -= 1
                residual += 1
            k += 1
    return FrameDurations(tuple(base), total_frames)


def mean_pitch(score: MusicScore) -> float:
    """Duration-weighted mean MIDI pitch over non-rest events."""
    weights = [(e.duration, e.pitch) for e in score.events if not e.is_rest]
    if not weights:
        raise UndefinedPitchError(
            f"{score.phrase_id!r} has no non-rest events"
        )
    total = sum(w for w, _ in weights)
    return sum(w * p for w, p in weights) / total


def expand_labels(score: MusicScore, durations: FrameDurations):
    """Frame-level (phoneme, pitch) label arrays via the duration map."""
    if len(durations) != len(score):
        raise ValidationError(
            f"durations cover {len(durations)} events, score has {len(score)}"
        )
    ph = np.repeat(np.asarray(score.phonemes, dtype=np.int64), durations.frames_per_event)
    pi = np.repeat(np.asarray(score.pitches, dtype=np.int64), durations.frames_per_event)
    return ph, pi
