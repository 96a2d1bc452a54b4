import pytest
from hypothesis import given, strategies as st

from singaug.errors import (
    InfeasibleError,
    ParseError,
    RangeError,
    UndefinedPitchError,
    ValidationError,
)
from singaug.score import (
    FrameDurations,
    MusicScore,
    PhonemeVocab,
    ScoreEvent,
    durations_to_frames,
    mean_pitch,
    parse_phrase_label,
    segment_song,
    serialize_phrase_label,
    transpose_score,
)

VOCAB = PhonemeVocab(["sil", "a", "i", "u"])


def ev(ph, pitch, onset, offset):
    return ScoreEvent(ph, pitch, onset, offset)


class TestParse:
    def test_single_line(self):
        score = parse_phrase_label("a\t60\t0.0\t0.5", VOCAB)
        assert len(score) == 1
        assert score.events[0].pitch == 60
        assert score.events[0].phoneme == VOCAB.id("a")

    def test_two_lines_in_order(self):
        text = "a\t60\t0.0\t0.5\ni\t62\t0.5\t1.0"
        score = parse_phrase_label(text, VOCAB)
        assert [e.onset for e in score.events] == [0.0, 0.5]

    def test_offset_before_onset_rejected(self):
        with pytest.raises(ValidationError):
            parse_phrase_label("a\t60\t0.5\t0.3", VOCAB)

    def test_malformed_line_reports_line_number(self):
        text = "a\t60\t0.0\t0.5\na\t61\t0.5"
        with pytest.raises(ParseError, match="line 2"):
            parse_phrase_label(text, VOCAB)

    def test_non_numeric_pitch(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_phrase_label("a\tsixty\t0.0\t0.5", VOCAB)

    def test_comments_and_blanks_skipped(self):
        text = "# header\n\na\t60\t0.0\t0.5\n"
        assert len(parse_phrase_label(text, VOCAB)) == 1

    def test_overlap_rejected(self):
        text = "a\t60\t0.0\t0.6\ni\t62\t0.5\t1.0"
        with pytest.raises(ValidationError):
            parse_phrase_label(text, VOCAB)

    def test_round_trip_identity(self):
        text = "sil\t0\t0.0\t0.25\na\t60\t0.25\t0.777123\ni\t72\t0.777123\t1.5"
        score = parse_phrase_label(text, VOCAB)
        again = parse_phrase_label(serialize_phrase_label(score, VOCAB), VOCAB)
        assert again == score

    @given(
        st.lists(
            st.tuples(
                st.integers(1, 3),
                st.integers(1, 127),
                st.floats(0.01, 2.0, allow_nan=False),
            ),
            min_size=1,
            max_size=8,
        )
    )
    def test_round_trip_identity_random(self, items):
        t = 0.0
        events = []
        for ph, pitch, dur in items:
            events.append(ScoreEvent(ph, pitch, t, t + dur))
            t += dur
        score = MusicScore(tuple(events), "p")
        again = parse_phrase_label(serialize_phrase_label(score, VOCAB), VOCAB, "p")
        assert again == score


class TestTranspose:
    def test_unit_shift(self):
        score = MusicScore((ev(1, 60, 0.0, 0.5),))
        assert transpose_score(score, 1).events[0].pitch == 61

    def test_round_trip(self):
        score = MusicScore((ev(1, 60, 0.0, 0.5), ev(2, 72, 0.5, 1.0)))
        assert transpose_score(transpose_score(score, 12), -12) == score

    def test_out_of_range(self):
        score = MusicScore((ev(1, 127, 0.0, 0.5),))
        with pytest.raises(RangeError, match="event 0"):
            transpose_score(score, 1)

    def test_rest_untouched(self):
        score = MusicScore((ev(0, 0, 0.0, 0.5), ev(1, 60, 0.5, 1.0)))
        shifted = transpose_score(score, 2)
        assert shifted.events[0].pitch == 0
        assert shifted.events[1].pitch == 62

    def test_shift_into_rest_pitch_rejected(self):
        score = MusicScore((ev(1, 1, 0.0, 0.5),))
        with pytest.raises(RangeError):
            transpose_score(score, -1)

    @given(st.integers(-24, 24))
    def test_round_trip_property(self, k):
        score = MusicScore((ev(1, 60, 0.0, 0.5), ev(0, 0, 0.5, 0.7), ev(2, 64, 0.7, 1.0)))
        if not all(e.is_rest or 1 <= e.pitch + k <= 127 for e in score.events):
            return
        assert transpose_score(transpose_score(score, k), -k) == score


class TestSegment:
    def test_no_split(self):
        events = [ev(1, 60, 0.0, 0.5), ev(2, 62, 0.6, 1.0)]
        assert len(segment_song(events, 0.5)) == 1

    def test_single_split(self):
        events = [ev(1, 60, 0.0, 0.5), ev(2, 62, 1.5, 2.0)]
        phrases = segment_song(events, 0.5)
        assert len(phrases) == 2
        assert len(phrases[0]) == 1 and len(phrases[1]) == 1

    def test_empty(self):
        assert segment_song([], 0.5) == []

    def test_concatenation_preserves_events(self):
        events = [ev(1, 60, i * 1.0, i * 1.0 + 0.4) for i in range(6)]
        phrases = segment_song(events, 0.5)
        flat = [e for p in phrases for e in p.events]
        assert flat == events


class TestDurations:
    def test_exact_division(self):
        score = MusicScore((ev(1, 60, 0.0, 0.5),))
        d = durations_to_frames(score, 0.0125, 40)
        assert d.frames_per_event == (40,)

    def test_earliest_absorbs_remainder(self):
        # independent two-event oracle: equal targets, one leftover frame
        score = MusicScore((ev(1, 60, 0.0, 0.25625), ev(2, 62, 0.25625, 0.5125)))
        target = 0.25625 / 0.0125
        assert target == pytest.approx(20.5)
        d = durations_to_frames(score, 0.0125, 41)
        assert d.frames_per_event == (21, 20)

    def test_floor_case(self):
        score = MusicScore((ev(1, 60, 0.0, 0.5), ev(2, 62, 0.5, 1.0)))
        d = durations_to_frames(score, 0.0125, 2)
        assert d.frames_per_event == (1, 1)

    def test_infeasible(self):
        score = MusicScore((ev(1, 60, 0.0, 0.5), ev(2, 62, 0.5, 1.0)))
        with pytest.raises(InfeasibleError):
            durations_to_frames(score, 0.0125, 1)

    @given(
        st.lists(st.floats(0.02, 1.0), min_size=1, max_size=10),
        st.integers(0, 50),
    )
    def test_sum_and_minimum_property(self, durs, extra):
        t = 0.0
        events = []
        for dur in durs:
            events.append(ev(1, 60, t, t + dur))
            t += dur
        score = MusicScore(tuple(events))
        total = len(durs) + extra
        d = durations_to_frames(score, 0.0125, total)
        assert sum(d.frames_per_event) == total
        assert all(n >= 1 for n in d.frames_per_event)


class TestMeanPitch:
    def test_single_event(self):
        assert mean_pitch(MusicScore((ev(1, 63, 0.0, 0.5),))) == 63.0

    def test_equal_durations(self):
        score = MusicScore((ev(1, 60, 0.0, 0.5), ev(2, 62, 0.5, 1.0)))
        assert mean_pitch(score) == pytest.approx(61.0)

    def test_duration_weighted(self):
        # oracle: (60*0.1 + 72*0.3) / 0.4 = 69.0
        score = MusicScore((ev(1, 60, 0.0, 0.1), ev(2, 72, 0.1, 0.4)))
        assert mean_pitch(score) == pytest.approx(69.0)

    def test_rests_excluded(self):
        score = MusicScore((ev(0, 0, 0.0, 5.0), ev(1, 70, 5.0, 5.5)))
        assert mean_pitch(score) == pytest.approx(70.0)

    def test_all_rest(self):
        with pytest.raises(UndefinedPitchError):
            mean_pitch(MusicScore((ev(0, 0, 0.0, 0.5),)))


class TestInvariants:
    def test_frame_durations_validates(self):
        with pytest.raises(ValidationError):
            FrameDurations((0, 2), 2)
        with pytest.raises(ValidationError):
            FrameDurations((1, 2), 4)

    def test_score_needs_events(self):
        with pytest.raises(ValidationError):
            MusicScore(())

    def test_vocab_round_trip(self, tmp_path):
        VOCAB.save(tmp_path / "vocab.json")
        assert PhonemeVocab.load(tmp_path / "vocab.json") == VOCAB
