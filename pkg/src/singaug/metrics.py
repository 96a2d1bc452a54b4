"""Objective evaluation: mel-cepstral distortion, F0-based measures, and
voicing agreement over (reference, synthesized) pairs.

F0-dependent metrics are computed on mutually-voiced frames only, with the
voiced/unvoiced disagreement reported separately; when no frames are
mutually voiced those metrics are reported as absent (None), never as 0.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .dsp import AcousticFeature, AudioBuffer, estimate_f0, hz_to_midi, mel_cepstra
from .dsp.pitch import F0Track
from .errors import ParameterError, ShapeError

MCD_CONST = 10.0 / math.log(10.0)
DEFAULT_CEPSTRAL_ORDER = 24


@dataclass(frozen=True)
class EvalPair:
    """Audio and features for one reference/synthesis comparison."""

    pair_id: str
    ref_audio: AudioBuffer
    syn_audio: AudioBuffer
    ref_feature: AcousticFeature
    syn_feature: AcousticFeature


@dataclass(frozen=True)
class MetricReport:
    mcd: float | None
    lf0_rmse: float | None
    f0_corr: float | None
    st_acc: float | None
    vuv_err: float | None
    n_frames_voiced_both: int

    def __post_init__(self):
        if self.st_acc is not None and not 0.0 <= self.st_acc <= 100.0:
            raise ShapeError("st_acc must be a percentage")
        if self.vuv_err is not None and not 0.0 <= self.vuv_err <= 100.0:
            raise ShapeError("vuv_err must be a percentage")
        if self.f0_corr is not None and not -1.0 - 1e-9 <= self.f0_corr <= 1.0 + 1e-9:
            raise ShapeError("f0_corr must lie in [-1, 1]")


def mcd(ref_cep: np.ndarray, syn_cep: np.ndarray) -> float:
    """Mean over frames of (10/ln10) * sqrt(2 * sum_d (c_d - c'_d)^2), dB."""
    ref_cep = np.asarray(ref_cep, dtype=np.float64)
    syn_cep = np.asarray(syn_cep, dtype=np.float64)
    if ref_cep.shape != syn_cep.shape:
        raise ShapeError(f"cepstra shapes differ: {ref_cep.shape} vs {syn_cep.shape}")
    diff2 = ((ref_cep - syn_cep) ** 2).sum(axis=1)
    return float(np.mean(MCD_CONST * np.sqrt(2.0 * diff2)))


def f0_metrics(ref: F0Track, syn: F0Track):
    """(lf0_rmse, f0_corr, st_acc, vuv_err, n_mutually_voiced).

    vuv_err covers all frames; the other three only mutually-voiced frames
    and come back as None when there are none.
    """
    if len(ref) != len(syn):
        raise ShapeError(f"track lengths differ: {len(ref)} vs {len(syn)}")
    vuv_err = float(np.mean(ref.voiced != syn.voiced) * 100.0)
    both = ref.voiced & syn.voiced
    n_both = int(both.sum())
    if n_both == 0:
        return None, None, None, vuv_err, 0
    f_ref = ref.f0_hz[both]
    f_syn = syn.f0_hz[both]
    lf0_rmse = float(np.sqrt(np.mean((np.log(f_ref) - np.log(f_syn)) ** 2)))
    f0_corr = _pearson(f_ref, f_syn)
    midi_ref = np.round(69.0 + 12.0 * np.log2(f_ref / 440.0))
    midi_syn = np.round(69.0 + 12.0 * np.log2(f_syn / 440.0))
    st_acc = float(np.mean(midi_ref == midi_syn) * 100.0)
    return lf0_rmse, f0_corr, st_acc, vuv_err, n_both


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        return None
    return float((xc @ yc) / denom)


def evaluate_pair(pair: EvalPair, cepstral_order: int = DEFAULT_CEPSTRAL_ORDER):
    """Raw per-pair measurements used both standalone and for aggregation."""
    frames = min(pair.ref_feature.n_frames, pair.syn_feature.n_frames)
    ref_cep = mel_cepstra(pair.ref_feature, cepstral_order)[:frames]
    syn_cep = mel_cepstra(pair.syn_feature, cepstral_order)[:frames]
    pair_mcd = mcd(ref_cep, syn_cep)

    ref_track = estimate_f0(pair.ref_audio)
    syn_track = estimate_f0(pair.syn_audio)
    n = min(len(ref_track), len(syn_track))
    ref_track = F0Track(ref_track.f0_hz[:n], ref_track.voiced[:n], ref_track.frame_shift)
    syn_track = F0Track(syn_track.f0_hz[:n], syn_track.voiced[:n], syn_track.frame_shift)
    lf0_rmse, f0_corr, st_acc, vuv_err, n_both = f0_metrics(ref_track, syn_track)
    return {
        "report": MetricReport(pair_mcd, lf0_rmse, f0_corr, st_acc, vuv_err, n_both),
        "mcd_frames": frames,
        "vuv_frames": n,
        "ref_track": ref_track,
        "syn_track": syn_track,
    }


def evaluate(pairs: list[EvalPair], cepstral_order: int = DEFAULT_CEPSTRAL_ORDER):
    """Frame-weighted corpus summary plus the per-pair breakdown.

    Returns (summary: MetricReport, per_pair: list of dicts whose keys are
    exactly the MetricReport fields plus ``pair_id``).
    """
    if not pairs:
        raise ParameterError("evaluate needs at least one pair")
    per_pair = []
    mcd_num = mcd_den = 0.0
    lf0_sq_sum = 0.0
    st_hits = 0.0
    voiced_total = 0
    vuv_num = vuv_den = 0.0
    pooled_ref: list[np.ndarray] = []
    pooled_syn: list[np.ndarray] = []
    for pair in pairs:
        result = evaluate_pair(pair, cepstral_order)
        report: MetricReport = result["report"]
        per_pair.append({"pair_id": pair.pair_id, **asdict(report)})
        mcd_num += report.mcd * result["mcd_frames"]
        mcd_den += result["mcd_frames"]
        vuv_num += report.vuv_err * result["vuv_frames"]
        vuv_den += result["vuv_frames"]
        if report.n_frames_voiced_both:
            both = result["ref_track"].voiced & result["syn_track"].voiced
            f_ref = result["ref_track"].f0_hz[both]
            f_syn = result["syn_track"].f0_hz[both]
            lf0_sq_sum += float(((np.log(f_ref) - np.log(f_syn)) ** 2).sum())
            st_hits += report.st_acc / 100.0 * report.n_frames_voiced_both
            voiced_total += report.n_frames_voiced_both
            pooled_ref.append(f_ref)
            pooled_syn.append(f_syn)
    if voiced_total:
        lf0_rmse = float(np.sqrt(lf0_sq_sum / voiced_total))
        st_acc = 100.0 * st_hits / voiced_total
        f0_corr = _pearson(np.concatenate(pooled_ref), np.concatenate(pooled_syn))
    else:
        lf0_rmse = st_acc = f0_corr = None
    summary = MetricReport(
        mcd=mcd_num / mcd_den if mcd_den else None,
        lf0_rmse=lf0_rmse,
        f0_corr=f0_corr,
        st_acc=st_acc,
        vuv_err=vuv_num / vuv_den if vuv_den else None,
        n_frames_voiced_both=voiced_total,
    )
    return summary, per_pair
