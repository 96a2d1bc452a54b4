"""Pure numpy/Python implementations of the hot DSP kernels.

These mirror the compiled Cython kernels in ``_core.pyx``.  ``pitch_marks``
is an exact sequential port (bit-identical output); the correlation kernels
use vectorised numpy reductions and agree with the compiled versions to
floating-point roundoff (~1e-10 relative).
"""

import numpy as np

_TINY = 1e-20


def nccf_frames(frames, corr_win, min_lag, max_lag):
    """Normalized cross-correlation of each frame against itself.

    frames: (F, L) float64 with L >= corr_win + max_lag.
    Returns (F, max_lag - min_lag + 1) with values ~ [-1, 1]; entries where
    either energy term underflows are 0.
    """
    frames = np.asarray(frames, dtype=np.float64)
    n_frames, frame_len = frames.shape
    if frame_len < corr_win + max_lag:
        raise ValueError("frame length too short for corr_win + max_lag")
    n_lags = max_lag - min_lag + 1
    base = frames[:, :corr_win]
    e0 = np.einsum("fi,fi->f", base, base)
    out = np.zeros((n_frames, n_lags), dtype=np.float64)
    for j in range(n_lags):
        lag = min_lag + j
        seg = frames[:, lag : lag + corr_win]
        num = np.einsum("fi,fi->f", base, seg)
        e1 = np.einsum("fi,fi->f", seg, seg)
        denom = np.sqrt(e0 * e1)
        good = denom > _TINY
        out[good, j] = num[good] / denom[good]
    return out


def corr_at_lag(frames, lags, corr_win):
    """Normalized autocorrelation of each frame at one per-frame lag.

    lags: (F,) int64; entries <= 0 produce 0 (unvoiced marker).
    """
    frames = np.asarray(frames, dtype=np.float64)
    lags = np.asarray(lags, dtype=np.int64)
    n_frames, frame_len = frames.shape
    out = np.zeros(n_frames, dtype=np.float64)
    for f in range(n_frames):
        lag = int(lags[f])
        if lag <= 0 or lag + corr_win > frame_len:
            continue
        base = frames[f, :corr_win]
        seg = frames[f, lag : lag + corr_win]
        denom = np.sqrt(np.dot(base, base) * np.dot(seg, seg))
        if denom > _TINY:
            out[f] = np.dot(base, seg) / denom
    return out


def pitch_marks(freq, fs):
    """Pulse positions from per-sample instantaneous frequency (Hz).

    freq: (N,) float64, 0 on unvoiced samples.  Phase accumulates by
    freq/fs per voiced sample and resets on unvoiced gaps; a mark is
    emitted on every wrap, including one at each voiced-region start.
    """
    freq = np.asarray(freq, dtype=np.float64)
    marks = []
    phase = 1.0
    inv_fs = 1.0 / float(fs)
    for n in range(freq.shape[0]):
        f = freq[n]
        if f <= 0.0:
            phase = 1.0
            continue
        phase += f * inv_fs
        if phase >= 1.0:
            marks.append(n)
            phase -= 1.0
    return np.asarray(marks, dtype=np.int64)
