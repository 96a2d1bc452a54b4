# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: frame-wise normalized autocorrelation and
pitch-mark placement.  Semantics match ``fallback.py``."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

DEF TINY = 1e-20


def nccf_frames(frames, int corr_win, int min_lag, int max_lag):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] fr = np.ascontiguousarray(frames, dtype=np.float64)
    cdef int n_frames = fr.shape[0]
    cdef int frame_len = fr.shape[1]
    if frame_len < corr_win + max_lag:
        raise ValueError("frame length too short for corr_win + max_lag")
    cdef int n_lags = max_lag - min_lag + 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n_frames, n_lags), dtype=np.float64)
    cdef double[:, ::1] x = fr
    cdef double[:, ::1] r = out
    cdef int f, j, i, lag
    cdef double e0, e1, num, denom
    for f in range(n_frames):
        e0 = 0.0
        for i in range(corr_win):
            e0 += x[f, i] * x[f, i]
        for j in range(n_lags):
            lag = min_lag + j
            num = 0.0
            e1 = 0.0
            for i in range(corr_win):
                num += x[f, i] * x[f, i + lag]
                e1 += x[f, i + lag] * x[f, i + lag]
            denom = sqrt(e0 * e1)
            if denom > TINY:
                r[f, j] = num / denom
    return out


def corr_at_lag(frames, lags, int corr_win):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] fr = np.ascontiguousarray(frames, dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] lg = np.ascontiguousarray(lags, dtype=np.int64)
    cdef int n_frames = fr.shape[0]
    cdef int frame_len = fr.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n_frames, dtype=np.float64)
    cdef double[:, ::1] x = fr
    cdef double[::1] r = out
    cdef int f, i, lag
    cdef double e0, e1, num, denom
    for f in range(n_frames):
        lag = <int>lg[f]
        if lag <= 0 or lag + corr_win > frame_len:
            continue
        e0 = 0.0
        e1 = 0.0
        num = 0.0
        for i in range(corr_win):
            e0 += x[f, i] * x[f, i]
            e1 += x[f, i + lag] * x[f, i + lag]
            num += x[f, i] * x[f, i + lag]
        denom = sqrt(e0 * e1)
        if denom > TINY:
            r[f] = num / denom
    return out


def pitch_marks(freq, double fs):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] fq = np.ascontiguousarray(freq, dtype=np.float64)
    cdef int n = fq.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] buf = np.empty(n, dtype=np.int64)
    cdef double[::1] f = fq
    cdef cnp.int64_t[::1] m = buf
    cdef double phase = 1.0
    cdef double inv_fs = 1.0 / fs
    cdef int i, count = 0
    for i in range(n):
        if f[i] <= 0.0:
            phase = 1.0
            continue
        phase += f[i] * inv_fs
        if phase >= 1.0:
            m[count] = i
            count += 1
            phase -= 1.0
    return buf[:count].copy()
