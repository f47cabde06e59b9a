"""Short-time objective intelligibility (STOI).

Fixed pipeline: resample to 10 kHz, drop frames more than 40 dB below the
loudest clean frame, Hann STFT with 256-sample frames hopped by 128 (512-point
FFT), 15 one-third-octave bands from 150 Hz, 30-frame analysis segments with
per-band normalization and a -15 dB signal-to-distortion clipping bound, and
a final mean of per-band per-segment correlations. Scores lie in [0, 1].
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import resample_poly

from .stft import periodic_hann

STOI_RATE = 10000
FRAME = 256
HOP = 128
N_FFT = 512
N_BANDS = 15
LOWEST_CENTER = 150.0
SEGMENT = 30
DYN_RANGE_DB = 40.0
CLIP_DB = -15.0


class StoiError(ValueError):
    """Signal too short or too silent for a STOI score."""


def _resample(x: np.ndarray, sample_rate: int) -> np.ndarray:
    if sample_rate == STOI_RATE:
        return x
    g = math.gcd(int(sample_rate), STOI_RATE)
    return resample_poly(x, STOI_RATE // g, sample_rate // g)


def _frames(x: np.ndarray, window: np.ndarray) -> np.ndarray:
    n = (len(x) - FRAME) // HOP + 1
    if n < 1:
        raise StoiError("signal shorter than one analysis frame")
    view = np.lib.stride_tricks.sliding_window_view(x, FRAME)[::HOP][:n]
    return view * window


def _remove_silent_frames(clean: np.ndarray, est: np.ndarray):
    """Keep only frames whose clean energy is within 40 dB of the loudest
    frame; both signals are rebuilt from the kept frames by overlap-add."""
    window = periodic_hann(FRAME)
    clean_frames = _frames(clean, window)
    est_frames = _frames(est, window)
    norms = np.linalg.norm(clean_frames, axis=1)
    if norms.max() == 0.0:
        raise StoiError("clean signal is entirely silent")
    energies = 20.0 * np.log10(norms + 1e-300)
    mask = energies > energies.max() - DYN_RANGE_DB
    clean_kept = clean_frames[mask]
    est_kept = est_frames[mask]
    n = clean_kept.shape[0]
    out_len = (n - 1) * HOP + FRAME
    clean_out = np.zeros(out_len)
    est_out = np.zeros(out_len)
    for i in range(n):
        sl = slice(i * HOP, i * HOP + FRAME)
        clean_out[sl] += clean_kept[i]
        est_out[sl] += est_kept[i]
    return clean_out, est_out


def _third_octave_matrix(sample_rate: int) -> np.ndarray:
    centers = LOWEST_CENTER * 2.0 ** (np.arange(N_BANDS) / 3.0)
    lowers = centers * 2.0 ** (-1.0 / 6.0)
    uppers = centers * 2.0 ** (1.0 / 6.0)
    freqs = np.fft.rfftfreq(N_FFT, d=1.0 / sample_rate)
    return ((freqs >= lowers[:, np.newaxis]) & (freqs < uppers[:, np.newaxis])).astype(float)


def _band_envelopes(x: np.ndarray, obm: np.ndarray) -> np.ndarray:
    window = periodic_hann(FRAME)
    frames = _frames(x, window)
    spec = np.fft.rfft(frames, n=N_FFT, axis=1)
    power = np.abs(spec) ** 2
    return np.sqrt(obm @ power.T)  # [bands x frames]


def stoi(clean, est, sample_rate: int) -> float:
    """STOI score of est against clean, both single-channel at sample_rate."""
    clean = np.asarray(clean, dtype=np.float64)
    est = np.asarray(est, dtype=np.float64)
    if clean.shape != est.shape or clean.ndim != 1:
        raise ValueError("clean and est must be equal-length 1-D signals")
    clean = _resample(clean, sample_rate)
    est = _resample(est, sample_rate)
    clean, est = _remove_silent_frames(clean, est)

    obm = _third_octave_matrix(STOI_RATE)
    x = _band_envelopes(clean, obm)
    y = _band_envelopes(est, obm)
    n_frames = x.shape[1]
    if n_frames < SEGMENT:
        raise StoiError(
            f"only {n_frames} frames after silence removal; need at least {SEGMENT}"
        )

    clip_gain = 10.0 ** (-CLIP_DB / 20.0)
    correlations = []
    for m in range(SEGMENT, n_frames + 1):
        x_seg = x[:, m - SEGMENT : m]
        y_seg = y[:, m - SEGMENT : m]
        alpha = np.sqrt(
            np.sum(x_seg**2, axis=1, keepdims=True)
            / np.maximum(np.sum(y_seg**2, axis=1, keepdims=True), 1e-300)
        )
        y_clipped = np.minimum(alpha * y_seg, x_seg * clip_gain)
        xc = x_seg - x_seg.mean(axis=1, keepdims=True)
        yc = y_clipped - y_clipped.mean(axis=1, keepdims=True)
        denom = np.linalg.norm(xc, axis=1) * np.linalg.norm(yc, axis=1)
        corr = np.sum(xc * yc, axis=1) / np.maximum(denom, 1e-300)
        correlations.append(corr)
    return float(np.mean(correlations))
