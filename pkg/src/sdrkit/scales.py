"""Mel and one-third-octave filterbanks plus the ANSI S3.5-1997 band-importance table.

Mel triangles are amplitude-normalized (peak 1); third-octave bands are
boxcars over FFT bins with half-open [lower, upper) edge intervals, so no
bin lands in two bands. Band importance is the 18-value one-third-octave
importance function, normalized to sum to 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

MEL_BANDS_DEFAULT = 18
MEL_FMIN_DEFAULT = 50.0
MEL_FMAX_DEFAULT = 8000.0

# One-third-octave band importance for bands centered 160 Hz .. 8 kHz
# (the standard 18-band speech-intelligibility importance function).
_BAND_IMPORTANCE_18 = np.array(
    [
        0.0083, 0.0095, 0.0150, 0.0289, 0.0440, 0.0578,
        0.0653, 0.0711, 0.0818, 0.0844, 0.0882, 0.0898,
        0.0868, 0.0844, 0.0771, 0.0527, 0.0364, 0.0185,
    ]
)


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


@dataclass(frozen=True)
class Filterbank:
    """Nonnegative pooling matrix [bands x freq_bins] with band center frequencies."""

    weights: np.ndarray
    band_centers: np.ndarray
    kind: str

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=np.float64)
        centers = np.asarray(self.band_centers, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] != centers.shape[0]:
            raise ValueError("weights must be [bands x freq_bins] matching band_centers")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("filterbank weights must be finite and nonnegative")
        empty = np.flatnonzero(weights.sum(axis=1) == 0)
        if empty.size:
            raise ValueError(f"band {int(empty[0])} contains no FFT bin (too narrow)")
        if np.any(np.diff(centers) <= 0):
            raise ValueError("band centers must be strictly increasing")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "band_centers", centers)

    @property
    def n_bands(self) -> int:
        return self.weights.shape[0]

    @property
    def n_bins(self) -> int:
        return self.weights.shape[1]


def identity_filterbank(fft_size: int, sample_rate: int) -> Filterbank:
    """One band per FFT bin; makes banded and per-bin paths coincide."""
    freqs = np.fft.rfftfreq(fft_size, d=1.0 / sample_rate)
    # shift the DC center off zero so centers are strictly increasing from a real axis
    centers = freqs.copy()
    centers[0] = min(1e-6, freqs[1] / 2 if len(freqs) > 1 else 1e-6)
    return Filterbank(np.eye(len(freqs)), centers, "identity")


def mel_filterbank(
    fft_size: int,
    sample_rate: int,
    n_bands: int = MEL_BANDS_DEFAULT,
    f_min: float = MEL_FMIN_DEFAULT,
    f_max: float = MEL_FMAX_DEFAULT,
) -> Filterbank:
    """Triangular Mel filterbank, centers equally spaced on the Mel axis.

    Adjacent triangles overlap at each other's centers; each triangle peaks
    at 1. Raises if any band is too narrow to contain an FFT bin.
    """
    if not 0 <= f_min < f_max <= sample_rate / 2:
        raise ValueError(f"need 0 <= f_min < f_max <= Nyquist, got ({f_min}, {f_max})")
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    mel_points = np.linspace(hz_to_mel(f_min), hz_to_mel(f_max), n_bands + 2)
    hz_points = mel_to_hz(mel_points)
    freqs = np.fft.rfftfreq(fft_size, d=1.0 / sample_rate)

    weights = np.zeros((n_bands, len(freqs)))
    for b in range(n_bands):
        lower, center, upper = hz_points[b : b + 3]
        rising = (freqs - lower) / (center - lower)
        falling = (upper - freqs) / (upper - center)
        weights[b] = np.maximum(0.0, np.minimum(rising, falling))
    return Filterbank(weights, hz_points[1:-1], "mel")


def third_octave_bands(sample_rate: int, fft_size: int = 512) -> Filterbank:
    """Eighteen 1/3-octave boxcar bands, centers 2^(k/3) ladder around 1 kHz
    (nominal 160 Hz .. 8 kHz), edges at center * 2^(+-1/6)."""
    if sample_rate < 16000:
        raise ValueError(f"sample_rate {sample_rate} too low for the 8 kHz band")
    centers = 1000.0 * 2.0 ** (np.arange(-8, 10) / 3.0)
    lowers = centers * 2.0 ** (-1.0 / 6.0)
    uppers = centers * 2.0 ** (1.0 / 6.0)
    freqs = np.fft.rfftfreq(fft_size, d=1.0 / sample_rate)
    weights = ((freqs >= lowers[:, np.newaxis]) & (freqs < uppers[:, np.newaxis])).astype(float)
    return Filterbank(weights, centers, "third_octave")


@dataclass(frozen=True)
class BandImportance:
    """Normalized 18-band importance values, ordered by ascending center frequency."""

    values: np.ndarray
    band_centers: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        centers = np.asarray(self.band_centers, dtype=np.float64)
        if values.shape != (18,) or centers.shape != (18,):
            raise ValueError("band importance requires exactly 18 bands")
        if np.any(values < 0):
            raise ValueError("importance values must be nonnegative")
        if abs(values.sum() - 1.0) > 1e-6:
            raise ValueError("importance values must sum to 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "band_centers", centers)


def ansi_band_importance() -> BandImportance:
    """The 18 one-third-octave band-importance values (160 Hz .. 8 kHz),
    normalized to sum to 1."""
    centers = 1000.0 * 2.0 ** (np.arange(-8, 10) / 3.0)
    values = _BAND_IMPORTANCE_18 / _BAND_IMPORTANCE_18.sum()
    return BandImportance(values, centers)


def band_pool(power: np.ndarray, fb: Filterbank) -> np.ndarray:
    """Pool a nonnegative [freq_bins x frames] map into [bands x frames]:
    out[b, t] = sum_f fb.weights[b, f] * power[f, t]."""
    power = np.asarray(power, dtype=np.float64)
    if power.shape[-2] != fb.n_bins:
        raise ValueError(
            f"power has {power.shape[-2]} bins but filterbank expects {fb.n_bins}"
        )
    return fb.weights @ power


def filterbank_to_csv(fb: Filterbank, path) -> None:
    """Export nonzero entries as (band, bin, weight) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["band", "bin", "weight"])
        rows, cols = np.nonzero(fb.weights)
        for b, f in zip(rows, cols):
            writer.writerow([int(b), int(f), f"{fb.weights[b, f]:.12g}"])
