"""Weighting schemes for the weighted TF SDR: spectral magnitude, band
importance, and the two softmax SIR-based variants.

All weight maps are nonnegative [bands_or_bins x frames] matrices. SIR-based
weights and ANSI weights are normalized distributions; spectral-magnitude
weights are left unnormalized (normalization cancels in the loss ratio).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .scales import BandImportance

SIR_WEIGHT_CLAMP_DB = (-60.0, 60.0)
SIR_LIN_FLOOR = 1e-6


@dataclass(frozen=True)
class WeightMap:
    w: np.ndarray
    normalized: bool

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if w.ndim != 2:
            raise ValueError(f"weight map must be 2-D [bands x frames], got shape {w.shape}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")
        if self.normalized and abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"normalized weight map sums to {w.sum()!r}, expected 1")
        object.__setattr__(self, "w", w)


def weights_spectral_magnitude(clean_power_map: np.ndarray, gamma: float = 0.2) -> WeightMap:
    """w = |S|^gamma from the clean-speech power map (|S|^2 entries).

    gamma = 0 degenerates to uniform weights; output is unnormalized.
    """
    power = np.asarray(clean_power_map, dtype=np.float64)
    if np.any(power < 0):
        raise ValueError("power map must be nonnegative")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    return WeightMap(power ** (gamma / 2.0), normalized=False)


def weights_ansi(importance: BandImportance, frames: int, n_bands: int = 18) -> WeightMap:
    """Band-importance values broadcast over frames; each column sums to 1."""
    if n_bands != importance.values.shape[0]:
        raise ValueError(
            f"band-importance has {importance.values.shape[0]} bands, target expects {n_bands}"
        )
    if frames < 1:
        raise ValueError("frames must be >= 1")
    col = importance.values / importance.values.sum()
    return WeightMap(np.tile(col[:, np.newaxis], (1, frames)), normalized=False)


def weights_sir_softmax(sir_map: np.ndarray, variant: str) -> WeightMap:
    """SIR-based softmax weights over all (band, frame) bins.

    variant "neg_sir": sir_map holds SIR in dB; w = softmax(-SIR_dB), computed
    with max-subtraction. variant "neg_log_sir": sir_map holds strictly
    positive linear power ratios; w = (1/SIR) / sum(1/SIR).
    """
    sir = np.asarray(sir_map, dtype=np.float64)
    if np.any(np.isnan(sir)):
        raise ValueError("SIR map contains NaN")
    if variant == "neg_sir":
        z = -sir
        z -= z.max()
        e = np.exp(z)
        return WeightMap(e / e.sum(), normalized=True)
    if variant == "neg_log_sir":
        if np.any(sir <= 0):
            raise ValueError("neg_log_sir requires strictly positive linear SIR values")
        inv = 1.0 / sir
        return WeightMap(inv / inv.sum(), normalized=True)
    raise ValueError(f"unknown variant {variant!r} (expected 'neg_sir' or 'neg_log_sir')")


def weightmap_to_csv(wm: WeightMap, path) -> None:
    """Export as (band, frame, weight) rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["band", "frame", "weight"])
        bands, frames = wm.w.shape
        for b in range(bands):
            for t in range(frames):
                writer.writerow([b, t, f"{wm.w[b, t]:.12g}"])
