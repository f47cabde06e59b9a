"""Projection-based decomposition of an estimate and the SDR/SIR/SAR family.

The estimate is split as est = s_proj + e_interf + e_artif, where s_proj is
the projection onto the clean signal and e_interf the remainder of the
projection onto span{clean, noise}. The distortion is e_dist = e_interf +
e_artif. Ratios are reported in time, per-frequency, or per-TF-bin form.

Numeric policy: per-bin denominators are floored at 1e-12 times the total
numerator energy, per-bin dB values are clamped to [-60, +60] before
averaging, and exact-zero denominators surface as +inf sentinels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio import as_mono
from .scales import Filterbank, band_pool
from .stft import StftConfig, power_map, rfft_power, stft

DB_CLAMP_DEFAULT = (-60.0, 60.0)
ENERGY_FLOOR_EPS = 1e-12
GRAM_COND_LIMIT = 1e12


class DecompositionError(ValueError):
    """Degenerate decomposition: zero-energy clean or collinear clean/noise."""


@dataclass(frozen=True)
class Decomposition:
    """Time-domain triple (s_proj, e_interf, e_artif); e_dist = e_interf + e_artif."""

    s_proj: np.ndarray
    e_interf: np.ndarray
    e_artif: np.ndarray

    @property
    def e_dist(self) -> np.ndarray:
        return self.e_interf + self.e_artif

    @property
    def est(self) -> np.ndarray:
        return self.s_proj + self.e_interf + self.e_artif

    @property
    def length(self) -> int:
        return self.s_proj.shape[0]


@dataclass(frozen=True)
class RatioReport:
    sdr_db: float
    sir_db: float
    sar_db: float


@dataclass(frozen=True)
class BinRatios:
    """Per-bin ratio maps (with inf sentinels) and their clamped-mean scalars."""

    sdr_map: np.ndarray
    sir_map: np.ndarray
    sar_map: np.ndarray
    mean_sdr_db: float
    mean_sir_db: float
    mean_sar_db: float
    clamp_db: tuple


def _gram_solve(est, clean, noise):
    """Closed-form projection coefficients of est onto span{clean, noise}."""
    energy_clean = float(clean @ clean)
    if energy_clean == 0.0:
        raise DecompositionError("clean signal has zero energy")
    energy_noise = float(noise @ noise)
    cross = float(clean @ noise)
    det = energy_clean * energy_noise - cross * cross
    trace = energy_clean + energy_noise
    disc = math.sqrt(max(trace * trace - 4.0 * det, 0.0))
    lam_max = (trace + disc) / 2.0
    lam_min = (trace - disc) / 2.0
    if det <= 0.0 or lam_min <= 0.0 or lam_max / lam_min > GRAM_COND_LIMIT:
        raise DecompositionError(
            "clean and noise are (numerically) collinear; decomposition is degenerate"
        )
    return energy_clean, energy_noise, cross, det


def decompose(est, clean, noise, ref_channel: int = 0) -> Decomposition:
    """BSS-style exact decomposition of est against clean and noise.

    s_proj = <est, clean>/||clean||^2 * clean; e_interf completes the
    projection onto span{clean, noise}; e_artif is the out-of-span residual.
    Multichannel inputs are reduced to ref_channel.
    """
    est = as_mono(est, ref_channel)
    clean = as_mono(clean, ref_channel)
    noise = as_mono(noise, ref_channel)
    if not (est.shape == clean.shape == noise.shape):
        raise ValueError(
            f"signals must share one length, got {est.shape}, {clean.shape}, {noise.shape}"
        )
    energy_clean, energy_noise, cross, det = _gram_solve(est, clean, noise)
    b_clean = float(est @ clean)
    b_noise = float(est @ noise)
    c_clean = (energy_noise * b_clean - cross * b_noise) / det
    c_noise = (energy_clean * b_noise - cross * b_clean) / det
    alpha = b_clean / energy_clean
    s_proj = alpha * clean
    span_proj = c_clean * clean + c_noise * noise
    return Decomposition(s_proj, span_proj - s_proj, est - span_proj)


def decompose_batch(est_batch: np.ndarray, clean: np.ndarray, noise: np.ndarray):
    """Vectorized decomposition of a [batch x length] stack of estimates.

    Returns (s_proj, e_dist) stacks; used by batched loss evaluation where
    only the SDR components are needed.
    """
    est_batch = np.atleast_2d(np.asarray(est_batch, dtype=np.float64))
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    energy_clean, _energy_noise, _cross, _det = _gram_solve(est_batch[0], clean, noise)
    alpha = (est_batch @ clean) / energy_clean
    s_proj = alpha[:, np.newaxis] * clean
    return s_proj, est_batch - s_proj


def db_ratio(num: float, den: float) -> float:
    """Scalar energy ratio in dB; zero denominators map to the +inf sentinel,
    zero numerators (with nonzero denominator) to -inf."""
    if den == 0.0:
        return math.inf
    if num == 0.0:
        return -math.inf
    return 10.0 * math.log10(num / den)


def raw_db_map(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Elementwise dB map with +-inf sentinels (den == 0 wins and gives +inf)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 10.0 * np.log10(num / den)
    return np.where(den == 0.0, np.inf, out)


def clamped_db_map(num: np.ndarray, den: np.ndarray, clamp_db=DB_CLAMP_DEFAULT) -> np.ndarray:
    """Floored and clamped dB map used for averaging and for weight inputs.

    The denominator is floored at ENERGY_FLOOR_EPS times the summed numerator
    (per batch item), then the linear ratio is clipped to the clamp range.
    Exact-zero denominators are +inf sentinels, so they pin to the upper clamp.
    """
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    num_total = num.sum(axis=(-2, -1), keepdims=True) if num.ndim >= 2 else num.sum()
    floor = np.maximum(ENERGY_FLOOR_EPS * num_total, 1e-300)
    lo_lin, hi_lin = 10.0 ** (clamp_db[0] / 10.0), 10.0 ** (clamp_db[1] / 10.0)
    out = np.maximum(den, floor)
    np.divide(num, out, out=out)
    np.clip(out, lo_lin, hi_lin, out=out)
    if den.min() == 0.0:
        out[den == 0.0] = hi_lin
    np.log10(out, out=out)
    out *= 10.0
    return out


def time_ratios(d: Decomposition) -> RatioReport:
    """Time-domain SDR / SIR / SAR of a decomposition."""
    e_proj = float(d.s_proj @ d.s_proj)
    e_dist = float(d.e_dist @ d.e_dist)
    e_interf = float(d.e_interf @ d.e_interf)
    e_artif = float(d.e_artif @ d.e_artif)
    kept = d.s_proj + d.e_interf
    return RatioReport(
        sdr_db=db_ratio(e_proj, e_dist),
        sir_db=db_ratio(e_proj, e_interf),
        sar_db=db_ratio(float(kept @ kept), e_artif),
    )


def component_power_maps(
    d: Decomposition,
    cfg: StftConfig,
    sample_rate: int,
    fb: Filterbank | None = None,
    domain: str = "tf",
):
    """Banded (or per-bin) power maps of the decomposition components.

    Returns (P_proj, P_interf, P_artif, P_dist, P_kept) where P_kept is the
    power of s_proj + e_interf (the SAR numerator). domain "tf" uses the
    STFT; "frequency" uses the full-signal spectrum (one column).
    """
    if d.length == 0:
        raise ValueError("empty decomposition")
    components = (d.s_proj, d.e_interf, d.e_artif, d.e_dist, d.s_proj + d.e_interf)
    if domain == "tf":
        maps = [power_map(stft(x, cfg, sample_rate)) for x in components]
    elif domain == "frequency":
        maps = [rfft_power(x)[:, np.newaxis] for x in components]
    else:
        raise ValueError(f"unknown domain {domain!r} (expected 'tf' or 'frequency')")
    if fb is not None:
        maps = [band_pool(p, fb) for p in maps]
    return tuple(maps)


def binwise_ratios(
    d: Decomposition,
    cfg: StftConfig,
    sample_rate: int = 16000,
    fb: Filterbank | None = None,
    domain: str = "tf",
    clamp_db=DB_CLAMP_DEFAULT,
) -> BinRatios:
    """Per-bin SDR/SIR/SAR maps plus their arithmetic means over all bins.

    Maps carry +-inf sentinels for exact-zero components; means are computed
    from the floored and clamped maps so they stay finite.
    """
    p_proj, p_interf, p_artif, p_dist, p_kept = component_power_maps(
        d, cfg, sample_rate, fb, domain
    )
    return BinRatios(
        sdr_map=raw_db_map(p_proj, p_dist),
        sir_map=raw_db_map(p_proj, p_interf),
        sar_map=raw_db_map(p_kept, p_artif),
        mean_sdr_db=float(clamped_db_map(p_proj, p_dist, clamp_db).mean()),
        mean_sir_db=float(clamped_db_map(p_proj, p_interf, clamp_db).mean()),
        mean_sar_db=float(clamped_db_map(p_kept, p_artif, clamp_db).mean()),
        clamp_db=tuple(clamp_db),
    )
