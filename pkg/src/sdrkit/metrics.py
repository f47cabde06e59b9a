"""Evaluation-side metrics: time-domain and frequency-weighted SDR/SIR/SAR
plus STOI, with input/output improvement reporting.

The frequency-weighted ratios follow the segmental convention: per frame, a
weighted mean of banded dB ratios clamped to [-10, +35], with fixed weights
|S|^0.2 from the Mel-pooled clean spectrum; the result is the mean over
frames. This is deliberately distinct from the weighted training loss.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields

import numpy as np

from .audio import AudioBuffer, as_mono
from .decomp import Decomposition, decompose, time_ratios
from .scales import Filterbank, band_pool, mel_filterbank
from .stft import StftConfig, power_map, stft
from .stoi import stoi

FW_CLAMP_DB = (-10.0, 35.0)

CSV_COLUMNS = ("sir_out", "sar_out", "sdr_out", "fw_sir_out", "fw_sar_out", "fw_sdr_out", "stoi_out")


@dataclass(frozen=True)
class MetricsConfig:
    sample_rate: int = 16000
    stft: StftConfig = field(default_factory=StftConfig)
    mel_bands: int = 18
    mel_fmin: float = 50.0
    mel_fmax: float = 8000.0
    gamma: float = 0.2
    fw_clamp_db: tuple = FW_CLAMP_DB
    ref_channel: int = 0

    def filterbank(self) -> Filterbank:
        return mel_filterbank(
            self.stft.fft_size, self.sample_rate, self.mel_bands, self.mel_fmin, self.mel_fmax
        )


@dataclass(frozen=True)
class MetricReport:
    sir_in: float
    sir_out: float
    sar_out: float
    sdr_out: float
    fw_sir_in: float
    fw_sir_out: float
    fw_sar_out: float
    fw_sdr_out: float
    stoi_in: float | None
    stoi_out: float | None

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return "inf" if value > 0 else ("-inf" if value < 0 else "nan")
    return value


def report_to_json(report: MetricReport) -> str:
    return json.dumps({k: _json_safe(v) for k, v in report.as_dict().items()})


def report_to_csv_row(report: MetricReport) -> str:
    """CSV row in output-metric column order (SIR, SAR, SDR, FW-SIR, FW-SAR,
    FW-SDR, STOI, all out-values)."""
    cells = []
    for name in CSV_COLUMNS:
        v = getattr(report, name)
        cells.append("" if v is None else ("%.6g" % v if math.isfinite(v) else ("inf" if v > 0 else "-inf")))
    return ",".join(cells)


def _banded_powers(d: Decomposition, clean: np.ndarray, cfg: MetricsConfig):
    fb = cfg.filterbank()
    def banded(x):
        return band_pool(power_map(stft(x, cfg.stft, cfg.sample_rate)), fb)
    return (
        banded(d.s_proj),
        banded(d.e_interf),
        banded(d.e_artif),
        banded(d.e_dist),
        banded(d.s_proj + d.e_interf),
        banded(clean),
    )


def fw_ratio(est, clean, noise, which: str, cfg: MetricsConfig | None = None) -> float:
    """Frequency-weighted SDR/SIR/SAR in dB.

    Per frame: weighted mean over Mel bands of the clamped banded dB ratio,
    weights (banded clean power)^(gamma/2); frames with all-zero weights are
    skipped. Result is the mean over frames.
    """
    cfg = cfg or MetricsConfig()
    est = as_mono(est, cfg.ref_channel)
    clean = as_mono(clean, cfg.ref_channel)
    noise = as_mono(noise, cfg.ref_channel)
    d = decompose(est, clean, noise)
    p_proj, p_interf, p_artif, p_dist, p_kept, p_clean = _banded_powers(d, clean, cfg)
    if which == "sdr":
        num, den = p_proj, p_dist
    elif which == "sir":
        num, den = p_proj, p_interf
    elif which == "sar":
        num, den = p_kept, p_artif
    else:
        raise ValueError(f"which must be sdr, sir or sar, got {which!r}")

    weights = p_clean ** (cfg.gamma / 2.0)
    lo, hi = cfg.fw_clamp_db
    with np.errstate(divide="ignore", invalid="ignore"):
        db = 10.0 * np.log10(num / den)
    db = np.where(den == 0.0, np.inf, db)
    db = np.clip(np.nan_to_num(db, nan=lo, posinf=hi, neginf=lo), lo, hi)

    frame_weight_sums = weights.sum(axis=0)
    valid = frame_weight_sums > 0
    if not np.any(valid):
        raise ValueError("clean signal is silent: all frequency weights are zero")
    frame_scores = (weights[:, valid] * db[:, valid]).sum(axis=0) / frame_weight_sums[valid]
    return float(frame_scores.mean())


def report(
    mixture,
    est,
    clean,
    noise,
    cfg: MetricsConfig | None = None,
    include_stoi: bool = True,
) -> MetricReport:
    """Input/output metric report; *_in fields use the mixture as the estimate."""
    cfg = cfg or MetricsConfig()
    for buf in (mixture, est, clean, noise):
        if isinstance(buf, AudioBuffer) and buf.sample_rate != cfg.sample_rate:
            raise ValueError(
                f"sample rate mismatch: buffer at {buf.sample_rate} Hz, config at {cfg.sample_rate} Hz"
            )
    mixture = as_mono(mixture, cfg.ref_channel)
    est = as_mono(est, cfg.ref_channel)
    clean = as_mono(clean, cfg.ref_channel)
    noise = as_mono(noise, cfg.ref_channel)

    ratios_in = time_ratios(decompose(mixture, clean, noise))
    ratios_out = time_ratios(decompose(est, clean, noise))
    return MetricReport(
        sir_in=ratios_in.sir_db,
        sir_out=ratios_out.sir_db,
        sar_out=ratios_out.sar_db,
        sdr_out=ratios_out.sdr_db,
        fw_sir_in=fw_ratio(mixture, clean, noise, "sir", cfg),
        fw_sir_out=fw_ratio(est, clean, noise, "sir", cfg),
        fw_sar_out=fw_ratio(est, clean, noise, "sar", cfg),
        fw_sdr_out=fw_ratio(est, clean, noise, "sdr", cfg),
        stoi_in=stoi(clean, mixture, cfg.sample_rate) if include_stoi else None,
        stoi_out=stoi(clean, est, cfg.sample_rate) if include_stoi else None,
    )
