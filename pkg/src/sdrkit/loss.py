"""The L1-L11 loss catalog: SDR-style training objectives over time,
frequency, and TF domains, with optional Mel pooling and weighting, plus
exact analytic gradients and a finite-difference checker.

Sign contract: loss = -(SDR-like dB value), so minimizing the loss raises
the SDR. Weight maps are treated as constants during differentiation, even
when they derive from the current estimate's decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audio import as_mono
from .decomp import (
    DB_CLAMP_DEFAULT,
    ENERGY_FLOOR_EPS,
    clamped_db_map,
    decompose,
    decompose_batch,
)
from .scales import Filterbank, ansi_band_importance, band_pool, mel_filterbank
from .stft import (
    StftConfig,
    onesided_doubling,
    rfft_adjoint,
    stft_adjoint,
    stft_frames_batch,
)
from .weighting import WeightMap, weights_ansi, weights_sir_softmax, weights_spectral_magnitude

# id -> (domain, scale, weighting)
CATALOG = {
    "L1": ("time", None, None),
    "L2": ("frequency", None, None),
    "L3": ("tf", "linear", None),
    "L4": ("tf", "mel", None),
    "L5": ("tf", "linear", "spectral_magnitude"),
    "L6": ("tf", "mel", "spectral_magnitude"),
    "L7": ("tf", "mel", "ansi"),
    "L8": ("tf", "linear", "neg_sir"),
    "L9": ("tf", "linear", "neg_log_sir"),
    "L10": ("tf", "mel", "neg_sir"),
    "L11": ("tf", "mel", "neg_log_sir"),
}

LOSS_IDS = tuple(CATALOG)

_AGG_FLOOR = 1e-12
_DB_SCALE = 10.0 / math.log(10.0)


@dataclass(frozen=True)
class LossConfig:
    """One row of the loss catalog plus its analysis parameters."""

    id: str
    domain: str
    scale: str | None
    weighting: str | None
    stft: StftConfig = field(default_factory=StftConfig)
    sample_rate: int = 16000
    mel_bands: int = 18
    mel_fmin: float = 50.0
    mel_fmax: float = 8000.0
    gamma: float = 0.2
    clamp_db: tuple = DB_CLAMP_DEFAULT
    filterbank: Filterbank | None = None
    sir_from_oracle: bool = False

    def __post_init__(self):
        if self.id not in CATALOG:
            raise ValueError(f"unknown loss id {self.id!r} (expected L1..L11)")
        expected = CATALOG[self.id]
        if (self.domain, self.scale, self.weighting) != expected:
            raise ValueError(
                f"{self.id} must be (domain, scale, weighting) == {expected}, "
                f"got {(self.domain, self.scale, self.weighting)}"
            )
        if self.clamp_db[0] >= self.clamp_db[1]:
            raise ValueError("clamp_db must be an increasing (lo, hi) pair")

    @classmethod
    def from_id(cls, loss_id: str, **overrides) -> "LossConfig":
        if loss_id not in CATALOG:
            raise ValueError(f"unknown loss id {loss_id!r} (expected L1..L11)")
        domain, scale, weighting = CATALOG[loss_id]
        return cls(id=loss_id, domain=domain, scale=scale, weighting=weighting, **overrides)

    def resolved_filterbank(self) -> Filterbank | None:
        if self.filterbank is not None:
            return self.filterbank
        if self.scale == "mel":
            return mel_filterbank(
                self.stft.fft_size, self.sample_rate, self.mel_bands, self.mel_fmin, self.mel_fmax
            )
        return None


@dataclass(frozen=True)
class LossValue:
    value: float
    components: dict | None = None


def _power_stack(signals: np.ndarray, cfg: LossConfig):
    """Doubled one-sided power maps of a [batch x length] stack.

    Returns (power [B x F x T], spectra [B x F x T]); frequency domain uses
    the full-signal spectrum as a single frame.
    """
    if cfg.domain == "tf":
        spectra = stft_frames_batch(signals, cfg.stft)
        dd = onesided_doubling(cfg.stft.fft_size)
    elif cfg.domain == "frequency":
        spectra = np.fft.rfft(signals, axis=-1)[:, :, np.newaxis]
        dd = onesided_doubling(signals.shape[-1])
    else:
        raise ValueError(f"_power_stack does not handle domain {cfg.domain!r}")
    power = dd[:, np.newaxis] * (spectra.real**2 + spectra.imag**2)
    return power, spectra


def _pooled(power: np.ndarray, fb: Filterbank | None) -> np.ndarray:
    return band_pool(power, fb) if fb is not None else power


def loss_weights(cfg: LossConfig, est, clean, noise) -> WeightMap | None:
    """The weight map a weighted config uses on (est, clean, noise).

    SIR-based weights derive from the decomposition of the current estimate
    unless cfg.sir_from_oracle, in which case clean and noise power maps are
    ratioed directly. Returns None for unweighted configs.
    """
    if cfg.weighting is None:
        return None
    est = as_mono(est)
    clean = as_mono(clean)
    noise = as_mono(noise)
    fb = cfg.resolved_filterbank()
    if cfg.weighting == "spectral_magnitude":
        power, _ = _power_stack(clean[np.newaxis], cfg)
        return weights_spectral_magnitude(_pooled(power, fb)[0], cfg.gamma)
    if cfg.weighting == "ansi":
        importance = ansi_band_importance()
        if fb is None or fb.n_bands != importance.values.shape[0]:
            raise ValueError("ANSI weighting requires the 18-band Mel configuration")
        frames = cfg.stft.n_frames(len(est))
        return weights_ansi(importance, frames, fb.n_bands)
    if cfg.weighting in ("neg_sir", "neg_log_sir"):
        if cfg.sir_from_oracle:
            num, _ = _power_stack(clean[np.newaxis], cfg)
            den, _ = _power_stack(noise[np.newaxis], cfg)
            num, den = num[0], den[0]
        else:
            d = decompose(est, clean, noise)
            num, _ = _power_stack(d.s_proj[np.newaxis], cfg)
            den, _ = _power_stack(d.e_interf[np.newaxis], cfg)
            num, den = num[0], den[0]
        sir_db = clamped_db_map(_pooled(num, fb), _pooled(den, fb), cfg.clamp_db)
        if cfg.weighting == "neg_sir":
            return weights_sir_softmax(sir_db, "neg_sir")
        return weights_sir_softmax(10.0 ** (sir_db / 10.0), "neg_log_sir")
    raise ValueError(f"unknown weighting {cfg.weighting!r}")


def _forward_batch(
    cfg: LossConfig,
    est_batch: np.ndarray,
    clean: np.ndarray,
    noise: np.ndarray,
    weights: np.ndarray | None,
) -> np.ndarray:
    """Loss values for a stack of estimates sharing one (clean, noise) pair.

    Weighted configs require the caller to pass the (frozen) weight map.
    """
    s_proj, e_dist = decompose_batch(est_batch, clean, noise)
    lo, hi = cfg.clamp_db
    if cfg.domain == "time":
        num = np.sum(s_proj * s_proj, axis=-1, keepdims=True)[..., np.newaxis]
        den = np.sum(e_dist * e_dist, axis=-1, keepdims=True)[..., np.newaxis]
        return -clamped_db_map(num, den, cfg.clamp_db).reshape(-1)

    fb = cfg.resolved_filterbank()
    p_proj = _pooled(_power_stack(s_proj, cfg)[0], fb)
    p_dist = _pooled(_power_stack(e_dist, cfg)[0], fb)
    if cfg.weighting is None:
        return -clamped_db_map(p_proj, p_dist, cfg.clamp_db).mean(axis=(-2, -1))
    if weights is None:
        raise ValueError("weighted loss evaluation requires a weight map")
    num_agg = np.maximum(np.tensordot(p_proj, weights, axes=([-2, -1], [0, 1])), _AGG_FLOOR)
    den_agg = np.maximum(np.tensordot(p_dist, weights, axes=([-2, -1], [0, 1])), _AGG_FLOOR)
    return -np.clip(10.0 * np.log10(num_agg / den_agg), lo, hi)


def loss_eval(
    cfg: LossConfig,
    est,
    clean,
    noise,
    weights: WeightMap | None = None,
    diagnostics: bool = False,
) -> LossValue:
    """Scalar loss for one (est, clean, noise) triple.

    `weights` overrides the map a weighted config would compute, which is how
    finite-difference checks keep the weights frozen across perturbations.
    """
    est = as_mono(est)
    clean = as_mono(clean)
    noise = as_mono(noise)
    if weights is None:
        weights = loss_weights(cfg, est, clean, noise)
    w = weights.w if weights is not None else None
    value = float(_forward_batch(cfg, est[np.newaxis], clean, noise, w)[0])
    components = None
    if diagnostics:
        components = {"weights": w}
        if cfg.domain != "time":
            s_proj, e_dist = decompose_batch(est[np.newaxis], clean, noise)
            fb = cfg.resolved_filterbank()
            p_proj = _pooled(_power_stack(s_proj, cfg)[0], fb)[0]
            p_dist = _pooled(_power_stack(e_dist, cfg)[0], fb)[0]
            components["sdr_db"] = clamped_db_map(p_proj, p_dist, cfg.clamp_db)
    return LossValue(value, components)


def loss_eval_many(cfg: LossConfig, triples) -> LossValue:
    """Mean of per-utterance losses over a list of (est, clean, noise) triples."""
    values = [loss_eval(cfg, *triple).value for triple in triples]
    if not values:
        raise ValueError("empty batch")
    return LossValue(float(np.mean(values)))


def _head_grads(cfg: LossConfig, p_proj, p_dist, weights):
    """Gradients of the loss w.r.t. the pooled power maps.

    Floor and clamp thresholds are treated as constants: bins where a clamp
    or floor is active contribute zero gradient on the saturated side.
    """
    lo, hi = cfg.clamp_db
    lo_lin, hi_lin = 10.0 ** (lo / 10.0), 10.0 ** (hi / 10.0)
    if cfg.weighting is None:
        n_bins = p_proj.size
        num_total = p_proj.sum()
        floor = max(ENERGY_FLOOR_EPS * num_total, 1e-300)
        den_floored = np.maximum(p_dist, floor)
        ratio = p_proj / den_floored
        # bins with an exact-zero denominator are pinned at the upper clamp
        active = (ratio > lo_lin) & (ratio < hi_lin) & (p_dist > 0)
        g_proj = np.where(active & (p_proj > 0), -_DB_SCALE / (n_bins * np.maximum(p_proj, 1e-300)), 0.0)
        g_dist = np.where(active & (p_dist > floor), _DB_SCALE / (n_bins * den_floored), 0.0)
        return g_proj, g_dist
    num_agg = (weights * p_proj).sum()
    den_agg = (weights * p_dist).sum()
    raw_db = 10.0 * math.log10(max(num_agg, _AGG_FLOOR) / max(den_agg, _AGG_FLOOR))
    if not lo < raw_db < hi:
        return np.zeros_like(p_proj), np.zeros_like(p_dist)
    g_proj = (-_DB_SCALE / num_agg) * weights if num_agg > _AGG_FLOOR else np.zeros_like(p_proj)
    g_dist = (_DB_SCALE / den_agg) * weights if den_agg > _AGG_FLOOR else np.zeros_like(p_dist)
    return g_proj, g_dist


def _power_adjoint(cfg: LossConfig, grad_power: np.ndarray, spectrum: np.ndarray, length: int):
    """Pull a gradient w.r.t. the doubled power map back to the time signal."""
    if cfg.domain == "tf":
        dd = onesided_doubling(cfg.stft.fft_size)
        cotangent = 2.0 * (grad_power * dd[:, np.newaxis]) * spectrum
        return stft_adjoint(cotangent, cfg.stft, length)
    dd = onesided_doubling(length)
    cotangent = 2.0 * (grad_power[:, 0] * dd) * spectrum[:, 0]
    return rfft_adjoint(cotangent, length)


def loss_grad(cfg: LossConfig, est, clean, noise, weights: WeightMap | None = None) -> np.ndarray:
    """Analytic gradient of loss_eval w.r.t. est (weights held constant)."""
    est = as_mono(est)
    clean = as_mono(clean)
    noise = as_mono(noise)
    if weights is None:
        weights = loss_weights(cfg, est, clean, noise)
    w = weights.w if weights is not None else None

    s_proj, e_dist = decompose_batch(est[np.newaxis], clean, noise)
    s_proj, e_dist = s_proj[0], e_dist[0]

    if cfg.domain == "time":
        num = float(s_proj @ s_proj)
        den = float(e_dist @ e_dist)
        g_num, g_den = _head_grads(cfg, np.array([[num]]), np.array([[den]]), None)
        grad_proj = 2.0 * float(g_num[0, 0]) * s_proj
        grad_dist = 2.0 * float(g_den[0, 0]) * e_dist
    else:
        fb = cfg.resolved_filterbank()
        raw_proj, spec_proj = _power_stack(s_proj[np.newaxis], cfg)
        raw_dist, spec_dist = _power_stack(e_dist[np.newaxis], cfg)
        p_proj = _pooled(raw_proj, fb)[0]
        p_dist = _pooled(raw_dist, fb)[0]
        g_proj_band, g_dist_band = _head_grads(cfg, p_proj, p_dist, w)
        if fb is not None:
            g_proj_band = fb.weights.T @ g_proj_band
            g_dist_band = fb.weights.T @ g_dist_band
        grad_proj = _power_adjoint(cfg, g_proj_band, spec_proj[0], len(est))
        grad_dist = _power_adjoint(cfg, g_dist_band, spec_dist[0], len(est))

    # est -> components is linear: s_proj = P1 est, e_dist = (I - P1) est,
    # with P1 the (symmetric) projection onto clean.
    energy_clean = float(clean @ clean)
    proj_g = (float(grad_proj @ clean) / energy_clean) * clean
    proj_d = (float(grad_dist @ clean) / energy_clean) * clean
    return proj_g + (grad_dist - proj_d)


@dataclass(frozen=True)
class GradCheckReport:
    id: str
    trials: int
    length: int
    step: float
    max_rel_err: float
    per_trial: tuple


def grad_check(
    cfg: LossConfig,
    trials: int = 10,
    length: int = 1024,
    seed: int = 0,
    step: float = 1e-5,
) -> GradCheckReport:
    """Central finite differences vs loss_grad on random triples.

    The weight map is computed once per trial at the base point and frozen
    for every perturbed evaluation (weights are detached by contract). The
    reported error is max_i |g_i - fd_i| / ||fd||_inf per trial.
    """
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(trials):
        clean = rng.standard_normal(length)
        noise = rng.standard_normal(length)
        est = clean + 0.5 * noise + 0.3 * rng.standard_normal(length)
        weights = loss_weights(cfg, est, clean, noise)
        w = weights.w if weights is not None else None
        grad = loss_grad(cfg, est, clean, noise, weights=weights)

        perturbed = np.repeat(est[np.newaxis], 2 * length, axis=0)
        idx = np.arange(length)
        perturbed[idx, idx] += step
        perturbed[length + idx, idx] -= step
        # chunked evaluation keeps the per-call temporaries cache-sized
        chunk = 128
        values = np.concatenate(
            [
                _forward_batch(cfg, perturbed[i : i + chunk], clean, noise, w)
                for i in range(0, 2 * length, chunk)
            ]
        )
        fd = (values[:length] - values[length:]) / (2.0 * step)
        scale = max(np.max(np.abs(fd)), 1e-300)
        errors.append(float(np.max(np.abs(grad - fd)) / scale))
    return GradCheckReport(cfg.id, trials, length, step, max(errors), tuple(errors))
