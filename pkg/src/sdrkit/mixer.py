"""Dataset-side signal construction: speech-shaped noise, RIR application,
and SIR-calibrated mixing.

SSN is seeded white Gaussian noise shaped by a linear-phase FIR whose
magnitude follows the square root of the corpus's Welch-averaged power
spectrum (512-point Hann Welch, 50% overlap; 1024-tap frequency-sampled
filter), RMS-normalized to 1. Mixing gains are solved in closed form on the
reference channel, so the achieved SIR is exact by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve, firwin2, welch

from .audio import AudioBuffer

WELCH_NFFT = 512
FIR_TAPS = 1024

INTERAURAL_RANGE_M = (0.12, 0.18)
LATERAL_RANGE_M = (0.01, 0.02)
VERTICAL_RANGE_M = (0.01, 0.015)
SIR_RANGE_DB = (-10.0, 10.0)


@dataclass(frozen=True)
class MixSpec:
    target_sir_db: float
    ref_channel: int = 0
    seed: int = 0
    ssn_fraction: float = 0.3

    def __post_init__(self):
        lo, hi = SIR_RANGE_DB
        if not lo <= self.target_sir_db <= hi:
            raise ValueError(f"target SIR {self.target_sir_db} dB outside [{lo}, {hi}]")
        if self.ref_channel < 0:
            raise ValueError("ref_channel must be >= 0")
        if not 0.0 <= self.ssn_fraction <= 1.0:
            raise ValueError("ssn_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class ArrayGeometry:
    interaural_m: float
    lateral_offset_m: float
    vertical_offset_m: float


def validate_geometry(g: ArrayGeometry) -> list[str]:
    """Range-check a binaural-array geometry; returns the violated constraints."""
    violations = []
    checks = (
        ("interaural_m", g.interaural_m, INTERAURAL_RANGE_M),
        ("lateral_offset_m", g.lateral_offset_m, LATERAL_RANGE_M),
        ("vertical_offset_m", g.vertical_offset_m, VERTICAL_RANGE_M),
    )
    for name, value, (lo, hi) in checks:
        if not lo <= value <= hi:
            violations.append(f"{name}={value} outside [{lo}, {hi}]")
    return violations


def generate_ssn(speech_corpus, duration: float, seed: int, sample_rate: int | None = None) -> AudioBuffer:
    """Speech-shaped noise matching the corpus's long-term average spectrum.

    speech_corpus: list of AudioBuffers or 1-D arrays (arrays require
    sample_rate). Deterministic for a fixed seed and corpus; output is a
    single-channel buffer with RMS 1.
    """
    if not speech_corpus:
        raise ValueError("empty speech corpus")
    signals = []
    rates = set()
    for item in speech_corpus:
        if isinstance(item, AudioBuffer):
            signals.append(item.channel(0))
            rates.add(item.sample_rate)
        else:
            signals.append(np.asarray(item, dtype=np.float64))
    if len(rates) > 1:
        raise ValueError(f"corpus mixes sample rates: {sorted(rates)}")
    if rates:
        sample_rate = rates.pop()
    if sample_rate is None:
        raise ValueError("sample_rate required when the corpus is raw arrays")
    corpus = np.concatenate(signals)
    if corpus.size < 30 * sample_rate:
        raise ValueError(
            f"corpus too short: {corpus.size / sample_rate:.1f} s, need at least 30 s"
        )

    freqs, psd = welch(
        corpus, fs=sample_rate, window="hann", nperseg=WELCH_NFFT, noverlap=WELCH_NFFT // 2
    )
    gains = np.sqrt(psd)
    gains[-1] = 0.0  # even-tap FIR needs zero response at Nyquist
    fir = firwin2(FIR_TAPS, freqs, gains, fs=sample_rate)

    n = int(round(duration * sample_rate))
    if n < 1:
        raise ValueError("duration must cover at least one sample")
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(n + FIR_TAPS)
    shaped = fftconvolve(white, fir, mode="full")[FIR_TAPS : FIR_TAPS + n]
    shaped /= np.sqrt(np.mean(shaped**2))
    return AudioBuffer.from_mono(shaped, sample_rate)


def convolve_rir(source, rir: AudioBuffer) -> AudioBuffer:
    """Per-channel convolution of a single-channel source with a multichannel
    RIR, trimmed to the source length."""
    src = source.channel(0) if isinstance(source, AudioBuffer) else np.asarray(source, dtype=np.float64)
    if rir.length == 0:
        raise ValueError("empty RIR")
    out = np.stack(
        [fftconvolve(src, rir.samples[c], mode="full")[: src.shape[0]] for c in range(rir.channels)]
    )
    return AudioBuffer(out, rir.sample_rate)


def sir_gain(clean_ref: np.ndarray, noise_ref: np.ndarray, target_sir_db: float) -> float:
    """Noise gain g with 10*log10(||clean||^2 / ||g*noise||^2) == target."""
    energy_clean = float(clean_ref @ clean_ref)
    energy_noise = float(noise_ref @ noise_ref)
    if energy_clean == 0.0 or energy_noise == 0.0:
        raise ValueError("reference channel of a source has zero energy")
    return float(np.sqrt(energy_clean / (energy_noise * 10.0 ** (target_sir_db / 10.0))))


def mix_at_sir(clean_img: AudioBuffer, noise_img: AudioBuffer, spec: MixSpec, gain: float | None = None):
    """Scale the noise image so the reference-channel SIR hits the target
    exactly; returns (mixture, scaled_noise, gain).

    An explicit gain overrides the image-based calibration (used for pre-RIR
    levelling, where the gain comes from the dry sources instead).
    """
    if clean_img.samples.shape != noise_img.samples.shape:
        raise ValueError(
            f"source images must share one shape, got {clean_img.samples.shape} "
            f"and {noise_img.samples.shape}"
        )
    if clean_img.sample_rate != noise_img.sample_rate:
        raise ValueError("source images must share one sample rate")
    if gain is None:
        gain = sir_gain(
            clean_img.channel(spec.ref_channel),
            noise_img.channel(spec.ref_channel),
            spec.target_sir_db,
        )
    scaled_noise = AudioBuffer(gain * noise_img.samples, noise_img.sample_rate)
    mixture = AudioBuffer(clean_img.samples + scaled_noise.samples, clean_img.sample_rate)
    return mixture, scaled_noise, gain


def measured_sir_db(clean_img: AudioBuffer, noise_img: AudioBuffer, ref_channel: int = 0) -> float:
    """Reference-channel SIR of a (clean image, noise image) pair in dB."""
    c = clean_img.channel(ref_channel)
    n = noise_img.channel(ref_channel)
    return 10.0 * float(np.log10((c @ c) / (n @ n)))
