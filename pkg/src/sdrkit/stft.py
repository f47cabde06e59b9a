"""STFT / iSTFT analysis layer and the adjoint operators the loss gradients use.

Conventions fixed here and relied on everywhere else:
  * periodic Hann analysis window, constant-overlap-add validated at
    construction;
  * center padding (when on) is zero padding of fft_size//2 on both sides;
  * frames = floor((L_padded - fft_size) / hop) + 1;
  * one-sided spectra with the doubling convention for energy accounting:
    power maps double every bin except DC and Nyquist, so summed TF power
    equals fft_size * windowed signal energy (Parseval).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def periodic_hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class StftConfig:
    fft_size: int = 512
    hop: int = 256
    window: str = "hann"
    center_padding: bool = True

    def __post_init__(self):
        if self.fft_size < 2 or self.fft_size % 2:
            raise ValueError(f"fft_size must be a positive even integer, got {self.fft_size}")
        if not 0 < self.hop <= self.fft_size:
            raise ValueError(f"hop must satisfy 0 < hop <= fft_size, got {self.hop}")
        if self.window != "hann":
            raise ValueError(f"only the periodic Hann window is supported, got {self.window!r}")
        if not self.is_cola():
            raise ValueError(
                f"window does not satisfy constant overlap-add at hop {self.hop} "
                f"(fft_size {self.fft_size})"
            )

    @property
    def freq_bins(self) -> int:
        return self.fft_size // 2 + 1

    def window_values(self) -> np.ndarray:
        return periodic_hann(self.fft_size)

    def is_cola(self, tol: float = 1e-10) -> bool:
        """Check that shifted copies of the window sum to a constant."""
        w = self.window_values()
        reps = 4 * (self.fft_size // self.hop + 1)
        acc = np.zeros(self.fft_size + reps * self.hop)
        for t in range(reps):
            acc[t * self.hop : t * self.hop + self.fft_size] += w
        interior = acc[self.fft_size : -self.fft_size]
        if interior.size == 0:
            return False
        mean = interior.mean()
        return mean > 0 and np.max(np.abs(interior - mean)) <= tol * mean

    def pad_width(self) -> int:
        return self.fft_size // 2 if self.center_padding else 0

    def n_frames(self, length: int) -> int:
        padded = length + 2 * self.pad_width()
        if padded < self.fft_size:
            raise ValueError(
                f"signal of length {length} is shorter than one frame "
                f"(fft_size {self.fft_size}, center_padding {self.center_padding})"
            )
        return (padded - self.fft_size) // self.hop + 1


@dataclass(frozen=True)
class Spectrogram:
    """Complex one-sided TF matrix [freq_bins x frames] plus its analysis config."""

    bins: np.ndarray
    config: StftConfig
    sample_rate: int

    def __post_init__(self):
        bins = np.asarray(self.bins, dtype=np.complex128)
        if bins.ndim != 2 or bins.shape[0] != self.config.freq_bins:
            raise ValueError(
                f"bins must be [freq_bins x frames] with {self.config.freq_bins} rows, "
                f"got shape {bins.shape}"
            )
        if not np.all(np.isfinite(bins)):
            raise ValueError("spectrogram contains non-finite entries")
        object.__setattr__(self, "bins", bins)

    @property
    def frames(self) -> int:
        return self.bins.shape[1]

    def bin_frequencies(self) -> np.ndarray:
        return np.fft.rfftfreq(self.config.fft_size, d=1.0 / self.sample_rate)


def _frame_signal(x: np.ndarray, cfg: StftConfig) -> np.ndarray:
    n = cfg.n_frames(len(x))  # validates length before padding
    pad = cfg.pad_width()
    if pad:
        x = np.pad(x, pad)
    strides = np.lib.stride_tricks.sliding_window_view(x, cfg.fft_size)
    return strides[:: cfg.hop][:n]


def stft(x: np.ndarray, cfg: StftConfig, sample_rate: int = 16000) -> Spectrogram:
    """One-sided STFT of a single-channel signal; linear in x."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"stft expects a 1-D signal, got shape {x.shape}")
    frames = _frame_signal(x, cfg) * cfg.window_values()
    bins = np.fft.rfft(frames, axis=1).T
    return Spectrogram(bins, cfg, sample_rate)


def stft_frames_batch(batch: np.ndarray, cfg: StftConfig) -> np.ndarray:
    """STFT of a [batch x length] stack, returned as [batch x freq_bins x frames]."""
    pad = cfg.pad_width()
    if pad:
        padded = np.zeros((batch.shape[0], batch.shape[1] + 2 * pad))
        padded[:, pad : pad + batch.shape[1]] = batch
        batch = padded
    n = (batch.shape[1] - cfg.fft_size) // cfg.hop + 1
    view = np.lib.stride_tricks.sliding_window_view(batch, cfg.fft_size, axis=1)
    frames = view[:, :: cfg.hop][:, :n] * cfg.window_values()
    return np.fft.rfft(frames, axis=2).transpose(0, 2, 1)


def istft(spec: Spectrogram, length: int | None = None) -> np.ndarray:
    """Weighted overlap-add inverse; exact on the covered interior region."""
    cfg = spec.config
    w = cfg.window_values()
    frames = np.fft.irfft(spec.bins.T, n=cfg.fft_size, axis=1)
    padded_len = (spec.frames - 1) * cfg.hop + cfg.fft_size
    acc = np.zeros(padded_len)
    wsum = np.zeros(padded_len)
    for t in range(spec.frames):
        sl = slice(t * cfg.hop, t * cfg.hop + cfg.fft_size)
        acc[sl] += frames[t] * w
        wsum[sl] += w * w
    covered = wsum > 1e-12 * wsum.max()
    acc[covered] /= wsum[covered]
    out = acc[cfg.pad_width() :]
    if length is not None:
        out = out[:length]
    return out


def rfft_adjoint(g: np.ndarray, n: int) -> np.ndarray:
    """Adjoint of np.fft.rfft as a real-linear map: real x -> one-sided complex.

    Satisfies Re(<g, rfft(x)>) == <rfft_adjoint(g, n), x> for real x of length n.
    """
    g = np.asarray(g, dtype=np.complex128)
    out = n * np.fft.irfft(g, n=n, axis=-1)
    out += np.real(g[..., :1])
    if n % 2 == 0:
        alt = np.empty(n)
        alt[0::2] = 1.0
        alt[1::2] = -1.0
        out += np.real(g[..., -1:]) * alt
    return 0.5 * out


def stft_adjoint(g: np.ndarray, cfg: StftConfig, length: int) -> np.ndarray:
    """Adjoint of the stft linear map, for cotangents g [freq_bins x frames].

    Returns the real signal gradient of length `length`:
    <g, stft(x)>_Re == <stft_adjoint(g, cfg, length), x>.
    """
    frames = g.shape[1]
    frame_grads = rfft_adjoint(g.T, cfg.fft_size) * cfg.window_values()
    pad = cfg.pad_width()
    acc = np.zeros(length + 2 * pad)
    for t in range(frames):
        acc[t * cfg.hop : t * cfg.hop + cfg.fft_size] += frame_grads[t]
    return acc[pad : pad + length] if pad else acc[:length]


def onesided_doubling(n_fft_or_length: int) -> np.ndarray:
    """Energy-accounting weights for one-sided spectra: 2 everywhere except
    DC and (for even lengths) Nyquist."""
    n = n_fft_or_length
    bins = n // 2 + 1
    d = np.full(bins, 2.0)
    d[0] = 1.0
    if n % 2 == 0:
        d[-1] = 1.0
    return d


def power_map(spec: Spectrogram) -> np.ndarray:
    """Doubled one-sided power |X|^2: sums to fft_size * windowed-frame energy."""
    d = onesided_doubling(spec.config.fft_size)
    return d[:, np.newaxis] * (spec.bins.real**2 + spec.bins.imag**2)


def rfft_power(x: np.ndarray) -> np.ndarray:
    """Full-signal one-sided power spectrum with doubling; sums to len(x) * ||x||^2."""
    x = np.asarray(x, dtype=np.float64)
    spec = np.fft.rfft(x, axis=-1)
    return onesided_doubling(x.shape[-1]) * (spec.real**2 + spec.imag**2)
