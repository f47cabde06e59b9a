"""Audio containers and RIFF/WAV file I/O.

Buffers hold float64 samples in [channels x length] layout. WAV support
covers 16-bit PCM and IEEE float (32- and 64-bit); everything else is
rejected as an unsupported codec.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

_PCM16_SCALE = 32768.0

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


class MalformedWavError(ValueError):
    """The file is not a structurally valid RIFF/WAVE file."""


class UnsupportedWavError(ValueError):
    """Valid WAV container, but a codec/bit depth this library does not read."""


@dataclass(frozen=True)
class AudioBuffer:
    """Multichannel sampled signal: samples[channel, n] at a fixed rate."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.atleast_2d(np.asarray(self.samples, dtype=np.float64))
        if samples.ndim != 2:
            raise ValueError(f"samples must be 2-D [channels x length], got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("samples contain non-finite values")
        if not (isinstance(self.sample_rate, (int, np.integer)) and self.sample_rate > 0):
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate!r}")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    @property
    def channels(self) -> int:
        return self.samples.shape[0]

    @property
    def length(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.length / self.sample_rate

    def channel(self, index: int) -> np.ndarray:
        """One channel as a 1-D float64 view."""
        if not 0 <= index < self.channels:
            raise IndexError(f"channel {index} out of range for {self.channels}-channel buffer")
        return self.samples[index]

    @classmethod
    def from_mono(cls, x: np.ndarray, sample_rate: int) -> "AudioBuffer":
        return cls(np.asarray(x, dtype=np.float64)[np.newaxis, :], sample_rate)


def as_mono(x, ref_channel: int = 0) -> np.ndarray:
    """Reduce an AudioBuffer or array to the reference channel as 1-D float64."""
    if isinstance(x, AudioBuffer):
        return x.channel(ref_channel)
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        return arr
    if arr.ndim == 2:
        return arr[ref_channel]
    raise ValueError(f"expected 1-D or 2-D signal, got shape {arr.shape}")


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise MalformedWavError(f"truncated file while reading {what}")
    return data


def read_wav(path) -> AudioBuffer:
    """Read a PCM16 or IEEE-float WAV file into an AudioBuffer.

    16-bit samples are scaled to [-1, 1) by division by 32768; float data is
    passed through unchanged. Raises FileNotFoundError, MalformedWavError or
    UnsupportedWavError depending on what went wrong.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such WAV file: {path}")
    with open(path, "rb") as fh:
        riff, _size, wave = struct.unpack("<4sI4s", _read_exact(fh, 12, "RIFF header"))
        if riff != b"RIFF" or wave != b"WAVE":
            raise MalformedWavError(f"{path} is not a RIFF/WAVE file")

        fmt = None
        data = None
        while True:
            head = fh.read(8)
            if len(head) == 0:
                break
            if len(head) != 8:
                raise MalformedWavError("truncated chunk header")
            chunk_id, chunk_size = struct.unpack("<4sI", head)
            if chunk_id == b"fmt ":
                if chunk_size < 16:
                    raise MalformedWavError("fmt chunk too small")
                fmt = _read_exact(fh, chunk_size, "fmt chunk")
            elif chunk_id == b"data":
                data = _read_exact(fh, chunk_size, "data chunk")
            else:
                fh.seek(chunk_size, 1)
            if chunk_size % 2:  # RIFF chunks are padded to even sizes
                fh.seek(1, 1)
            if fmt is not None and data is not None:
                break

        if fmt is None or data is None:
            raise MalformedWavError(f"{path} is missing a {'fmt' if fmt is None else 'data'} chunk")

        audio_format, channels, sample_rate, _byte_rate, block_align, bits = struct.unpack(
            "<HHIIHH", fmt[:16]
        )
        if audio_format == WAVE_FORMAT_EXTENSIBLE:
            if len(fmt) < 26:
                raise MalformedWavError("extensible fmt chunk too small")
            audio_format = struct.unpack("<H", fmt[24:26])[0]

        if channels < 1 or sample_rate < 1 or block_align != channels * (bits // 8):
            raise MalformedWavError(f"inconsistent fmt fields in {path}")

        if audio_format == WAVE_FORMAT_PCM:
            if bits != 16:
                raise UnsupportedWavError(f"{bits}-bit PCM is not supported (16-bit only)")
            raw = np.frombuffer(data, dtype="<i2")
            samples = raw.astype(np.float64) / _PCM16_SCALE
        elif audio_format == WAVE_FORMAT_IEEE_FLOAT:
            if bits == 32:
                samples = np.frombuffer(data, dtype="<f4").astype(np.float64)
            elif bits == 64:
                samples = np.frombuffer(data, dtype="<f8").astype(np.float64)
            else:
                raise UnsupportedWavError(f"{bits}-bit IEEE float is not supported")
        else:
            raise UnsupportedWavError(f"unsupported WAV codec (format tag 0x{audio_format:04x})")

        if samples.size % channels:
            raise MalformedWavError("data chunk size is not a whole number of frames")
        return AudioBuffer(samples.reshape(-1, channels).T, int(sample_rate))


def write_wav(buffer: AudioBuffer, path, format: str = "pcm16") -> None:
    """Write an AudioBuffer as a WAV file.

    format: "pcm16" (samples beyond [-1, 1] are clipped with a warning),
    "float32", or "float64".
    """
    interleaved = np.ascontiguousarray(buffer.samples.T)
    if format == "pcm16":
        peak = np.max(np.abs(interleaved), initial=0.0)
        if peak > 1.0:
            log.warning("write_wav: %d samples beyond [-1, 1] clipped (peak %.4f)", int(np.sum(np.abs(interleaved) > 1.0)), peak)
        quantized = np.clip(np.round(interleaved * _PCM16_SCALE), -32768, 32767)
        payload = quantized.astype("<i2").tobytes()
        audio_format, bits = WAVE_FORMAT_PCM, 16
    elif format == "float32":
        payload = interleaved.astype("<f4").tobytes()
        audio_format, bits = WAVE_FORMAT_IEEE_FLOAT, 32
    elif format == "float64":
        payload = interleaved.astype("<f8").tobytes()
        audio_format, bits = WAVE_FORMAT_IEEE_FLOAT, 64
    else:
        raise ValueError(f"unknown WAV format {format!r} (expected pcm16, float32 or float64)")

    channels = buffer.channels
    block_align = channels * bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        audio_format,
        channels,
        buffer.sample_rate,
        buffer.sample_rate * block_align,
        block_align,
        bits,
        b"data",
        len(payload),
    )
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        if len(payload) % 2:
            fh.write(b"\x00")
