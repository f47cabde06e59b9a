import numpy as np
import pytest
from scipy.io import wavfile

from sdrkit.audio import (
    AudioBuffer,
    MalformedWavError,
    UnsupportedWavError,
    read_wav,
    write_wav,
)


def test_silence_roundtrip(tmp_path):
    buf = AudioBuffer(np.zeros((1, 16000)), 16000)
    p = tmp_path / "zeros.wav"
    write_wav(buf, p, format="pcm16")
    back = read_wav(p)
    assert back.channels == 1 and back.length == 16000
    assert np.all(back.samples == 0.0)


def test_pcm16_file_byte_identical(tmp_path, rng):
    x = (rng.integers(-32768, 32768, size=(2, 500)) / 32768.0).astype(np.float64)
    p1, p2 = tmp_path / "a.wav", tmp_path / "b.wav"
    write_wav(AudioBuffer(x, 8000), p1, format="pcm16")
    write_wav(read_wav(p1), p2, format="pcm16")
    assert p1.read_bytes() == p2.read_bytes()


def test_pcm16_quantization_bound(tmp_path, rng):
    x = rng.uniform(-0.99, 0.99, size=(1, 4096))
    p = tmp_path / "q.wav"
    write_wav(AudioBuffer(x, 16000), p, format="pcm16")
    err = np.max(np.abs(read_wav(p).samples - x))
    assert err <= 2.0**-15


def test_float32_roundtrip_bit_exact(tmp_path, rng):
    x = rng.standard_normal((3, 777)).astype(np.float32).astype(np.float64)
    p = tmp_path / "f.wav"
    write_wav(AudioBuffer(x, 44100), p, format="float32")
    assert np.array_equal(read_wav(p).samples, x)


def test_float64_roundtrip_exact(tmp_path, rng):
    x = rng.standard_normal((1, 321))
    p = tmp_path / "d.wav"
    write_wav(AudioBuffer(x, 16000), p, format="float64")
    assert np.array_equal(read_wav(p).samples, x)


def test_four_channel_against_reference_parser(tmp_path, rng):
    # binaural-array style 4-channel fixture, written by the reference writer
    data = (rng.standard_normal((2000, 4)) * 8000).astype(np.int16)
    p = tmp_path / "array4.wav"
    wavfile.write(p, 16000, data)
    mine = read_wav(p)
    ref_sr, ref = wavfile.read(p)
    assert mine.sample_rate == ref_sr
    assert mine.channels == 4
    assert np.array_equal(mine.samples, ref.T.astype(np.float64) / 32768.0)


def test_reference_parser_reads_our_files(tmp_path, rng):
    x = rng.standard_normal((2, 300)) * 0.5
    p = tmp_path / "ours.wav"
    write_wav(AudioBuffer(x, 22050), p, format="float32")
    sr, ref = wavfile.read(p)
    assert sr == 22050
    assert np.allclose(ref.T, x, atol=1e-7)


def test_pcm16_clipping_reported(tmp_path, caplog):
    buf = AudioBuffer(np.array([[0.0, 2.0, -2.0]]), 8000)
    p = tmp_path / "clip.wav"
    with caplog.at_level("WARNING"):
        write_wav(buf, p, format="pcm16")
    assert any("clipped" in r.message for r in caplog.records)
    back = read_wav(p)
    assert back.samples[0, 1] == pytest.approx(32767 / 32768)
    assert back.samples[0, 2] == pytest.approx(-1.0)


def test_missing_file_error():
    with pytest.raises(FileNotFoundError):
        read_wav("/nonexistent/nope.wav")


def test_malformed_header_error(tmp_path):
    p = tmp_path / "bad.wav"
    p.write_bytes(b"RIFF\x10\x00\x00\x00JUNK" + b"\x00" * 16)
    with pytest.raises(MalformedWavError):
        read_wav(p)


def test_truncated_file_error(tmp_path):
    p = tmp_path / "trunc.wav"
    p.write_bytes(b"RIFF\x08\x00\x00\x00WA")
    with pytest.raises(MalformedWavError):
        read_wav(p)


def test_unsupported_codec_error(tmp_path, rng):
    # 8-bit PCM is a valid WAV codec we deliberately do not read
    data = (rng.integers(0, 255, size=200)).astype(np.uint8)
    p = tmp_path / "pcm8.wav"
    wavfile.write(p, 8000, data)
    with pytest.raises(UnsupportedWavError):
        read_wav(p)


def test_buffer_invariants():
    with pytest.raises(ValueError):
        AudioBuffer(np.array([[np.nan, 0.0]]), 16000)
    with pytest.raises(ValueError):
        AudioBuffer(np.zeros((1, 4)), 0)
    with pytest.raises(IndexError):
        AudioBuffer(np.zeros((2, 4)), 16000).channel(5)
