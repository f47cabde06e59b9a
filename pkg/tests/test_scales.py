import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sdrkit.scales import (
    BandImportance,
    Filterbank,
    ansi_band_importance,
    band_pool,
    filterbank_to_csv,
    hz_to_mel,
    identity_filterbank,
    mel_filterbank,
    mel_to_hz,
    third_octave_bands,
)


class TestMel:
    def test_single_band_covers_interior(self):
        fb = mel_filterbank(512, 16000, n_bands=1, f_min=0.0, f_max=8000.0)
        assert fb.n_bands == 1
        freqs = np.fft.rfftfreq(512, 1 / 16000)
        center = mel_to_hz((hz_to_mel(0.0) + hz_to_mel(8000.0)) / 2)
        assert fb.band_centers[0] == pytest.approx(center)
        interior = (freqs > 0) & (freqs < 8000)
        assert np.all(fb.weights[0, interior] > 0)

    def test_centers_recomputed_independently(self):
        fb = mel_filterbank(512, 16000, n_bands=18, f_min=50.0, f_max=8000.0)
        # independent recomputation straight from the mel formula
        lo = 2595.0 * np.log10(1 + 50.0 / 700.0)
        hi = 2595.0 * np.log10(1 + 8000.0 / 700.0)
        grid = np.linspace(lo, hi, 20)
        expected = 700.0 * (10.0 ** (grid[1:-1] / 2595.0) - 1.0)
        assert np.allclose(fb.band_centers, expected, rtol=1e-12)
        assert np.all(np.diff(fb.band_centers) > 0)
        mel_centers = hz_to_mel(fb.band_centers)
        spacing = np.diff(mel_centers)
        assert np.max(np.abs(spacing - spacing[0])) < 1e-9

    def test_coverage_between_first_and_last_center(self):
        fb = mel_filterbank(512, 16000, n_bands=18, f_min=50.0, f_max=8000.0)
        freqs = np.fft.rfftfreq(512, 1 / 16000)
        colsums = fb.weights.sum(axis=0)
        inside = (freqs > fb.band_centers[0]) & (freqs < fb.band_centers[-1])
        assert np.all(colsums[inside] > 0)

    def test_peak_normalized(self):
        fb = mel_filterbank(512, 16000)
        assert np.max(fb.weights) <= 1.0 + 1e-12

    def test_triangles_overlap_at_adjacent_centers(self):
        fb = mel_filterbank(2048, 16000, n_bands=6, f_min=100.0, f_max=6000.0)
        freqs = np.fft.rfftfreq(2048, 1 / 16000)
        for b in range(1, 6):
            # previous band still has support just below this band's center
            below = np.searchsorted(freqs, fb.band_centers[b]) - 1
            assert fb.weights[b - 1, below] > 0

    def test_band_too_narrow_reports_index(self):
        with pytest.raises(ValueError, match="band"):
            mel_filterbank(64, 16000, n_bands=30, f_min=50.0, f_max=1000.0)

    def test_bad_ranges(self):
        with pytest.raises(ValueError):
            mel_filterbank(512, 16000, f_min=500.0, f_max=100.0)
        with pytest.raises(ValueError):
            mel_filterbank(512, 16000, f_max=9000.0)
        with pytest.raises(ValueError):
            mel_filterbank(512, 16000, n_bands=0)


class TestThirdOctave:
    def test_band9_is_1khz(self):
        fb = third_octave_bands(16000)
        assert fb.band_centers[8] == pytest.approx(1000.0)
        lo = 1000.0 * 2 ** (-1 / 6)
        hi = 1000.0 * 2 ** (1 / 6)
        assert lo == pytest.approx(890.9, abs=0.1)
        assert hi == pytest.approx(1122.5, abs=0.1)
        freqs = np.fft.rfftfreq(512, 1 / 16000)
        in_band = fb.weights[8] > 0
        assert np.all(freqs[in_band] >= lo)
        assert np.all(freqs[in_band] < hi)

    def test_bands_disjoint(self):
        fb = third_octave_bands(16000)
        assert np.max(fb.weights.sum(axis=0)) <= 1.0

    def test_tone_lands_in_band9(self):
        sr, n = 16000, 16384
        t = np.arange(n) / sr
        tone = np.sin(2 * np.pi * 1000.0 * t)
        spec = np.abs(np.fft.rfft(tone * np.hanning(n))) ** 2
        fb = third_octave_bands(sr, fft_size=n)
        banded = fb.weights @ spec
        assert banded[8] / banded.sum() > 0.999

    def test_centers_follow_ladder(self):
        fb = third_octave_bands(16000)
        assert np.allclose(fb.band_centers, 1000.0 * 2.0 ** (np.arange(-8, 10) / 3.0))
        assert len(fb.band_centers) == 18

    def test_low_rate_rejected(self):
        with pytest.raises(ValueError):
            third_octave_bands(8000)


class TestBandImportance:
    def test_sums_to_one(self):
        bi = ansi_band_importance()
        assert bi.values.sum() == pytest.approx(1.0, abs=1e-6)

    def test_all_positive(self):
        assert np.all(ansi_band_importance().values > 0)

    def test_midband_exceeds_lowest(self):
        bi = ansi_band_importance()
        k_1600 = int(np.argmin(np.abs(bi.band_centers - 1600.0)))
        k_2500 = int(np.argmin(np.abs(bi.band_centers - 2500.0)))
        assert bi.values[k_1600] > bi.values[0]
        assert bi.values[k_2500] > bi.values[0]

    def test_shape_and_order(self):
        bi = ansi_band_importance()
        assert bi.values.shape == (18,)
        assert np.all(np.diff(bi.band_centers) > 0)

    def test_validation(self):
        with pytest.raises(ValueError):
            BandImportance(np.full(18, 1.0), np.arange(18) + 1.0)  # sums to 18
        with pytest.raises(ValueError):
            BandImportance(np.full(10, 0.1), np.arange(10) + 1.0)  # wrong length


class TestBandPool:
    def test_zero_power(self):
        fb = mel_filterbank(512, 16000)
        assert np.all(band_pool(np.zeros((257, 7)), fb) == 0)

    def test_identity_filterbank_passthrough(self, rng):
        fb = identity_filterbank(512, 16000)
        p = rng.random((257, 5))
        assert np.array_equal(band_pool(p, fb), p)

    def test_double_sum_oracle(self, rng):
        fb = mel_filterbank(512, 16000)
        p = rng.random((257, 4))
        pooled = band_pool(p, fb)
        for b in range(fb.n_bands):
            for t in range(4):
                manual = sum(fb.weights[b, f] * p[f, t] for f in range(257))
                assert pooled[b, t] == pytest.approx(manual, rel=1e-12)

    def test_column_sum_identity(self, rng):
        fb = mel_filterbank(512, 16000)
        p = rng.random((257, 3))
        colsum = fb.weights.sum(axis=0)
        assert np.allclose(band_pool(p, fb).sum(axis=0), colsum @ p, rtol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-5, 5), st.floats(-5, 5))
    def test_linearity(self, seed, a, b):
        r = np.random.default_rng(seed)
        fb = mel_filterbank(128, 16000, n_bands=6, f_min=100.0, f_max=7000.0)
        p, q = r.random((2, 65, 3))
        lhs = band_pool(a * p + b * q, fb)
        rhs = a * band_pool(p, fb) + b * band_pool(q, fb)
        assert np.allclose(lhs, rhs, atol=1e-12)

    def test_dimension_mismatch(self):
        fb = mel_filterbank(512, 16000)
        with pytest.raises(ValueError):
            band_pool(np.zeros((100, 4)), fb)


def test_filterbank_validation():
    with pytest.raises(ValueError):
        Filterbank(np.zeros((2, 10)), np.array([100.0, 200.0]), "mel")  # empty bands
    with pytest.raises(ValueError):
        Filterbank(-np.ones((1, 4)), np.array([100.0]), "mel")
    with pytest.raises(ValueError):
        Filterbank(np.ones((2, 4)), np.array([200.0, 100.0]), "mel")  # decreasing centers


def test_filterbank_csv_export(tmp_path):
    fb = mel_filterbank(128, 16000, n_bands=4, f_min=100.0, f_max=7000.0)
    p = tmp_path / "fb.csv"
    filterbank_to_csv(fb, p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "band,bin,weight"
    band, binno, weight = lines[1].split(",")
    assert fb.weights[int(band), int(binno)] == pytest.approx(float(weight), rel=1e-9)
    assert len(lines) - 1 == int(np.count_nonzero(fb.weights))
