import numpy as np
import pytest
from scipy.signal import lfilter


def speech_like(n: int, rng: np.random.Generator, sample_rate: int = 16000) -> np.ndarray:
    """Broadband speech-shaped stand-in: tilted noise with syllabic modulation."""
    shaped = lfilter([1.0], [1.0, -0.9], rng.standard_normal(n))
    t = np.arange(n) / sample_rate
    envelope = 0.4 + 0.6 * (0.5 + 0.5 * np.sin(2 * np.pi * rng.uniform(3.0, 5.0) * t + rng.uniform(0, 6)))
    x = shaped * envelope
    return x / np.std(x)


def random_triple(rng: np.random.Generator, n: int = 1024, noise_gain: float = 0.5, resid: float = 0.3):
    """Generic (est, clean, noise) with est = clean + noise_gain*noise + resid*extra."""
    clean = rng.standard_normal(n)
    noise = rng.standard_normal(n)
    est = clean + noise_gain * noise + resid * rng.standard_normal(n)
    return est, clean, noise


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
