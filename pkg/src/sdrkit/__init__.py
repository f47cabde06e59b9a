"""sdrkit: frequency-weighted SDR training losses, projection-based signal
decomposition, perceptual weighting schemes, evaluation metrics, and the
mixture/SSN construction pipeline."""

from .audio import AudioBuffer, MalformedWavError, UnsupportedWavError, read_wav, write_wav
from .decomp import (
    BinRatios,
    Decomposition,
    DecompositionError,
    RatioReport,
    binwise_ratios,
    decompose,
    time_ratios,
)
from .loss import (
    CATALOG,
    LOSS_IDS,
    GradCheckReport,
    LossConfig,
    LossValue,
    grad_check,
    loss_eval,
    loss_eval_many,
    loss_grad,
    loss_weights,
)
from .metrics import MetricReport, MetricsConfig, fw_ratio, report
from .mixer import (
    ArrayGeometry,
    MixSpec,
    convolve_rir,
    generate_ssn,
    measured_sir_db,
    mix_at_sir,
    sir_gain,
    validate_geometry,
)
from .phoneme import (
    CategoryTable,
    PhonemeSegment,
    average_tables,
    categorize,
    load_alignment,
    per_category_metrics,
)
from .scales import (
    BandImportance,
    Filterbank,
    ansi_band_importance,
    band_pool,
    identity_filterbank,
    mel_filterbank,
    third_octave_bands,
)
from .stft import Spectrogram, StftConfig, istft, stft
from .stoi import StoiError, stoi
from .weighting import WeightMap, weights_ansi, weights_sir_softmax, weights_spectral_magnitude

__version__ = "0.1.0"
