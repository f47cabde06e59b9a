"""Phoneme-category segmentation and per-category metric tables.

Alignments arrive as start,end,phone CSV rows (seconds, ARPAbet labels).
Categories: plosive, fricative, nasal, approximant, vowel; affricates,
silences and anything unrecognized fall into "other". Per-category metrics
concatenate all of a category's sample spans and measure the splice, which
keeps ratios stable on very short bursts. STOI is omitted (segments are far
shorter than its minimum analysis span).
"""

from __future__ import annotations

import csv
import logging
import re
from dataclasses import dataclass

import numpy as np

from .audio import as_mono
from .metrics import MetricReport, MetricsConfig, report

log = logging.getLogger(__name__)

CATEGORY_ORDER = ("plosive", "fricative", "approximant", "nasal", "vowel", "other")

_CATEGORY_TABLE = {
    "plosive": {"P", "B", "T", "D", "K", "G"},
    "fricative": {"F", "V", "TH", "DH", "S", "Z", "SH", "ZH", "HH"},
    "nasal": {"M", "N", "NG"},
    "approximant": {"L", "R", "W", "Y"},
    "vowel": {
        "AA", "AE", "AH", "AO", "AW", "AY", "EH", "ER", "EY",
        "IH", "IY", "OW", "OY", "UH", "UW",
    },
}

_PHONE_TO_CATEGORY = {
    phone: category for category, phones in _CATEGORY_TABLE.items() for phone in phones
}

_STRESS_DIGITS = re.compile(r"\d+$")

PHONEME_CSV_COLUMNS = (
    "Loss", "Phoneme", "SIR_in", "SIR_out", "SAR_out", "SDR_out",
    "FW-SIR_in", "FW-SIR_out", "FW-SAR_out", "FW-SDR_out",
)


def categorize(phone: str) -> str:
    """Map an ARPAbet phone (stress digits allowed) to its category."""
    key = _STRESS_DIGITS.sub("", phone.strip().upper())
    return _PHONE_TO_CATEGORY.get(key, "other")


@dataclass(frozen=True)
class PhonemeSegment:
    start: float
    end: float
    label: str
    category: str

    def __post_init__(self):
        if not 0.0 <= self.start < self.end:
            raise ValueError(f"segment times must satisfy 0 <= start < end, got ({self.start}, {self.end})")


@dataclass(frozen=True)
class CategoryTable:
    """Per-category metric rows; categories with no samples are absent."""

    rows: dict  # category -> MetricReport

    def ordered(self):
        return [(c, self.rows[c]) for c in CATEGORY_ORDER if c in self.rows]


def load_alignment(path) -> list[PhonemeSegment]:
    """Read, validate and categorize a start,end,phone alignment CSV.

    Rows are sorted by start time; overlapping or reversed segments raise.
    Unknown phones map to "other" (a warning reports how many).
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames[:3]] != ["start", "end", "phone"]:
            raise ValueError(f"{path}: expected header 'start,end,phone', got {reader.fieldnames}")
        segments = []
        unknown = 0
        for row in reader:
            start, end, phone = float(row["start"]), float(row["end"]), row["phone"]
            category = categorize(phone)
            # affricates and silence markers are deliberate "other"s, not typos
            if category == "other" and _STRESS_DIGITS.sub("", phone.strip().upper()) not in ("CH", "JH", "SIL", "SP", "SPN", "NSN"):
                unknown += 1
            segments.append(PhonemeSegment(start, end, phone, category))
    segments.sort(key=lambda s: (s.start, s.end))
    for prev, cur in zip(segments, segments[1:]):
        if cur.start < prev.end - 1e-9:
            raise ValueError(
                f"{path}: segments overlap ({prev.start}-{prev.end} and {cur.start}-{cur.end})"
            )
    if unknown:
        log.warning("load_alignment: %d unknown phone labels mapped to 'other'", unknown)
    return segments


def _category_spans(segments, category: str, sample_rate: int, length: int):
    spans = []
    truncated = 0
    for seg in sorted(segments, key=lambda s: s.start):  # time order is canonical
        if seg.category != category:
            continue
        a = int(round(seg.start * sample_rate))
        b = int(round(seg.end * sample_rate))
        if a >= length:
            truncated += 1
            continue
        if b > length:
            truncated += 1
            b = length
        if b > a:
            spans.append((a, b))
    if truncated:
        log.warning("per_category_metrics: %d %s segment(s) extended past the signal end", truncated, category)
    return spans


def per_category_metrics(
    est,
    mixture,
    clean,
    noise,
    segments,
    cfg: MetricsConfig | None = None,
) -> CategoryTable:
    """MetricReport per phoneme category, measured on the concatenation of
    the category's sample spans. Categories with no samples are omitted."""
    cfg = cfg or MetricsConfig()
    est = as_mono(est, cfg.ref_channel)
    mixture = as_mono(mixture, cfg.ref_channel)
    clean = as_mono(clean, cfg.ref_channel)
    noise = as_mono(noise, cfg.ref_channel)
    length = est.shape[0]

    rows = {}
    for category in CATEGORY_ORDER:
        spans = _category_spans(segments, category, cfg.sample_rate, length)
        if not spans:
            continue
        idx = np.concatenate([np.arange(a, b) for a, b in spans])
        rows[category] = report(
            mixture[idx], est[idx], clean[idx], noise[idx], cfg, include_stoi=False
        )
    return CategoryTable(rows)


def average_tables(tables) -> CategoryTable:
    """Per-corpus table: mean of each category's per-utterance rows.

    Categories appear when at least one utterance contributed a row; dB
    fields average arithmetically (inf propagates), STOI stays omitted.
    """
    rows = {}
    db_fields = (
        "sir_in", "sir_out", "sar_out", "sdr_out",
        "fw_sir_in", "fw_sir_out", "fw_sar_out", "fw_sdr_out",
    )
    for category in CATEGORY_ORDER:
        present = [t.rows[category] for t in tables if category in t.rows]
        if not present:
            continue
        means = {f: float(np.mean([getattr(r, f) for r in present])) for f in db_fields}
        rows[category] = MetricReport(stoi_in=None, stoi_out=None, **means)
    return CategoryTable(rows)


def _fmt(value) -> str:
    if value is None:
        return ""
    if not np.isfinite(value):
        return "inf" if value > 0 else "-inf"
    return "%.6g" % value


def category_table_to_csv(table: CategoryTable, loss_label: str = "") -> str:
    """CSV text with the phoneme-table column order."""
    lines = [",".join(PHONEME_CSV_COLUMNS)]
    for category, row in table.ordered():
        lines.append(
            ",".join(
                [
                    loss_label,
                    category,
                    _fmt(row.sir_in),
                    _fmt(row.sir_out),
                    _fmt(row.sar_out),
                    _fmt(row.sdr_out),
                    _fmt(row.fw_sir_in),
                    _fmt(row.fw_sir_out),
                    _fmt(row.fw_sar_out),
                    _fmt(row.fw_sdr_out),
                ]
            )
        )
    return "\n".join(lines) + "\n"
