"""Acoustic voice features and the 9-element feature vector.

Feature order (after a 5 kHz and a 2 kHz low-pass branch)::

    spl_5k, hnr_5k, hnr_2k, cpp_5k, cpp_2k, slope_5k, slope_2k, hbi_5k, alpha_5k
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d

from . import dsp
from .core import (
    FEATURE_NAMES,
    LABEL_NAMES,
    REFERENCE_PRESSURE,
    FeatureVector,
    InputError,
    LabelVector,
    PressureSignal,
)


class FeatureError(ValueError):
    """A single feature could not be computed; ``feature`` names it."""

    def __init__(self, feature: str, message: str):
        super().__init__(f"{feature}: {message}")
        self.feature = feature


@dataclass(frozen=True)
class FeatureConfig:
    """Extraction parameters. Frequencies in Hz, quefrencies in seconds.

    ``hnr_margin_seconds`` overrides ``hnr_margin_bins`` when set.
    ``cpp_band_limit`` restricts the CPP cepstrum of each low-pass branch to
    that branch's pass band (bins up to the cut-off).
    ``hnr_normalized=False`` selects the raw (un-normalised) ACF ratio and a
    search over every lag; the default divides each lag by the geometric mean
    energy of the overlapping segments and searches lags up to
    ``hnr_max_lag_fraction * N``. ``cpp_smoothing_quefrency=0`` disables the
    quefrency smoothing of the power cepstrum.
    """

    hnr_margin_bins: int = 300
    hnr_margin_seconds: float | None = None
    hnr_normalized: bool = True
    hnr_max_lag_fraction: float = 0.5
    cpp_fit_min_quefrency: float = 1e-3
    cpp_search_max_quefrency: float = 20e-3
    cpp_smoothing_quefrency: float = 0.5e-3
    cpp_band_limit: bool = True
    hbi_pivot: float = 2000.0
    hbi_max: float = 5000.0
    alpha_start: float = 50.0
    alpha_pivot: float = 1000.0
    alpha_max: float = 5000.0
    lp_primary: float = 5000.0
    lp_secondary: float = 2000.0
    welch_segment_len: int | None = None
    welch_overlap: float = 0.5
    welch_window: str = "hann"
    db_floor: float = dsp.DB_FLOOR

    def __post_init__(self):
        if self.hnr_margin_bins <= 0:
            raise ValueError("hnr_margin_bins must be positive")
        if self.hnr_margin_seconds is not None and self.hnr_margin_seconds <= 0:
            raise ValueError("hnr_margin_seconds must be positive")
        if not 0 < self.hnr_max_lag_fraction <= 1:
            raise ValueError("hnr_max_lag_fraction must be in (0, 1]")
        if self.cpp_smoothing_quefrency < 0:
            raise ValueError("cpp_smoothing_quefrency must be non-negative")
        if not 0 < self.cpp_fit_min_quefrency < self.cpp_search_max_quefrency:
            raise ValueError("need 0 < cpp_fit_min_quefrency < cpp_search_max_quefrency")
        for name in ("hbi_pivot", "hbi_max", "alpha_start", "alpha_pivot", "alpha_max", "lp_primary", "lp_secondary"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.hbi_pivot < self.hbi_max:
            raise ValueError("hbi_pivot must be below hbi_max")
        if not self.alpha_start < self.alpha_pivot < self.alpha_max:
            raise ValueError("alpha band edges must increase")

    def check_sample_rate(self, sample_rate: float) -> None:
        nyq = sample_rate / 2
        for name in ("hbi_max", "alpha_max", "lp_primary", "lp_secondary"):
            if getattr(self, name) >= nyq:
                raise ValueError(f"{name}={getattr(self, name)} Hz is not below Nyquist ({nyq} Hz)")

    def margin_lags(self, sample_rate: float) -> int:
        if self.hnr_margin_seconds is not None:
            return max(1, int(round(self.hnr_margin_seconds * sample_rate)))
        return self.hnr_margin_bins

    def updated(self, **changes) -> "FeatureConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})

    def to_dict(self) -> dict:
        return asdict(self)


DEFAULT_CONFIG = FeatureConfig()


def _require_nonempty(signal: PressureSignal) -> np.ndarray:
    if len(signal) == 0:
        raise ValueError("empty signal")
    return signal.samples


# -- level -------------------------------------------------------------------

def spl(signal: PressureSignal) -> float:
    """Sound pressure level of the RMS pressure, dB re 20 uPa."""
    x = _require_nonempty(signal)
    rms = math.sqrt(float(np.dot(x, x)) / x.size)
    if rms == 0:
        raise ValueError("SPL of an all-zero signal is undefined")
    return 20.0 * math.log10(rms / REFERENCE_PRESSURE)


# -- harmonics-to-noise ratio ------------------------------------------------

def hnr(signal: PressureSignal, cfg: FeatureConfig = DEFAULT_CONFIG) -> float:
    """Harmonics-to-noise ratio in dB from the autocorrelation peak.

    ``h = 10 log10(m / (r0 - m))`` where ``m`` is the largest ACF value at
    lags from the margin upward. See :class:`FeatureConfig` for the
    normalised (default) and raw variants.
    """
    x = _require_nonempty(signal)
    n = x.size
    margin = cfg.margin_lags(signal.sample_rate)
    r = dsp.autocorrelation(x).values
    if r[0] <= 0:
        raise ValueError("HNR of an all-zero signal is undefined")

    if cfg.hnr_normalized:
        max_lag = int(n * cfg.hnr_max_lag_fraction)
        if max_lag <= margin:
            raise ValueError(f"signal of {n} samples too short for a {margin}-lag margin")
        lags = slice(margin, max_lag + 1)
        head, tail = dsp.overlap_energies(x)
        denom = np.sqrt(head[lags] * tail[lags])
        with np.errstate(invalid="ignore", divide="ignore"):
            rho = np.where(denom > 0, r[lags] / denom, 0.0)
        peak, total = float(rho.max()), 1.0
    else:
        if n <= margin:
            raise ValueError(f"signal of {n} samples too short for a {margin}-lag margin")
        peak, total = float(r[margin:].max()), float(r[0])

    if peak >= total:
        raise ValueError("degenerate ACF: lagged peak reaches the zero-lag energy")
    if peak <= 0:
        raise ValueError("degenerate ACF: no positive correlation beyond the margin")
    return 10.0 * math.log10(peak / (total - peak))


# -- cepstral peak prominence ------------------------------------------------

@dataclass(frozen=True)
class CppResult:
    value: float
    peak_quefrency: float
    slope: float
    intercept: float


def _welch(signal: PressureSignal, cfg: FeatureConfig) -> dsp.SpectralEstimate:
    return dsp.welch_psd(signal, cfg.welch_segment_len, cfg.welch_overlap, cfg.welch_window)


def smoothed_cepstrum(spec: dsp.SpectralEstimate, cfg: FeatureConfig = DEFAULT_CONFIG) -> dsp.CepstrumSeries:
    """Cepstrum with an optional moving average over quefrency.

    The average is taken on power (before the log) over an odd number of
    bins spanning ``cfg.cpp_smoothing_quefrency``.
    """
    cep = dsp.cepstrum(spec, cfg.db_floor)
    width = int(round(cfg.cpp_smoothing_quefrency / cep.quefrency_step)) | 1
    if cfg.cpp_smoothing_quefrency == 0 or width <= 1:
        return cep
    power = 10.0 ** (cep.values / 10.0)
    smooth = uniform_filter1d(power, width, mode="nearest")
    # running sums can cancel to <= 0 beside the large q = 0 term
    smooth = np.maximum(smooth, 10.0 ** (dsp.CEPSTRUM_FLOOR_DB / 10.0))
    return dsp.CepstrumSeries(10.0 * np.log10(smooth), cep.quefrency_step)


def band_limited(spec: dsp.SpectralEstimate, max_freq: float | None) -> dsp.SpectralEstimate:
    """Bins with ``f <= max_freq`` (the whole estimate when ``max_freq`` is None)."""
    if max_freq is None:
        return spec
    keep = int(np.flatnonzero(spec.frequencies <= max_freq)[-1]) + 1
    return dsp.SpectralEstimate(spec.magnitudes[:keep], spec.bin_hz)


def cpp_detail(
    signal: PressureSignal, cfg: FeatureConfig = DEFAULT_CONFIG, max_freq: float | None = None
) -> CppResult:
    _require_nonempty(signal)
    cep = smoothed_cepstrum(band_limited(_welch(signal, cfg), max_freq), cfg)
    q = cep.quefrencies
    c = cep.values
    fit_mask = q > cfg.cpp_fit_min_quefrency
    search = np.flatnonzero((q >= cfg.cpp_fit_min_quefrency) & (q <= cfg.cpp_search_max_quefrency))
    if search.size == 0 or np.count_nonzero(fit_mask) < 2:
        raise ValueError(
            f"quefrency window [{cfg.cpp_fit_min_quefrency}, {cfg.cpp_search_max_quefrency}] s "
            f"is empty on an axis reaching {q[-1]:.4g} s"
        )
    line = dsp.fit_line(q[fit_mask], c[fit_mask])
    peak = search[np.argmax(c[search])]
    value = c[peak] - (line.slope * q[peak] + line.intercept)
    return CppResult(float(value), float(q[peak]), line.slope, line.intercept)


def cpp(signal: PressureSignal, cfg: FeatureConfig = DEFAULT_CONFIG, max_freq: float | None = None) -> float:
    """Cepstral peak prominence in dB.

    The line is fitted to the cepstrum above ``cfg.cpp_fit_min_quefrency``;
    the peak is searched up to ``cfg.cpp_search_max_quefrency``. ``max_freq``
    truncates the spectrum before the cepstrum is taken.
    """
    return cpp_detail(signal, cfg, max_freq).value


# -- spectral shape ----------------------------------------------------------

def spectral_slope(spec: dsp.SpectralEstimate) -> float:
    """Slope of the least-squares line through the amplitude spectrum, per Hz."""
    return dsp.fit_line_bins(spec.magnitudes).slope / spec.bin_hz


def _band_edges(spec: dsp.SpectralEstimate, pivot: float, fmax: float, start: float | None = None):
    f = spec.frequencies
    if f[-1] < fmax:
        raise ValueError(f"spectrum ends at {f[-1]:.6g} Hz, below the {fmax} Hz band edge")
    k_start = 1 if start is None else int(np.flatnonzero(f >= start)[0])
    k_pivot = int(np.flatnonzero(f <= pivot)[-1])
    k_max = int(np.flatnonzero(f <= fmax)[-1])
    if not k_start <= k_pivot < k_max:
        raise ValueError("frequency bands contain no bins at this resolution")
    return k_start, k_pivot, k_max


def hammarberg_ratio(spec: dsp.SpectralEstimate, pivot: float = 2000.0, fmax: float = 5000.0) -> float:
    k1, kp, km = _band_edges(spec, pivot, fmax)
    low = spec.magnitudes[k1:kp + 1].max()
    high = spec.magnitudes[kp + 1:km + 1].max()
    if high <= 0:
        raise ValueError(f"no spectral energy between {pivot} and {fmax} Hz")
    if low <= 0:
        raise ValueError(f"no spectral energy below {pivot} Hz")
    return float(low / high)


def hammarberg_index(spec: dsp.SpectralEstimate, pivot: float = 2000.0, fmax: float = 5000.0) -> float:
    """Peak amplitude below ``pivot`` over peak amplitude in (pivot, fmax], in dB."""
    return 20.0 * math.log10(hammarberg_ratio(spec, pivot, fmax))


def alpha_ratio_linear(
    spec: dsp.SpectralEstimate, start: float = 50.0, pivot: float = 1000.0, fmax: float = 5000.0
) -> float:
    k0, kp, km = _band_edges(spec, pivot, fmax, start)
    low = spec.magnitudes[k0:kp + 1].sum()
    high = spec.magnitudes[kp + 1:km + 1].sum()
    if high <= 0:
        raise ValueError(f"no spectral energy between {pivot} and {fmax} Hz")
    if low <= 0:
        raise ValueError(f"no spectral energy between {start} and {pivot} Hz")
    return float(low / high)


def alpha_ratio(
    spec: dsp.SpectralEstimate, start: float = 50.0, pivot: float = 1000.0, fmax: float = 5000.0
) -> float:
    """Summed amplitude in [start, pivot] over (pivot, fmax], in dB."""
    return 20.0 * math.log10(alpha_ratio_linear(spec, start, pivot, fmax))


# -- feature vector ----------------------------------------------------------

def _tagged(name, fn, *args):
    try:
        return fn(*args)
    except FeatureError:
        raise
    except (ValueError, FloatingPointError) as exc:
        raise FeatureError(name, str(exc)) from exc


def extract_features_detailed(
    signal: PressureSignal, cfg: FeatureConfig = DEFAULT_CONFIG
) -> tuple[FeatureVector, dict[str, float]]:
    """Feature vector plus diagnostics (peak quefrencies, linear HBI/alpha)."""
    if len(signal) == 0:
        raise FeatureError("signal", "empty signal")
    try:
        cfg.check_sample_rate(signal.sample_rate)
    except ValueError as exc:
        raise FeatureError("config", str(exc)) from None

    # both branches filter the original signal
    x5 = _tagged("lowpass_5k", dsp.lowpass, signal, cfg.lp_primary)
    x2 = _tagged("lowpass_2k", dsp.lowpass, signal, cfg.lp_secondary)
    spec5 = _tagged("welch_5k", _welch, x5, cfg)
    spec2 = _tagged("welch_2k", _welch, x2, cfg)
    band5 = cfg.lp_primary if cfg.cpp_band_limit else None
    band2 = cfg.lp_secondary if cfg.cpp_band_limit else None
    cpp5 = _tagged("cpp_5k", cpp_detail, x5, cfg, band5)
    cpp2 = _tagged("cpp_2k", cpp_detail, x2, cfg, band2)
    hbi_lin = _tagged("hbi_5k", hammarberg_ratio, spec5, cfg.hbi_pivot, cfg.hbi_max)
    alpha_lin = _tagged("alpha_5k", alpha_ratio_linear, spec5, cfg.alpha_start, cfg.alpha_pivot, cfg.alpha_max)

    vec = FeatureVector(
        spl_5k=_tagged("spl_5k", spl, x5),
        hnr_5k=_tagged("hnr_5k", hnr, x5, cfg),
        hnr_2k=_tagged("hnr_2k", hnr, x2, cfg),
        cpp_5k=cpp5.value,
        cpp_2k=cpp2.value,
        slope_5k=_tagged("slope_5k", spectral_slope, spec5),
        slope_2k=_tagged("slope_2k", spectral_slope, spec2),
        hbi_5k=20.0 * math.log10(hbi_lin),
        alpha_5k=20.0 * math.log10(alpha_lin),
    )
    diag = {
        "cpp_5k_quefrency_s": cpp5.peak_quefrency,
        "cpp_2k_quefrency_s": cpp2.peak_quefrency,
        "hbi_5k_linear": hbi_lin,
        "alpha_5k_linear": alpha_lin,
    }
    return vec, diag


def extract_features(signal: PressureSignal, cfg: FeatureConfig = DEFAULT_CONFIG) -> FeatureVector:
    """All nine features of one signal."""
    return extract_features_detailed(signal, cfg)[0]


# -- tables ------------------------------------------------------------------

def fmt(value: float) -> str:
    """9 significant digits, locale independent."""
    return f"{float(value):.9g}"


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Per-configuration features with their labels (rows in manifest order)."""

    ids: tuple[str, ...]
    labels: np.ndarray  # (n, 3) int: pressure_pa, gc_type, symmetry
    features: np.ndarray  # (n, 9)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).reshape(-1, len(LABEL_NAMES))
        feats = np.asarray(self.features, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
        if not len(self.ids) == labels.shape[0] == feats.shape[0]:
            raise ValueError("ids, labels and features must have the same number of rows")
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", feats)

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[str, LabelVector, FeatureVector]]) -> "FeatureTable":
        return cls(
            tuple(r[0] for r in rows),
            np.array([r[1].as_tuple() for r in rows], dtype=np.int64).reshape(-1, 3),
            np.array([r[2].as_array() for r in rows], dtype=np.float64).reshape(-1, 9),
        )

    def label_column(self, name: str) -> np.ndarray:
        try:
            return self.labels[:, LABEL_NAMES.index(name)]
        except ValueError:
            raise InputError(f"unknown label {name!r}; expected one of {LABEL_NAMES}") from None

    def feature_column(self, name: str) -> np.ndarray:
        try:
            return self.features[:, FEATURE_NAMES.index(name)]
        except ValueError:
            raise InputError(f"unknown feature {name!r}") from None

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("id", *LABEL_NAMES, *FEATURE_NAMES))
        for rid, lab, feat in zip(self.ids, self.labels, self.features):
            writer.writerow((rid, *(str(int(v)) for v in lab), *(fmt(v) for v in feat)))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        return text

    def to_json(self, path: str | os.PathLike | None = None, diagnostics: Sequence[dict] | None = None) -> str:
        records = []
        for i, (rid, lab, feat) in enumerate(zip(self.ids, self.labels, self.features)):
            rec = {"id": rid, "labels": dict(zip(LABEL_NAMES, (int(v) for v in lab)))}
            rec["features"] = {n: float(fmt(v)) for n, v in zip(FEATURE_NAMES, feat)}
            if diagnostics is not None:
                rec["diagnostics"] = {k: float(fmt(v)) for k, v in sorted(diagnostics[i].items())}
            records.append(rec)
        text = json.dumps(records, indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        return text

    @classmethod
    def read_csv(cls, path: str | os.PathLike) -> "FeatureTable":
        path = Path(path)
        if not path.exists():
            raise InputError(f"feature table not found: {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            expected = ("id", *LABEL_NAMES, *FEATURE_NAMES)
            if tuple(reader.fieldnames or ()) != expected:
                raise InputError(f"{path}: expected columns {expected}, got {reader.fieldnames}")
            ids, labels, feats = [], [], []
            for row in reader:
                ids.append(row["id"])
                try:
                    labels.append([int(row[n]) for n in LABEL_NAMES])
                    feats.append([float(row[n]) for n in FEATURE_NAMES])
                except ValueError as exc:
                    raise InputError(f"{path}: row {row['id']!r}: {exc}") from None
        return cls(tuple(ids), np.array(labels, dtype=np.int64).reshape(-1, 3), np.array(feats).reshape(-1, 9))
