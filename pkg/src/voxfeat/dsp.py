"""Signal-processing kernels: low-pass filter, autocorrelation, Welch PSD,
cepstrum, and least-squares line fitting."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import signal as sps

from .core import REFERENCE_PRESSURE, PressureSignal

DB_FLOOR = -200.0  # dB substituted for zero-magnitude bins before the cepstrum
CEPSTRUM_FLOOR_DB = -200.0
DIRECT_ACF_MAX_LEN = 8192

LOWPASS_ATTENUATION_DB = 65.0
LOWPASS_TRANSITION = 0.3  # transition width as a fraction of the cut-off


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    """One-sided amplitude spectrum ``sqrt(PSD)`` with its dB-SPL image."""

    magnitudes: np.ndarray
    bin_hz: float

    def __post_init__(self):
        if not self.bin_hz > 0:
            raise ValueError("bin_hz must be positive")
        mags = np.asarray(self.magnitudes, dtype=np.float64).reshape(-1)
        if np.any(mags < 0):
            raise ValueError("magnitudes must be non-negative")
        mags.flags.writeable = False
        object.__setattr__(self, "magnitudes", mags)

    @property
    def n_bins(self) -> int:
        return self.magnitudes.size

    @property
    def frequencies(self) -> np.ndarray:
        return np.arange(self.n_bins) * self.bin_hz

    @property
    def magnitudes_db(self) -> np.ndarray:
        """20 log10(p/p0); zero bins map to -inf."""
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(self.magnitudes / REFERENCE_PRESSURE)

    def floored_db(self, floor: float = DB_FLOOR) -> np.ndarray:
        return np.maximum(self.magnitudes_db, floor)


@dataclass(frozen=True, eq=False)
class AcfSeries:
    values: np.ndarray  # lags 0 .. N-1, in samples

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True, eq=False)
class CepstrumSeries:
    values: np.ndarray
    quefrency_step: float  # seconds per bin

    @property
    def quefrencies(self) -> np.ndarray:
        return np.arange(self.values.size) * self.quefrency_step


class LineFit(NamedTuple):
    slope: float
    intercept: float


# -- low-pass ----------------------------------------------------------------

@lru_cache(maxsize=32)
def lowpass_taps(cutoff: float, sample_rate: float) -> np.ndarray:
    """Kaiser-windowed sinc, odd length, -6 dB at ``cutoff``.

    The transition band spans ``cutoff * (1 -+ LOWPASS_TRANSITION/2)``, narrowed
    if it would cross Nyquist.
    """
    nyq = sample_rate / 2.0
    width = min(LOWPASS_TRANSITION * cutoff, 1.8 * (nyq - cutoff))
    numtaps, beta = sps.kaiserord(LOWPASS_ATTENUATION_DB, width / nyq)
    numtaps |= 1
    taps = sps.firwin(numtaps, cutoff, window=("kaiser", beta), fs=sample_rate)
    taps.flags.writeable = False
    return taps


def lowpass(signal: PressureSignal, cutoff: float) -> PressureSignal:
    """Zero-phase linear-phase FIR low-pass.

    Edges are extended by odd reflection about the end samples before the
    convolution so that start-up transients stay below the stopband level.
    """
    if not 0 < cutoff < signal.sample_rate / 2:
        raise ValueError(f"cut-off {cutoff} Hz must lie in (0, {signal.sample_rate / 2}) Hz")
    x = signal.samples
    if x.size == 0:
        return signal
    taps = lowpass_taps(float(cutoff), float(signal.sample_rate))
    half = taps.size // 2
    padded = np.pad(x, half, mode="reflect", reflect_type="odd") if x.size > 1 else np.pad(x, half, mode="edge")
    y = sps.fftconvolve(padded, taps, mode="valid")
    return signal.with_samples(y)


# -- autocorrelation ---------------------------------------------------------

def _acf_direct(x: np.ndarray) -> np.ndarray:
    return np.correlate(x, x, mode="full")[x.size - 1:]


def _acf_fft(x: np.ndarray) -> np.ndarray:
    n = x.size
    nfft = 1 << (2 * n - 1).bit_length()
    spec = np.fft.rfft(x, nfft)
    return np.fft.irfft(spec.real ** 2 + spec.imag ** 2, nfft)[:n]


def autocorrelation(signal: PressureSignal | np.ndarray, method: str = "auto") -> AcfSeries:
    """Raw ACF ``r(tau) = sum_n p[n] p[n + tau]`` for lags 0..N-1.

    Samples past the end count as zero; no normalisation is applied.
    ``method`` is ``"direct"``, ``"fft"`` or ``"auto"`` (direct up to
    ``DIRECT_ACF_MAX_LEN`` samples).
    """
    x = signal.samples if isinstance(signal, PressureSignal) else np.asarray(signal, dtype=np.float64)
    if x.size == 0:
        raise ValueError("autocorrelation of an empty signal")
    if method == "auto":
        method = "direct" if x.size <= DIRECT_ACF_MAX_LEN else "fft"
    if method == "direct":
        r = _acf_direct(x)
    elif method == "fft":
        r = _acf_fft(x)
    else:
        raise ValueError(f"unknown ACF method {method!r}")
    return AcfSeries(r)


def overlap_energies(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Energies of the two overlapping parts at each lag.

    Returns ``(head, tail)`` with ``head[tau] = sum_{n < N-tau} x[n]**2`` and
    ``tail[tau] = sum_{n >= tau} x[n]**2``.
    """
    sq = np.asarray(x, dtype=np.float64) ** 2
    head = np.cumsum(sq)[::-1]
    tail = np.cumsum(sq[::-1])[::-1]
    return head, tail


# -- spectra -----------------------------------------------------------------

def default_segment_len(sample_rate: float) -> int:
    """Power of two nearest to a quarter second of samples."""
    return 1 << int(round(math.log2(sample_rate / 4.0)))


def welch_psd(
    signal: PressureSignal,
    segment_len: int | None = None,
    overlap: float = 0.5,
    window: str = "hann",
) -> SpectralEstimate:
    """Welch-averaged one-sided PSD, returned as amplitudes ``sqrt(PSD)``.

    Density scaling: ``sum(magnitudes**2) * bin_hz`` approximates the signal's
    mean power. With ``segment_len=None`` the default segment is shortened to
    the largest power of two that fits short signals.
    """
    n = len(signal)
    if n == 0:
        raise ValueError("empty signal")
    if segment_len is None:
        segment_len = default_segment_len(signal.sample_rate)
        if segment_len > n:
            segment_len = 1 << (n.bit_length() - 1)
    if segment_len > n:
        raise ValueError(f"segment length {segment_len} exceeds signal length {n}")
    if segment_len < 2:
        raise ValueError("segment length must be at least 2")
    if not 0 <= overlap < 1:
        raise ValueError("overlap must be in [0, 1)")
    noverlap = int(round(overlap * segment_len))
    _, psd = sps.welch(
        signal.samples,
        fs=signal.sample_rate,
        window=window,
        nperseg=segment_len,
        noverlap=noverlap,
        detrend=False,
        return_onesided=True,
        scaling="density",
    )
    return SpectralEstimate(np.sqrt(np.maximum(psd, 0.0)), signal.sample_rate / segment_len)


def cepstrum(spec: SpectralEstimate, floor_db: float = DB_FLOOR) -> CepstrumSeries:
    """Power cepstrum ``10 log10 |DFT(p_dB[k])|**2`` of a one-sided spectrum.

    The dB spectrum is mirrored to its full even-symmetric length
    ``M = 2 (n_bins - 1)`` before the DFT; quefrencies 0..M/2 are returned,
    spaced by ``1 / (M * bin_hz)`` seconds.
    """
    if spec.n_bins < 2:
        raise ValueError("cepstrum needs at least 2 spectral bins")
    db = spec.floored_db(floor_db)
    full = np.fft.hfft(db)
    m = full.size
    power = full[: m // 2 + 1] ** 2
    floor = 10.0 ** (CEPSTRUM_FLOOR_DB / 10.0)
    values = 10.0 * np.log10(np.maximum(power, floor))
    return CepstrumSeries(values, 1.0 / (m * spec.bin_hz))


# -- regression --------------------------------------------------------------

def equidistant_sums(n: int) -> tuple[int, int]:
    """Closed forms of sum(k) and sum(k**2) for k = 0..n-1."""
    return n * (n - 1) // 2, n * (n - 1) * (2 * n - 1) // 6


def _line_from_sums(n, sx, sy, sxy, sxx) -> LineFit:
    denom = n * sxx - sx * sx
    if denom == 0:
        raise ValueError("line fit needs x values with non-zero spread")
    slope = (n * sxy - sx * sy) / denom
    return LineFit(float(slope), float((sy - slope * sx) / n))


def fit_line(x: Sequence[float], y: Sequence[float]) -> LineFit:
    """Least-squares line ``y ~ slope * x + intercept``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D sequences of equal length")
    if x.size < 2:
        raise ValueError("line fit needs at least 2 points")
    n = x.size
    # centre x first; the raw-sum formula loses digits when mean(x) >> std(x)
    x0 = x.mean()
    xc = x - x0
    fit = _line_from_sums(n, xc.sum(), y.sum(), np.dot(xc, y), np.dot(xc, xc))
    if not np.isfinite(fit.slope):
        raise ValueError("line fit needs x values with non-zero spread")
    return LineFit(fit.slope, fit.intercept - fit.slope * x0)


def fit_line_bins(y: Sequence[float]) -> LineFit:
    """Line fit against the bin index 0..N-1 using the closed-form x sums."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if n < 2:
        raise ValueError("line fit needs at least 2 points")
    sx, sxx = equidistant_sums(n)
    k = np.arange(n, dtype=np.float64)
    return _line_from_sums(n, float(sx), y.sum(), np.dot(k, y), float(sxx))
