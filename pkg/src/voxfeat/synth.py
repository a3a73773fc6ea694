"""Synthetic harmonic-plus-noise signals with exactly known component energies,
and a surrogate 24-configuration dataset.

Surrogate label mapping (a test convention, not physiology):

=================  ==========================================================
subglottal 385/775/1500 Pa  overall amplitude scale 0.5 / 1.0 / 2.0 Pa
GC1 / GC2 / GC3 / GC4       harmonic-to-noise energy 30 / 20 / 12 / 5 dB
asymmetric (0)              extra component at f0/2, 10 % of the fundamental
symmetric (1)               no subharmonic
=================  ==========================================================

All signals: f0 = 148 Hz, 20 harmonics with amplitude 1/k, white noise,
1 s at the default sample rate.

Pink noise is seeded white noise shaped in the frequency domain: the real DFT
of length N is multiplied by ``1/sqrt(k)`` at bin k >= 1 (power ~ 1/f, i.e.
-3 dB per octave), the DC bin is zeroed, and the inverse real DFT returns N
samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    ASYMMETRIC,
    DEFAULT_SAMPLE_RATE,
    GC_TYPES,
    PRESSURE_LEVELS,
    SYMMETRY_VALUES,
    ConfigRecord,
    LabelVector,
    PressureSignal,
    save_manifest,
    save_signal,
)
from .rng import PhiloxStream

NOISE_KINDS = ("white", "pink")

SURROGATE_F0 = 148.0
SURROGATE_HARMONICS = 20
SURROGATE_DURATION = 1.0
SURROGATE_AMPLITUDE = {385: 0.5, 775: 1.0, 1500: 2.0}
SURROGATE_HNR_DB = {1: 30.0, 2: 20.0, 3: 12.0, 4: 5.0}
SURROGATE_SUBHARMONIC = 0.1


@dataclass(frozen=True)
class SynthSpec:
    f0: float = 148.0
    n_harmonics: int = 1
    harmonic_amps: tuple[float, ...] | None = None  # None -> 1/k
    noise_kind: str = "white"
    target_hnr: float = math.inf
    duration: float = 1.0
    sample_rate: float = DEFAULT_SAMPLE_RATE
    seed: int = 0
    subharmonic_amp: float = 0.0  # absolute amplitude of the f0/2 component

    def __post_init__(self):
        if self.f0 <= 0 or self.n_harmonics < 1:
            raise ValueError("f0 must be positive and n_harmonics >= 1")
        if self.f0 * self.n_harmonics >= self.sample_rate / 2:
            raise ValueError(
                f"harmonic {self.n_harmonics} at {self.f0 * self.n_harmonics} Hz aliases "
                f"(Nyquist {self.sample_rate / 2} Hz)"
            )
        if self.duration * self.sample_rate < 2 * self.sample_rate / self.f0:
            raise ValueError("signal must span at least two periods")
        if self.harmonic_amps is not None and len(self.harmonic_amps) != self.n_harmonics:
            raise ValueError("harmonic_amps must have n_harmonics entries")
        if self.noise_kind not in NOISE_KINDS:
            raise ValueError(f"noise_kind must be one of {NOISE_KINDS}")
        if math.isnan(self.target_hnr) or self.target_hnr == -math.inf:
            raise ValueError("target_hnr must be finite or +inf")

    @property
    def amplitudes(self) -> np.ndarray:
        if self.harmonic_amps is None:
            return 1.0 / np.arange(1, self.n_harmonics + 1)
        return np.asarray(self.harmonic_amps, dtype=np.float64)

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate))


def synth_harmonic(spec: SynthSpec) -> PressureSignal:
    """Sum of zero-phase cosines at k*f0 (plus the optional f0/2 component)."""
    n = np.arange(spec.n_samples)
    phase = 2.0 * np.pi * spec.f0 * n / spec.sample_rate
    x = np.zeros(n.size)
    for k, amp in enumerate(spec.amplitudes, start=1):
        x += amp * np.cos(k * phase)
    if spec.subharmonic_amp:
        x += spec.subharmonic_amp * np.cos(0.5 * phase)
    return PressureSignal(x, spec.sample_rate)


def white_noise(n: int, seed: int) -> np.ndarray:
    return PhiloxStream(seed).normal(n)


def pink_noise(n: int, seed: int) -> np.ndarray:
    spec = np.fft.rfft(white_noise(n, seed))
    k = np.arange(spec.size, dtype=np.float64)
    k[0] = np.inf
    return np.fft.irfft(spec / np.sqrt(k), n)


def noise(kind: str, n: int, seed: int) -> np.ndarray:
    if kind == "white":
        return white_noise(n, seed)
    if kind == "pink":
        return pink_noise(n, seed)
    raise ValueError(f"unknown noise kind {kind!r}")


def scaled_noise(harmonic: np.ndarray, noise_kind: str, target_hnr: float, seed: int) -> np.ndarray:
    """Noise realisation scaled to ``10 log10(E_h / E_n) == target_hnr``."""
    e_h = float(np.dot(harmonic, harmonic))
    if e_h == 0:
        raise ValueError("harmonic component has zero energy")
    w = noise(noise_kind, harmonic.size, seed)
    e_w = float(np.dot(w, w))
    return w * math.sqrt(e_h / (e_w * 10.0 ** (target_hnr / 10.0)))


def synth_mix(
    harmonic: PressureSignal, noise_kind: str = "white", target_hnr: float = math.inf, seed: int = 0
) -> PressureSignal:
    """Add seeded noise at an exact harmonic-to-noise energy ratio (dB).

    ``target_hnr=math.inf`` returns the harmonic signal unchanged.
    """
    if math.isnan(target_hnr) or target_hnr == -math.inf:
        raise ValueError("target_hnr must be finite or +inf")
    h = harmonic.samples
    if not np.any(h):
        raise ValueError("harmonic component has zero energy")
    if target_hnr == math.inf:
        return harmonic
    return harmonic.with_samples(h + scaled_noise(h, noise_kind, target_hnr, seed))


def synthesize(spec: SynthSpec) -> PressureSignal:
    return synth_mix(synth_harmonic(spec), spec.noise_kind, spec.target_hnr, spec.seed)


def pulse_train(f0: float, duration: float, sample_rate: float = DEFAULT_SAMPLE_RATE) -> PressureSignal:
    """Unit impulses at the sample nearest each period start."""
    n = int(round(duration * sample_rate))
    x = np.zeros(n)
    idx = np.round(np.arange(0.0, n / sample_rate * f0) * sample_rate / f0).astype(int)
    x[idx[idx < n]] = 1.0
    return PressureSignal(x, sample_rate)


# -- surrogate dataset ---------------------------------------------------------

def surrogate_labels() -> list[LabelVector]:
    """Full 3 x 4 x 2 factorial, pressure outermost, symmetry innermost."""
    return [LabelVector(p, g, s) for p in PRESSURE_LEVELS for g in GC_TYPES for s in SYMMETRY_VALUES]


def surrogate_id(label: LabelVector) -> str:
    sym = "asym" if label.symmetry == ASYMMETRIC else "sym"
    return f"p{label.subglottal_pressure}_gc{label.gc_type}_{sym}"


def surrogate_signal(label: LabelVector, seed: int, sample_rate: float = DEFAULT_SAMPLE_RATE) -> PressureSignal:
    spec = SynthSpec(
        f0=SURROGATE_F0,
        n_harmonics=SURROGATE_HARMONICS,
        noise_kind="white",
        target_hnr=SURROGATE_HNR_DB[label.gc_type],
        duration=SURROGATE_DURATION,
        sample_rate=sample_rate,
        seed=seed,
        subharmonic_amp=SURROGATE_SUBHARMONIC if label.symmetry == ASYMMETRIC else 0.0,
    )
    x = synthesize(spec)
    return x.with_samples(SURROGATE_AMPLITUDE[label.subglottal_pressure] * x.samples)


def synth_surrogate_dataset(
    seed: int = 0,
    out_dir: str | Path | None = None,
    sample_rate: float = DEFAULT_SAMPLE_RATE,
) -> list[tuple[ConfigRecord, PressureSignal]]:
    """The 24 surrogate configurations; written to ``out_dir`` when given.

    Configuration ``i`` (0-based, factorial order) draws its noise from seed
    ``64 * seed + i``. Files: ``signals/<id>.f64`` (little-endian float64) with
    a JSON sidecar, and ``manifest.csv``.
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        (out / "signals").mkdir(parents=True, exist_ok=True)
    items = []
    for i, label in enumerate(surrogate_labels()):
        rid = surrogate_id(label)
        sig = surrogate_signal(label, 64 * seed + i, sample_rate)
        path = Path("signals") / f"{rid}.f64"
        if out is not None:
            save_signal(sig, out / path)
            path = out / path
        items.append((ConfigRecord(rid, path, label), sig))
    if out is not None:
        save_manifest(
            [rec for rec, _ in items],
            out / "manifest.csv",
            comment=(
                f"surrogate dataset, seed={seed}, sample_rate_hz={sample_rate:g}\n"
                "synthetic harmonic-plus-noise signals; labels map to amplitude, noise level and subharmonic"
            ),
        )
    return items


def check_energy_ratio(harmonic: Sequence[float], noise_part: Sequence[float]) -> float:
    """Realised 10 log10(E_h / E_n) of two components."""
    h = np.asarray(harmonic, dtype=np.float64)
    w = np.asarray(noise_part, dtype=np.float64)
    return 10.0 * math.log10(float(np.dot(h, h)) / float(np.dot(w, w)))
