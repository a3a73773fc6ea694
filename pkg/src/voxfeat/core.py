"""Domain types and signal / manifest I/O."""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.io import wavfile

log = logging.getLogger(__name__)

REFERENCE_PRESSURE = 20e-6  # Pa
# 1 / 13.6 us, rounded to the nearest Hz
DEFAULT_SAMPLE_RATE = round(1e6 / 13.6)

PRESSURE_LEVELS = (385, 775, 1500)
GC_TYPES = (1, 2, 3, 4)
ASYMMETRIC, SYMMETRIC = 0, 1
SYMMETRY_VALUES = (ASYMMETRIC, SYMMETRIC)

LABEL_NAMES = ("pressure_pa", "gc_type", "symmetry")
FEATURE_NAMES = (
    "spl_5k",
    "hnr_5k",
    "hnr_2k",
    "cpp_5k",
    "cpp_2k",
    "slope_5k",
    "slope_2k",
    "hbi_5k",
    "alpha_5k",
)
MANIFEST_COLUMNS = ("id", "signal_path", "pressure_pa", "gc_type", "symmetry")

SIGNAL_FORMATS = ("wav_float", "raw_float64", "csv")
_EXTENSIONS = {
    ".wav": "wav_float",
    ".f64": "raw_float64",
    ".raw": "raw_float64",
    ".bin": "raw_float64",
    ".csv": "csv",
    ".txt": "csv",
}


class InputError(ValueError):
    """Malformed or out-of-range input (files, manifests, labels)."""


@dataclass(frozen=True, eq=False)
class PressureSignal:
    """Uniformly sampled acoustic pressure in Pa."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        x = np.array(self.samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise InputError("non-finite sample in signal")
        if not (np.isfinite(self.sample_rate) and self.sample_rate > 0):
            raise InputError(f"sample rate must be positive, got {self.sample_rate!r}")
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", float(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    def with_samples(self, samples: np.ndarray) -> "PressureSignal":
        return PressureSignal(samples, self.sample_rate)


@dataclass(frozen=True)
class LabelVector:
    subglottal_pressure: int
    gc_type: int
    symmetry: int

    def __post_init__(self):
        for name, value, allowed in (
            ("subglottal_pressure", self.subglottal_pressure, PRESSURE_LEVELS),
            ("gc_type", self.gc_type, GC_TYPES),
            ("symmetry", self.symmetry, SYMMETRY_VALUES),
        ):
            if value not in allowed:
                raise InputError(f"label out of range: {name}={value!r}, expected one of {allowed}")

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.subglottal_pressure, self.gc_type, self.symmetry)


@dataclass(frozen=True)
class ConfigRecord:
    id: str
    signal_path: Path
    label: LabelVector


@dataclass(frozen=True)
class FeatureVector:
    spl_5k: float
    hnr_5k: float
    hnr_2k: float
    cpp_5k: float
    cpp_2k: float
    slope_5k: float
    slope_2k: float
    hbi_5k: float
    alpha_5k: float

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=np.float64)

    def as_dict(self) -> dict[str, float]:
        return {n: float(getattr(self, n)) for n in FEATURE_NAMES}

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {len(values)}")
        return cls(*(float(v) for v in values))


def _parse_int_label(raw: str, column: str) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise InputError(f"label out of range: {column}={raw!r} is not numeric") from None
    if not value.is_integer():
        raise InputError(f"label out of range: {column}={raw!r}")
    return int(value)


# -- signals ---------------------------------------------------------------

def infer_format(path: str | os.PathLike) -> str:
    ext = Path(path).suffix.lower()
    try:
        return _EXTENSIONS[ext]
    except KeyError:
        raise InputError(f"cannot infer signal format from extension {ext!r}") from None


def sidecar_path(path: str | os.PathLike) -> Path:
    return Path(str(path) + ".json")


def _sidecar_rate(path: Path) -> float | None:
    side = sidecar_path(path)
    if not side.exists():
        return None
    try:
        meta = json.loads(side.read_text(encoding="utf-8"))
        return float(meta["sample_rate"])
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"malformed sidecar metadata {side}: {exc}") from None


def load_signal(
    path: str | os.PathLike,
    format: str | None = None,
    sample_rate: float | None = None,
) -> PressureSignal:
    """Read a pressure signal from disk.

    Headerless formats (``raw_float64``, ``csv``) take their sample rate from
    ``sample_rate`` or, failing that, from a ``<path>.json`` sidecar holding
    ``{"sample_rate": ...}``. For WAV the header rate wins unless
    ``sample_rate`` is given explicitly.
    """
    path = Path(path)
    fmt = format or infer_format(path)
    if fmt not in SIGNAL_FORMATS:
        raise InputError(f"unknown signal format {fmt!r}")
    if not path.exists():
        raise InputError(f"signal file not found: {path}")

    if fmt == "wav_float":
        try:
            rate, data = wavfile.read(path)
        except ValueError as exc:
            raise InputError(f"malformed WAV header in {path}: {exc}") from None
        if data.ndim != 1:
            raise InputError(f"{path}: multi-channel audio is not supported")
        if data.dtype.kind != "f":
            raise InputError(f"{path}: expected floating-point WAV, got {data.dtype}")
        samples = data.astype(np.float64)
        rate = sample_rate if sample_rate is not None else rate
    else:
        if fmt == "raw_float64":
            blob = path.read_bytes()
            if len(blob) % 8:
                raise InputError(f"{path}: raw float64 payload is {len(blob)} bytes, not a multiple of 8")
            samples = np.frombuffer(blob, dtype="<f8").astype(np.float64)
        else:
            samples = _read_csv_column(path)
        rate = sample_rate if sample_rate is not None else _sidecar_rate(path)
        if rate is None:
            raise InputError(f"{path}: sample rate missing (pass it explicitly or provide {sidecar_path(path).name})")

    if not np.all(np.isfinite(samples)):
        raise InputError(f"{path}: non-finite sample in payload")
    return PressureSignal(samples, rate)


def _read_csv_column(path: Path) -> np.ndarray:
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip():
                continue
            if len(row) != 1:
                raise InputError(f"{path}:{lineno}: expected a single column, got {len(row)}")
            try:
                values.append(float(row[0]))
            except ValueError:
                raise InputError(f"{path}:{lineno}: not a number: {row[0]!r}") from None
    return np.asarray(values, dtype=np.float64)


def save_signal(
    signal: PressureSignal,
    path: str | os.PathLike,
    format: str | None = None,
    sidecar: bool = True,
) -> Path:
    """Write ``signal``; headerless formats get a JSON sidecar with the rate."""
    path = Path(path)
    fmt = format or infer_format(path)
    if fmt == "wav_float":
        rate = signal.sample_rate
        if not float(rate).is_integer():
            raise InputError("WAV requires an integer sample rate")
        wavfile.write(path, int(rate), signal.samples.astype(np.float32))
        return path
    if fmt == "raw_float64":
        path.write_bytes(signal.samples.astype("<f8").tobytes())
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.writelines(f"{v!r}\n" for v in signal.samples.tolist())
    else:
        raise InputError(f"unknown signal format {fmt!r}")
    if sidecar:
        sidecar_path(path).write_text(
            json.dumps({"sample_rate": signal.sample_rate}) + "\n", encoding="utf-8"
        )
    return path


# -- manifests --------------------------------------------------------------

def load_manifest(path: str | os.PathLike) -> list[ConfigRecord]:
    """Parse a configuration manifest CSV.

    Columns: ``id,signal_path,pressure_pa,gc_type,symmetry``. Lines starting
    with ``#`` are comments. Relative signal paths resolve against the
    manifest's directory; signal files are not opened here.
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"manifest not found: {path}")
    base = path.parent
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        log.warning("manifest %s is empty", path)
        return []
    reader = csv.DictReader(lines)
    missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise InputError(f"manifest {path} lacks columns: {sorted(missing)}")

    records: list[ConfigRecord] = []
    seen: set[str] = set()
    for row in reader:
        rid = row["id"].strip()
        if not rid:
            raise InputError(f"manifest {path}: empty id")
        if rid in seen:
            raise InputError(f"manifest {path}: duplicate id {rid!r}")
        seen.add(rid)
        label = LabelVector(
            _parse_int_label(row["pressure_pa"], "pressure_pa"),
            _parse_int_label(row["gc_type"], "gc_type"),
            _parse_int_label(row["symmetry"], "symmetry"),
        )
        sig = Path(row["signal_path"].strip())
        if not sig.is_absolute():
            sig = base / sig
        records.append(ConfigRecord(rid, sig, label))
    if not records:
        log.warning("manifest %s has no records", path)
    return records


def save_manifest(
    records: Iterable[ConfigRecord],
    path: str | os.PathLike,
    comment: str | None = None,
) -> Path:
    path = Path(path)
    base = path.parent.resolve()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_COLUMNS)
        for rec in records:
            sig = Path(rec.signal_path)
            try:
                sig = sig.resolve().relative_to(base)
            except ValueError:
                pass
            writer.writerow([rec.id, sig.as_posix(), *rec.label.as_tuple()])
    return path
