from __future__ import annotations

import numpy as np
import pytest

from voxfeat.core import DEFAULT_SAMPLE_RATE, PressureSignal
from voxfeat.features import FeatureTable, extract_features
from voxfeat.synth import synth_surrogate_dataset

FS = DEFAULT_SAMPLE_RATE


def sine(freq, amp=1.0, duration=1.0, fs=FS):
    n = np.arange(int(round(duration * fs)))
    return PressureSignal(amp * np.sin(2 * np.pi * freq * n / fs), fs)


@pytest.fixture(scope="session")
def surrogate():
    return synth_surrogate_dataset(seed=0)


@pytest.fixture(scope="session")
def surrogate_table(surrogate):
    rows = [(rec.id, rec.label, extract_features(sig)) for rec, sig in surrogate]
    return FeatureTable.from_rows(rows)


@pytest.fixture(scope="session")
def surrogate_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("surrogate")
    synth_surrogate_dataset(seed=0, out_dir=out)
    return out


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for status, cid, detail in results:
        terminalreporter.write_line(f"[{status}] {cid}: {detail}")
