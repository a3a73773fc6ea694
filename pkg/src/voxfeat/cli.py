"""``voxfeat`` command line: extract, correlate, boxplot, classify, synth.

Exit status: 0 success, 2 input error, 3 some signals failed to extract,
4 SVM solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, svg
from .core import FEATURE_NAMES, LABEL_NAMES, ConfigRecord, InputError, load_manifest, load_signal
from .features import FeatureConfig, FeatureError, FeatureTable, extract_features_detailed, fmt
from .ml import (
    SolverError,
    bounding_box,
    cross_validate,
    decision_grid,
    expand_bounds,
    fit_pipeline,
    svm_predict,
    training_score,
)
from .stats import correlation_map, grouped_boxplots
from .synth import synth_surrogate_dataset

log = logging.getLogger("voxfeat")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PARTIAL = 3
EXIT_SOLVER = 4

OUT_ENV = "VOXFEAT_OUT"
DEFAULT_OUT = "voxfeat_out"

TARGETS = {"pressure": "pressure_pa", "gc": "gc_type", "symmetry": "symmetry"}
DEFAULT_PANELS = ("spl_5k", "hnr_2k", "cpp_2k", "slope_2k", "hbi_5k", "alpha_5k")
GRID_RESOLUTION = 120

# option dest -> builtin default; a config file may set any of these
DEFAULTS = {
    "manifest": None,
    "out": None,
    "seed": 0,
    "jobs": None,
    "lp_secondary": None,
    "hnr_margin": None,
    "svm_c": 1.0,
    "svm_gamma": None,
    "folds": 5,
    "paper_mode": False,
    "no_figures": False,
    "no_standardize": False,
    "table": None,
    "target": None,
    "group_by": None,
    "features": None,
}


@dataclass
class RunConfig:
    out: Path
    manifest: Path | None = None
    seed: int = 0
    jobs: int | None = None
    features: FeatureConfig = field(default_factory=FeatureConfig)
    svm_c: float = 1.0
    svm_gamma: float | None = None
    folds: int = 5
    paper_mode: bool = False
    standardize: bool = True
    figures: bool = True
    table: Path | None = None
    target: str | None = None
    group_by: str | None = None
    panels: tuple[str, ...] = DEFAULT_PANELS

    @property
    def table_path(self) -> Path:
        return self.table if self.table is not None else self.out / "features.csv"


def _label_name(name: str) -> str:
    if name in TARGETS:
        return TARGETS[name]
    if name in LABEL_NAMES:
        return name
    raise InputError(f"unknown label {name!r}; expected one of {sorted(TARGETS)}")


def resolve(args: argparse.Namespace) -> RunConfig:
    """Merge builtin defaults, the optional JSON config and explicit flags (flags win)."""
    file_cfg = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        try:
            file_cfg = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InputError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config file {path}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise InputError(f"config file {path}: expected a JSON object")
        file_cfg = {k.replace("-", "_"): v for k, v in file_cfg.items()}
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise InputError(f"config file {path}: unknown keys {sorted(unknown)}")

    def get(key):
        v = getattr(args, key, None)
        if v is not None and v is not False:
            return v
        return file_cfg.get(key, DEFAULTS[key])

    out = get("out") or os.environ.get(OUT_ENV) or DEFAULT_OUT
    try:
        fcfg = FeatureConfig().updated(lp_secondary=get("lp_secondary"), hnr_margin_bins=get("hnr_margin"))
    except ValueError as exc:
        raise InputError(str(exc)) from None
    panels = get("features")
    if isinstance(panels, str):
        panels = tuple(p.strip() for p in panels.split(",") if p.strip())
    panels = tuple(panels) if panels else DEFAULT_PANELS
    bad = [p for p in panels if p not in FEATURE_NAMES]
    if bad:
        raise InputError(f"unknown features {bad}; expected names from {FEATURE_NAMES}")
    cfg = RunConfig(
        out=Path(out),
        manifest=Path(get("manifest")) if get("manifest") else None,
        seed=int(get("seed")),
        jobs=get("jobs"),
        features=fcfg,
        svm_c=float(get("svm_c")),
        svm_gamma=None if get("svm_gamma") is None else float(get("svm_gamma")),
        folds=int(get("folds")),
        paper_mode=bool(get("paper_mode")),
        standardize=not get("no_standardize"),
        figures=not get("no_figures"),
        table=Path(get("table")) if get("table") else None,
        target=get("target"),
        group_by=get("group_by"),
        panels=panels,
    )
    if cfg.jobs is not None and int(cfg.jobs) < 1:
        raise InputError("--jobs must be at least 1")
    if cfg.svm_c <= 0:
        raise InputError("--svm-c must be positive")
    if cfg.svm_gamma is not None and cfg.svm_gamma <= 0:
        raise InputError("--svm-gamma must be positive")
    return cfg


def _ensure_out(cfg: RunConfig) -> Path:
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {cfg.out}: {exc}") from None
    if not os.access(cfg.out, os.W_OK):
        raise InputError(f"output directory {cfg.out} is not writable")
    return cfg.out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


# -- extract -------------------------------------------------------------------

def _extract_one(record: ConfigRecord, fcfg: FeatureConfig):
    try:
        sig = load_signal(record.signal_path)
        vec, diag = extract_features_detailed(sig, fcfg)
    except (OSError, ValueError) as exc:
        return record, None, None, f"{type(exc).__name__}: {exc}"
    return record, vec, diag, None


def extract_table(records: Sequence[ConfigRecord], fcfg: FeatureConfig, jobs: int | None = None):
    """Features for every record, manifest order; returns (table, diagnostics, failures)."""
    n_jobs = min(jobs or os.cpu_count() or 1, max(1, len(records)))
    if n_jobs == 1:
        results = [_extract_one(r, fcfg) for r in records]
    else:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(_extract_one, records, [fcfg] * len(records)))
    rows, diags, failures = [], [], []
    for rec, vec, diag, err in results:
        if err is not None:
            failures.append((rec.id, err))
            continue
        rows.append((rec.id, rec.label, vec))
        diags.append(diag)
    return FeatureTable.from_rows(rows), diags, failures


def cmd_extract(cfg: RunConfig) -> int:
    if cfg.manifest is None:
        raise InputError("extract needs --manifest")
    records = load_manifest(cfg.manifest)
    out = _ensure_out(cfg)
    table, diags, failures = extract_table(records, cfg.features, cfg.jobs)
    if not records:
        log.warning("empty manifest; writing header-only table")
    _write(out / "features.csv", table.to_csv())
    _write(out / "features.json", table.to_json(diagnostics=diags))
    for rid, err in failures:
        log.error("%s: %s", rid, err)
    if failures:
        log.error("%d of %d signals failed", len(failures), len(records))
        return EXIT_PARTIAL
    return EXIT_OK


# -- correlate / boxplot -----------------------------------------------------------

def cmd_correlate(cfg: RunConfig) -> int:
    table = FeatureTable.read_csv(cfg.table_path)
    if len(table) < 2:
        raise InputError("correlation needs at least 2 rows")
    out = _ensure_out(cfg)
    try:
        cmap = correlation_map(table.features, table.labels)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _write(out / "corr.csv", cmap.to_csv())
    if cfg.figures:
        svg.save(svg.heatmap(cmap.variables, cmap.matrix, split=len(LABEL_NAMES), title="Pearson correlation"), out / "corr.svg")
    return EXIT_OK


BOX_COLUMNS = ("feature", "group", "n", "median", "q1", "q3", "whisker_low", "whisker_high", "n_outliers", "outliers")


def cmd_boxplot(cfg: RunConfig) -> int:
    if not cfg.group_by:
        raise InputError("boxplot needs --group-by")
    label = _label_name(cfg.group_by)
    table = FeatureTable.read_csv(cfg.table_path)
    if len(table) == 0:
        raise InputError("feature table is empty")
    out = _ensure_out(cfg)
    groups = table.label_column(label)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BOX_COLUMNS)
    panels = []
    for name in FEATURE_NAMES:
        boxes = grouped_boxplots(table.feature_column(name), groups)
        for b in boxes:
            writer.writerow((
                name, b.group, b.n, fmt(b.median), fmt(b.q1), fmt(b.q3),
                fmt(b.whisker_low), fmt(b.whisker_high), len(b.outliers),
                ";".join(fmt(o) for o in b.outliers),
            ))
        if name in cfg.panels:
            panels.append((name, boxes))
    _write(out / "stats.csv", buf.getvalue())
    if cfg.figures:
        panels.sort(key=lambda p: cfg.panels.index(p[0]))
        svg.save(svg.boxplots(panels, label), out / "boxplot.svg")
    return EXIT_OK


# -- classify ----------------------------------------------------------------

def cmd_classify(cfg: RunConfig) -> int:
    if not cfg.target:
        raise InputError("classify needs --target")
    if cfg.target not in TARGETS:
        raise InputError(f"--target must be one of {sorted(TARGETS)}")
    table = FeatureTable.read_csv(cfg.table_path)
    y = table.label_column(TARGETS[cfg.target])
    X = table.features
    classes = np.unique(y)
    if classes.size < 2:
        raise InputError(f"target {cfg.target!r} has a single class")
    if cfg.folds > len(y) or cfg.folds < 2:
        raise InputError(f"--folds must be between 2 and {len(y)}")
    out = _ensure_out(cfg)
    out_dims = 1 if classes.size == 2 else 2
    try:
        pipe = fit_pipeline(X, y, cfg.svm_c, cfg.svm_gamma, out_dims, cfg.standardize)
        cv = cross_validate(
            X, y, cfg.folds, cfg.svm_c, cfg.svm_gamma, cfg.seed, out_dims,
            use_standardize=cfg.standardize, paper_mode=cfg.paper_mode,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    train_pred = pipe.predict(X)
    report = {
        "target": cfg.target,
        "label_column": TARGETS[cfg.target],
        "classes": [int(c) for c in classes],
        "n_samples": int(len(y)),
        "hyperparameters": {
            "C": cfg.svm_c,
            "gamma": pipe.svm.gamma,
            "gamma_source": "flag" if cfg.svm_gamma is not None else "default",
            "folds": cfg.folds,
            "seed": cfg.seed,
            "paper_mode": cfg.paper_mode,
            "standardize": cfg.standardize,
            "lda_out_dims": out_dims,
        },
        "training_score": training_score(pipe, X, y),
        "training_predictions": [int(v) for v in train_pred],
        "cross_validation": cv.to_dict(),
        "lda": {
            "features": list(FEATURE_NAMES),
            "weights": pipe.lda.weights.tolist(),
            "eigenvalues": pipe.lda.eigenvalues.tolist(),
        },
        "ids": list(table.ids),
    }
    _write(out / "cv_report.json", json.dumps(report, indent=2) + "\n")
    pipe.to_json(out / "model.json")

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("feature", *(f"ld{i + 1}" for i in range(out_dims))))
    for name, row in zip(FEATURE_NAMES, pipe.lda.weights):
        writer.writerow((name, *(fmt(v) for v in row)))
    _write(out / "lda_weights.csv", buf.getvalue())

    Z = pipe.transform(X)
    if out_dims == 2:
        grid = decision_grid(pipe.svm, bounding_box(Z), GRID_RESOLUTION)
        _write(out / "grid.csv", grid.to_csv())
        strip = None
    else:
        lo, hi = float(Z[:, 0].min()), float(Z[:, 0].max())
        x0, x1, _, _ = expand_bounds((lo, hi, 0.0, 0.0))
        xs = np.linspace(x0, x1, GRID_RESOLUTION)
        labs = svm_predict(pipe.svm, xs[:, None])
        _write(out / "grid.csv", "x,y,label\n" + "".join(f"{fmt(x)},0,{int(lab)}\n" for x, lab in zip(xs, labs)))
        grid, strip = None, (xs, labs.tolist())
    if cfg.figures:
        title = f"{cfg.target}: training score {report['training_score']:.3f}, CV {cv.mean_accuracy:.3f}"
        fig = svg.lda_scatter(Z, y.tolist(), train_pred.tolist(), classes.tolist(), grid=grid, strip=strip, title=title)
        svg.save(fig, out / "lda_svm.svg")
    log.info("training score %.4f, CV mean accuracy %.4f", report["training_score"], cv.mean_accuracy)
    return EXIT_OK


# -- synth -------------------------------------------------------------------

def cmd_synth(cfg: RunConfig) -> int:
    out = _ensure_out(cfg)
    synth_surrogate_dataset(cfg.seed, out)
    log.info("wrote surrogate dataset to %s", out / "manifest.csv")
    return EXIT_OK


COMMANDS = {
    "extract": cmd_extract,
    "correlate": cmd_correlate,
    "boxplot": cmd_boxplot,
    "classify": cmd_classify,
    "synth": cmd_synth,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("shared options")
    g.add_argument("--manifest", help="configuration manifest CSV")
    g.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    g.add_argument("--seed", type=int, help="seed for folds and surrogate noise (default 0)")
    g.add_argument("--jobs", type=int, help="extraction worker processes (default: CPU count)")
    g.add_argument("--lp-secondary", type=float, help="secondary low-pass cutoff in Hz (default 2000)")
    g.add_argument("--hnr-margin", type=int, help="HNR peak-search margin in lags (default 300)")
    g.add_argument("--svm-c", type=float, help="SVM box constraint (default 1)")
    g.add_argument("--svm-gamma", type=float, help="RBF gamma (default 1 / (d * mean variance))")
    g.add_argument("--folds", type=int, help="cross-validation folds (default 5)")
    g.add_argument("--paper-mode", action="store_true", help="fit scaling and LDA on all rows before CV")
    g.add_argument("--no-figures", action="store_true", help="skip SVG output")
    g.add_argument("--config", help="JSON file with option defaults; explicit flags win")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="voxfeat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"voxfeat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("extract", parents=[common], help="nine features per manifest entry")
    for name, text in (("correlate", "Pearson map of labels and features"), ("boxplot", "per-group feature boxplots"), ("classify", "LDA + SVM with cross-validation")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--table", help="feature table (default <out>/features.csv)")
        if name == "boxplot":
            p.add_argument("--group-by", help="pressure, gc or symmetry")
            p.add_argument("--features", help="comma-separated panel features")
        if name == "classify":
            p.add_argument("--target", help="pressure, gc or symmetry")
            p.add_argument("--no-standardize", action="store_true", help="skip z-scoring before LDA")
    sub.add_parser("synth", parents=[common], help="write the 24-configuration surrogate dataset")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="voxfeat: %(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except SolverError as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    except (InputError, FeatureError, FileNotFoundError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
