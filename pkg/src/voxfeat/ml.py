"""Standardisation, LDA projection, one-vs-rest RBF SVMs, stratified
cross-validation and decision-boundary rasterisation."""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .rng import PhiloxStream

MODEL_FORMAT_VERSION = 1
LDA_RIDGE = 1e-6  # within-class scatter ridge, relative to trace / d
SMO_TOL = 1e-3
SMO_MAX_ITER = 100_000
GRID_MARGIN = 0.1


class SolverError(RuntimeError):
    """The SVM dual solver did not converge within its iteration cap."""


# -- standardisation ---------------------------------------------------------

class Standardized(NamedTuple):
    X_std: np.ndarray
    means: np.ndarray
    stds: np.ndarray


def standardize(X: np.ndarray) -> Standardized:
    """Column-wise z-scores (population standard deviation)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("need a 2-D array with at least 2 rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    scale = np.maximum(np.abs(means), 1.0)
    bad = np.flatnonzero(stds <= 1e-12 * scale)
    if bad.size:
        raise ValueError(f"constant column(s) {bad.tolist()} cannot be standardised")
    return Standardized((X - means) / stds, means, stds)


def apply_standardization(X: np.ndarray, means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    return (np.asarray(X, dtype=np.float64) - means) / stds


# -- LDA -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LdaProjection:
    weights: np.ndarray  # (d, out_dims)
    eigenvalues: np.ndarray  # all d generalised eigenvalues, descending
    classes: tuple
    class_means: np.ndarray  # (n_classes, out_dims), projected

    @property
    def out_dims(self) -> int:
        return self.weights.shape[1]

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "classes": [_jsonable(c) for c in self.classes],
            "class_means": self.class_means.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LdaProjection":
        return cls(np.array(d["weights"]), np.array(d["eigenvalues"]), tuple(d["classes"]), np.array(d["class_means"]))


def scatter_matrices(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Within-class and between-class scatter."""
    X = np.asarray(X, dtype=np.float64)
    mu = X.mean(axis=0)
    d = X.shape[1]
    sw = np.zeros((d, d))
    sb = np.zeros((d, d))
    for c in np.unique(y):
        xc = X[y == c]
        mc = xc.mean(axis=0)
        dev = xc - mc
        sw += dev.T @ dev
        diff = (mc - mu)[:, None]
        sb += xc.shape[0] * (diff @ diff.T)
    return sw, sb


def lda_fit(X: np.ndarray, y: Sequence, out_dims: int, ridge: float = LDA_RIDGE) -> LdaProjection:
    """Fisher discriminants from the generalised problem ``Sb w = l Sw w``.

    ``Sw`` gets ``ridge * trace(Sw) / d`` added to its diagonal. Each
    discriminant is sign-fixed so its largest-magnitude weight is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = tuple(np.unique(y).tolist())
    n, d = X.shape
    if n <= len(classes):
        raise ValueError(f"need more samples ({n}) than classes ({len(classes)})")
    if not 1 <= out_dims <= min(len(classes) - 1, d):
        raise ValueError(f"out_dims={out_dims} must lie in [1, min(n_classes - 1, d) = {min(len(classes) - 1, d)}]")
    sw, sb = scatter_matrices(X, y)
    sw = sw + ridge * np.trace(sw) / d * np.eye(d)
    try:
        evals, evecs = scipy.linalg.eigh(sb, sw)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular within-class scatter: {exc}") from None
    order = np.argsort(evals, kind="stable")[::-1]
    evals = evals[order]
    w = evecs[:, order[:out_dims]]
    for j in range(out_dims):
        if w[np.argmax(np.abs(w[:, j])), j] < 0:
            w[:, j] = -w[:, j]
    means = np.array([(X[y == c] @ w).mean(axis=0) for c in classes])
    return LdaProjection(w, evals, classes, means)


def lda_transform(proj: LdaProjection, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != proj.weights.shape[0]:
        raise ValueError(f"expected {proj.weights.shape[0]} features, got shape {X.shape}")
    return X @ proj.weights


# -- SVM -------------------------------------------------------------------------

def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


def default_gamma(X: np.ndarray) -> float:
    """``1 / (d * mean feature variance)``, or ``1 / d`` for constant data."""
    X = np.asarray(X, dtype=np.float64)
    var = float(X.var(axis=0).mean())
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0 / X.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryMachine:
    """One soft-margin machine: ``f(x) = sum a_i y_i K(x_i, x) + bias``."""

    support_vectors: np.ndarray
    alphas: np.ndarray
    targets: np.ndarray  # +-1
    bias: float
    iterations: int = 0

    def decision(self, X: np.ndarray, gamma: float) -> np.ndarray:
        if self.alphas.size == 0:
            return np.full(X.shape[0], self.bias)
        return rbf_kernel(X, self.support_vectors, gamma) @ (self.alphas * self.targets) + self.bias


def smo_solve(K: np.ndarray, t: np.ndarray, C: float, tol: float = SMO_TOL, max_iter: int = SMO_MAX_ITER):
    """Solve the soft-margin dual for kernel matrix ``K`` and targets ``t``.

    Working-set selection uses the maximal violating index plus the
    second-order partner choice; the loop stops when the maximal KKT
    violation ``m - M`` drops below ``tol``. Returns ``(alpha, bias, iters)``.
    """
    n = t.size
    Q = (t[:, None] * t[None, :]) * K
    alpha = np.zeros(n)
    grad = -np.ones(n)
    tiny = 1e-12
    diag = np.diag(Q)
    for it in range(max_iter):
        yg = -t * grad
        up = ((t > 0) & (alpha < C)) | ((t < 0) & (alpha > 0))
        low = ((t < 0) & (alpha < C)) | ((t > 0) & (alpha > 0))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        m_val = yg[i]
        M_val = yg[low].min()
        if m_val - M_val < tol:
            break
        cand = np.flatnonzero(low & (yg < m_val))
        b = m_val - yg[cand]
        a = diag[i] + diag[cand] - 2.0 * t[i] * t[cand] * Q[i, cand]
        a = np.where(a > 0, a, tiny)
        j = int(cand[np.argmin(-(b * b) / a)])

        ai_old, aj_old = alpha[i], alpha[j]
        if t[i] != t[j]:
            quad = max(diag[i] + diag[j] + 2.0 * Q[i, j], tiny)
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > C:
                    ai, aj = C, C - diff
            elif aj > C:
                aj, ai = C, C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * Q[i, j], tiny)
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > C:
                if ai > C:
                    ai, aj = C, total - C
            elif aj < 0:
                aj, ai = 0.0, total
            if total > C:
                if aj > C:
                    aj, ai = C, total - C
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        grad += Q[:, i] * (ai - ai_old) + Q[:, j] * (aj - aj_old)
    else:
        raise SolverError(f"SMO did not reach tolerance {tol} within {max_iter} iterations")

    yg = t * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = float(yg[free].mean())
    else:
        ub_mask = ((alpha >= C) & (t < 0)) | ((alpha <= 0) & (t > 0))
        lb_mask = ((alpha >= C) & (t > 0)) | ((alpha <= 0) & (t < 0))
        ub = yg[ub_mask].min() if ub_mask.any() else np.inf
        lb = yg[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub + lb) else float(ub if np.isfinite(ub) else lb)
    return alpha, -rho, it


@dataclass(frozen=True, eq=False)
class SvmModel:
    classes: tuple
    machines: tuple[BinaryMachine, ...]
    gamma: float
    C: float
    tol: float
    n_features: int

    def decision_values(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got shape {X.shape}")
        return np.column_stack([m.decision(X, self.gamma) for m in self.machines])

    def to_dict(self) -> dict:
        return {
            "classes": [_jsonable(c) for c in self.classes],
            "gamma": self.gamma,
            "C": self.C,
            "tol": self.tol,
            "n_features": self.n_features,
            "machines": [
                {
                    "class": _jsonable(c),
                    "support_vectors": m.support_vectors.tolist(),
                    "alphas": m.alphas.tolist(),
                    "targets": m.targets.tolist(),
                    "bias": m.bias,
                }
                for c, m in zip(self.classes, self.machines)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        machines = tuple(
            BinaryMachine(
                np.array(m["support_vectors"], dtype=np.float64).reshape(-1, d["n_features"]),
                np.array(m["alphas"], dtype=np.float64),
                np.array(m["targets"], dtype=np.float64),
                float(m["bias"]),
            )
            for m in d["machines"]
        )
        return cls(tuple(d["classes"]), machines, float(d["gamma"]), float(d["C"]), float(d["tol"]), int(d["n_features"]))


def svm_train(
    X: np.ndarray,
    y: Sequence,
    C: float = 1.0,
    gamma: float | None = None,
    tol: float = SMO_TOL,
    max_iter: int = SMO_MAX_ITER,
) -> SvmModel:
    """One-vs-rest RBF SVM: one binary machine per class (class vs the rest)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be 2-D with one row per label")
    classes = tuple(np.unique(y).tolist())
    if len(classes) < 2:
        raise ValueError("SVM training needs at least 2 classes")
    if C <= 0:
        raise ValueError("C must be positive")
    gamma = default_gamma(X) if gamma is None else float(gamma)
    K = rbf_kernel(X, X, gamma)
    machines = []
    for c in classes:
        t = np.where(y == c, 1.0, -1.0)
        alpha, bias, iters = smo_solve(K, t, C, tol, max_iter)
        sv = alpha > 0
        machines.append(BinaryMachine(X[sv].copy(), alpha[sv], t[sv], bias, iters))
    return SvmModel(classes, tuple(machines), gamma, float(C), float(tol), X.shape[1])


def svm_predict(model: SvmModel, X: np.ndarray) -> np.ndarray:
    """Class with the largest decision value; ties go to the lowest class."""
    dec = model.decision_values(X)
    return np.asarray(model.classes)[np.argmax(dec, axis=1)]


# -- pipeline ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Pipeline:
    """standardise -> LDA -> SVM, each stage optional except the SVM."""

    svm: SvmModel
    means: np.ndarray | None = None
    stds: np.ndarray | None = None
    lda: LdaProjection | None = None

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.means is not None:
            X = apply_standardization(X, self.means, self.stds)
        if self.lda is not None:
            X = lda_transform(self.lda, X)
        return X

    def predict(self, X: np.ndarray) -> np.ndarray:
        return svm_predict(self.svm, self.transform(X))

    def to_dict(self) -> dict:
        return {
            "format": "voxfeat-model",
            "version": MODEL_FORMAT_VERSION,
            "standardization": None if self.means is None else {"means": self.means.tolist(), "stds": self.stds.tolist()},
            "lda": None if self.lda is None else self.lda.to_dict(),
            "svm": self.svm.to_dict(),
        }

    def to_json(self, path: str | os.PathLike | None = None) -> str:
        text = json.dumps(self.to_dict(), indent=2) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "Pipeline":
        if d.get("format") != "voxfeat-model" or d.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError(f"unsupported model format {d.get('format')!r} v{d.get('version')!r}")
        std = d.get("standardization")
        lda = d.get("lda")
        return cls(
            SvmModel.from_dict(d["svm"]),
            None if std is None else np.array(std["means"]),
            None if std is None else np.array(std["stds"]),
            None if lda is None else LdaProjection.from_dict(lda),
        )

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "Pipeline":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def default_out_dims(y: Sequence, d: int) -> int:
    return max(1, min(2, len(np.unique(y)) - 1, d))


def fit_pipeline(
    X: np.ndarray,
    y: Sequence,
    C: float = 1.0,
    gamma: float | None = None,
    out_dims: int | None = None,
    use_standardize: bool = True,
    use_lda: bool = True,
    tol: float = SMO_TOL,
) -> Pipeline:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    means = stds = lda = None
    Z = X
    if use_standardize:
        Z, means, stds = standardize(Z)
    if use_lda:
        lda = lda_fit(Z, y, out_dims or default_out_dims(y, X.shape[1]))
        Z = lda_transform(lda, Z)
    return Pipeline(svm_train(Z, y, C, gamma, tol), means, stds, lda)


def training_score(pipe: Pipeline, X: np.ndarray, y: Sequence) -> float:
    """Fraction of the training rows the fitted pipeline labels correctly."""
    return float(np.mean(pipe.predict(X) == np.asarray(y)))


# -- cross-validation ----------------------------------------------------------

def stratified_kfold(y: Sequence, k: int, seed: int = 0) -> np.ndarray:
    """Fold index per sample.

    Samples of each class are shuffled (seeded), classes are concatenated in
    sorted order, and the concatenation is dealt to folds round-robin. Each
    class's per-fold counts therefore differ by at most one, and so do fold
    sizes.
    """
    y = np.asarray(y)
    n = y.shape[0]
    if k < 2:
        raise ValueError("k must be at least 2")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples ({n})")
    stream = PhiloxStream(seed)
    order = []
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        order.append(idx[stream.permutation(idx.size)])
    order = np.concatenate(order)
    folds = np.empty(n, dtype=np.int64)
    folds[order] = np.arange(n) % k
    return folds


@dataclass(eq=False)
class CvReport:
    fold_accuracies: list[float]
    mean_accuracy: float
    folds: list[int]
    predictions: list
    models: list[Pipeline] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "fold_accuracies": [float(a) for a in self.fold_accuracies],
            "mean_accuracy": float(self.mean_accuracy),
            "folds": [int(f) for f in self.folds],
            "predictions": [_jsonable(p) for p in self.predictions],
        }


def cross_validate(
    X: np.ndarray,
    y: Sequence,
    k: int = 5,
    C: float = 1.0,
    gamma: float | None = None,
    seed: int = 0,
    out_dims: int | None = None,
    use_standardize: bool = True,
    use_lda: bool = True,
    paper_mode: bool = False,
    tol: float = SMO_TOL,
    folds: Sequence[int] | None = None,
) -> CvReport:
    """Stratified k-fold accuracy of the standardise -> LDA -> SVM pipeline.

    By default every preprocessing stage is fitted on the training folds only.
    ``paper_mode`` fits standardisation and LDA once on all rows and
    cross-validates only the SVM. ``folds`` overrides the stratified
    assignment (one fold index in ``0..k-1`` per row).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if folds is None:
        folds = stratified_kfold(y, k, seed)
    else:
        folds = np.asarray(folds, dtype=np.int64)
        if folds.shape != y.shape or folds.min() < 0 or folds.max() >= k:
            raise ValueError("folds must give one index in [0, k) per row")
    pre = None
    if paper_mode:
        pre = fit_pipeline(X, y, C, gamma, out_dims, use_standardize, use_lda, tol)
        Z = pre.transform(X)
    accs, models = [], []
    preds = np.empty(y.shape[0], dtype=y.dtype)
    for f in range(k):
        test = folds == f
        train = ~test
        if paper_mode:
            svm = svm_train(Z[train], y[train], C, gamma, tol)
            pipe = Pipeline(svm, pre.means, pre.stds, pre.lda)
        else:
            pipe = fit_pipeline(X[train], y[train], C, gamma, out_dims, use_standardize, use_lda, tol)
        preds[test] = pipe.predict(X[test])
        accs.append(float(np.mean(preds[test] == y[test])))
        models.append(pipe)
    return CvReport(accs, float(np.mean(accs)), folds.tolist(), preds.tolist(), models)


def hyperparameter_sweep(
    X: np.ndarray,
    y: Sequence,
    Cs: Sequence[float],
    gammas: Sequence[float | None],
    out_dims: int | None = None,
    use_standardize: bool = True,
) -> list[dict]:
    """Training score at every (C, gamma) point, preprocessing fitted on all rows."""
    rows = []
    for C in Cs:
        for g in gammas:
            pipe = fit_pipeline(X, y, C, g, out_dims, use_standardize)
            rows.append({"C": float(C), "gamma": pipe.svm.gamma, "training_score": training_score(pipe, X, y)})
    return rows


# -- decision grid ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DecisionGrid:
    xs: np.ndarray
    ys: np.ndarray
    labels: np.ndarray  # (len(ys), len(xs)), row-major over y then x

    def points(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def to_csv(self, path: str | os.PathLike | None = None) -> str:
        lines = ["x,y,label"]
        for (x, y), lab in zip(self.points(), self.labels.ravel()):
            lines.append(f"{x:.9g},{y:.9g},{_jsonable(lab)}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="\n")
        return text


def bounding_box(X: np.ndarray) -> tuple[float, float, float, float]:
    X = np.asarray(X, dtype=np.float64)
    return float(X[:, 0].min()), float(X[:, 0].max()), float(X[:, 1].min()), float(X[:, 1].max())


def expand_bounds(bounds, margin: float = GRID_MARGIN):
    x0, x1, y0, y1 = bounds
    dx = (x1 - x0) or 1.0
    dy = (y1 - y0) or 1.0
    return x0 - margin * dx, x1 + margin * dx, y0 - margin * dy, y1 + margin * dy


def decision_grid(model: SvmModel, bounds, resolution: int | tuple[int, int] = 200) -> DecisionGrid:
    """Predicted label on a regular mesh over ``bounds`` grown by 10 % per side.

    ``bounds`` is ``(xmin, xmax, ymin, ymax)``; ``resolution`` is points per
    axis, or ``(nx, ny)``.
    """
    if model.n_features != 2:
        raise ValueError(f"decision grid needs a 2-D model, got {model.n_features}-D")
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 per axis")
    x0, x1, y0, y1 = expand_bounds(bounds)
    xs = np.linspace(x0, x1, int(nx))
    ys = np.linspace(y0, y1, int(ny))
    gx, gy = np.meshgrid(xs, ys)
    labels = svm_predict(model, np.column_stack([gx.ravel(), gy.ravel()]))
    return DecisionGrid(xs, ys, labels.reshape(int(ny), int(nx)))


def _jsonable(v):
    return v.item() if hasattr(v, "item") else v
