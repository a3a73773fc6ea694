import json
from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from voxfeat import ml
from voxfeat.rng import PhiloxStream

XOR_X = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
XOR_Y = np.array([0, 0, 1, 1])


def blobs(centers, n_per, spread=0.3, seed=0):
    g = PhiloxStream(seed)
    centers = np.asarray(centers, dtype=np.float64)
    X = np.vstack([c + spread * g.normal(n_per * centers.shape[1]).reshape(n_per, -1) for c in centers])
    y = np.repeat(np.arange(len(centers)), n_per)
    return X, y


# -- standardisation

def test_standardize_two_point():
    z = ml.standardize(np.array([[0.0], [2.0]]))
    assert z.X_std.ravel().tolist() == [-1.0, 1.0]
    assert z.means.tolist() == [1.0] and z.stds.tolist() == [1.0]


def test_standardize_idempotent():
    X, _ = blobs([[0, 0, 0], [3, 1, 2]], 10)
    once = ml.standardize(X).X_std
    assert np.max(np.abs(ml.standardize(once).X_std - once)) <= 1e-12


def test_standardize_constant_column():
    with pytest.raises(ValueError, match="constant"):
        ml.standardize(np.array([[1.0, 2.0], [1.0, 3.0]]))


# -- LDA

def test_lda_axis_dominance():
    X, y = blobs([[0, 0], [4, 0]], 30, spread=0.5)
    w = ml.lda_fit(X, y, 1).weights[:, 0]
    assert abs(w[0]) > 5 * abs(w[1])
    assert w[np.argmax(np.abs(w))] > 0


def test_lda_collinear_means():
    centers = np.array([[0, 0, 0], [2, 2, 0], [4, 4, 0]], dtype=float)
    X, y = blobs(centers, 20, seed=1)
    for c in range(3):
        X[y == c] += centers[c] - X[y == c].mean(axis=0)
    ev = ml.lda_fit(X, y, 2).eigenvalues
    assert ev[1] < 1e-6 * ev[0] + 1e-9


def test_lda_rank_bound():
    X, y = blobs(np.eye(5)[:3] * 4, 20, seed=2)
    ev = ml.lda_fit(X, y, 2).eigenvalues
    assert np.sum(ev > 1e-8 * ev[0]) <= 2
    with pytest.raises(ValueError):
        ml.lda_fit(X, y, 3)


def test_lda_transform_identity_and_zero():
    proj = ml.LdaProjection(np.eye(2), np.ones(2), (0, 1, 2), np.zeros((3, 2)))
    X = np.array([[1.5, -2.0], [0.0, 0.0]])
    out = ml.lda_transform(proj, X)
    assert np.array_equal(out, X)
    assert not np.any(out[1])
    with pytest.raises(ValueError):
        ml.lda_transform(proj, np.ones((2, 3)))


def test_lda_groups_classes():
    X, y = blobs(np.eye(9)[:3] * 3, 20, seed=3)
    proj = ml.lda_fit(X, y, 2)
    Z = ml.lda_transform(proj, X)
    within = np.mean([Z[y == c].var(axis=0).sum() for c in range(3)])
    between = np.array([Z[y == c].mean(axis=0) for c in range(3)]).var(axis=0).sum()
    assert within < between
    d = ((Z[:, None, :] - proj.class_means[None]) ** 2).sum(-1)
    assert np.mean(np.array(proj.classes)[np.argmin(d, 1)] == y) >= 0.99


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 8), st.floats(1e-3, 1e3))
def test_lda_invariant_to_prescaling(col, a):
    X, y = blobs(np.eye(9)[:3] * 2, 10, seed=4)
    base = ml.lda_transform(ml.lda_fit(ml.standardize(X).X_std, y, 2), ml.standardize(X).X_std)
    X2 = X.copy()
    X2[:, col] *= a
    Z2 = ml.standardize(X2).X_std
    assert np.max(np.abs(ml.lda_transform(ml.lda_fit(Z2, y, 2), Z2) - base)) <= 1e-9


# -- SVM

def test_svm_separable():
    X, y = blobs([[0, 0], [3, 3]], 15)
    model = ml.svm_train(X, y)
    assert np.array_equal(ml.svm_predict(model, X), y)


def test_svm_xor():
    model = ml.svm_train(XOR_X, XOR_Y, gamma=1.0)
    assert np.array_equal(ml.svm_predict(model, XOR_X), XOR_Y)


def test_svm_single_class():
    with pytest.raises(ValueError):
        ml.svm_train(XOR_X, np.zeros(4))


def test_svm_dimension_mismatch():
    model = ml.svm_train(XOR_X, XOR_Y, gamma=1.0)
    with pytest.raises(ValueError):
        ml.svm_predict(model, np.ones((2, 3)))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10))
def test_svm_dual_feasibility_and_kkt(seed, C):
    X, y = blobs([[0, 0], [1, 1], [2, 0]], 8, spread=0.6, seed=seed)
    gamma = ml.default_gamma(X)
    K = ml.rbf_kernel(X, X, gamma)
    for c in range(3):
        t = np.where(y == c, 1.0, -1.0)
        alpha, bias, _ = ml.smo_solve(K, t, C)
        assert np.all(alpha >= 0) and np.all(alpha <= C)
        assert abs(np.dot(alpha, t)) <= ml.SMO_TOL
        grad = (t[:, None] * t[None, :] * K) @ alpha - 1
        yg = -t * grad
        up = ((t > 0) & (alpha < C)) | ((t < 0) & (alpha > 0))
        low = ((t < 0) & (alpha < C)) | ((t > 0) & (alpha > 0))
        assert yg[up].max() - yg[low].min() < ml.SMO_TOL + 1e-9


def test_svm_isolated_positive_support_vector():
    X = np.array([[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [10.0, 10.0]])
    y = np.array([0, 0, 0, 1])
    model = ml.svm_train(X, y, C=10, gamma=0.5)
    assert ml.svm_predict(model, X[3:])[0] == 1
    assert model.machines[1].support_vectors.shape[0] >= 1


def test_svm_tie_lowest_class():
    empty = ml.BinaryMachine(np.zeros((0, 2)), np.zeros(0), np.zeros(0), 0.5)
    model = ml.SvmModel((3, 7, 9), (empty, empty, empty), 1.0, 1.0, 1e-3, 2)
    assert ml.svm_predict(model, np.zeros((2, 2))).tolist() == [3, 3]


def test_svm_solver_cap():
    X, y = blobs([[0, 0], [0.5, 0.5]], 20, spread=1.0)
    with pytest.raises(ml.SolverError):
        ml.svm_train(X, y, C=100, max_iter=2)


def test_default_gamma():
    X = np.array([[0.0, 0.0], [2.0, 4.0]])
    # variances 1 and 4
    assert ml.default_gamma(X) == pytest.approx(1 / (2 * 2.5))


# -- folds

def test_stratified_24_3_5():
    y = np.repeat([0, 1, 2], 8)
    folds = ml.stratified_kfold(y, 5, seed=0)
    sizes = np.bincount(folds, minlength=5)
    assert set(sizes.tolist()) <= {4, 5} and sizes.sum() == 24
    counts = np.array([[np.sum((folds == f) & (y == c)) for c in range(3)] for f in range(5)])
    assert np.all(counts.max(0) - counts.min(0) <= 1)
    for row in counts:
        assert sorted(row.tolist()) in ([1, 1, 2], [1, 2, 2], [2, 2, 2])


def test_stratified_loo_and_determinism():
    y = np.array([0, 0, 1, 1, 1, 2])
    assert sorted(ml.stratified_kfold(y, 6).tolist()) == list(range(6))
    assert np.array_equal(ml.stratified_kfold(y, 3, 4), ml.stratified_kfold(y, 3, 4))
    with pytest.raises(ValueError):
        ml.stratified_kfold(y, 7)


@settings(max_examples=40)
@given(st.lists(st.integers(0, 3), min_size=6, max_size=60), st.integers(2, 6), st.integers(0, 99))
def test_stratified_balance_property(labels, k, seed):
    y = np.array(labels)
    if k > y.size:
        return
    folds = ml.stratified_kfold(y, k, seed)
    for c in np.unique(y):
        per = np.bincount(folds[y == c], minlength=k)
        assert per.max() - per.min() <= 1


# -- cross-validation and pipeline

def test_cv_separable():
    X, y = blobs(np.eye(9)[:3] * 5, 10)
    assert ml.cross_validate(X, y, 5).mean_accuracy == 1.0


def test_cv_deterministic():
    X, y = blobs(np.eye(9)[:3], 8, spread=1.0)
    a = json.dumps(ml.cross_validate(X, y, 5, seed=3).to_dict())
    b = json.dumps(ml.cross_validate(X, y, 5, seed=3).to_dict())
    assert a == b


def test_cv_no_leakage():
    X, y = blobs(np.eye(9)[:3], 8, spread=1.0, seed=5)
    rep = ml.cross_validate(X, y, 4, seed=1)
    folds = np.array(rep.folds)
    for f in range(4):
        y2 = y.copy()
        test = folds == f
        y2[test] = (y2[test] + 1) % 3
        rep2 = ml.cross_validate(X, y2, 4, folds=folds)
        assert rep2.models[f].to_json() == rep.models[f].to_json()


def test_cv_paper_mode_shares_preprocessing():
    X, y = blobs(np.eye(9)[:3], 8, spread=1.0)
    rep = ml.cross_validate(X, y, 4, paper_mode=True)
    w = [m.lda.weights.tobytes() for m in rep.models]
    assert len(set(w)) == 1


def test_pipeline_json_roundtrip(tmp_path):
    X, y = blobs(np.eye(9)[:4] * 2, 6)
    pipe = ml.fit_pipeline(X, y)
    assert pipe.lda.out_dims == 2
    pipe.to_json(tmp_path / "m.json")
    back = ml.Pipeline.from_json(tmp_path / "m.json")
    assert np.array_equal(back.predict(X), pipe.predict(X))
    assert back.to_json() == pipe.to_json()
    bad = json.loads(pipe.to_json())
    bad["version"] = 99
    with pytest.raises(ValueError):
        ml.Pipeline.from_dict(bad)


def test_pipeline_without_stages():
    X, y = blobs([[0, 0], [3, 3]], 10)
    pipe = ml.fit_pipeline(X, y, use_standardize=False, use_lda=False)
    assert pipe.means is None and pipe.lda is None
    assert ml.training_score(pipe, X, y) == 1.0


def test_sweep_rows():
    X, y = blobs(np.eye(9)[:3], 6, spread=1.0)
    rows = ml.hyperparameter_sweep(X, y, [0.5, 5], [None, 2.0])
    assert len(rows) == 4 and rows[3]["gamma"] == 2.0
    assert all(0 <= r["training_score"] <= 1 for r in rows)


# -- decision grid

def regions(labels):
    seen = np.zeros(labels.shape, bool)
    count = 0
    for start in zip(*np.nonzero(~seen)):
        if seen[start]:
            continue
        count += 1
        q = deque([start])
        seen[start] = True
        while q:
            r, c = q.popleft()
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < labels.shape[0] and 0 <= cc < labels.shape[1] and not seen[rr, cc] and labels[rr, cc] == labels[r, c]:
                    seen[rr, cc] = True
                    q.append((rr, cc))
    return count


def test_grid_two_regions():
    X, y = blobs([[0, 0], [3, 3]], 15)
    model = ml.svm_train(X, y)
    grid = ml.decision_grid(model, ml.bounding_box(X), 40)
    assert set(np.unique(grid.labels)) == {0, 1}
    assert regions(grid.labels) == 2


def test_grid_corners():
    X, y = blobs([[0, 0], [3, 3]], 5)
    model = ml.svm_train(X, y)
    grid = ml.decision_grid(model, (0.0, 1.0, 0.0, 2.0), 2)
    assert grid.labels.shape == (2, 2)
    assert grid.xs.tolist() == pytest.approx([-0.1, 1.1])
    assert grid.ys.tolist() == pytest.approx([-0.2, 2.2])
    assert grid.points().shape == (4, 2)


def test_grid_consistent_with_predict():
    X, y = blobs([[0, 0], [3, 3]], 5)
    model = ml.svm_train(X, y)
    grid = ml.decision_grid(model, (0.0, 3.0, 0.0, 3.0), (6, 6))
    assert np.array_equal(grid.labels.ravel(), ml.svm_predict(model, grid.points()))
    text = grid.to_csv()
    assert text.splitlines()[0] == "x,y,label" and len(text.splitlines()) == 37


def test_grid_errors():
    X, y = blobs([[0, 0, 0], [3, 3, 3]], 5)
    with pytest.raises(ValueError):
        ml.decision_grid(ml.svm_train(X, y), (0, 1, 0, 1), 10)
    X2, y2 = blobs([[0, 0], [3, 3]], 5)
    with pytest.raises(ValueError):
        ml.decision_grid(ml.svm_train(X2, y2), (0, 1, 0, 1), 1)
