"""Label matrices, the closed-form coefficient solve, prediction, and the
model bundle round-trip."""

from __future__ import annotations

import numpy as np
import pytest

from mdda import (
    DomainPair,
    FeatureMatrix,
    KernelSpec,
    accuracy,
    build_graph,
    build_labels,
    conditional_mmd_matrix,
    combine_mmd_matrices,
    load_model,
    marginal_mmd_matrix,
    predict,
    predict_raw,
    predict_scores,
    save_model,
    solve_beta,
)
from mdda.exceptions import NumericError
from mdda.kernel import gram
from mdda.srm import FittedModel, objective


def _instance(seed, n=10, m=8, classes=2, dim=3):
    """Random but well-posed solve instance built from the real constructors."""
    rng = np.random.default_rng(seed)
    xs = rng.normal(size=(n, dim))
    ys = rng.integers(1, classes + 1, size=n)
    ys[:classes] = np.arange(1, classes + 1)
    xt = rng.normal(size=(m, dim)) + rng.normal(size=dim)
    pair = DomainPair(FeatureMatrix(xs, ys), FeatureMatrix(xt), class_count=classes)
    joint = np.vstack([xs, xt])
    k = gram(joint, joint, KernelSpec("rbf", float(np.var(joint, axis=0).sum())))
    pseudo = rng.integers(1, classes + 1, size=m)
    per_class = [conditional_mmd_matrix(ys, pseudo, c) for c in range(1, classes + 1)]
    mu = float(rng.uniform(0.0, 1.0))
    m_mat = combine_mmd_matrices(marginal_mmd_matrix(n, m), per_class, mu, n, m).matrix
    lap = build_graph(joint, 3).laplacian
    labels = build_labels(pair)
    return k, m_mat, lap, labels


# --- build_labels -----------------------------------------------------------


def test_build_labels_hand_example():
    pair = DomainPair(
        FeatureMatrix([[0.0], [1.0]], labels=[1, 2]),
        FeatureMatrix([[2.0]]),
    )
    lm = build_labels(pair)
    assert np.array_equal(lm.targets, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    assert np.array_equal(lm.indicator, [1.0, 1.0, 0.0])
    # masking with the indicator leaves the targets unchanged
    assert np.array_equal(lm.targets * lm.indicator[None, :], lm.targets)


def test_build_labels_source_columns_are_one_hot():
    pair = DomainPair(
        FeatureMatrix(np.random.default_rng(0).normal(size=(6, 2)), labels=[2, 1, 3, 3, 2, 1]),
        FeatureMatrix(np.zeros((4, 2))),
    )
    lm = build_labels(pair)
    assert np.array_equal(lm.targets[:, :6].sum(axis=0), np.ones(6))
    assert np.array_equal(lm.targets[:, 6:], np.zeros((3, 4)))


# --- solve_beta ---------------------------------------------------------------


def test_solve_identity_system():
    targets = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    identity = np.eye(3)
    beta = solve_beta(identity, np.zeros((3, 3)), np.zeros((3, 3)),
                      np.ones(3), targets, lam=0.0, rho=0.0, eta=0.5)
    assert np.allclose(beta, targets.T / 1.5, atol=1e-12)


def test_solver_residual_bound():
    for seed in range(5):
        k, m_mat, lap, labels = _instance(seed)
        beta = solve_beta(k, m_mat, lap, labels.indicator, labels.targets,
                          lam=4.5, rho=1.0, eta=0.1)
        lhs = (np.diag(labels.indicator) + 4.5 * m_mat + 1.0 * lap) @ k
        lhs += 0.1 * np.eye(k.shape[0])
        rhs = labels.indicator[:, None] * labels.targets.T
        residual = np.linalg.norm(lhs @ beta - rhs) / np.linalg.norm(rhs)
        assert residual < 1e-8


def test_solver_accepts_diagonal_matrix_indicator():
    k, m_mat, lap, labels = _instance(7)
    from_vector = solve_beta(k, m_mat, lap, labels.indicator, labels.targets, 1.0, 1.0, 0.1)
    from_matrix = solve_beta(k, m_mat, lap, np.diag(labels.indicator), labels.targets,
                             1.0, 1.0, 0.1)
    assert np.array_equal(from_vector, from_matrix)


def test_solver_singular_without_ridge():
    # duplicated rows make the gram rank-deficient and the masked system singular
    x = np.ones((4, 2))
    k = gram(x, x, KernelSpec("linear"))
    indicator = np.array([1.0, 1.0, 0.0, 0.0])
    targets = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
    with pytest.raises(NumericError, match="eta"):
        solve_beta(k, np.zeros((4, 4)), np.zeros((4, 4)), indicator, targets,
                   lam=0.0, rho=0.0, eta=0.0)


def test_solver_rejects_negative_weights():
    k, m_mat, lap, labels = _instance(8)
    with pytest.raises(ValueError):
        solve_beta(k, m_mat, lap, labels.indicator, labels.targets, -1.0, 0.0, 0.1)


def test_solution_is_a_local_minimum_of_the_objective():
    k, m_mat, lap, labels = _instance(9)
    args = (k, m_mat, lap, labels.indicator, labels.targets, 4.5, 1.0, 0.1)
    beta = solve_beta(*args)
    base = objective(beta, *args)
    rng = np.random.default_rng(99)
    for _ in range(20):
        delta = rng.normal(size=beta.shape)
        delta *= 1e-3 / np.linalg.norm(delta)
        assert objective(beta + delta, *args) >= base


def test_gradient_vanishes_at_the_solution():
    k, m_mat, lap, labels = _instance(10)
    args = (k, m_mat, lap, labels.indicator, labels.targets, 4.5, 1.0, 0.1)
    beta = solve_beta(*args)
    step = 1e-6
    grad = np.zeros_like(beta)
    for i in range(beta.shape[0]):
        for j in range(beta.shape[1]):
            up = beta.copy()
            up[i, j] += step
            down = beta.copy()
            down[i, j] -= step
            grad[i, j] = (objective(up, *args) - objective(down, *args)) / (2 * step)
    assert np.linalg.norm(grad) < 1e-5 * (1.0 + np.linalg.norm(beta))


def test_ridge_monotonically_shrinks_the_expansion_norm():
    for seed in (11, 12, 13):
        k, m_mat, lap, labels = _instance(seed)
        norms = []
        for eta in (0.01, 0.1, 0.5, 1.0, 5.0, 20.0):
            beta = solve_beta(k, m_mat, lap, labels.indicator, labels.targets,
                              4.5, 1.0, eta)
            norms.append(float(np.trace(beta.T @ k @ beta)))
        for prev, nxt in zip(norms, norms[1:]):
            assert nxt <= prev * (1.0 + 1e-9) + 1e-12


def test_blend_order_does_not_change_the_solution():
    # blending the weight matrices before or after scaling is the same solve
    k, _, lap, labels = _instance(14)
    n, m = 10, 8
    rng = np.random.default_rng(14)
    pseudo = rng.integers(1, 3, size=m)
    ys = rng.integers(1, 3, size=n)
    m0 = marginal_mmd_matrix(n, m)
    per_class = [conditional_mmd_matrix(ys, pseudo, c) for c in (1, 2)]
    combined = combine_mmd_matrices(m0, per_class, 0.5, n, m).matrix
    averaged = 0.5 * m0 + 0.5 * (per_class[0] + per_class[1])
    beta_combined = solve_beta(k, combined, lap, labels.indicator, labels.targets,
                               4.5, 1.0, 0.1)
    beta_averaged = solve_beta(k, averaged, lap, labels.indicator, labels.targets,
                               4.5, 1.0, 0.1)
    assert np.max(np.abs(beta_combined - beta_averaged)) < 1e-8


# --- prediction -----------------------------------------------------------------


def _toy_model(seed=15):
    rng = np.random.default_rng(seed)
    train = rng.normal(size=(6, 2))
    beta = rng.normal(size=(6, 3))
    return FittedModel(beta, train, KernelSpec("rbf", 1.0), ("a", "b", "c"), 0.5)


def test_zero_coefficients_predict_the_first_class():
    model = _toy_model()
    model = FittedModel(np.zeros((6, 3)), model.train_features, model.kernel,
                        model.label_names, 0.5)
    assert np.array_equal(predict(model, np.zeros((4, 2))), np.ones(4, dtype=np.int64))


def test_duplicated_rows_get_duplicated_scores():
    model = _toy_model()
    row = np.array([[0.3, -0.7]])
    scores = predict_scores(model, np.vstack([row, row]))
    assert np.array_equal(scores[0], scores[1])


def test_kernel_interpolation_recovers_source_labels():
    rng = np.random.default_rng(16)
    xs = np.vstack([rng.normal(size=(20, 2)), rng.normal(size=(20, 2)) + 8.0])
    ys = np.array([1] * 20 + [2] * 20)
    k = gram(xs, xs, KernelSpec("rbf", 4.0))
    targets = np.zeros((2, 40))
    targets[ys - 1, np.arange(40)] = 1.0
    beta = solve_beta(k, np.zeros((40, 40)), np.zeros((40, 40)), np.ones(40),
                      targets, lam=0.0, rho=0.0, eta=1e-6)
    model = FittedModel(beta, xs, KernelSpec("rbf", 4.0), None, 0.0)
    assert accuracy(predict(model, xs), ys) >= 0.95


def test_predict_dimension_mismatch():
    model = _toy_model()
    with pytest.raises(ValueError):
        predict(model, np.zeros((2, 5)))


def test_predict_raw_applies_stored_transform():
    rng = np.random.default_rng(17)
    transform_matrix = rng.normal(size=(2, 2))
    base = _toy_model()
    model = FittedModel(base.beta, base.train_features, base.kernel,
                        base.label_names, 0.5, input_transform=transform_matrix,
                        normalize_inputs=True)
    x = rng.normal(size=(5, 2))
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    expected = predict(model, (x / norms) @ transform_matrix)
    assert np.array_equal(predict_raw(model, x), expected)


def test_accuracy_examples():
    assert accuracy(np.array([1, 2, 3]), np.array([1, 2, 3])) == 1.0
    assert accuracy(np.array([1, 1]), np.array([2, 2])) == 0.0
    assert accuracy(np.array([1, 2, 3, 4]), np.array([1, 2, 3, 9])) == 0.75
    with pytest.raises(ValueError):
        accuracy(np.array([1]), np.array([1, 2]))


# --- serialization ----------------------------------------------------------------


def test_model_bundle_round_trip(tmp_path):
    rng = np.random.default_rng(18)
    model = FittedModel(
        beta=rng.normal(size=(7, 2)),
        train_features=rng.normal(size=(7, 3)),
        kernel=KernelSpec("rbf", 2.5),
        label_names=("neg", "pos"),
        mu_final=0.625,
        input_transform=rng.normal(size=(3, 3)),
        normalize_inputs=True,
    )
    path = tmp_path / "model.npz"
    save_model(model, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.beta, model.beta)
    assert np.array_equal(loaded.train_features, model.train_features)
    assert np.array_equal(loaded.input_transform, model.input_transform)
    assert loaded.kernel == model.kernel
    assert loaded.label_names == model.label_names
    assert loaded.mu_final == model.mu_final
    assert loaded.normalize_inputs is True
    x = rng.normal(size=(4, 3))
    assert np.array_equal(predict_raw(loaded, x), predict_raw(model, x))


def test_model_bundle_without_transform(tmp_path):
    model = _toy_model()
    path = tmp_path / "plain.npz"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.input_transform is None
    assert loaded.normalize_inputs is False


def test_model_bundle_version_guard(tmp_path):
    model = _toy_model()
    path = tmp_path / "weird.npz"
    save_model(model, path)
    import json

    with np.load(path) as bundle:
        arrays = {name: bundle[name] for name in bundle.files}
    meta = json.loads(bytes(arrays["meta_json"].tobytes()).decode("utf-8"))
    meta["format_version"] = 99
    arrays["meta_json"] = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
    np.savez(path, **arrays)
    with pytest.raises(ValueError, match="format"):
        load_model(path)
