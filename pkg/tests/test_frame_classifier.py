import json

import numpy as np
import pytest
from scipy.optimize import minimize

from models.errors import DimensionMismatch, SingleClassInput
from models.segmentation.frame_classifier import (
    FeatureScaler, KernelSpec, SvmModel, SvmParams, decision_value, dump_model_json, predict,
    train_svm,
)

XOR_POINTS = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
XOR_LABELS = np.array([1, 1, -1, -1])


def blobs(rng, n=50, offset=3.0, spread=0.5):
    pos = rng.normal(offset, spread, size=(n, 2))
    neg = rng.normal(-offset, spread, size=(n, 2))
    return np.vstack([pos, neg]), np.concatenate([np.ones(n, dtype=int), -np.ones(n, dtype=int)])


def reference_dual(features, labels, params):
    """Soft-margin dual solved with SLSQP on the same scaled features and kernel."""
    scaler = FeatureScaler.fit(features)
    x = scaler.transform(features)
    kernel = params.kernel.resolved(x.shape[1])
    y = labels.astype(float)
    gram = kernel(x, x) * np.outer(y, y)

    result = minimize(
        lambda a: 0.5 * a @ gram @ a - a.sum(),
        np.zeros(len(y)),
        jac=lambda a: gram @ a - 1.0,
        bounds=[(0.0, params.C)] * len(y),
        constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y}],
        method="SLSQP",
        options={"ftol": 1e-12, "maxiter": 1000},
    )
    alpha = result.x
    raw = kernel(x, x) @ (alpha * y)
    free = (alpha > 1e-6) & (alpha < params.C - 1e-6)
    bias = np.mean(y[free] - raw[free])
    return raw + bias


class TestTrainSvm:
    def test_xor_degree_three(self):
        model = train_svm(XOR_POINTS, XOR_LABELS, SvmParams(kernel=KernelSpec(degree=3)))
        np.testing.assert_array_equal(predict(model, XOR_POINTS), XOR_LABELS > 0)

    def test_separable_blobs(self, rng):
        features, labels = blobs(rng)
        model = train_svm(features, labels)
        assert model.converged
        np.testing.assert_array_equal(predict(model, features), labels > 0)

    def test_single_class(self):
        with pytest.raises(SingleClassInput):
            train_svm(np.ones((4, 2)), np.ones(4, dtype=int))

    def test_label_count_mismatch(self):
        with pytest.raises(DimensionMismatch):
            train_svm(np.ones((4, 2)), [1, -1])

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_reference_qp(self, seed):
        rng = np.random.default_rng(seed)
        features, labels = blobs(rng, n=20, offset=0.8, spread=1.0)
        params = SvmParams(C=1.0, tol=1e-5)
        model = train_svm(features, labels, params)
        reference = reference_dual(features, labels, params)
        values = decision_value(model, features)
        confident = np.abs(reference) > 1e-2
        np.testing.assert_array_equal((values > 0)[confident], (reference > 0)[confident])
        np.testing.assert_allclose(values, reference, atol=1e-2)

    def test_dual_feasibility_and_kkt(self, rng):
        features, labels = blobs(rng, n=30, offset=1.0, spread=1.0)
        params = SvmParams(C=2.0, tol=1e-5)
        model = train_svm(features, labels, params)
        assert np.all(np.abs(model.alphas) <= params.C + 1e-9)
        assert abs(model.alphas.sum()) < 1e-6

        sv_values = decision_value(model, features[model.support_indices])
        free = np.abs(model.alphas) < params.C - 1e-6
        np.testing.assert_allclose(np.abs(sv_values[free]), 1.0, atol=1e-2)
        sv_labels = labels[model.support_indices]
        np.testing.assert_array_equal(np.sign(model.alphas), sv_labels)

    def test_duplicates_leave_predictions(self, rng):
        features, labels = blobs(rng, n=25)
        probe = rng.uniform(-4, 4, size=(40, 2))
        once = train_svm(features, labels)
        twice = train_svm(np.vstack([features, features]), np.concatenate([labels, labels]))
        np.testing.assert_array_equal(predict(once, probe), predict(twice, probe))

    def test_deterministic(self, rng):
        features, labels = blobs(rng, n=30, offset=1.0, spread=1.0)
        a, b = train_svm(features, labels), train_svm(features, labels)
        np.testing.assert_array_equal(a.alphas, b.alphas)
        assert a.bias == b.bias


class TestScaler:
    def test_standardized_input_is_fixed_point(self, rng):
        x = rng.normal(3.0, 2.0, size=(200, 4))
        standardized = FeatureScaler.fit(x).transform(x)
        again = FeatureScaler.fit(standardized).transform(standardized)
        np.testing.assert_allclose(again, standardized, atol=1e-9)

    def test_constant_dimension(self):
        scaler = FeatureScaler.fit(np.array([[1.0, 5.0], [3.0, 5.0]]))
        np.testing.assert_allclose(scaler.transform([[2.0, 5.0]]), [[0.0, 0.0]])


def fixed_model(bias):
    return SvmModel(
        support_vectors=np.zeros((1, 2)),
        alphas=np.zeros(1),
        bias=bias,
        kernel=KernelSpec(gamma=1.0),
        scaler=FeatureScaler(np.zeros(2), np.ones(2)),
        C=1.0,
    )


class TestPredict:
    def test_positive_value_is_bird(self):
        model = fixed_model(0.7)
        assert decision_value(model, np.array([0.3, 0.1])) == pytest.approx(0.7)
        np.testing.assert_array_equal(predict(model, np.ones((3, 2))), [True, True, True])

    def test_tie_is_background(self):
        np.testing.assert_array_equal(predict(fixed_model(0.0), np.ones((2, 2))), [False, False])

    def test_empty_input(self):
        assert predict(fixed_model(0.7), np.zeros((0, 2))).size == 0

    def test_wrong_dimension(self):
        with pytest.raises(DimensionMismatch):
            predict(fixed_model(0.7), np.ones((2, 3)))

    def test_kernel_formula(self):
        kernel = KernelSpec(degree=3, gamma=0.5, coef0=1.0)
        assert kernel(np.array([[1.0, 2.0]]), np.array([[3.0, 1.0]]))[0, 0] == pytest.approx(3.5 ** 3)

    def test_dump_json(self, rng, tmp_path):
        features, labels = blobs(rng, n=10)
        path = tmp_path / "model.json"
        dump_model_json(train_svm(features, labels), path)
        doc = json.loads(path.read_text())
        assert doc["kernel"]["degree"] == 3
        assert len(doc["alphas"]) == len(doc["support_vectors"])
