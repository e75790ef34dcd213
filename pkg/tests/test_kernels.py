import numpy as np
import pytest

from krgraph.errors import DegenerateKernelError, KrgraphError
from krgraph.kernels import (
    KernelSpec,
    gram_matrix,
    kernel_cross_matrix,
    kernel_vector,
)


class TestKernelSpec:
    def test_rbf_needs_positive_sigma(self):
        with pytest.raises(KrgraphError):
            KernelSpec(kind="rbf", sigma_sq=0.0)
        with pytest.raises(KrgraphError):
            KernelSpec(kind="rbf")

    def test_unknown_kind(self):
        with pytest.raises(KrgraphError):
            KernelSpec(kind="polynomial")

    def test_precomputed_must_be_psd(self):
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
        with pytest.raises(KrgraphError):
            KernelSpec(kind="precomputed", precomputed=bad)

    def test_json_roundtrip(self):
        spec = KernelSpec(kind="rbf", sigma_sq=2.5)
        assert KernelSpec.from_json(spec.to_json()) == spec


class TestGramMatrix:
    def test_linear_identity_inputs(self):
        gram = gram_matrix(np.eye(2), KernelSpec(kind="linear"))
        assert np.array_equal(gram.matrix, np.eye(2))

    def test_linear_is_xxt_exactly(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((6, 3))
        gram = gram_matrix(X, KernelSpec(kind="linear"))
        assert np.array_equal(gram.matrix, X @ X.T)

    def test_rbf_unit_diagonal(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((8, 4))
        gram = gram_matrix(X, KernelSpec(kind="rbf", sigma_sq=0.7))
        np.testing.assert_allclose(np.diag(gram.matrix), 1.0, atol=1e-14)

    def test_rbf_hand_example(self):
        # x1 = 0, x2 = 1: Z = (0 + 1 + 1 + 0) / 2 = 1, K12 = exp(-1)
        X = np.array([[0.0], [1.0]])
        gram = gram_matrix(X, KernelSpec(kind="rbf", sigma_sq=1.0))
        assert gram.rbf_normalizer == pytest.approx(1.0)
        assert gram.matrix[0, 1] == pytest.approx(np.exp(-1.0))

    def test_rbf_degenerate_inputs(self):
        X = np.ones((3, 2))
        with pytest.raises(DegenerateKernelError):
            gram_matrix(X, KernelSpec(kind="rbf", sigma_sq=1.0))

    def test_rbf_entries_in_unit_interval(self):
        rng = np.random.default_rng(2)
        X = rng.standard_normal((10, 2))
        gram = gram_matrix(X, KernelSpec(kind="rbf", sigma_sq=1.3))
        assert np.all(gram.matrix > 0)
        assert np.all(gram.matrix <= 1 + 1e-15)

    @pytest.mark.parametrize("kind,sigma", [("linear", None), ("rbf", 0.9)])
    def test_psd_on_random_inputs(self, kind, sigma):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((100, 5))
        gram = gram_matrix(X, KernelSpec(kind=kind, sigma_sq=sigma))
        evals = np.linalg.eigvalsh(gram.matrix)
        assert evals.min() >= -1e-8 * np.linalg.norm(gram.matrix, 2)

    def test_precomputed_restriction(self):
        rng = np.random.default_rng(4)
        B = rng.standard_normal((6, 6))
        full = B @ B.T
        spec = KernelSpec(kind="precomputed", precomputed=full)
        idx = np.array([[1.0], [3.0], [4.0]])
        gram = gram_matrix(idx, spec)
        assert np.array_equal(gram.matrix, full[np.ix_([1, 3, 4], [1, 3, 4])])


class TestKernelVector:
    def test_rbf_at_training_point_is_one(self):
        rng = np.random.default_rng(5)
        X = rng.standard_normal((7, 3))
        spec = KernelSpec(kind="rbf", sigma_sq=1.0)
        gram = gram_matrix(X, spec)
        k = kernel_vector(X, X[2], spec, gram)
        assert k[2] == pytest.approx(1.0)

    def test_linear_zero_input(self):
        X = np.random.default_rng(6).standard_normal((5, 2))
        spec = KernelSpec(kind="linear")
        gram = gram_matrix(X, spec)
        assert np.array_equal(kernel_vector(X, np.zeros(2), spec, gram),
                              np.zeros(5))

    def test_rbf_hand_example(self):
        X = np.array([[0.0], [1.0]])
        spec = KernelSpec(kind="rbf", sigma_sq=1.0)
        gram = gram_matrix(X, spec)
        k = kernel_vector(X, np.array([0.0]), spec, gram)
        np.testing.assert_allclose(k, [1.0, np.exp(-1.0)], rtol=1e-12)

    @pytest.mark.parametrize("kind,sigma", [("linear", None), ("rbf", 1.7)])
    def test_gram_rows_match_kernel_vector(self, kind, sigma):
        rng = np.random.default_rng(7)
        X = rng.standard_normal((9, 4))
        spec = KernelSpec(kind=kind, sigma_sq=sigma)
        gram = gram_matrix(X, spec)
        for n in range(9):
            k = kernel_vector(X, X[n], spec, gram)
            np.testing.assert_allclose(gram.matrix[n], k, atol=1e-12)

    def test_precomputed_cross(self):
        rng = np.random.default_rng(8)
        B = rng.standard_normal((5, 5))
        full = B @ B.T
        spec = KernelSpec(kind="precomputed", precomputed=full)
        X_train = np.array([[0.0], [2.0]])
        gram = gram_matrix(X_train, spec)
        k = kernel_vector(X_train, np.array([4.0]), spec, gram)
        assert np.array_equal(k, full[[0, 2], 4])

    def test_cross_matrix_stacks_vectors(self):
        rng = np.random.default_rng(9)
        X = rng.standard_normal((6, 3))
        Xt = rng.standard_normal((4, 3))
        spec = KernelSpec(kind="rbf", sigma_sq=1.1)
        gram = gram_matrix(X, spec)
        K_cross = kernel_cross_matrix(X, Xt, spec, gram)
        assert K_cross.shape == (4, 6)
        np.testing.assert_allclose(K_cross[1], kernel_vector(X, Xt[1], spec, gram))
