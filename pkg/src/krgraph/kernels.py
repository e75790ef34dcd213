"""Kernel functions, Gram matrices, and test-point kernel vectors.

Supported kernels:
  linear       k(x, x') = x^T x'
  rbf          k(x, x') = exp(-||x - x'||^2 / (sigma_sq * Z)) with the
               dataset normalizer Z = sum_{m,n} ||x_m - x_n||^2 / N over
               all ordered training pairs, frozen at training time
  precomputed  entries looked up in a user-supplied PSD matrix; data
               matrices then hold integer sample indices into it
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from .errors import DegenerateKernelError, DimensionError, KrgraphError

VALID_KINDS = ("linear", "rbf", "precomputed")


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel choice plus hyperparameters."""

    kind: str
    sigma_sq: Optional[float] = None
    precomputed: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in VALID_KINDS:
            raise KrgraphError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf":
            if self.sigma_sq is None or self.sigma_sq <= 0:
                raise KrgraphError("rbf kernel requires sigma_sq > 0")
        if self.kind == "precomputed":
            if self.precomputed is None:
                raise KrgraphError("precomputed kernel requires a matrix")
            P = np.asarray(self.precomputed, dtype=float)
            if P.ndim != 2 or P.shape[0] != P.shape[1]:
                raise KrgraphError("precomputed kernel matrix must be square")
            if not np.allclose(P, P.T, atol=1e-8 * max(1.0, np.abs(P).max())):
                raise KrgraphError("precomputed kernel matrix must be symmetric")
            evals = np.linalg.eigvalsh(P)
            if evals.min() < -1e-8 * max(1.0, evals.max()):
                raise KrgraphError("precomputed kernel matrix must be PSD")
            object.__setattr__(self, "precomputed", P)

    def to_json(self):
        doc = {"kind": self.kind}
        if self.sigma_sq is not None:
            doc["sigma_sq"] = self.sigma_sq
        if self.precomputed is not None:
            doc["precomputed"] = self.precomputed.tolist()
        return doc

    @staticmethod
    def from_json(doc):
        pre = doc.get("precomputed")
        return KernelSpec(
            kind=doc["kind"],
            sigma_sq=doc.get("sigma_sq"),
            precomputed=None if pre is None else np.array(pre, dtype=float),
        )


@dataclass(frozen=True)
class GramMatrix:
    """Training Gram matrix; rbf_normalizer holds Z for test-time reuse."""

    matrix: np.ndarray
    rbf_normalizer: Optional[float] = None

    @property
    def n(self):
        return self.matrix.shape[0]


def _indices(X):
    """Interpret X as a column of sample indices for precomputed kernels."""
    idx = np.asarray(X).reshape(-1)
    out = idx.astype(int)
    if np.any(out != idx):
        raise DimensionError("precomputed kernel expects integer sample indices")
    return out


def gram_matrix(X, spec: KernelSpec) -> GramMatrix:
    """Assemble the N x N training Gram matrix for the given kernel."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if spec.kind == "linear":
        return GramMatrix(X @ X.T)
    if spec.kind == "precomputed":
        idx = _indices(X)
        if idx.min(initial=0) < 0 or idx.max(initial=-1) >= spec.precomputed.shape[0]:
            raise DimensionError("sample index out of range of precomputed kernel")
        return GramMatrix(spec.precomputed[np.ix_(idx, idx)])
    # rbf
    sq = cdist(X, X, "sqeuclidean")
    Z = float(sq.sum()) / X.shape[0]
    if Z == 0:
        raise DegenerateKernelError("all inputs identical; rbf normalizer is zero")
    return GramMatrix(np.exp(-sq / (spec.sigma_sq * Z)), rbf_normalizer=Z)


def kernel_vector(X_train, x, spec: KernelSpec, gram: GramMatrix):
    """k(x) = [k(x_1, x), ..., k(x_N, x)] against the training set."""
    X_train = np.atleast_2d(np.asarray(X_train, dtype=float))
    x = np.asarray(x, dtype=float).reshape(-1)
    if spec.kind == "precomputed":
        tr = _indices(X_train)
        j = int(x[0])
        return spec.precomputed[tr, j]
    if x.shape[0] != X_train.shape[1]:
        raise DimensionError(
            f"test point has dim {x.shape[0]}, training data dim {X_train.shape[1]}"
        )
    if spec.kind == "linear":
        return X_train @ x
    if gram.rbf_normalizer is None:
        raise DegenerateKernelError("rbf kernel vector needs the training normalizer")
    sq = np.sum((X_train - x) ** 2, axis=1)
    return np.exp(-sq / (spec.sigma_sq * gram.rbf_normalizer))


def kernel_cross_matrix(X_train, X_test, spec: KernelSpec, gram: GramMatrix):
    """Stack kernel_vector over the rows of X_test into an N_test x N matrix."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    return np.stack(
        [kernel_vector(X_train, x, spec, gram) for x in X_test], axis=0
    )
