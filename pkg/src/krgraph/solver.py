"""Fit/predict for LR, LRG, KR, KRG via the spectral Sylvester solve.

Both the primal and the dual normal equations have the generalized
Sylvester form A X + beta B X L = RHS with A = B + alpha*I and B
symmetric PSD. Jointly diagonalizing B and L turns the system into an
entrywise division, so one eigendecomposition pair serves every
(alpha, beta) on a hyperparameter grid.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularSystemError
from .graphs import Laplacian, clamp_psd_eigenvalues
from .kernels import GramMatrix, KernelSpec, kernel_vector

_ETA_FLOOR = 1e-14


@dataclass(frozen=True)
class Hyperparams:
    """Regularization weights: alpha on coefficients, beta on roughness."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(f"alpha and beta must be >= 0, got {self}")


@dataclass(frozen=True)
class SpectralCache:
    """Eigenpairs of the sample-side matrix (kernel or feature Gram) and L."""

    u: np.ndarray       # N x N orthonormal
    theta: np.ndarray   # N kernel eigenvalues, clamped >= 0
    v: np.ndarray       # M x M orthonormal
    lam: np.ndarray     # M Laplacian eigenvalues, clamped >= 0

    @staticmethod
    def build(K, L: Laplacian) -> "SpectralCache":
        K = np.asarray(K, dtype=float)
        theta, U = np.linalg.eigh(K)
        lam, V = L.eigendecomposition()
        return SpectralCache(
            u=U, theta=clamp_psd_eigenvalues(theta), v=V, lam=lam
        )


@dataclass(frozen=True)
class KrgModel:
    """Fitted dual-coefficient model: predictions are psi^T k(x)."""

    psi: np.ndarray
    x_train: np.ndarray
    spec: KernelSpec
    gram: GramMatrix
    laplacian: Laplacian
    hyper: Hyperparams


@dataclass(frozen=True)
class LrgModel:
    """Fitted primal model: predictions are w^T x."""

    w: np.ndarray
    hyper: Hyperparams
    laplacian: Laplacian


def _eta_grid(cache: SpectralCache, hyper: Hyperparams):
    """eta[n, m] = (theta_n + alpha) + beta * lam_m * theta_n."""
    return (
        cache.theta[:, None]
        + hyper.alpha
        + hyper.beta * cache.theta[:, None] * cache.lam[None, :]
    )


def solve_sylvester_spectral(cache: SpectralCache, RHS, hyper: Hyperparams):
    """Solve (K + alpha I) X + beta K X L = RHS through the eigenbases."""
    RHS = np.asarray(RHS, dtype=float)
    if RHS.shape != (cache.u.shape[0], cache.v.shape[0]):
        raise DimensionError(
            f"RHS shape {RHS.shape} incompatible with cache "
            f"({cache.u.shape[0]}, {cache.v.shape[0]})"
        )
    eta = _eta_grid(cache, hyper)
    if eta.min() <= _ETA_FLOOR:
        n, m = np.unravel_index(np.argmin(eta), eta.shape)
        raise SingularSystemError(
            f"near-singular system: eta={eta[n, m]:.3e} at kernel eigenvalue "
            f"theta={cache.theta[n]:.3e}, Laplacian eigenvalue lam={cache.lam[m]:.3e}"
        )
    return cache.u @ ((cache.u.T @ RHS @ cache.v) / eta) @ cache.v.T


def fit_krg(gram: GramMatrix, T, L: Laplacian, hyper: Hyperparams,
            x_train=None, spec: KernelSpec | None = None,
            cache: SpectralCache | None = None) -> KrgModel:
    """Solve (K + alpha I) Psi + beta K Psi L = T for the dual coefficients."""
    T = np.asarray(T, dtype=float)
    if T.shape != (gram.n, L.num_nodes):
        raise DimensionError(
            f"targets {T.shape} incompatible with N={gram.n}, M={L.num_nodes}"
        )
    if cache is None:
        cache = SpectralCache.build(gram.matrix, L)
    psi = solve_sylvester_spectral(cache, T, hyper)
    if x_train is None:
        x_train = np.zeros((gram.n, 0))
    if spec is None:
        spec = KernelSpec(kind="linear")
    return KrgModel(
        psi=psi,
        x_train=np.asarray(x_train, dtype=float),
        spec=spec,
        gram=gram,
        laplacian=L,
        hyper=hyper,
    )


def predict_krg(model: KrgModel, x):
    """y = Psi^T k(x)."""
    k = kernel_vector(model.x_train, x, model.spec, model.gram)
    return model.psi.T @ k


def fit_lrg(Phi, T, L: Laplacian, hyper: Hyperparams,
            cache: SpectralCache | None = None) -> LrgModel:
    """Solve (Phi^T Phi + alpha I) W + beta Phi^T Phi W L = Phi^T T.

    Solved through the eigendecomposition of the K_feat x K_feat feature
    Gram; the dense (M*K_feat)-sized Kronecker system is never formed.
    """
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    T = np.asarray(T, dtype=float)
    if T.shape != (Phi.shape[0], L.num_nodes):
        raise DimensionError(
            f"targets {T.shape} incompatible with N={Phi.shape[0]}, M={L.num_nodes}"
        )
    G = Phi.T @ Phi
    if cache is None:
        cache = SpectralCache.build(G, L)
    if hyper.alpha == 0 and cache.theta.min() <= _ETA_FLOOR:
        raise SingularSystemError(
            "alpha=0 with rank-deficient features; the primal system is singular"
        )
    w = solve_sylvester_spectral(cache, Phi.T @ T, hyper)
    return LrgModel(w=w, hyper=hyper, laplacian=L)


def predict_lrg(model: LrgModel, x):
    """t = W^T x (identity feature map)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != model.w.shape[0]:
        raise DimensionError(
            f"input dim {x.shape[0]} != feature dim {model.w.shape[0]}"
        )
    return model.w.T @ x


def dual_cost(gram: GramMatrix, psi, T, L: Laplacian, hyper: Hyperparams):
    """-2 tr(T^T K Psi) + tr(Psi^T K K Psi) + alpha tr(Psi^T K Psi)
    + beta tr(Psi^T K K Psi L)."""
    K = gram.matrix
    KP = K @ psi
    return float(
        -2.0 * np.trace(T.T @ KP)
        + np.trace(KP.T @ KP)
        + hyper.alpha * np.trace(psi.T @ KP)
        + hyper.beta * np.trace(KP.T @ KP @ L.matrix)
    )


def dual_cost_gradient(gram: GramMatrix, psi, T, L: Laplacian, hyper: Hyperparams):
    """Analytic gradient of dual_cost: 2 K [(K + alpha I) Psi + beta K Psi L - T]."""
    K = gram.matrix
    resid = (K + hyper.alpha * np.eye(gram.n)) @ psi + hyper.beta * K @ psi @ L.matrix - T
    return 2.0 * K @ resid


def shrinkage_factors(cache: SpectralCache, hyper: Hyperparams):
    """zeta[n, m] = theta_n / eta[n, m]; each in [0, 1) for alpha > 0."""
    eta = _eta_grid(cache, hyper)
    if eta.min() <= _ETA_FLOOR:
        raise SingularSystemError("near-singular eta; shrinkage undefined")
    return cache.theta[:, None] / eta


def fitted_smoother(gram: GramMatrix, L: Laplacian, hyper: Hyperparams, T,
                    cache: SpectralCache | None = None):
    """Training-set fitted outputs Y = K Psi."""
    if cache is None:
        cache = SpectralCache.build(gram.matrix, L)
    psi = solve_sylvester_spectral(cache, np.asarray(T, dtype=float), hyper)
    return gram.matrix @ psi


def kr_fitted_shrinkage(gram: GramMatrix, alpha: float, T):
    """Graph-free fitted outputs K (K + alpha I)^{-1} T via eigendecomposition."""
    if alpha <= 0:
        evals = np.linalg.eigvalsh(gram.matrix)
        if evals.min() <= _ETA_FLOOR:
            raise SingularSystemError("alpha=0 requires a nonsingular Gram matrix")
    theta, U = np.linalg.eigh(gram.matrix)
    theta = clamp_psd_eigenvalues(theta)
    factors = theta / (theta + alpha)
    return U @ (factors[:, None] * (U.T @ np.asarray(T, dtype=float)))


# ---------------------------------------------------------------------------
# Model serialization

MODEL_FORMAT_VERSION = 1


def model_to_json(model: KrgModel) -> dict:
    return {
        "version": MODEL_FORMAT_VERSION,
        "kernel_spec": model.spec.to_json(),
        "hyper": {"alpha": model.hyper.alpha, "beta": model.hyper.beta},
        "laplacian": model.laplacian.matrix.tolist(),
        "x_train": model.x_train.tolist(),
        "psi": model.psi.tolist(),
    }


def model_from_json(doc: dict) -> KrgModel:
    from .kernels import gram_matrix

    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    spec = KernelSpec.from_json(doc["kernel_spec"])
    x_train = np.array(doc["x_train"], dtype=float)
    return KrgModel(
        psi=np.array(doc["psi"], dtype=float),
        x_train=x_train,
        spec=spec,
        gram=gram_matrix(x_train, spec),
        laplacian=Laplacian(np.array(doc["laplacian"], dtype=float)),
        hyper=Hyperparams(**doc["hyper"]),
    )


def save_model(path, model: KrgModel):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(model), fh)
        fh.write("\n")


def load_model(path) -> KrgModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_json(json.load(fh))
