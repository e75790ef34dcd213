"""Synthetic experiment data: correlated Gaussian rows made graph-smooth,
split in half, and corrupted by SNR-calibrated noise on the training side.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.stats import invwishart

from .errors import DimensionError, KrgraphError
from .graphs import (
    Graph,
    Laplacian,
    build_laplacian,
    barabasi_albert,
    erdos_renyi,
    save_graph_json,
    save_matrix_csv,
)


@dataclass(frozen=True)
class SynthConfig:
    num_nodes: int
    num_samples: int
    graph_model: str            # "erdos_renyi" or "barabasi_albert"
    graph_param: float          # edge probability p, or attachment count m
    snr_db: float
    seed: int
    wishart_dof_offset: int = 2  # dof = S + offset; offset 2 gives mean I

    def __post_init__(self):
        if self.num_samples % 2 != 0:
            raise KrgraphError("num_samples must be even (equal train/test split)")
        if self.num_nodes < 2:
            raise KrgraphError("need at least 2 nodes")
        if self.graph_model not in ("erdos_renyi", "barabasi_albert"):
            raise KrgraphError(f"unknown graph model {self.graph_model!r}")


@dataclass(frozen=True)
class Dataset:
    """Paired inputs and targets; T0 carries clean targets when known."""

    X: np.ndarray
    T: np.ndarray
    T0: Optional[np.ndarray] = None
    indices: Optional[np.ndarray] = None  # sample ids into a shared kernel

    def __post_init__(self):
        if self.X.shape[0] != self.T.shape[0]:
            raise DimensionError("X and T row counts differ")
        if self.T0 is not None and self.T0.shape != self.T.shape:
            raise DimensionError("T0 shape differs from T")

    @property
    def n(self):
        return self.X.shape[0]


def sample_inverse_wishart_covariance(S: int, seed: int, dof_offset: int = 2):
    """One S x S draw from InvWishart(dof=S+dof_offset, scale=I).

    The default dof S+2 is the smallest with a finite mean, which is then
    exactly the identity.
    """
    if S < 2:
        raise KrgraphError("covariance dimension must be >= 2")
    rng = np.random.default_rng(seed)
    return invwishart.rvs(df=S + dof_offset, scale=np.eye(S), random_state=rng)


def generate_correlated_rows(C_S, M: int, seed: int):
    """S x M matrix whose M columns are independent N(0, C_S) draws."""
    C_S = np.asarray(C_S, dtype=float)
    try:
        chol = np.linalg.cholesky(C_S)
    except np.linalg.LinAlgError:
        raise KrgraphError("covariance matrix is not positive definite")
    rng = np.random.default_rng(seed)
    return chol @ rng.standard_normal((C_S.shape[0], M))


def smooth_projection(r, L: Laplacian):
    """argmin_z ||r - z||^2 + z^T L z = (I + L)^{-1} r."""
    r = np.asarray(r, dtype=float)
    return np.linalg.solve(np.eye(L.num_nodes) + L.matrix, r)


def add_noise_snr(T0, snr_db: float, seed: int):
    """Add white Gaussian noise with variance set by the target SNR in dB."""
    T0 = np.asarray(T0, dtype=float)
    signal_energy = float(np.sum(T0**2))
    if signal_energy == 0:
        raise KrgraphError("cannot calibrate noise against a zero signal")
    noise_var = signal_energy / (T0.size * 10.0 ** (snr_db / 10.0))
    rng = np.random.default_rng(seed)
    return T0 + np.sqrt(noise_var) * rng.standard_normal(T0.shape)


def _make_graph(cfg: SynthConfig, seed: int) -> Graph:
    if cfg.graph_model == "erdos_renyi":
        return erdos_renyi(cfg.num_nodes, cfg.graph_param, seed)
    return barabasi_albert(cfg.num_nodes, int(cfg.graph_param), seed)


def make_synthetic_dataset(cfg: SynthConfig):
    """Full pipeline: graph -> C_S -> correlated rows -> per-row smoothing
    -> random equal split -> noise on training targets only.

    Returns (train, test, graph, C_S). Dataset.X holds the sample indices
    (as an N x 1 column) so the precomputed kernel K(i, j) = C_S(i, j) can
    be restricted to the train/test index sets.
    """
    S, M = cfg.num_samples, cfg.num_nodes
    graph = _make_graph(cfg, cfg.seed)
    L = build_laplacian(graph)
    C_S = sample_inverse_wishart_covariance(S, cfg.seed + 1, cfg.wishart_dof_offset)
    R = generate_correlated_rows(C_S, M, cfg.seed + 2)
    # (I + L)^{-1} applied to every row at once
    T0_all = smooth_projection(R.T, L).T
    perm = np.random.default_rng(cfg.seed + 3).permutation(S)
    tr_idx, ts_idx = np.sort(perm[: S // 2]), np.sort(perm[S // 2:])
    T_train = add_noise_snr(T0_all[tr_idx], cfg.snr_db, cfg.seed + 4)
    train = Dataset(
        X=tr_idx[:, None].astype(float),
        T=T_train,
        T0=T0_all[tr_idx],
        indices=tr_idx,
    )
    test = Dataset(
        X=ts_idx[:, None].astype(float),
        T=T0_all[ts_idx].copy(),
        T0=T0_all[ts_idx],
        indices=ts_idx,
    )
    return train, test, graph, C_S


def save_dataset(out_dir, train: Dataset, test: Dataset, graph: Graph,
                 manifest: dict):
    """Write X/T/T0 CSVs, the graph JSON, and a manifest JSON."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_matrix_csv(out / "X_train.csv", train.X)
    save_matrix_csv(out / "T_train.csv", train.T)
    if train.T0 is not None:
        save_matrix_csv(out / "T0_train.csv", train.T0)
    save_matrix_csv(out / "X_test.csv", test.X)
    if test.T0 is not None:
        save_matrix_csv(out / "T0_test.csv", test.T0)
    save_graph_json(out / "graph.json", graph)
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
