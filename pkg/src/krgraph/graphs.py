"""Undirected weighted graphs, Laplacian algebra, random generators, products.

All adjacency matrices are dense, symmetric, nonnegative, with a zero
diagonal. Laplacians are L = D - A with D the diagonal degree matrix;
they are symmetric PSD with row sums zero.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DimensionError, InvalidGraphError

_ROWSUM_TOL = 1e-10
_EIG_CLAMP = 1e-10


@dataclass(frozen=True)
class Graph:
    """Symmetric weighted adjacency over num_nodes nodes."""

    adjacency: np.ndarray
    num_nodes: int = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidGraphError(f"adjacency must be square, got shape {A.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max())):
            raise InvalidGraphError("adjacency must be symmetric")
        if np.any(A < 0):
            raise InvalidGraphError("adjacency weights must be nonnegative")
        if np.any(np.diag(A) != 0):
            raise InvalidGraphError("adjacency diagonal must be zero")
        object.__setattr__(self, "adjacency", A)
        object.__setattr__(self, "num_nodes", A.shape[0])

    def degrees(self):
        return self.adjacency.sum(axis=1)

    def num_edges(self):
        return int(np.count_nonzero(np.triu(self.adjacency, 1)))


@dataclass(frozen=True)
class Laplacian:
    """Graph Laplacian matrix with validated invariants."""

    matrix: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.matrix, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise InvalidGraphError(f"Laplacian must be square, got shape {L.shape}")
        scale = np.linalg.norm(L, "fro")
        if not np.allclose(L, L.T, rtol=0, atol=1e-12 * max(1.0, scale)):
            raise InvalidGraphError("Laplacian must be symmetric")
        rowsums = L.sum(axis=1)
        if np.abs(rowsums).max(initial=0.0) > _ROWSUM_TOL * max(1.0, scale):
            raise InvalidGraphError("Laplacian row sums must be zero")
        off = L - np.diag(np.diag(L))
        if np.any(off > 1e-12 * max(1.0, scale)):
            raise InvalidGraphError("Laplacian off-diagonal entries must be <= 0")
        if np.any(np.diag(L) < -1e-12 * max(1.0, scale)):
            raise InvalidGraphError("Laplacian diagonal entries must be >= 0")
        object.__setattr__(self, "matrix", L)

    @property
    def num_nodes(self):
        return self.matrix.shape[0]

    def eigendecomposition(self):
        """Return (eigenvalues, eigenvectors), eigenvalues clamped PSD."""
        lam, V = np.linalg.eigh(self.matrix)
        return clamp_psd_eigenvalues(lam), V


def clamp_psd_eigenvalues(vals):
    """Zero out tiny negative eigenvalues caused by roundoff."""
    vals = np.asarray(vals, dtype=float).copy()
    vals[(vals < 0) & (vals >= -_EIG_CLAMP)] = 0.0
    return vals


def build_laplacian(g: Graph) -> Laplacian:
    """L = D - A with D the diagonal degree matrix."""
    A = g.adjacency
    return Laplacian(np.diag(A.sum(axis=1)) - A)


def quadratic_form(L: Laplacian, x) -> float:
    """x^T L x, the graph roughness of signal x."""
    x = np.asarray(x, dtype=float)
    if x.shape != (L.num_nodes,):
        raise DimensionError(
            f"signal length {x.shape} incompatible with {L.num_nodes} nodes"
        )
    return float(x @ L.matrix @ x)


def erdos_renyi(M: int, p: float, seed: int) -> Graph:
    """G(M, p): each unordered pair is a unit edge with probability p."""
    if M < 2:
        raise InvalidGraphError(f"need at least 2 nodes, got {M}")
    if not 0 <= p <= 1:
        raise InvalidGraphError(f"edge probability must be in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    A = np.zeros((M, M))
    iu = np.triu_indices(M, 1)
    A[iu] = (rng.random(len(iu[0])) < p).astype(float)
    return Graph(A + A.T)


def barabasi_albert(M: int, m_attach: int, seed: int) -> Graph:
    """Preferential attachment starting from a clique on m_attach+1 nodes.

    Each new node attaches to m_attach distinct existing nodes chosen with
    probability proportional to current degree, so the final edge count is
    C(m_attach+1, 2) + m_attach * (M - m_attach - 1).
    """
    if not 1 <= m_attach < M:
        raise InvalidGraphError(
            f"need 1 <= m_attach < M, got m_attach={m_attach}, M={M}"
        )
    rng = np.random.default_rng(seed)
    A = np.zeros((M, M))
    init = m_attach + 1
    A[:init, :init] = 1.0 - np.eye(init)
    for new in range(init, M):
        deg = A[:new, :new].sum(axis=1)
        targets = []
        while len(targets) < m_attach:
            probs = deg / deg.sum()
            t = rng.choice(new, p=probs)
            if t not in targets:
                targets.append(t)
        for t in targets:
            A[new, t] = A[t, new] = 1.0
    return Graph(A)


def geodesic_adjacency(distances) -> Graph:
    """A(i,j) = exp(-d_ij^2 / sum_{i,j} d_ij^2) off-diagonal, 0 on it.

    The normalizer sums d_ij^2 over all ordered pairs (the zero diagonal
    contributes nothing).
    """
    D = np.asarray(distances, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise InvalidGraphError(f"distance matrix must be square, got {D.shape}")
    if not np.allclose(D, D.T, rtol=0, atol=1e-12 * max(1.0, np.abs(D).max())):
        raise InvalidGraphError("distance matrix must be symmetric")
    if np.any(D < 0):
        raise InvalidGraphError("distances must be nonnegative")
    if np.any(np.diag(D) != 0):
        raise InvalidGraphError("distance matrix diagonal must be zero")
    total = float(np.sum(D**2))
    if total == 0:
        raise InvalidGraphError("all distances are zero; adjacency undefined")
    A = np.exp(-(D**2) / total)
    np.fill_diagonal(A, 0.0)
    return Graph(A)


def cartesian_product(gA: Graph, gB: Graph) -> Graph:
    """Cartesian graph product: adjacency A (x) I + I (x) B."""
    A, B = gA.adjacency, gB.adjacency
    MA, MB = gA.num_nodes, gB.num_nodes
    return Graph(np.kron(A, np.eye(MB)) + np.kron(np.eye(MA), B))


def spectral_rescale(L: Laplacian) -> Laplacian:
    """Divide by the spectral radius so the largest eigenvalue is 1."""
    rho = float(np.linalg.norm(L.matrix, 2))
    if rho <= 0:
        raise InvalidGraphError("cannot rescale the zero Laplacian")
    return Laplacian(L.matrix / rho)


# ---------------------------------------------------------------------------
# I/O: dense CSV and JSON edge lists

def save_matrix_csv(path, mat):
    """Write a dense matrix as CSV, shortest round-trip decimals."""
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in mat:
            writer.writerow([repr(float(v)) for v in row])


def load_matrix_csv(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataFormatError(f"{path}: bad number on line {lineno}: {exc}")
            if len(rows) > 1 and len(rows[-1]) != len(rows[0]):
                raise DataFormatError(f"{path}: ragged row on line {lineno}")
    if not rows:
        raise DataFormatError(f"{path}: empty matrix file")
    return np.array(rows)


def graph_to_edge_json(g: Graph) -> dict:
    iu = np.triu_indices(g.num_nodes, 1)
    edges = [
        [int(i), int(j), float(g.adjacency[i, j])]
        for i, j in zip(*iu)
        if g.adjacency[i, j] != 0
    ]
    return {"nodes": g.num_nodes, "edges": edges}


def graph_from_edge_json(doc: dict) -> Graph:
    M = int(doc["nodes"])
    A = np.zeros((M, M))
    for i, j, w in doc["edges"]:
        A[i, j] = A[j, i] = float(w)
    return Graph(A)


def save_graph_json(path, g: Graph):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph_to_edge_json(g), fh)
        fh.write("\n")


def load_graph_json(path) -> Graph:
    with open(path, encoding="utf-8") as fh:
        return graph_from_edge_json(json.load(fh))
