"""Independent brute-force oracles used to freeze expected values.

These deliberately build the dense (M*N) x (M*N) Kronecker systems and
naive loop-based sums that the library itself never forms.
"""

import numpy as np


def dense_kron_dual_solve(K, L, T, alpha, beta):
    """Solve [(I_M (x) (K + aI)) + b (L (x) K)] vec(Psi) = vec(T) densely.

    vec stacks columns (Fortran order), matching vec(AXB) = (B^T (x) A) vec(X).
    """
    N, M = T.shape
    A = np.kron(np.eye(M), K + alpha * np.eye(N)) + beta * np.kron(L, K)
    vec_psi = np.linalg.solve(A, T.flatten(order="F"))
    return vec_psi.reshape((N, M), order="F")


def dense_kron_primal_solve(Phi, L, T, alpha, beta):
    """Dense solve of the vectorized primal normal equations for W."""
    Kf = Phi.shape[1]
    M = T.shape[1]
    G = Phi.T @ Phi
    A = np.kron(np.eye(M), G + alpha * np.eye(Kf)) + beta * np.kron(L, G)
    rhs = (Phi.T @ T).flatten(order="F")
    return np.linalg.solve(A, rhs).reshape((Kf, M), order="F")


def edge_sum_quadratic_form(A, x):
    """Roughness as the explicit double sum over ordered pairs, halved."""
    M = A.shape[0]
    total = 0.0
    for i in range(M):
        for j in range(M):
            total += A[i, j] * (x[i] - x[j]) ** 2
    return 0.5 * total


def random_graph_adjacency(rng, M, density=0.5):
    A = np.zeros((M, M))
    for i in range(M):
        for j in range(i + 1, M):
            if rng.random() < density:
                A[i, j] = A[j, i] = rng.uniform(0.1, 2.0)
    return A


def random_psd(rng, n, rank=None):
    B = rng.standard_normal((n, rank or n))
    return B @ B.T


def random_laplacian_matrix(rng, M):
    from krgraph.graphs import Graph, build_laplacian

    return build_laplacian(Graph(random_graph_adjacency(rng, M))).matrix
