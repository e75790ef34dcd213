"""Joint estimation of the Laplacian and dual regression coefficients.

The Laplacian is parametrized by nonnegative edge weights w over the
M(M-1)/2 unordered node pairs, L(w) = sum_e w_e (e_i - e_j)(e_i - e_j)^T,
which satisfies symmetry, zero row sums, and nonpositive off-diagonals by
construction. The L-step objective

    beta * sum_n y_n^T L y_n + nu * tr(L^T L)  =  c.w + nu * w^T Q w

is minimized subject to w >= 0 and tr(L) = 2 * sum(w) = trace_budget.
Without the trace constraint the objective is minimized by L = 0 (both
terms are nonnegative), a collapse that per-iteration spectral rescaling
cannot repair, so the budget keeps the subproblem well-posed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError
from .graphs import Laplacian, spectral_rescale
from .kernels import GramMatrix
from .solver import Hyperparams, fit_krg


@dataclass(frozen=True)
class GraphLearnConfig:
    nu: float
    beta: float
    max_outer_iters: int = 20
    tol: float = 1e-4
    trace_budget: float | None = None  # defaults to M at call time

    def __post_init__(self):
        if self.nu < 0 or self.beta < 0:
            raise ValueError("nu and beta must be >= 0")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")


def edge_pairs(M):
    """Unordered node pairs (i < j) in lexicographic order."""
    return [(i, j) for i in range(M) for j in range(i + 1, M)]


def weights_to_laplacian(w, M) -> Laplacian:
    """L = sum_e w_e (e_i - e_j)(e_i - e_j)^T."""
    w = np.asarray(w, dtype=float)
    L = np.zeros((M, M))
    for e, (i, j) in enumerate(edge_pairs(M)):
        L[i, j] -= w[e]
        L[j, i] -= w[e]
        L[i, i] += w[e]
        L[j, j] += w[e]
    return Laplacian(L)


def _edge_overlap_matrix(M):
    """Q with Q[e,e]=4, Q[e,f]=1 when edges share one node, else 0.

    Equals S S^T + 2I for the unsigned edge-node incidence S.
    """
    pairs = edge_pairs(M)
    S = np.zeros((len(pairs), M))
    for e, (i, j) in enumerate(pairs):
        S[e, i] = S[e, j] = 1.0
    return S @ S.T + 2.0 * np.eye(len(pairs))


def project_simplex(v, radius):
    """Euclidean projection onto {w >= 0, sum(w) = radius} (sort method)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - radius
    ks = np.arange(1, len(v) + 1)
    cond = u - css / ks > 0
    rho = ks[cond][-1]
    tau = css[rho - 1] / rho
    return np.maximum(v - tau, 0.0)


def _smoothness_costs(Y, beta):
    """c_e = beta * sum_n (Y[n,i] - Y[n,j])^2 per edge e=(i,j)."""
    M = Y.shape[1]
    pairs = edge_pairs(M)
    c = np.empty(len(pairs))
    for e, (i, j) in enumerate(pairs):
        c[e] = beta * np.sum((Y[:, i] - Y[:, j]) ** 2)
    return c


def minimize_edge_weights(c, Q, radius, nu, kkt_tol=1e-6, max_iters=20000):
    """Projected gradient descent for min c.w + nu w^T Q w over the scaled simplex."""
    n = len(c)
    w = np.full(n, radius / n)
    if nu > 0:
        step = 1.0 / (2.0 * nu * np.linalg.eigvalsh(Q).max())
    else:
        # linear objective; step scale only affects the convergence rate
        step = radius / (np.abs(c).max() + 1.0)
    for _ in range(max_iters):
        grad = c + 2.0 * nu * (Q @ w)
        w_next = project_simplex(w - step * grad, radius)
        residual = np.abs(w_next - w).max() / step
        w = w_next
        if residual <= kkt_tol:
            return w
    raise ConvergenceError(
        f"edge-weight QP did not reach KKT tolerance {kkt_tol:g} "
        f"in {max_iters} iterations (residual {residual:.3e})",
        residual=residual,
    )


def _laplacian_step_constrained(Y, cfg: GraphLearnConfig):
    """Trace-constrained minimizer, before spectral rescaling."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise DimensionError("Y must be an N x M matrix")
    M = Y.shape[1]
    budget = cfg.trace_budget if cfg.trace_budget is not None else float(M)
    if budget <= 0:
        raise ValueError("trace_budget must be > 0")
    c = _smoothness_costs(Y, cfg.beta)
    Q = _edge_overlap_matrix(M)
    w = minimize_edge_weights(c, Q, budget / 2.0, cfg.nu)
    return w, weights_to_laplacian(w, M)


def laplacian_step(Y, cfg: GraphLearnConfig) -> Laplacian:
    """Minimize the L-step cost over valid Laplacians, then rescale to
    unit spectral radius."""
    _, L = _laplacian_step_constrained(Y, cfg)
    return spectral_rescale(L)


def joint_cost(gram: GramMatrix, psi, L: Laplacian, T, hyper: Hyperparams,
               cfg: GraphLearnConfig) -> float:
    """||T - K Psi||_F^2 + alpha tr(Psi^T K Psi) + beta tr(Y L Y^T)
    + nu ||L||_F^2 with Y = K Psi."""
    K = gram.matrix
    Y = K @ psi
    return float(
        np.sum((np.asarray(T, dtype=float) - Y) ** 2)
        + hyper.alpha * np.trace(np.asarray(psi).T @ K @ psi)
        + cfg.beta * np.trace(Y @ L.matrix @ Y.T)
        + cfg.nu * np.sum(L.matrix**2)
    )


def alternating_fit(gram: GramMatrix, T, hyper: Hyperparams,
                    cfg: GraphLearnConfig, log_path=None):
    """Alternate dual fits and L-steps starting from L = 0 (plain KR).

    Both sub-steps minimize the same joint cost with the trace-constrained
    L, so the cost is nonincreasing across each sub-step; spectral
    rescaling is applied only to the returned Laplacian. Returns
    (model, rescaled Laplacian, cost trace). The model's hyper.beta is
    cfg.beta.
    """
    T = np.asarray(T, dtype=float)
    M = T.shape[1]
    fit_hyper = Hyperparams(alpha=hyper.alpha, beta=cfg.beta)
    L = Laplacian(np.zeros((M, M)))
    cost_trace = []
    substep_costs = []  # (after-W, after-L) pairs at the L in force
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        model = None
        for it in range(cfg.max_outer_iters):
            model = fit_krg(gram, T, L, fit_hyper)
            cost_w = joint_cost(gram, model.psi, L, T, fit_hyper, cfg)
            Y = gram.matrix @ model.psi
            _, L_new = _laplacian_step_constrained(Y, cfg)
            cost_l = joint_cost(gram, model.psi, L_new, T, fit_hyper, cfg)
            substep_costs.append((cost_w, cost_l))
            cost_trace.append(cost_l)
            if log_fh:
                w_off = -L_new.matrix[np.triu_indices(M, 1)]
                log_fh.write(json.dumps({
                    "iter": it,
                    "cost_after_w_step": cost_w,
                    "cost_after_l_step": cost_l,
                    "spectral_radius": float(np.linalg.norm(L_new.matrix, 2)),
                    "edge_sparsity": float(np.mean(w_off > 1e-10)),
                }) + "\n")
            converged = (
                len(cost_trace) > 1
                and abs(cost_trace[-2] - cost_trace[-1])
                <= cfg.tol * max(abs(cost_trace[-2]), 1e-30)
            )
            L = L_new
            if converged:
                break
        # refit so the returned coefficients match the final Laplacian
        model = fit_krg(gram, T, L, fit_hyper,
                        x_train=model.x_train, spec=model.spec)
        return model, spectral_rescale(L), np.array(cost_trace), substep_costs
    finally:
        if log_fh:
            log_fh.close()
