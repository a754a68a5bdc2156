"""Graph-Laplacian PCA (gLPCA), a closed-form vertex-domain baseline."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import GraphError, ShiftOperator, phase_normalize


@dataclass(frozen=True, eq=False)
class GLPCAModel:
    Q: np.ndarray  # (n, q), orthonormal columns
    U: np.ndarray  # (p, q)
    alpha: float
    objective: float
    means: np.ndarray  # (p,) column means removed before fitting


def glpca_objective(X: np.ndarray, Q: np.ndarray, L: np.ndarray, alpha: float) -> float:
    """``||X^T - U Q^T||_F^2 + alpha tr(Q^T L Q)`` with the optimal ``U = X^T Q``."""
    U = X.T @ Q
    resid = X.T - U @ Q.T
    return float(np.sum(resid**2) + alpha * np.trace(Q.T @ L @ Q))


def glpca_fit(X, so: ShiftOperator, alpha: float, q: int, center: bool = True) -> GLPCAModel:
    """Bottom-q eigenvectors of ``-X X^T + alpha L``.

    Columns of ``X`` are centred first unless ``center`` is False.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != so.n:
        raise GraphError(f"X must be ({so.n}, p), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise GraphError("X contains non-finite values")
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError("alpha must be finite and nonnegative")
    if not 1 <= q <= so.n:
        raise ValueError(f"q must lie in [1, {so.n}]")
    means = X.mean(axis=0) if center else np.zeros(X.shape[1])
    Xc = X - means
    L = so.matrix
    M = -Xc @ Xc.T + alpha * L
    _, vecs = np.linalg.eigh(0.5 * (M + M.T))
    Q = phase_normalize(vecs[:, :q])
    return GLPCAModel(Q, Xc.T @ Q, float(alpha), glpca_objective(Xc, Q, L, alpha), means)


def pca_residual(X, q: int, center: bool = True) -> float:
    """Classical PCA reconstruction residual: squared norm beyond the top-q singular values."""
    X = np.asarray(X, dtype=float)
    if center:
        X = X - X.mean(axis=0)
    s = np.linalg.svd(X, compute_uv=False)
    return float(np.sum(s[q:] ** 2))
