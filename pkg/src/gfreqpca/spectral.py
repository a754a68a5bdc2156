"""Graph cross-spectral densities and per-frequency spectral matrices.

Windowed estimator
------------------
Windows are i.i.d. Gaussian with mean 1 and variance ``nu`` (default 0.2,
see ``scripts/calibrate_window_variance.py``). Because
``E[w_u w_v] = 1 + nu * delta_uv``, the window average of the windowed
cross-periodogram is the plain cross-periodogram plus the excess

    nu * diag(V^H diag(x_i * conj(x_j)) V),

which spreads each vertex's power over all frequencies. That excess is the
smoothing that reduces variance, so it is kept unless ``correct_bias`` is set.
With ``nu = 0`` every window is all ones and the estimator reduces to the
plain cross-periodogram.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .graph import GraphError, ShiftOperator, gft

DEFAULT_WINDOWS = 50
DEFAULT_WINDOW_VARIANCE = 0.2


@dataclass(frozen=True)
class SpectralDensity:
    """Cross-spectral density ``p_ij(lambda_l)`` for one pair of signals."""

    values: np.ndarray
    pair: tuple[str, str] = ("x", "y")


@dataclass(frozen=True, eq=False)
class SpectralMatrixField:
    """One p x p Hermitian matrix per graph frequency, stacked as ``(n, p, p)``."""

    matrices: np.ndarray
    lambdas: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        P = np.asarray(self.matrices, dtype=complex)
        if P.ndim != 3 or P.shape[1] != P.shape[2]:
            raise GraphError(f"spectral field must be (n, p, p), got {P.shape}")
        if len(self.lambdas) != P.shape[0]:
            raise GraphError("lambdas length does not match the number of frequencies")
        if len(self.labels) != P.shape[1]:
            raise GraphError("labels length does not match p")
        object.__setattr__(self, "matrices", P)

    @property
    def n(self) -> int:
        return self.matrices.shape[0]

    @property
    def p(self) -> int:
        return self.matrices.shape[1]

    def density(self, i: int, j: int) -> SpectralDensity:
        return SpectralDensity(self.matrices[:, i, j].copy(), (self.labels[i], self.labels[j]))

    def hermitian_error(self) -> float:
        P = self.matrices
        return float(np.abs(P - np.conj(np.swapaxes(P, 1, 2))).max())

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrices).min())


@dataclass(frozen=True)
class WindowEnsemble:
    """``M`` random windows of length ``n``, entries i.i.d. N(1, nu)."""

    M: int = DEFAULT_WINDOWS
    nu: float = DEFAULT_WINDOW_VARIANCE
    seed: int = 0
    n: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("window count M must be >= 1")
        if self.nu < 0:
            raise ValueError("window variance must be nonnegative")

    @cached_property
    def windows(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        noise = rng.standard_normal((self.M, self.n))
        return 1.0 + np.sqrt(self.nu) * noise


def _pair(x_i, x_j, so: ShiftOperator):
    x_i, x_j = np.asarray(x_i), np.asarray(x_j)
    if x_i.shape != (so.n,) or x_j.shape != (so.n,):
        raise GraphError(f"signals must have length {so.n}, got {x_i.shape} and {x_j.shape}")
    return x_i, x_j


def exact_cross_spectrum(cov, so: ShiftOperator, pair=("x", "y")) -> SpectralDensity:
    """``diag(V^H Sigma V)`` for a known cross-covariance ``Sigma``."""
    cov = np.asarray(cov)
    if cov.shape != (so.n, so.n):
        raise GraphError(f"covariance must be {so.n}x{so.n}, got {cov.shape}")
    V = so.eigenvectors
    vals = np.einsum("ul,uv,vl->l", V.conj(), cov, V)
    return SpectralDensity(vals, pair)


def cross_periodogram(x_i, x_j, so: ShiftOperator, pair=("x", "y")) -> SpectralDensity:
    """Graph cross-periodogram ``(V^H x_i) * conj(V^H x_j)``; inputs assumed centred."""
    x_i, x_j = _pair(x_i, x_j, so)
    return SpectralDensity(gft(x_i, so) * np.conj(gft(x_j, so)), pair)


def _bias_term(x_i, x_j, so: ShiftOperator) -> np.ndarray:
    weights = np.abs(so.eigenvectors) ** 2
    return weights.T @ (x_i * np.conj(x_j))


def windowed_cross_periodogram(
    x_i, x_j, so: ShiftOperator, ensemble: WindowEnsemble, correct_bias: bool = False, pair=("x", "y")
) -> SpectralDensity:
    """Average of cross-periodograms of the windowed signals ``w_m * x``."""
    x_i, x_j = _pair(x_i, x_j, so)
    W = _windows_for(ensemble, so.n)
    Vh = so.eigenvectors.conj().T
    zi = (W * x_i) @ Vh.T
    zj = (W * x_j) @ Vh.T
    vals = (zi * np.conj(zj)).mean(axis=0)
    if correct_bias:
        vals = vals - ensemble.nu * _bias_term(x_i, x_j, so)
    return SpectralDensity(vals, pair)


def _windows_for(ensemble: WindowEnsemble, n: int) -> np.ndarray:
    if ensemble.n != n:
        raise GraphError(f"window ensemble has length {ensemble.n}, graph has {n} vertices")
    return ensemble.windows


def coherence(p_xy: SpectralDensity, p_xx: SpectralDensity, p_yy: SpectralDensity, floor=None) -> np.ndarray:
    """Graph coherence ``|p_xy|^2 / (p_xx p_yy)``.

    Entries whose denominator falls below ``floor`` (default ``1e-12`` times the
    largest denominator) are undefined and returned as NaN.
    """
    num = np.abs(np.asarray(p_xy.values)) ** 2
    den = np.real(np.asarray(p_xx.values)) * np.real(np.asarray(p_yy.values))
    if floor is None:
        floor = 1e-12 * max(float(den.max(initial=0.0)), 0.0)
    out = np.full(num.shape, np.nan)
    ok = den > floor
    out[ok] = num[ok] / den[ok]
    return out


def stationarity_diagnostic(cov, so: ShiftOperator) -> float:
    """Largest off-diagonal modulus of ``V^H Sigma V`` relative to its largest diagonal modulus.

    Zero exactly when ``Sigma`` is simultaneously diagonalizable with the GSO.
    """
    cov = np.asarray(cov)
    if cov.shape != (so.n, so.n):
        raise GraphError(f"covariance must be {so.n}x{so.n}, got {cov.shape}")
    V = so.eigenvectors
    C = V.conj().T @ cov @ V
    diag = np.abs(np.diag(C))
    off = np.abs(C - np.diag(np.diag(C)))
    if diag.max() == 0:
        return 0.0 if off.max() == 0 else float("inf")
    return float(off.max() / diag.max())


@dataclass(frozen=True)
class Exact:
    """Known cross-covariances, shaped ``(p, p, n, n)``."""

    covs: np.ndarray


@dataclass(frozen=True)
class Periodogram:
    pass


@dataclass(frozen=True)
class Windowed:
    ensemble: WindowEnsemble
    correct_bias: bool = False


Estimator = Exact | Periodogram | Windowed


def center(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Subtract each column's vertex mean; returns ``(centred, means)`` with means shaped like X."""
    X = np.asarray(X)
    means = np.broadcast_to(X.mean(axis=0, keepdims=True), X.shape).copy()
    return X - means, means


def psd_project(P: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues of each Hermitian matrix at zero."""
    P = np.array(P, dtype=complex)
    tau, U = np.linalg.eigh(P)
    bad = tau.min(axis=1) < 0
    if not bad.any():
        return P
    t = np.clip(tau[bad], 0.0, None)
    fixed = np.einsum("lij,lj,lkj->lik", U[bad], t, U[bad].conj())
    P[bad] = 0.5 * (fixed + np.conj(np.swapaxes(fixed, 1, 2)))
    return P


def assemble_spectral_matrices(
    X,
    so: ShiftOperator,
    estimator: Estimator = Periodogram(),
    labels: Sequence[str] | None = None,
    psd: bool = True,
) -> SpectralMatrixField:
    """Build ``P_X(lambda_l)`` for all frequencies.

    ``X`` is an (n, p) signal, already centred for the periodogram-type
    estimators. With ``psd`` set, windowed estimates are projected onto the
    PSD cone; the exact and plain periodogram fields are PSD by construction.
    """
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != so.n:
        raise GraphError(f"signal has {X.shape[0]} rows, graph has {so.n} vertices")
    p = X.shape[1]
    labels = tuple(labels) if labels is not None else tuple(f"X{i + 1}" for i in range(p))
    if len(labels) != p:
        raise GraphError("labels length does not match p")
    V = so.eigenvectors

    if isinstance(estimator, Exact):
        covs = np.asarray(estimator.covs)
        if covs.shape != (p, p, so.n, so.n):
            raise GraphError(f"exact estimator needs covariances shaped {(p, p, so.n, so.n)}, got {covs.shape}")
        P = np.einsum("ul,ijuv,vl->lij", V.conj(), covs, V)
    elif isinstance(estimator, Periodogram):
        Z = gft(X, so)
        P = Z[:, :, None] * np.conj(Z[:, None, :])
    elif isinstance(estimator, Windowed):
        W = _windows_for(estimator.ensemble, so.n)
        Z = np.einsum("ul,mu,ui->mli", V.conj(), W, X)
        P = np.einsum("mli,mlj->lij", Z, np.conj(Z)) / W.shape[0]
        if estimator.correct_bias:
            B = np.einsum("ul,ui,uj->lij", np.abs(V) ** 2, X, np.conj(X))
            P = P - estimator.ensemble.nu * B
    else:
        raise TypeError(f"unknown estimator {estimator!r}")

    # mirror so that p_ji = conj(p_ij) holds exactly
    P = 0.5 * (P + np.conj(np.swapaxes(P, 1, 2)))
    if psd and isinstance(estimator, Windowed):
        P = psd_project(P)
    return SpectralMatrixField(P, np.array(so.eigenvalues), labels)
