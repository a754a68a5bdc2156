"""Principal component analysis in the graph frequency domain.

At each graph frequency the p x p spectral matrix is eigendecomposed,
``P(lambda) = U T U^H`` with ``tau_1 >= ... >= tau_p >= 0``. Keeping the top
``q`` eigenvectors gives the reduction filters ``H(lambda) = U_q^H`` and the
reconstruction filters ``G(lambda) = U_q``; all filtering is done on graph
Fourier coefficients, never on n x n filter matrices.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .graph import GraphError, ShiftOperator, _tie_groups, gft, igft
from .spectral import SpectralDensity, SpectralMatrixField

NEG_TOL = 1e-9
TIE_TOL = 1e-10


class FitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GFreqPCAModel:
    """Per-frequency eigenvectors ``U`` (n, p, p) and eigenvalues ``tau`` (n, p)."""

    U: np.ndarray
    tau: np.ndarray
    q: int
    means: np.ndarray
    so: ShiftOperator
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        n, p, _ = self.U.shape
        if self.tau.shape != (n, p):
            raise FitError("tau must be shaped (n, p)")
        if not 1 <= self.q <= p:
            raise FitError(f"q must lie in [1, {p}], got {self.q}")
        if self.means.shape != (n, p):
            raise FitError(f"means must be shaped {(n, p)}, got {self.means.shape}")
        if n != self.so.n:
            raise FitError("model and shift operator disagree on n")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"X{i + 1}" for i in range(p)))

    @property
    def n(self) -> int:
        return self.U.shape[0]

    @property
    def p(self) -> int:
        return self.U.shape[1]

    def with_q(self, q: int) -> "GFreqPCAModel":
        return dataclasses.replace(self, q=int(q))

    def reduction_filters(self, q: int | None = None) -> np.ndarray:
        """``H(lambda) = (u_1 | ... | u_q)^H`` stacked as (n, q, p)."""
        q = self.q if q is None else q
        return np.conj(np.swapaxes(self.U[:, :, :q], 1, 2))

    def reconstruction_filters(self, q: int | None = None) -> np.ndarray:
        q = self.q if q is None else q
        return self.U[:, :, :q]

    def projector(self, q: int | None = None) -> np.ndarray:
        """``A(lambda) = G(lambda) H(lambda)``, the rank-q projector, as (n, p, p)."""
        G = self.reconstruction_filters(q)
        return G @ np.conj(np.swapaxes(G, 1, 2))

    def offsets(self, q: int | None = None) -> np.ndarray:
        """Reconstruction offsets ``mu_hat = mu - A mu`` (filtering in the GFT domain)."""
        A = self.projector(q)
        mh = gft(self.means, self.so)
        return self.means - igft(np.einsum("lij,lj->li", A, mh), self.so)


def _canonical_columns(tau: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Deterministic eigenbasis for one Hermitian matrix with descending ``tau``.

    Repeated eigenvalues get the basis obtained by Gram-Schmidt on the columns
    of their eigenspace projector, then every column is phase-normalized and
    columns within a tie are ordered by the row index of their largest entry.
    """
    scale = max(1.0, float(np.abs(tau).max()))
    # _tie_groups expects sorted input; tau is descending so negate
    groups = _tie_groups(-tau, TIE_TOL * scale)
    U = U.copy()
    for g in groups:
        if len(g) == 1:
            continue
        B = U[:, g]
        proj = B @ B.conj().T
        basis = []
        for c in range(proj.shape[1]):
            v = proj[:, c].copy()
            for b in basis:
                v -= (b.conj() @ v) * b
            nv = np.linalg.norm(v)
            if nv > 1e-8:
                basis.append(v / nv)
            if len(basis) == len(g):
                break
        B = _phase(np.column_stack(basis))
        pivots = _pivots(B)
        U[:, g] = B[:, np.argsort(pivots, kind="stable")]
    return U


def _pivots(U: np.ndarray) -> np.ndarray:
    """Row index of the largest-modulus entry per column (lowest index on ties)."""
    mod = np.abs(U)
    mask = mod >= mod.max(axis=-2, keepdims=True) - 1e-12
    return np.argmax(mask, axis=-2)


def _phase(U: np.ndarray) -> np.ndarray:
    """Rotate columns of a (..., p, k) stack so their pivot entries are real positive."""
    piv = _pivots(U)
    z = np.take_along_axis(U, piv[..., None, :], axis=-2)
    mod = np.abs(z)
    rot = np.where(mod > 0, np.conj(z) / np.where(mod > 0, mod, 1.0), 1.0)
    U = U * rot
    np.put_along_axis(U, piv[..., None, :], mod.astype(U.dtype), axis=-2)
    return U


def eigendecompose(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Descending, clipped eigenvalues and canonical eigenvectors of a Hermitian stack."""
    P = np.asarray(P, dtype=complex)
    tau, U = np.linalg.eigh(P)
    tau, U = tau[:, ::-1].copy(), U[:, :, ::-1].copy()
    scale = np.maximum(1.0, np.abs(tau).max(axis=1))
    too_negative = tau < -NEG_TOL * scale[:, None]
    if too_negative.any():
        l, i = np.argwhere(too_negative)[0]
        raise FitError(
            f"spectral matrix at frequency index {l + 1} has eigenvalue {tau[l, i]:.3e}; "
            "the estimate is not positive semi-definite"
        )
    tau = np.clip(tau, 0.0, None)
    U = _phase(U)
    for l in range(P.shape[0]):
        if np.any(np.abs(np.diff(tau[l])) <= TIE_TOL * scale[l]):
            U[l] = _canonical_columns(tau[l], U[l])
    return tau, U


def fit(
    field: SpectralMatrixField,
    so: ShiftOperator,
    means: np.ndarray | None = None,
    q: int | None = None,
    threshold: float = 0.95,
) -> GFreqPCAModel:
    """Fit per-frequency principal components to a spectral matrix field.

    ``means`` is the (n, p) matrix of per-dimension mean signals; zeros when
    omitted. When ``q`` is omitted it is chosen by the cumulative scree
    threshold.
    """
    P = field.matrices
    if not np.all(np.isfinite(P)):
        raise FitError("spectral field contains NaN or infinite entries")
    if field.n != so.n:
        raise GraphError(f"field has {field.n} frequencies, graph has {so.n} vertices")
    herm = field.hermitian_error()
    if herm > 1e-10 * max(1.0, float(np.abs(P).max())):
        raise FitError(f"spectral field is not Hermitian (max asymmetry {herm:.3e})")
    P = 0.5 * (P + np.conj(np.swapaxes(P, 1, 2)))
    tau, U = eigendecompose(P)
    if means is None:
        means = np.zeros((so.n, field.p))
    means = np.asarray(means)
    model = GFreqPCAModel(U, tau, 1, means, so, field.labels)
    if q is None:
        q = select_q(model, "threshold", t=threshold)
    return model.with_q(q)


def transform(model: GFreqPCAModel, X, q: int | None = None) -> np.ndarray:
    """Principal component graph signals ``Y_i = sum_k H_ik X_k`` as an (n, q) array."""
    X = _check_signal(X, model.n, model.p)
    H = model.reduction_filters(q)
    Yh = np.einsum("lij,lj->li", H, gft(X, model.so))
    return _maybe_real(igft(Yh, model.so))


def inverse_transform(model: GFreqPCAModel, Y, q: int | None = None) -> np.ndarray:
    """Reconstruction ``X_hat_i = mu_hat_i + sum_j G_ij Y_j`` from (n, q) components."""
    q = model.q if q is None else q
    Y = _check_signal(Y, model.n, q)
    G = model.reconstruction_filters(q)
    Xh = np.einsum("lij,lj->li", G, gft(Y, model.so))
    return _maybe_real(model.offsets(q) + igft(Xh, model.so))


def reconstruct(model: GFreqPCAModel, X, q: int | None = None) -> np.ndarray:
    return inverse_transform(model, transform(model, X, q), q)


def _check_signal(X, n: int, p: int) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape != (n, p):
        raise GraphError(f"expected a signal shaped ({n}, {p}), got {X.shape}")
    return X


def _maybe_real(Z: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(Z) and np.abs(Z.imag).max(initial=0.0) <= 1e-12 * max(1.0, np.abs(Z).max(initial=0.0)):
        return Z.real.copy()
    return Z


def theoretical_error(model: GFreqPCAModel, q: int | None = None) -> float:
    """Minimum mean squared reconstruction error ``sum_l sum_{i>q} tau_i(lambda_l)``."""
    q = model.q if q is None else q
    if not 1 <= q <= model.p:
        raise FitError(f"q must lie in [1, {model.p}]")
    return float(model.tau[:, q:].sum())


def scree(model: GFreqPCAModel) -> np.ndarray:
    """Share of the total error reduction per component; NaN when the field is all zero."""
    totals = model.tau.sum(axis=0)
    grand = totals.sum()
    if grand <= 0:
        return np.full(model.p, np.nan)
    return totals / grand


def select_q(source, policy: str = "threshold", t: float = 0.95, q: int | None = None) -> int:
    """Choose the reduced dimension from a model or a vector of scree fractions.

    ``threshold``: smallest q whose cumulative fraction reaches ``t``.
    ``elbow``: position of the largest discrete second difference of the scree curve.
    ``fixed``: returns ``q``.
    """
    fr = scree(source) if isinstance(source, GFreqPCAModel) else np.asarray(source, dtype=float)
    p = len(fr)
    if policy == "fixed":
        if q is None or not 1 <= q <= p:
            raise ValueError(f"fixed policy needs 1 <= q <= {p}")
        return int(q)
    if np.any(np.isnan(fr)):
        raise ValueError("scree fractions are undefined (all-zero spectral field)")
    if policy == "threshold":
        if not 0 < t <= 1:
            raise ValueError("threshold must lie in (0, 1]")
        cum = np.cumsum(fr)
        hit = np.flatnonzero(cum >= t - 1e-12)
        return int(hit[0]) + 1 if hit.size else p
    if policy == "elbow":
        if p < 3:
            return 1
        d2 = fr[:-2] - 2 * fr[1:-1] + fr[2:]
        return int(np.argmax(d2)) + 2
    raise ValueError(f"unknown policy {policy!r}")


def spectral_envelope(model: GFreqPCAModel) -> np.ndarray:
    return model.tau[:, 0].copy()


def optimal_scaling(model: GFreqPCAModel, freq_index: int) -> np.ndarray:
    """Dominant eigenvector ``u_1`` at the 1-based frequency index."""
    if not 1 <= freq_index <= model.n:
        raise IndexError(f"frequency index must lie in [1, {model.n}], got {freq_index}")
    return model.U[freq_index - 1, :, 0].copy()


def pc_spectra(model: GFreqPCAModel) -> list[SpectralDensity]:
    """Graph power spectral densities of the principal component signals."""
    return [SpectralDensity(model.tau[:, i].astype(complex), (f"PC{i + 1}", f"PC{i + 1}")) for i in range(model.q)]


def error_spectrum(model: GFreqPCAModel, q: int | None = None) -> SpectralMatrixField:
    """Spectral field of the reconstruction error, ``sum_{i>q} tau_i u_i u_i^H``."""
    q = model.q if q is None else q
    Ut = model.U[:, :, q:]
    P = np.einsum("lik,lk,ljk->lij", Ut, model.tau[:, q:], Ut.conj())
    return SpectralMatrixField(P, np.array(model.so.eigenvalues), model.labels)


@dataclass
class AnalysisReport:
    lambdas: np.ndarray
    envelope: np.ndarray
    fractions: np.ndarray
    cumulative: np.ndarray
    q: int
    theoretical_errors: np.ndarray
    scalings: Mapping[int, np.ndarray] = field(default_factory=dict)


def analyze(model: GFreqPCAModel, scaling_freqs=()) -> AnalysisReport:
    fr = scree(model)
    return AnalysisReport(
        lambdas=np.array(model.so.eigenvalues),
        envelope=spectral_envelope(model),
        fractions=fr,
        cumulative=np.cumsum(fr),
        q=model.q,
        theoretical_errors=np.array([theoretical_error(model, k) for k in range(1, model.p + 1)]),
        scalings={int(k): optimal_scaling(model, int(k)) for k in scaling_freqs},
    )


def top_peaks(envelope: np.ndarray, k: int) -> list[int]:
    """1-based indices of the ``k`` largest envelope values, in descending order."""
    order = np.argsort(-np.asarray(envelope), kind="stable")
    return [int(i) + 1 for i in order[:k]]
