"""Synthetic multivariate graph signals built from Laplacian eigenvectors plus noise."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .graph import GraphError, ShiftOperator
from .pca import GFreqPCAModel, fit, reconstruct, select_q
from .spectral import (
    DEFAULT_WINDOW_VARIANCE,
    DEFAULT_WINDOWS,
    SpectralMatrixField,
    WindowEnsemble,
    Windowed,
    assemble_spectral_matrices,
    center,
)


@dataclass(frozen=True)
class SyntheticModel:
    """``X_i = sum_k c_ik v_k + sigma * m_i * noise``.

    ``components[i]`` lists ``(k, c_ik)`` pairs with 1-based frequency index
    ``k`` into the ascending eigenvalue order.
    """

    graph: str
    n: int
    components: tuple[tuple[tuple[int, float], ...], ...]
    sigma: float = 0.5
    noise_scale: tuple[float, ...] | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        p = len(self.components)
        if self.noise_scale is None:
            object.__setattr__(self, "noise_scale", (1.0,) * p)
        if len(self.noise_scale) != p:
            raise ValueError("noise_scale length does not match the number of dimensions")
        if self.labels is None:
            object.__setattr__(self, "labels", tuple(f"X{i + 1}" for i in range(p)))
        for comps in self.components:
            for k, _ in comps:
                if not 1 <= k <= self.n:
                    raise GraphError(f"frequency index {k} outside [1, {self.n}]")

    @property
    def p(self) -> int:
        return len(self.components)

    def noise_sd(self) -> np.ndarray:
        return self.sigma * np.asarray(self.noise_scale, dtype=float)

    def amplitudes(self) -> np.ndarray:
        """Dense (n, p) matrix ``C[k-1, i] = c_ik``."""
        C = np.zeros((self.n, self.p))
        for i, comps in enumerate(self.components):
            for k, c in comps:
                C[k - 1, i] += c
        return C

    def frequencies(self) -> list[int]:
        return sorted({k for comps in self.components for k, _ in comps})

    def with_sigma(self, sigma: float) -> "SyntheticModel":
        return SyntheticModel(self.graph, self.n, self.components, sigma, self.noise_scale, self.labels)


def karate_model(sigma: float = 0.5) -> SyntheticModel:
    """12-dimensional design on the karate club graph (frequencies 10 and 20)."""
    c1 = {1: 1.0, 2: 2.5, 3: 3.5, 7: 2.1, 8: 1.4, 9: 2.5}
    c2 = {4: 2.0, 5: 1.7, 6: 3.2, 7: 0.9, 8: 2.0, 9: 2.2}
    comps = []
    for i in range(1, 13):
        dim = []
        if i in c1:
            dim.append((10, c1[i]))
        if i in c2:
            dim.append((20, c2[i]))
        comps.append(tuple(dim))
    return SyntheticModel("karate", 34, tuple(comps), sigma)


def us_sensor_model(coords=None, sigma: float = 0.5) -> SyntheticModel:
    """12-dimensional design over frequencies 50, 100 and 150 of a 218-vertex graph."""
    n = 218 if coords is None else len(coords)
    if n != 218:
        warnings.warn(f"US sensor design expects 218 stations, got {n}", stacklevel=2)
    c1 = {1: 3.0, 2: 1.5, 3: 2.0, 10: 2.0}
    c2 = {4: 2.0, 5: 4.0, 6: 3.0, 10: 4.0, 11: 3.0}
    c3 = {7: 5.0, 8: 2.0, 9: 1.5, 11: 2.5}
    comps = []
    for i in range(1, 13):
        dim = [(k, c[i]) for k, c in ((50, c1), (100, c2), (150, c3)) if i in c]
        comps.append(tuple(dim))
    scale = (1.0,) * 11 + (2.0,)
    return SyntheticModel("us-sensor", n, tuple(comps), sigma, scale)


def _check(model: SyntheticModel, so: ShiftOperator):
    if so.n != model.n:
        raise GraphError(f"model expects {model.n} vertices, operator has {so.n}")


def signal_part(model: SyntheticModel, so: ShiftOperator) -> np.ndarray:
    _check(model, so)
    return so.eigenvectors @ model.amplitudes()


def draw(model: SyntheticModel, so: ShiftOperator, seed) -> np.ndarray:
    """One (n, p) realisation; reproducible from ``seed``."""
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((model.n, model.p))
    return signal_part(model, so) + noise * model.noise_sd()


def draw_many(model: SyntheticModel, so: ShiftOperator, seed: int, R: int) -> np.ndarray:
    """``R`` realisations shaped (R, n, p); replicate ``r`` uses the stream ``(seed, r)``."""
    base = signal_part(model, so)
    sd = model.noise_sd()
    out = np.empty((R, model.n, model.p))
    for r in range(R):
        out[r] = base + np.random.default_rng([seed, r]).standard_normal((model.n, model.p)) * sd
    return out


def exact_covariances(model: SyntheticModel, so: ShiftOperator) -> np.ndarray:
    """Second-moment matrices ``Sigma_ij`` (p, p, n, n) about the zero reference mean.

    The deterministic eigenvector terms enter as ``c_ik c_jk v_k v_k^T``; noise
    adds ``sigma_i^2 I`` on the diagonal blocks.
    """
    _check(model, so)
    V = so.eigenvectors
    C = model.amplitudes()
    covs = np.einsum("ki,uk,vk,kj->ijuv", C, V, V, C)
    sd = model.noise_sd()
    for i in range(model.p):
        covs[i, i] += sd[i] ** 2 * np.eye(model.n)
    return covs


def exact_field(model: SyntheticModel, so: ShiftOperator) -> SpectralMatrixField:
    """Analytic spectral field: ``P(lambda_k) = c_k c_k^T + diag(sigma_i^2)``."""
    _check(model, so)
    C = model.amplitudes()
    P = C[:, :, None] * C[:, None, :] + np.diag(model.noise_sd() ** 2)[None]
    return SpectralMatrixField(P.astype(complex), np.array(so.eigenvalues), model.labels)


def reconstruction_mse(fitted: GFreqPCAModel, draws: np.ndarray, q: int | None = None) -> float:
    """Average of ``sum_i ||X_i - X_hat_i||^2`` over a stack of draws (R, n, p)."""
    q = fitted.q if q is None else q
    so = fitted.so
    Vh = so.eigenvectors.conj().T
    A = fitted.projector(q)
    # X_hat = mu + A (X - mu), so the error is (I - A)(X - mu) in the frequency domain
    Z = np.einsum("lu,rui->rli", Vh, draws - fitted.means[None])
    err = Z - np.einsum("lij,rlj->rli", A, Z)
    return float((np.abs(err) ** 2).sum(axis=(1, 2)).mean())


def monte_carlo_mse(
    model: SyntheticModel, fitted: GFreqPCAModel, q: int | None = None, R: int = 1000, seed: int = 0
) -> float:
    if R < 1:
        raise ValueError("R must be >= 1")
    draws = draw_many(model, fitted.so, seed, R)
    return reconstruction_mse(fitted, draws, q)


def reconstruction_mse_direct(fitted: GFreqPCAModel, draws: np.ndarray, q: int | None = None) -> float:
    """Same quantity as :func:`reconstruction_mse`, via the public transform round trip."""
    total = 0.0
    for X in draws:
        total += float((np.abs(X - reconstruct(fitted, X, q)) ** 2).sum())
    return total / len(draws)


def simulate_and_fit(
    model: SyntheticModel,
    so: ShiftOperator,
    seed: int,
    windows: int = DEFAULT_WINDOWS,
    nu: float = DEFAULT_WINDOW_VARIANCE,
    correct_bias: bool = False,
    threshold: float = 0.95,
) -> tuple[np.ndarray, GFreqPCAModel]:
    """One seeded reproduction run: draw, centre, windowed estimate, fit.

    The draw uses the stream ``(seed, 0)`` and the windows ``(seed, 1)``;
    ``q`` is picked by the cumulative threshold.
    """
    X = draw(model, so, (seed, 0))
    Xc, means = center(X)
    est = Windowed(WindowEnsemble(windows, nu, (seed, 1), so.n), correct_bias)
    field = assemble_spectral_matrices(Xc, so, est, model.labels)
    fitted = fit(field, so, means, q=1)
    return X, fitted.with_q(select_q(fitted, "threshold", t=threshold))
