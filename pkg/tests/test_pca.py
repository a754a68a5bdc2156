import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfreqpca import (
    FitError,
    GraphError,
    SpectralMatrixField,
    analyze,
    build_laplacian,
    error_spectrum,
    fit,
    inverse_transform,
    optimal_scaling,
    pc_spectra,
    scree,
    select_q,
    spectral_envelope,
    theoretical_error,
    transform,
)
from gfreqpca.pca import top_peaks
from gfreqpca.simulation import exact_field, karate_model, us_sensor_model

from .conftest import random_graph, random_psd_field

C10 = np.array([1, 2.5, 3.5, 0, 0, 0, 2.1, 1.4, 2.5, 0, 0, 0])


def _field(P, so):
    P = np.asarray(P, dtype=complex)
    return SpectralMatrixField(P, np.array(so.eigenvalues), tuple(f"X{i + 1}" for i in range(P.shape[1])))


def _rank_one_field(so, c, k):
    P = np.zeros((so.n, len(c), len(c)))
    P[k - 1] = np.outer(c, c)
    return _field(P, so)


def test_fit_rank_one_karate(karate_so):
    m = fit(_rank_one_field(karate_so, C10, 10), karate_so, q=1)
    np.testing.assert_allclose(m.U[9, :, 0], C10 / np.linalg.norm(C10), atol=1e-12)
    np.testing.assert_allclose(m.tau[9], [C10 @ C10] + [0] * 11, atol=1e-10)
    assert theoretical_error(m, 1) <= 1e-10
    np.testing.assert_allclose(scree(m), np.eye(12)[0], atol=1e-12)
    assert select_q(m, "threshold", t=0.5) == 1
    assert select_q(m, "threshold", t=1.0) == 1


def test_fit_identity_field(path2_so):
    P = np.broadcast_to(np.eye(4), (2, 4, 4))
    m = fit(_field(P, path2_so), path2_so, q=4)
    np.testing.assert_array_equal(m.U, np.broadcast_to(np.eye(4), (2, 4, 4)))
    np.testing.assert_allclose(m.tau, 1.0)
    np.testing.assert_allclose(scree(m), 0.25, atol=1e-15)
    np.testing.assert_array_equal(optimal_scaling(m, 1), np.eye(4)[0])


def test_fit_p1(karate_so, rng):
    g = rng.uniform(size=34)
    m = fit(_field(g[:, None, None], karate_so), karate_so)
    np.testing.assert_allclose(m.tau[:, 0], g)
    np.testing.assert_array_equal(m.U, np.ones((34, 1, 1)))
    np.testing.assert_allclose(spectral_envelope(m), g)


def test_fit_errors(path2_so):
    P = np.zeros((2, 2, 2), dtype=complex)
    P[0, 0, 1] = np.nan
    with pytest.raises(FitError):
        fit(_field(P, path2_so), path2_so)
    P = np.zeros((2, 2, 2), dtype=complex)
    P[0, 0, 1] = 1.0
    with pytest.raises(FitError):
        fit(_field(P, path2_so), path2_so)
    P = np.zeros((2, 2, 2))
    P[0] = -np.eye(2)
    with pytest.raises(FitError):
        fit(_field(P, path2_so), path2_so)
    # tiny negative eigenvalues are clipped
    P[0] = -1e-12 * np.eye(2)
    m = fit(_field(P, path2_so), path2_so, q=1)
    assert m.tau.min() == 0.0
    with pytest.raises(GraphError):
        fit(_field(np.zeros((3, 2, 2)), build_laplacian(random_graph(np.random.default_rng(0), 3, 1.0))), path2_so)


@pytest.mark.parametrize(
    "fractions, q",
    [
        ([0.886, 0.071, 0.02, 0.01, 0.013], 2),
        ([0.843, 0.060, 0.031, 0.019, 0.047], 4),
        ([1.0, 0.0, 0.0], 1),
    ],
)
def test_select_q_threshold(fractions, q):
    assert select_q(np.array(fractions), "threshold", t=0.95) == q


def test_select_q_policies():
    fr = np.array([0.6, 0.3, 0.05, 0.03, 0.02])
    # the sharpest bend of the scree curve sits at PC3
    assert select_q(fr, "elbow") == 3
    assert select_q(np.array([0.7, 0.3]), "elbow") == 1
    assert select_q(fr, "fixed", q=3) == 3
    with pytest.raises(ValueError):
        select_q(fr, "fixed", q=9)
    with pytest.raises(ValueError):
        select_q(fr, "threshold", t=0.0)
    with pytest.raises(ValueError):
        select_q(fr, "bogus")
    with pytest.raises(ValueError):
        select_q(np.full(3, np.nan), "threshold")


def test_scree_all_zero_is_flagged(path2_so):
    m = fit(_field(np.zeros((2, 3, 3)), path2_so), path2_so, q=1)
    assert np.all(np.isnan(scree(m)))


def test_transform_identity_and_zero(karate_so, rng):
    P = np.broadcast_to(np.diag([3.0, 2.0, 1.0]), (34, 3, 3))
    m = fit(_field(P, karate_so), karate_so, q=3)
    X = rng.standard_normal((34, 3))
    np.testing.assert_allclose(transform(m, X), X, atol=1e-12)
    np.testing.assert_array_equal(transform(m, np.zeros((34, 3)), 2), np.zeros((34, 2)))
    with pytest.raises(GraphError):
        transform(m, np.zeros((34, 2)))
    with pytest.raises(GraphError):
        inverse_transform(m, np.zeros((34, 1)), 2)


def test_transform_rank_one_noiseless(karate_so):
    so = karate_so
    v = so.eigenvectors[:, 9]
    m = fit(_rank_one_field(so, C10, 10), so, q=1)
    X = np.outer(v, C10)
    Y = transform(m, X)
    np.testing.assert_allclose(Y[:, 0], np.linalg.norm(C10) * v, atol=1e-12)
    np.testing.assert_allclose(inverse_transform(m, Y), X, atol=1e-12)


def test_mean_handling(karate_so, rng):
    F = random_psd_field(rng, 34, 3, 3, False)
    mu = rng.standard_normal((34, 3))
    m = fit(_field(F, karate_so), karate_so, means=mu, q=1)
    np.testing.assert_allclose(inverse_transform(m, transform(m, mu)), mu, atol=1e-10)
    # offsets oracle: filter the means by the projector one frequency at a time with dense matrices
    V = karate_so.eigenvectors
    A_mu = np.zeros((34, 3))
    for l in range(34):
        u = m.U[l, :, :1]
        A_mu += np.outer(V[:, l], (u @ u.conj().T @ (V[:, l] @ mu)).real)
    np.testing.assert_allclose(m.offsets(), mu - A_mu, atol=1e-10)


def test_theoretical_error_independent_oracle(karate_so):
    sigma = 0.5
    field = exact_field(karate_model(sigma), karate_so)
    m = fit(field, karate_so, q=1)
    oracle = 0.0
    for P in field.matrices:
        ev = np.sort(np.linalg.eigvals(P).real)[::-1]
        oracle += ev[1:].sum()
    assert theoretical_error(m, 1) == pytest.approx(oracle, rel=1e-10)
    # every frequency keeps one eigenvalue, leaving 11 tail eigenvalues of 0.25
    assert oracle == pytest.approx(0.25 * 11 * 34, rel=1e-10)
    assert theoretical_error(m, 12) == 0.0
    with pytest.raises(FitError):
        theoretical_error(m, 13)


def test_envelope_peaks_exact_models(karate_so, us_so):
    m = fit(exact_field(karate_model(), karate_so), karate_so)
    assert sorted(top_peaks(spectral_envelope(m), 2)) == [10, 20]
    # flat noise at every frequency dominates the scree of the exact field
    assert m.q > 2
    u = optimal_scaling(m, 10)
    np.testing.assert_allclose(u, C10 / np.linalg.norm(C10), atol=1e-12)
    assert np.linalg.norm(u) == pytest.approx(1.0)
    with pytest.raises(IndexError):
        optimal_scaling(m, 0)
    with pytest.raises(IndexError):
        optimal_scaling(m, 35)

    mu = fit(exact_field(us_sensor_model(), us_so), us_so)
    assert sorted(top_peaks(spectral_envelope(mu), 3)) == [50, 100, 150]
    s = np.abs(optimal_scaling(mu, 100))
    support = {4, 5, 6, 10, 11}
    assert all(s[i - 1] > 0.1 for i in support)
    assert all(s[i - 1] < 1e-12 for i in set(range(1, 13)) - support)


def test_pc_spectra_and_error_spectrum(karate_so):
    m = fit(_rank_one_field(karate_so, C10, 10), karate_so, q=1)
    (s1,) = pc_spectra(m)
    assert s1.values[9].real == pytest.approx(C10 @ C10)
    assert np.abs(error_spectrum(m, 1).matrices).max() <= 1e-10
    diag = fit(_field(np.broadcast_to(np.diag([2.0, 1.0]), (34, 2, 2)), karate_so), karate_so, q=2)
    np.testing.assert_allclose([s.values.real for s in pc_spectra(diag)], [np.full(34, 2.0), np.ones(34)])
    assert np.abs(error_spectrum(diag, 2).matrices).max() == 0.0


def test_analyze_report(karate_so):
    m = fit(exact_field(karate_model(), karate_so), karate_so)
    rep = analyze(m, [10, 20])
    assert rep.fractions.sum() == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(rep.envelope, m.tau[:, 0])
    assert np.all(np.diff(rep.theoretical_errors) <= 0) and rep.theoretical_errors[-1] == 0
    assert set(rep.scalings) == {10, 20}


def _blocks(m, P):
    H = m.reduction_filters()
    A = m.projector()
    I = np.eye(m.p)
    return H, A, I - A


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 6), cplx=st.booleans(), data=st.data())
@settings(max_examples=40, deadline=None)
def test_propositions(seed, p, cplx, data):
    rng = np.random.default_rng(seed)
    n = 7
    so = build_laplacian(random_graph(rng, n))
    P = random_psd_field(rng, n, p, data.draw(st.integers(1, p)), cplx)
    q = data.draw(st.integers(1, p))
    m = fit(_field(P, so), so, q=q)
    scale = 1 + np.abs(P).max()
    # per-frequency reconstruction and unitarity
    recon = np.einsum("lik,lk,ljk->lij", m.U, m.tau, m.U.conj())
    assert np.abs(recon - P).max() <= 1e-10 * scale
    assert np.abs(np.conj(np.swapaxes(m.U, 1, 2)) @ m.U - np.eye(p)).max() <= 1e-10
    H, A, Ic = _blocks(m, P)
    Hh = np.conj(np.swapaxes(H, 1, 2))
    Ich = np.conj(np.swapaxes(Ic, 1, 2))
    PY = H @ P @ Hh
    np.testing.assert_allclose(PY, np.einsum("lk,kj->lkj", m.tau[:, :q], np.eye(q)), atol=1e-10 * scale)
    assert np.abs(H @ P @ Ich).max() <= 1e-10 * scale
    assert np.abs(A @ P @ Ich).max() <= 1e-10 * scale
    assert np.abs(error_spectrum(m).matrices - Ic @ P @ Ich).max() <= 1e-10 * scale
    errs = [theoretical_error(m, k) for k in range(1, p + 1)]
    assert all(a >= b - 1e-12 for a, b in zip(errs, errs[1:])) and errs[-1] == 0


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(2, 5))
@settings(max_examples=30, deadline=None)
def test_phase_invariance(seed, p):
    rng = np.random.default_rng(seed)
    so = build_laplacian(random_graph(rng, 6))
    m = fit(_field(random_psd_field(rng, 6, p, p, True), so), so, q=max(1, p // 2))
    phases = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(6, 1, p)))
    m2 = dataclasses.replace(m, U=m.U * phases)
    np.testing.assert_allclose(scree(m2), scree(m), atol=1e-14)
    np.testing.assert_allclose(spectral_envelope(m2), spectral_envelope(m))
    assert theoretical_error(m2) == pytest.approx(theoretical_error(m))
    np.testing.assert_allclose(np.abs(optimal_scaling(m2, 3)), np.abs(optimal_scaling(m, 3)), atol=1e-14)
    np.testing.assert_allclose(m2.projector(), m.projector(), atol=1e-12)


@given(seed=st.integers(0, 2**32 - 1), p=st.integers(1, 5), cplx=st.booleans())
@settings(max_examples=40, deadline=None)
def test_completeness(seed, p, cplx):
    rng = np.random.default_rng(seed)
    so = build_laplacian(random_graph(rng, 9))
    X = rng.standard_normal((9, p))
    if cplx:
        X = X + 1j * rng.standard_normal((9, p))
    mu = np.broadcast_to(X.mean(axis=0), X.shape)
    m = fit(_field(random_psd_field(rng, 9, p, p, True), so), so, means=mu, q=p)
    Xh = inverse_transform(m, transform(m, X))
    assert np.linalg.norm(Xh - X) <= 1e-10 * np.linalg.norm(X)


def test_tie_breaking_is_deterministic(path2_so):
    # a degenerate eigenspace spanned by e1, e2 in a rotated basis
    R = np.array([[np.cos(0.3), -np.sin(0.3)], [np.sin(0.3), np.cos(0.3)]])
    P = np.zeros((2, 3, 3))
    P[:, :2, :2] = R @ np.eye(2) @ R.T
    P[:, 2, 2] = 0.5
    m = fit(_field(P, path2_so), path2_so, q=2)
    np.testing.assert_allclose(m.U[0], np.eye(3), atol=1e-12)
