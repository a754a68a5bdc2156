import json

import numpy as np
import pytest

from gfreqpca import io
from gfreqpca.cli import main
from gfreqpca.graph import build_laplacian, builtin_karate


def _run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def karate_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("karate")
    assert _run("simulate", "--scenario", "karate", "--seed", 1, "--windows", 50, "--out", out) == 0
    return out


def test_simulate_karate(karate_run):
    s = json.loads((karate_run / "summary.json").read_text())
    assert 0.80 <= s["scree"][0] <= 0.95
    assert s["q"] == 2
    assert sorted(s["envelope_peaks"][:2]) == [10, 20]
    fr, cum = io.read_scree(karate_run / "scree.csv")
    assert fr.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(cum, np.cumsum(fr))
    env, lam = io.read_envelope(karate_run / "envelope.csv")
    assert env.shape == (34,) and np.all(np.diff(lam) >= 0)
    assert io.read_scaling(karate_run / "scalings_10.csv").shape == (12,)
    # residuals are small next to the signal on the dimensions that carry structure
    rows = (karate_run / "residual_norms.csv").read_text().splitlines()[1:]
    norms = np.array([[float(x) for x in r.split(",")[2:]] for r in rows])
    assert np.all(norms[:9, 1] < 0.5 * norms[:9, 0])


def test_simulate_is_byte_identical(karate_run, tmp_path):
    assert _run("simulate", "--scenario", "karate", "--seed", 1, "--windows", 50, "--out", tmp_path) == 0
    for name in ["envelope.csv", "scree.csv", "model.json", "summary.json", "signal.csv"]:
        assert (tmp_path / name).read_bytes() == (karate_run / name).read_bytes()


def test_simulate_noiseless_exact(tmp_path):
    assert _run("simulate", "--scenario", "karate", "--noise", 0, "--estimator", "exact", "--out", tmp_path) == 0
    env, _ = io.read_envelope(tmp_path / "envelope.csv")
    nz = np.flatnonzero(env > 1e-10 * env.max()) + 1
    assert list(nz) == [10, 20]


@pytest.mark.parametrize("bad", [["--windows", 0], ["--window-variance", -1], ["--q-threshold", 1.5], ["--q", 13]])
def test_simulate_usage_errors(tmp_path, bad):
    assert _run("simulate", "--scenario", "karate", "--out", tmp_path, *bad) == 2


def test_fit_on_simulated_karate(karate_run, tmp_path):
    rc = _run("fit", "--graph", karate_run / "graph.csv", "--signal", karate_run / "signal.csv",
              "--seed", 1, "--out", tmp_path)
    assert rc == 0
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["q"] == 2
    vals, _ = io.read_density(tmp_path / "gpsd_1.csv")
    assert vals.shape == (34,)
    assert np.all(vals.real >= -1e-10)


def test_fit_p1_envelope_is_gpsd(tmp_path, rng):
    so = build_laplacian(builtin_karate())
    io.write_edges(tmp_path / "g.csv", builtin_karate())
    io.write_signal(tmp_path / "x.csv", rng.standard_normal((34, 1)), ["only"])
    assert _run("fit", "--graph", tmp_path / "g.csv", "--signal", tmp_path / "x.csv", "--out", tmp_path / "o") == 0
    env, _ = io.read_envelope(tmp_path / "o" / "envelope.csv")
    gpsd, _ = io.read_density(tmp_path / "o" / "gpsd_1.csv")
    np.testing.assert_allclose(env, gpsd.real, rtol=1e-12, atol=1e-14)
    assert so.n == 34


def test_fit_rejects_duplicate_labels_and_mismatch(tmp_path, capsys):
    io.write_edges(tmp_path / "g.csv", builtin_karate())
    (tmp_path / "dup.csv").write_text("a,a\n" + "1,2\n" * 34)
    assert _run("fit", "--graph", tmp_path / "g.csv", "--signal", tmp_path / "dup.csv", "--out", tmp_path) == 2
    assert "duplicate" in capsys.readouterr().err
    (tmp_path / "short.csv").write_text("a,b\n" + "1,2\n" * 20)
    assert _run("fit", "--graph", tmp_path / "g.csv", "--signal", tmp_path / "short.csv", "--out", tmp_path) == 2
    assert _run("fit", "--signal", tmp_path / "short.csv", "--out", tmp_path) == 2


def test_fit_with_coords(tmp_path, rng):
    pts = rng.uniform(size=(15, 2))
    (tmp_path / "c.csv").write_text("id,x,y\n" + "".join(f"{i},{float(x)!r},{float(y)!r}\n" for i, (x, y) in enumerate(pts)))
    io.write_signal(tmp_path / "x.csv", rng.uniform(size=(15, 3)), ["a", "b", "c"])
    rc = _run("fit", "--coords", tmp_path / "c.csv", "--k", 3, "--signal", tmp_path / "x.csv", "--log1p",
              "--estimator", "periodogram", "--out", tmp_path / "o")
    assert rc == 0
    doc = json.loads((tmp_path / "o" / "model.json").read_text())
    assert doc["preprocess"] == {"log1p": True, "center": True}


def test_reconstruct(karate_run, tmp_path, capsys):
    common = ["--graph", karate_run / "graph.csv", "--signal", karate_run / "signal.csv", "--model", karate_run / "model.json"]
    assert _run("reconstruct", *common, "--q", 12, "--out", tmp_path) == 0
    resid = io.read_signal(tmp_path / "residuals.csv").values
    assert np.abs(resid).max() <= 1e-8
    assert _run("reconstruct", *common, "--out", tmp_path / "q2") == 0
    X = io.read_signal(karate_run / "signal.csv").values
    R = io.read_signal(tmp_path / "q2" / "residuals.csv").values
    assert np.linalg.norm(R) < 0.5 * np.linalg.norm(X)
    assert _run("reconstruct", *common, "--q", 0, "--out", tmp_path) == 2


def test_reconstruct_errors(karate_run, tmp_path):
    g = builtin_karate()
    other = type(g)(34, g.edges[:-1])
    io.write_edges(tmp_path / "other.csv", other)
    rc = _run("reconstruct", "--graph", tmp_path / "other.csv", "--signal", karate_run / "signal.csv",
              "--model", karate_run / "model.json", "--out", tmp_path)
    assert rc == 2
    (tmp_path / "empty.csv").write_text("")
    rc = _run("reconstruct", "--graph", karate_run / "graph.csv", "--signal", tmp_path / "empty.csv",
              "--model", karate_run / "model.json", "--out", tmp_path)
    assert rc == 2
    rc = _run("reconstruct", "--graph", karate_run / "graph.csv", "--signal", karate_run / "signal.csv",
              "--model", tmp_path / "missing.json", "--out", tmp_path)
    assert rc == 1


def test_baseline(karate_run, tmp_path):
    common = ["--graph", karate_run / "graph.csv", "--signal", karate_run / "signal.csv"]
    assert _run("baseline", *common, "--alpha", 0, "--q", 3, "--out", tmp_path) == 0
    doc = json.loads((tmp_path / "summary.json").read_text())
    assert doc["objective"] == pytest.approx(doc["pca_residual"], rel=1e-9)
    Q = io.read_glpca_q(tmp_path / "glpca_q.csv")
    np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-10)
    assert _run("baseline", *common, "--q", 35, "--out", tmp_path) == 2
    assert _run("baseline", *common, "--alpha", -1, "--out", tmp_path) == 2


def test_model_json_round_trip(karate_run):
    so = build_laplacian(io.read_edges(karate_run / "graph.csv"))
    m = io.load_model(karate_run / "model.json", so)
    doc = json.loads((karate_run / "model.json").read_text())
    assert m.q == doc["q"] == 2
    np.testing.assert_allclose(m.offsets(), io._uncplx(doc["offsets"]), atol=1e-12)
    assert doc["operator_sha256"] == so.content_hash()


def test_signal_round_trip(tmp_path, rng):
    X = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    io.write_signal(tmp_path / "s.csv", X, ["re", "im"])
    back = io.read_signal(tmp_path / "s.csv")
    assert np.array_equal(back.values, X) and back.labels == ("re", "im")


def test_threads_env(monkeypatch, tmp_path):
    monkeypatch.setenv("GFPCA_THREADS", "1")
    assert _run("simulate", "--scenario", "karate", "--estimator", "periodogram", "--out", tmp_path) == 0
