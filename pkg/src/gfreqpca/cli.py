"""Command-line front end: ``gfreqpca {simulate,fit,reconstruct,baseline}``.

Exit codes: 0 success, 1 runtime or IO failure, 2 usage or validation error.
``GFPCA_THREADS`` caps the BLAS thread pool.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import io
from .baselines import glpca_fit, pca_residual
from .graph import Graph, GraphError, build_laplacian, builtin_karate, builtin_us_sensor_coords, knn_gaussian_graph
from .pca import FitError, analyze, fit, reconstruct, select_q, top_peaks
from .simulation import draw, exact_covariances, karate_model, us_sensor_model
from .spectral import (
    DEFAULT_WINDOW_VARIANCE,
    DEFAULT_WINDOWS,
    Exact,
    Periodogram,
    WindowEnsemble,
    Windowed,
    assemble_spectral_matrices,
    center,
)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    out: Path
    seed: int = 0
    windows: int = DEFAULT_WINDOWS
    window_variance: float = DEFAULT_WINDOW_VARIANCE
    bias_correct: bool = False
    estimator: str = "windowed"
    q: int | None = None
    q_threshold: float = 0.95
    q_policy: str = "threshold"

    def validate(self):
        if self.windows < 1:
            raise UsageError("--windows must be at least 1")
        if self.window_variance < 0:
            raise UsageError("--window-variance must be nonnegative")
        if not 0 < self.q_threshold <= 1:
            raise UsageError("--q-threshold must lie in (0, 1]")


def _config(args) -> RunConfig:
    cfg = RunConfig(
        command=args.command,
        out=Path(args.out),
        seed=args.seed,
        windows=getattr(args, "windows", DEFAULT_WINDOWS),
        window_variance=getattr(args, "window_variance", DEFAULT_WINDOW_VARIANCE),
        bias_correct=getattr(args, "bias_correct", False),
        estimator=getattr(args, "estimator", "windowed"),
        q=getattr(args, "q", None),
        q_threshold=getattr(args, "q_threshold", 0.95),
        q_policy=getattr(args, "q_policy", "threshold"),
    )
    cfg.validate()
    return cfg


def _estimator(cfg: RunConfig, n: int, covs=None):
    if cfg.estimator == "exact":
        if covs is None:
            raise UsageError("the exact estimator is only available for simulated scenarios")
        return Exact(covs)
    if cfg.estimator == "periodogram":
        return Periodogram()
    ens = WindowEnsemble(cfg.windows, cfg.window_variance, (cfg.seed, 1), n)
    return Windowed(ens, cfg.bias_correct)


def _choose_q(cfg: RunConfig, model) -> int:
    if cfg.q is not None:
        if not 1 <= cfg.q <= model.p:
            raise UsageError(f"--q must lie in [1, {model.p}]")
        return cfg.q
    return select_q(model, cfg.q_policy, t=cfg.q_threshold)


def _write_reports(out: Path, model, scaling_freqs) -> dict:
    report = analyze(model, scaling_freqs)
    io.write_envelope(out / "envelope.csv", report)
    io.write_scree(out / "scree.csv", report)
    for k, u in report.scalings.items():
        io.write_scaling(out / f"scalings_{k}.csv", u, model.labels, k, float(report.lambdas[k - 1]))
    return {
        "q": int(model.q),
        "scree": [float(x) for x in report.fractions],
        "cumulative": [float(x) for x in report.cumulative],
        "envelope_peaks": top_peaks(report.envelope, min(5, model.n)),
        "theoretical_error": [float(x) for x in report.theoretical_errors],
    }


def _dump(path: Path, doc: dict):
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _load_graph(args, n_expected: int | None = None) -> Graph:
    if getattr(args, "graph", None):
        g = io.read_edges(args.graph)
        if n_expected is not None and g.n < n_expected:
            g = Graph(n_expected, g.edges)
        return g
    if getattr(args, "coords", None):
        coords, metric = io.read_coords(args.coords)
        return knn_gaussian_graph(coords, args.k, metric)
    raise UsageError("a graph is required: pass --graph <edges.csv> or --coords <coords.csv>")


def _read_signal(args):
    sig = io.read_signal(args.signal)
    vals = np.asarray(sig.values)
    if getattr(args, "log1p", False):
        vals = np.log1p(vals)
    return sig, vals


def _check_n(graph: Graph, n_rows: int):
    if graph.n != n_rows:
        raise UsageError(f"signal has {n_rows} rows but the graph has {graph.n} vertices")


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if args.scenario == "karate":
        graph = builtin_karate()
        model = karate_model(args.noise)
    else:
        if args.coords:
            coords, metric = io.read_coords(args.coords)
        else:
            coords, metric = builtin_us_sensor_coords(), "haversine"
        graph = knn_gaussian_graph(coords, args.k, metric)
        model = us_sensor_model(coords, args.noise)
    so = build_laplacian(graph)
    X = draw(model, so, (cfg.seed, 0))
    cfg.out.mkdir(parents=True, exist_ok=True)

    if cfg.estimator == "exact":
        Xc, means = X, np.zeros_like(X)
        est = _estimator(cfg, so.n, exact_covariances(model, so))
    else:
        Xc, means = center(X)
        est = _estimator(cfg, so.n)
    field = assemble_spectral_matrices(Xc, so, est, model.labels)
    fitted = fit(field, so, means, q=1)
    fitted = fitted.with_q(_choose_q(cfg, fitted))

    summary = _write_reports(cfg.out, fitted, model.frequencies())
    Xhat = reconstruct(fitted, X)
    resid = X - Xhat
    rows = [[i + 1, lab, io.fmt(np.linalg.norm(X[:, i])), io.fmt(np.linalg.norm(resid[:, i]))]
            for i, lab in enumerate(model.labels)]
    io._write_rows(cfg.out / "residual_norms.csv", ["dim", "label", "signal_norm", "residual_norm"], rows)
    io.write_signal(cfg.out / "signal.csv", X, model.labels)
    io.write_edges(cfg.out / "graph.csv", graph)
    io.save_model(cfg.out / "model.json", fitted)
    summary.update(
        scenario=args.scenario,
        seed=cfg.seed,
        estimator=cfg.estimator,
        windows=cfg.windows,
        window_variance=cfg.window_variance,
        bias_correct=cfg.bias_correct,
        noise=args.noise,
        n=so.n,
        p=model.p,
        generating_frequencies=model.frequencies(),
        total_squared_residual=float(np.sum(np.abs(resid) ** 2)),
    )
    _dump(cfg.out / "summary.json", summary)
    print(f"{args.scenario}: q={fitted.q} PC1={summary['scree'][0]:.3f} peaks={summary['envelope_peaks'][:3]}")
    return 0


def cmd_fit(args) -> int:
    cfg = _config(args)
    sig, X = _read_signal(args)
    graph = _load_graph(args, sig.n)
    _check_n(graph, sig.n)
    so = build_laplacian(graph)
    if args.center:
        Xc, means = center(X)
    else:
        Xc, means = X, np.zeros_like(X)
    field = assemble_spectral_matrices(Xc, so, _estimator(cfg, so.n), sig.labels)
    fitted = fit(field, so, means, q=1)
    fitted = fitted.with_q(_choose_q(cfg, fitted))
    cfg.out.mkdir(parents=True, exist_ok=True)
    freqs = args.scaling_freqs or top_peaks(fitted.tau[:, 0], min(2, so.n))
    summary = _write_reports(cfg.out, fitted, freqs)
    for i, lab in enumerate(sig.labels):
        io.write_density(cfg.out / f"gpsd_{i + 1}.csv", field.matrices[:, i, i], so.eigenvalues)
    io.save_model(cfg.out / "model.json", fitted, preprocess={"log1p": bool(args.log1p), "center": bool(args.center)})
    summary.update(n=so.n, p=sig.p, labels=list(sig.labels), estimator=cfg.estimator, seed=cfg.seed)
    _dump(cfg.out / "summary.json", summary)
    print(f"q={fitted.q} PC1={summary['scree'][0]:.3f}")
    return 0


def cmd_reconstruct(args) -> int:
    sig, X = _read_signal(args)
    graph = _load_graph(args, sig.n)
    _check_n(graph, sig.n)
    so = build_laplacian(graph)
    doc = json.loads(Path(args.model).read_text())
    if doc.get("preprocess", {}).get("log1p") and not args.log1p:
        X = np.log1p(X)
    model = io.model_from_dict(doc, so, args.model)
    if sig.p != model.p:
        raise UsageError(f"signal has {sig.p} columns, model expects {model.p}")
    q = args.q if args.q is not None else model.q
    if not 1 <= q <= model.p:
        raise UsageError(f"--q must lie in [1, {model.p}]")
    Xhat = reconstruct(model, X, q)
    resid = X - Xhat
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_signal(out / "reconstruction.csv", Xhat, sig.labels)
    io.write_signal(out / "residuals.csv", resid, sig.labels)
    total = float(np.sum(np.abs(resid) ** 2))
    print(f"total squared residual: {total!r}")
    return 0


def cmd_baseline(args) -> int:
    sig, X = _read_signal(args)
    graph = _load_graph(args, sig.n)
    _check_n(graph, sig.n)
    if not 1 <= args.q <= graph.n:
        raise UsageError(f"--q must lie in [1, {graph.n}]")
    if args.alpha < 0:
        raise UsageError("--alpha must be nonnegative")
    so = build_laplacian(graph)
    model = glpca_fit(np.real(X), so, args.alpha, args.q, center=args.center)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    io.write_glpca_q(out / "glpca_q.csv", model.Q)
    doc = {
        "alpha": model.alpha,
        "q": args.q,
        "objective": model.objective,
        "pca_residual": pca_residual(np.real(X), min(args.q, sig.p), center=args.center),
        "smoothness": float(np.trace(model.Q.T @ so.matrix @ model.Q)),
    }
    _dump(out / "summary.json", doc)
    print(f"gLPCA objective: {model.objective!r}")
    return 0


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="gfreqpca-out")


def _add_estimation(p: argparse.ArgumentParser, estimators):
    p.add_argument("--estimator", choices=estimators, default="windowed")
    p.add_argument("--windows", type=int, default=DEFAULT_WINDOWS, metavar="M")
    p.add_argument("--window-variance", type=float, default=DEFAULT_WINDOW_VARIANCE, metavar="NU")
    p.add_argument("--bias-correct", action="store_true")
    p.add_argument("--q", type=int)
    p.add_argument("--q-threshold", type=float, default=0.95, metavar="T")
    p.add_argument("--q-policy", choices=["threshold", "elbow"], default="threshold")


def _add_graph(p: argparse.ArgumentParser):
    p.add_argument("--graph", help="edge list CSV (src,dst,weight)")
    p.add_argument("--coords", help="coordinate CSV (id,x,y or id,lat,lon); builds a kNN graph")
    p.add_argument("--k", type=int, default=7, help="neighbours for --coords")
    p.add_argument("--signal", required=True)
    p.add_argument("--log1p", action="store_true")
    p.add_argument("--center", action=argparse.BooleanOptionalAction, default=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gfreqpca", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a synthetic reproduction scenario")
    p.add_argument("--scenario", required=True, choices=["karate", "us-sensor"])
    p.add_argument("--noise", type=float, default=0.5)
    p.add_argument("--coords", help="coordinate CSV for us-sensor (defaults to the bundled table)")
    p.add_argument("--k", type=int, default=7)
    _add_common(p)
    _add_estimation(p, ["windowed", "periodogram", "exact"])
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit gFreqPCA to a signal CSV")
    _add_graph(p)
    _add_common(p)
    _add_estimation(p, ["windowed", "periodogram"])
    p.add_argument("--scaling-freqs", type=int, nargs="*", metavar="K")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reconstruct", help="reconstruct a signal with a saved model")
    _add_graph(p)
    p.add_argument("--model", required=True)
    p.add_argument("--q", type=int)
    p.add_argument("--out", default="gfreqpca-out")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("baseline", help="graph-Laplacian PCA baseline")
    _add_graph(p)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--out", default="gfreqpca-out")
    p.set_defaults(func=cmd_baseline)
    return parser


def _thread_limit():
    threads = os.environ.get("GFPCA_THREADS")
    if not threads:
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(threads))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with _thread_limit():
            return args.func(args)
    except (UsageError, GraphError, FitError, io.ModelMismatch, ValueError) as exc:
        print(f"gfreqpca: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"gfreqpca: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
