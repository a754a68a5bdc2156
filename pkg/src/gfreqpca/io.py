"""CSV and JSON readers/writers for graphs, signals, reports and fitted models."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError, ShiftOperator
from .pca import AnalysisReport, GFreqPCAModel

MODEL_FORMAT = "gfreqpca-model/1"


@dataclass(frozen=True, eq=False)
class MultivariateGraphSignal:
    """An (n, p) signal with one label per column."""

    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise GraphError("signal must be a 2-D (n, p) array")
        if len(self.labels) != v.shape[1]:
            raise GraphError("one label per column is required")
        if len(set(self.labels)) != len(self.labels):
            dup = sorted({x for x in self.labels if self.labels.count(x) > 1})
            raise GraphError(f"duplicate dimension labels: {', '.join(dup)}")
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def fmt(x) -> str:
    """Shortest round-trip text for a real or complex scalar."""
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        if x.imag == 0:
            return repr(float(x.real) + 0.0)
        return repr(x)
    return repr(float(x) + 0.0)


def _parse(s: str):
    s = s.strip()
    try:
        return float(s)
    except ValueError:
        return complex(s)


def _write_rows(path: Path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="") as f:
        rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
    if not rows:
        raise GraphError(f"{path}: file is empty")
    return [c.strip() for c in rows[0]], rows[1:]


def read_edges(path, n: int | None = None) -> Graph:
    header, rows = _read_rows(path)
    if header != ["src", "dst", "weight"]:
        raise GraphError(f"{path}: expected header src,dst,weight, got {','.join(header)}")
    edges = []
    for r in rows:
        try:
            edges.append((int(r[0]), int(r[1]), float(r[2])))
        except (ValueError, IndexError) as exc:
            raise GraphError(f"{path}: malformed row {r}") from exc
    if n is None:
        n = 1 + max((max(i, j) for i, j, _ in edges), default=-1)
    return Graph(n, tuple(edges))


def write_edges(path, graph: Graph) -> Path:
    return _write_rows(path, ["src", "dst", "weight"], [[i, j, fmt(w)] for i, j, w in graph.edges])


def read_coords(path) -> tuple[np.ndarray, str]:
    """Coordinates and the natural metric: ``id,x,y`` is euclidean, ``id,lat,lon`` haversine."""
    header, rows = _read_rows(path)
    if header == ["id", "x", "y"]:
        metric = "euclidean"
    elif header == ["id", "lat", "lon"]:
        metric = "haversine"
    else:
        raise GraphError(f"{path}: expected header id,x,y or id,lat,lon")
    rows = sorted(rows, key=lambda r: int(r[0]))
    return np.array([[float(r[1]), float(r[2])] for r in rows]), metric


def read_signal(path) -> MultivariateGraphSignal:
    header, rows = _read_rows(path)
    if not rows:
        raise GraphError(f"{path}: no data rows")
    if any(len(r) != len(header) for r in rows):
        raise GraphError(f"{path}: ragged rows (header has {len(header)} columns)")
    vals = np.array([[_parse(c) for c in r] for r in rows])
    if np.iscomplexobj(vals) and not np.any(vals.imag):
        vals = vals.real
    return MultivariateGraphSignal(vals, tuple(header))


def write_signal(path, values, labels) -> Path:
    values = np.asarray(values)
    return _write_rows(path, list(labels), [[fmt(x) for x in row] for row in values])


def write_density(path, values, lambdas) -> Path:
    """Density CSV with columns ``freq_index,lambda,re,im`` (1-based index)."""
    values = np.asarray(values, dtype=complex)
    rows = [[l + 1, fmt(lam), fmt(v.real), fmt(v.imag)] for l, (lam, v) in enumerate(zip(lambdas, values))]
    return _write_rows(path, ["freq_index", "lambda", "re", "im"], rows)


def read_density(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = _read_rows(path)
    if header != ["freq_index", "lambda", "re", "im"]:
        raise GraphError(f"{path}: not a density CSV")
    lam = np.array([float(r[1]) for r in rows])
    vals = np.array([float(r[2]) + 1j * float(r[3]) for r in rows])
    return vals, lam


def write_envelope(path, report: AnalysisReport) -> Path:
    rows = [[l + 1, fmt(lam), fmt(e)] for l, (lam, e) in enumerate(zip(report.lambdas, report.envelope))]
    return _write_rows(path, ["freq_index", "lambda", "envelope"], rows)


def read_envelope(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = _read_rows(path)
    if header != ["freq_index", "lambda", "envelope"]:
        raise GraphError(f"{path}: not an envelope CSV")
    return np.array([float(r[2]) for r in rows]), np.array([float(r[1]) for r in rows])


def write_scree(path, report: AnalysisReport) -> Path:
    rows = [[i + 1, fmt(f), fmt(c)] for i, (f, c) in enumerate(zip(report.fractions, report.cumulative))]
    return _write_rows(path, ["pc", "fraction", "cumulative"], rows)


def read_scree(path) -> tuple[np.ndarray, np.ndarray]:
    header, rows = _read_rows(path)
    if header != ["pc", "fraction", "cumulative"]:
        raise GraphError(f"{path}: not a scree CSV")
    return np.array([float(r[1]) for r in rows]), np.array([float(r[2]) for r in rows])


def write_scaling(path, scaling, labels, freq_index: int, lam: float) -> Path:
    rows = [[i + 1, lab, int(freq_index), fmt(lam), fmt(complex(z).real), fmt(complex(z).imag), fmt(abs(z))]
            for i, (lab, z) in enumerate(zip(labels, scaling))]
    return _write_rows(path, ["dim", "label", "freq_index", "lambda", "re", "im", "abs"], rows)


def read_scaling(path) -> np.ndarray:
    _, rows = _read_rows(path)
    return np.array([float(r[4]) + 1j * float(r[5]) for r in rows])


def write_glpca_q(path, Q) -> Path:
    Q = np.asarray(Q)
    header = ["vertex"] + [f"pc{k + 1}" for k in range(Q.shape[1])]
    return _write_rows(path, header, [[u] + [fmt(x) for x in row] for u, row in enumerate(Q)])


def read_glpca_q(path) -> np.ndarray:
    _, rows = _read_rows(path)
    return np.array([[float(x) for x in r[1:]] for r in rows])


def _cplx(a) -> dict:
    a = np.asarray(a, dtype=complex)
    return {"re": (a.real + 0.0).tolist(), "im": (a.imag + 0.0).tolist()}


def _uncplx(d) -> np.ndarray:
    return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d["im"], dtype=float)


def model_to_dict(model: GFreqPCAModel) -> dict:
    lam = model.so.eigenvalues
    return {
        "format": MODEL_FORMAT,
        "operator_sha256": model.so.content_hash(),
        "n": model.n,
        "p": model.p,
        "q": model.q,
        "labels": list(model.labels),
        "frequencies": [
            {"index": l + 1, "lambda": float(lam[l]), "tau": model.tau[l].tolist(), "U": _cplx(model.U[l])}
            for l in range(model.n)
        ],
        "means": _cplx(model.means),
        "offsets": _cplx(model.offsets()),
    }


def save_model(path, model: GFreqPCAModel, **extra) -> Path:
    path = Path(path)
    doc = model_to_dict(model)
    doc.update(extra)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return path


class ModelMismatch(ValueError):
    """The saved model was fitted on a different shift operator."""


def load_model(path, so: ShiftOperator) -> GFreqPCAModel:
    return model_from_dict(json.loads(Path(path).read_text()), so, str(path))


def model_from_dict(doc: dict, so: ShiftOperator, path: str = "model") -> GFreqPCAModel:
    if doc.get("format") != MODEL_FORMAT:
        raise GraphError(f"{path}: not a {MODEL_FORMAT} document")
    if doc["operator_sha256"] != so.content_hash():
        raise ModelMismatch("model was fitted on a different graph (operator hash mismatch)")
    freqs = sorted(doc["frequencies"], key=lambda d: d["index"])
    U = np.stack([_uncplx(d["U"]) for d in freqs])
    tau = np.array([d["tau"] for d in freqs], dtype=float)
    means = _uncplx(doc["means"])
    if not np.any(means.imag):
        means = means.real
    return GFreqPCAModel(U, tau, int(doc["q"]), means, so, tuple(doc["labels"]))
