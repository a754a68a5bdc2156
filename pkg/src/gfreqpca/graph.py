"""Graphs, graph shift operators and the graph Fourier transform.

Only real symmetric shift operators are supported (combinatorial Laplacian of
an undirected graph). The data path is complex throughout, so signals and
frequency responses may carry imaginary parts.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0088


class GraphError(ValueError):
    """Invalid graph, operator or signal shape."""


@dataclass(frozen=True)
class Graph:
    """Weighted graph on vertices ``0..n-1``.

    Edges are stored once per unordered pair for undirected graphs.
    """

    n: int
    edges: tuple[tuple[int, int, float], ...]
    directed: bool = False
    labels: tuple[str, ...] | None = None
    coords: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.n < 1:
            raise GraphError("graph needs at least one vertex")
        clean = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={self.n}")
            if i == j:
                raise GraphError(f"self-loop at vertex {i}")
            if not np.isfinite(w):
                raise GraphError(f"non-finite weight on edge ({i}, {j})")
            if w < 0:
                raise GraphError(f"negative weight on edge ({i}, {j})")
            clean.append((i, j, w))
        object.__setattr__(self, "edges", tuple(clean))
        if self.labels is not None and len(self.labels) != self.n:
            raise GraphError("labels length does not match n")

    def weight_matrix(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        if self.directed:
            for i, j, w in self.edges:
                W[i, j] = w
            return W
        seen: dict[tuple[int, int], float] = {}
        for i, j, w in self.edges:
            key = (min(i, j), max(i, j))
            # an undirected edge may be listed in both orientations, with equal weight
            if key in seen and seen[key] != w:
                raise GraphError(f"asymmetric weights on undirected edge {key}")
            seen[key] = w
        for (i, j), w in seen.items():
            W[i, j] = W[j, i] = w
        return W

    @property
    def n_edges(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class ShiftOperator:
    """A real symmetric GSO with its ascending eigendecomposition ``S = V diag(lam) V^H``."""

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @classmethod
    def from_matrix(cls, S: np.ndarray) -> "ShiftOperator":
        S = np.asarray(S, dtype=float)
        if S.ndim != 2 or S.shape[0] != S.shape[1]:
            raise GraphError(f"shift operator must be square, got {S.shape}")
        if not np.all(np.isfinite(S)):
            raise GraphError("shift operator has non-finite entries")
        if not np.allclose(S, S.T, rtol=0, atol=1e-12 * (1 + np.abs(S).max())):
            raise GraphError("only symmetric shift operators are supported")
        S = 0.5 * (S + S.T) + 0.0
        lam, V = np.linalg.eigh(S)
        lam, V = _canonical_eigenbasis(lam, V)
        S.setflags(write=False)
        lam.setflags(write=False)
        V.setflags(write=False)
        return cls(S, lam, V)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def content_hash(self) -> str:
        """SHA-256 of the operator entries; used to match saved models to graphs."""
        S = np.ascontiguousarray(self.matrix, dtype="<f8") + 0.0
        return hashlib.sha256(S.tobytes()).hexdigest()

    def zero_tolerance(self) -> float:
        return 1e-8 * max(float(np.abs(self.eigenvalues).max()), 1.0)

    def rank(self) -> int:
        return int(np.sum(np.abs(self.eigenvalues) > self.zero_tolerance()))


def phase_normalize(V: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Rotate each column so its largest-modulus entry is real and positive.

    Ties on modulus (within ``atol``) go to the lowest row index.
    """
    V = np.array(V, copy=True)
    for c in range(V.shape[1]):
        idx = _pivot_index(V[:, c], atol)
        z = V[idx, c]
        if z != 0:
            V[:, c] = V[:, c] * (np.conj(z) / abs(z))
    if np.isrealobj(V):
        return V
    # re-zero the pivot imaginary parts exactly
    for c in range(V.shape[1]):
        idx = _pivot_index(V[:, c], atol)
        V[idx, c] = abs(V[idx, c])
    return V


def _pivot_index(v: np.ndarray, atol: float) -> int:
    mod = np.abs(v)
    return int(np.flatnonzero(mod >= mod.max() - atol)[0])


def _tie_groups(values: np.ndarray, tol: float) -> list[np.ndarray]:
    groups, start = [], 0
    for k in range(1, len(values) + 1):
        if k == len(values) or abs(values[k] - values[k - 1]) > tol:
            groups.append(np.arange(start, k))
            start = k
    return groups


def _canonical_eigenbasis(lam: np.ndarray, V: np.ndarray):
    """Phase-normalize eigenvectors and order repeated eigenvalues by pivot index."""
    V = phase_normalize(V)
    # ties are eigenvalues equal to rounding error; eigenvalues keep their sorted order
    tol = 1e-12 * max(float(np.abs(lam).max()), 1.0)
    order = []
    for g in _tie_groups(lam, tol):
        if len(g) > 1:
            pivots = [_pivot_index(V[:, c], 1e-12) for c in g]
            g = g[np.argsort(pivots, kind="stable")]
        order.extend(g)
    return lam.copy(), np.ascontiguousarray(V[:, np.asarray(order)])


def build_laplacian(graph: Graph) -> ShiftOperator:
    """Combinatorial Laplacian ``L = D - W`` of an undirected graph, eigendecomposed."""
    if graph.directed:
        raise GraphError("directed graphs are not supported")
    W = graph.weight_matrix()
    L = np.diag(W.sum(axis=1)) - W
    return ShiftOperator.from_matrix(L)


def pairwise_distances(coords: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if metric == "euclidean":
        diff = coords[:, None, :] - coords[None, :, :]
        return np.sqrt((diff**2).sum(-1))
    if metric == "haversine":
        # coords are (lat, lon) in degrees; result in km
        lat, lon = np.radians(coords[:, 0]), np.radians(coords[:, 1])
        dlat = lat[:, None] - lat[None, :]
        dlon = lon[:, None] - lon[None, :]
        a = np.sin(dlat / 2) ** 2 + np.cos(lat[:, None]) * np.cos(lat[None, :]) * np.sin(dlon / 2) ** 2
        return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    raise GraphError(f"unknown metric {metric!r}")


def knn_gaussian_graph(coords, k: int, distance: str = "euclidean", labels=None) -> Graph:
    """Symmetric kNN graph with Gaussian weights ``exp(-d^2 / ave^2)``.

    ``ave`` is the mean distance over all unordered vertex pairs. An edge is
    kept if either endpoint lists the other among its ``k`` nearest neighbours.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise GraphError("coords must be an (n, 2) array")
    n = coords.shape[0]
    if k < 1 or k >= n:
        raise GraphError(f"k must satisfy 1 <= k < n (k={k}, n={n})")
    D = pairwise_distances(coords, distance)
    iu = np.triu_indices(n, 1)
    ave = D[iu].mean()
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        others = np.delete(np.arange(n), i)
        nearest = others[np.argsort(D[i, others], kind="stable")[:k]]
        adj[i, nearest] = True
    adj |= adj.T
    scale = ave**2 if ave > 0 else 1.0
    edges = tuple(
        (int(i), int(j), float(np.exp(-D[i, j] ** 2 / scale)))
        for i, j in zip(*np.nonzero(np.triu(adj, 1)))
    )
    return Graph(n, edges, labels=labels, coords=coords)


def _read_edge_rows(text: str):
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if lines[0].replace(" ", "") != "src,dst,weight":
        raise GraphError("edge list must have header src,dst,weight")
    for ln in lines[1:]:
        a, b, w = ln.split(",")
        yield int(a), int(b), float(w)


def builtin_karate() -> Graph:
    """Zachary's karate club network: 34 vertices, 78 unweighted edges."""
    text = resources.files("gfreqpca.data").joinpath("karate_edges.csv").read_text()
    return Graph(34, tuple(_read_edge_rows(text)))


def builtin_us_sensor_coords() -> np.ndarray:
    """Bundled (lat, lon) table of 218 stations used by the US sensor scenario."""
    text = resources.files("gfreqpca.data").joinpath("us_sensor_coords.csv").read_text()
    rows = [ln.split(",") for ln in text.splitlines()[1:] if ln.strip()]
    return np.array([[float(r[1]), float(r[2])] for r in rows])


def _check_length(x: np.ndarray, so: ShiftOperator) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] != so.n:
        raise GraphError(f"signal has {x.shape[0]} rows, graph has {so.n} vertices")
    return x


def gft(x, so: ShiftOperator) -> np.ndarray:
    """Graph Fourier coefficients ``V^H x``; also accepts an (n, p) stack."""
    x = _check_length(x, so)
    return so.eigenvectors.conj().T @ x


def igft(coeffs, so: ShiftOperator) -> np.ndarray:
    coeffs = _check_length(coeffs, so)
    return so.eigenvectors @ coeffs


def apply_filter(freq_response: Sequence[complex], x, so: ShiftOperator) -> np.ndarray:
    """Filter ``x`` by ``V diag(h) V^H``, evaluated in the frequency domain."""
    h = _check_length(np.asarray(freq_response), so)
    x = _check_length(x, so)
    xh = gft(x, so)
    if xh.ndim == 2:
        return igft(h[:, None] * xh, so)
    return igft(h * xh, so)


def connected_components(graph: Graph) -> int:
    """Number of connected components, by breadth-first search."""
    nbrs = [[] for _ in range(graph.n)]
    for i, j, w in graph.edges:
        if w > 0:
            nbrs[i].append(j)
            nbrs[j].append(i)
    seen = np.zeros(graph.n, dtype=bool)
    count = 0
    for s in range(graph.n):
        if seen[s]:
            continue
        count += 1
        queue = [s]
        seen[s] = True
        while queue:
            u = queue.pop()
            for v in nbrs[u]:
                if not seen[v]:
                    seen[v] = True
                    queue.append(v)
    return count
