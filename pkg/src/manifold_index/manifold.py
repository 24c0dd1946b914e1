"""Discrete operator construction over the stock point cloud.

Each stock is a unit-norm point in R^m.  A directed KNN graph links every
point to its k nearest neighbours (exact search, ties broken by ascending
point index).  Gaussian kernel weights over the directed graph give a
row-zero-sum matrix W~; averaging with its transpose restores symmetry, and
the diagonal supplies the positive mass matrix A.  The pair (W, A) is the
discrete operator whose generalized eigenproblem the spectral module solves.

Two operator modes are exposed:

* ``paper``     - the mass diagonal is taken from W~ (the averaging step
                  preserves the diagonal, so a_i equals the directed row
                  kernel sum).  Row sums of W are not exactly zero wherever
                  the KNN relation is asymmetric, so small negative
                  eigenvalues are possible.
* ``balanced``  - after averaging, the diagonal is recomputed from the
                  symmetrized off-diagonals so every row sums to zero.  W is
                  then a true graph Laplacian: positive semidefinite, with
                  the constant vector in its null space.  This is the
                  default.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ParameterError, SingularMassError
from .marketdata import MarketFrame

DEFAULT_K = 10

MODES = ("paper", "balanced")


@dataclass(frozen=True)
class AdjacencyGraph:
    """Directed KNN structure: neighbors[i] lists the k nearest points of i
    (excluding i itself), distances[i] the matching squared Euclidean
    distances in ascending order."""

    k: int
    neighbors: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        n = self.neighbors.shape[0]
        if self.neighbors.shape != (n, self.k) or self.distances.shape != (n, self.k):
            raise ParameterError("neighbors/distances must both be (n, k)")
        if np.any(self.neighbors == np.arange(n)[:, None]):
            raise ParameterError("a point cannot be its own neighbor")
        if np.any(self.distances < 0):
            raise ParameterError("squared distances must be nonnegative")
        if self.k > 1 and np.any(np.diff(self.distances, axis=1) < 0):
            raise ParameterError("distances must be ascending per point")

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]


def _as_points(points) -> np.ndarray:
    if isinstance(points, MarketFrame):
        points = points.matrix()
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ParameterError(f"points must be a 2-d array, got shape {pts.shape}")
    return pts


def _pairwise_sq_dists(pts: np.ndarray) -> np.ndarray:
    sq_norms = np.einsum("ij,ij->i", pts, pts)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    # The Gram form loses precision for near-coincident points; recompute
    # those few entries directly so exact duplicates land at exactly 0.
    ii, jj = np.nonzero((d2 < 1e-12) & ~np.eye(len(pts), dtype=bool))
    for start in range(0, len(ii), 100_000):
        a = ii[start : start + 100_000]
        b = jj[start : start + 100_000]
        d2[a, b] = np.einsum("ij,ij->i", pts[a] - pts[b], pts[a] - pts[b])
    return d2


def knn_graph(points, k: int) -> AdjacencyGraph:
    """Exact k-nearest-neighbour graph by Euclidean distance.

    ``points`` is an (n, m) array or a MarketFrame.  Ties are broken by
    ascending point index, which makes the graph deterministic; duplicate
    points become mutual neighbours at distance 0.
    """
    pts = _as_points(points)
    n = len(pts)
    if not 1 <= k < n:
        raise ParameterError(f"k must satisfy 1 <= k < n, got k={k}, n={n}")
    d2 = _pairwise_sq_dists(pts)
    order = np.argsort(d2, axis=1, kind="stable")
    neighbors = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        row = order[i]
        neighbors[i] = row[row != i][:k]
    distances = np.take_along_axis(d2, neighbors, axis=1)
    return AdjacencyGraph(k=k, neighbors=neighbors, distances=distances)


def auto_bandwidth(graph: AdjacencyGraph) -> float:
    """Self-tuning kernel bandwidth: mean of all stored squared KNN distances."""
    t = float(graph.distances.mean())
    if t <= 0.0:
        raise ParameterError("all KNN distances are zero; bandwidth undefined")
    return t


def weight_tilde(graph: AdjacencyGraph, t: float) -> sparse.csr_matrix:
    """Directed kernel matrix W~: -exp(-d2/t) on KNN edges, row-sum-cancelling
    diagonal, zero elsewhere.  Every row sums to zero by construction."""
    if not t > 0:
        raise ParameterError(f"bandwidth t must be > 0, got {t}")
    n, k = graph.neighbors.shape
    kern = np.exp(-graph.distances / t)
    rows = np.repeat(np.arange(n), k)
    cols = graph.neighbors.ravel()
    diag = kern.sum(axis=1)
    data = np.concatenate([-kern.ravel(), diag])
    idx_r = np.concatenate([rows, np.arange(n)])
    idx_c = np.concatenate([cols, np.arange(n)])
    return sparse.csr_matrix((data, (idx_r, idx_c)), shape=(n, n))


@dataclass(frozen=True)
class WeightMatrix:
    """Symmetrized weight matrix with the kernel bandwidth and mode that
    produced it."""

    entries: sparse.csr_matrix
    t_param: float
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.entries.shape[0] != self.entries.shape[1]:
            raise ParameterError("weight matrix must be square")

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class MassMatrix:
    """Positive diagonal of the operator pair."""

    diag: np.ndarray

    def __post_init__(self):
        if np.any(self.diag <= 0):
            raise SingularMassError("mass diagonal must be strictly positive")

    @property
    def n(self) -> int:
        return len(self.diag)


def symmetrize(w_tilde: sparse.spmatrix, t: float, mode: str = "balanced") -> WeightMatrix:
    """W = (W~ + W~^T) / 2.  Averaging leaves the diagonal untouched; in
    ``balanced`` mode the diagonal is then recomputed from the symmetrized
    off-diagonals so each row sums to zero."""
    if mode not in MODES:
        raise ParameterError(f"mode must be one of {MODES}, got {mode!r}")
    if w_tilde.shape[0] != w_tilde.shape[1]:
        raise ParameterError("W~ must be square")
    w = (w_tilde + w_tilde.T) * 0.5
    if mode == "balanced":
        off = w - sparse.diags(w.diagonal())
        new_diag = -np.asarray(off.sum(axis=1)).ravel()
        w = off + sparse.diags(new_diag)
    return WeightMatrix(entries=sparse.csr_matrix(w), t_param=float(t), mode=mode)


def mass_matrix(weights: WeightMatrix) -> MassMatrix:
    """A = diag(W): the diagonal of the (possibly rebalanced) symmetric W."""
    diag = np.asarray(weights.entries.diagonal(), dtype=float).copy()
    if np.any(diag <= 1e-300):
        bad = int(np.argmin(diag))
        raise SingularMassError(f"mass entry {bad} is {diag[bad]:.3e}; point is isolated")
    return MassMatrix(diag=diag)


def build_operator(
    points,
    k: int = DEFAULT_K,
    t: float | None = None,
    mode: str = "balanced",
) -> tuple[AdjacencyGraph, WeightMatrix, MassMatrix]:
    """Convenience assembly: KNN graph, symmetrized weights, mass diagonal.

    ``t=None`` selects the self-tuning bandwidth (mean squared KNN distance).
    """
    graph = knn_graph(points, k)
    if t is None:
        t = auto_bandwidth(graph)
    weights = symmetrize(weight_tilde(graph, t), t, mode)
    return graph, weights, mass_matrix(weights)


def dump_triplets(matrix, path) -> None:
    """Debug dump in sparse triplet form: one ``i j value`` line per stored
    entry, 0-based indices, sorted by (i, j)."""
    coo = sparse.coo_matrix(matrix)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{int(i)} {int(j)} {float(v)!r}\n")
