"""Finite metric measure spaces, scalar fields and discrete metric gradients.

Points are identified by their integer index ``0 .. n-1``. Scalar fields and
probability measures are plain 1-D float arrays indexed by point id; the
helpers in :mod:`fikit._validation` enforce their invariants at the
boundaries of every public operation.
"""
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
import numbers

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from ._validation import check_field, check_positive, normalize
from .exceptions import (
    EmptyNeighborhoodError,
    InvalidArgumentError,
    InvalidMetricError,
    MetricUndefinedError,
    UnsupportedError,
)

KINDS = ("grid1d", "grid2d", "graph", "heisenberg_grid", "custom")

TRIANGLE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A finite metric space with an optional neighbor structure.

    Parameters
    ----------
    dist : ndarray of shape (n, n)
        Symmetric distance matrix with zero diagonal.
    kind : str
        One of ``grid1d``, ``grid2d``, ``graph``, ``heisenberg_grid``,
        ``custom``.
    coords : ndarray of shape (n, k), optional
        Coordinates of generated spaces.
    edge_index : ndarray of shape (E, 2), optional
        Undirected neighbor pairs ``i < j`` used by edge stencils. When
        omitted the 1-skeleton of the metric is used (pairs with no third
        point lying between them).
    geo_tol : float
        Tolerance for geodesic witnesses.
    geodesic : bool
        Whether every pair has witnesses on a shortest path (true for
        discretized length spaces built from paths or graphs).
    approximate : bool
        Set when the metric only approximates a continuum distance.
    params : dict
        Generator parameters, echoed when serializing.
    """

    dist: np.ndarray
    kind: str = "custom"
    coords: np.ndarray = None
    edge_index: np.ndarray = None
    geo_tol: float = 0.0
    geodesic: bool = False
    approximate: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        dist = np.array(self.dist, dtype=float)
        if dist.ndim != 2 or dist.shape[0] != dist.shape[1] or dist.shape[0] == 0:
            raise InvalidArgumentError("dist must be a non-empty square matrix")
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown space kind {self.kind!r}")
        dist.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        if self.coords is not None:
            coords = np.array(self.coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
            coords.setflags(write=False)
            object.__setattr__(self, "coords", coords)
        if self.edge_index is not None:
            edges = np.array(self.edge_index, dtype=np.intp).reshape(-1, 2)
            edges.setflags(write=False)
            object.__setattr__(self, "edge_index", edges)

    @property
    def n_points(self):
        return self.dist.shape[0]

    def __len__(self):
        return self.n_points

    def __repr__(self):
        return (f"MetricSpace(kind={self.kind!r}, n_points={self.n_points}, "
                f"approximate={self.approximate})")

    @cached_property
    def edges(self):
        """Undirected neighbor pairs as an (E, 2) array."""
        if self.edge_index is not None:
            return self.edge_index
        return _one_skeleton(self.dist)

    @cached_property
    def directed_edges(self):
        """(sources, targets, lengths) listing every edge in both directions."""
        e = self.edges
        src = np.concatenate([e[:, 0], e[:, 1]])
        dst = np.concatenate([e[:, 1], e[:, 0]])
        return src, dst, self.dist[src, dst]

    def neighbors(self, x):
        src, dst, _ = self.directed_edges
        return np.sort(dst[src == x])

    @cached_property
    def step(self):
        """Smallest positive distance (the grid step for generated grids)."""
        if self.n_points == 1:
            return 0.0
        off = self.dist[~np.eye(self.n_points, dtype=bool)]
        return float(off.min())

    @cached_property
    def diameter(self):
        return float(self.dist.max())

    def _witness_mask(self, x, y):
        d = self.dist
        excess = d[x] + d[:, y] - d[x, y]
        tol = self.geo_tol + 8 * np.finfo(float).eps * max(d[x, y], 1.0)
        mask = excess <= tol
        mask[[x, y]] = False
        return mask

    def witness(self, x, y):
        """Lowest-id point strictly between ``x`` and ``y`` on a geodesic.

        Returns ``None`` when no interior point exists.
        """
        idx = np.flatnonzero(self._witness_mask(x, y))
        return int(idx[0]) if idx.size else None

    def shortest_path(self, x, y):
        """Vertex sequence of one shortest path, preferring lowest ids."""
        if not self.geodesic:
            raise UnsupportedError(f"{self.kind} space carries no geodesic witnesses")
        path = [int(x)]
        d = self.dist
        tol = self.geo_tol + 8 * np.finfo(float).eps * max(d[x, y], 1.0)
        cur = int(x)
        while cur != y:
            nbrs = self.neighbors(cur)
            ok = nbrs[d[cur, nbrs] + d[nbrs, y] <= d[cur, y] + tol]
            if ok.size == 0:
                raise MetricUndefinedError(f"no geodesic step from {cur} towards {y}")
            cur = int(ok[0])
            path.append(cur)
        return path

    def geodesic_witnesses(self, x, y):
        """Interior vertices of :meth:`shortest_path`."""
        return self.shortest_path(x, y)[1:-1]


def _one_skeleton(dist):
    n = dist.shape[0]
    pairs = []
    eps = 1e-12
    for i in range(n):
        # j is a neighbor of i unless some k sits between them
        between = dist[i][:, None] + dist <= dist[i][None, :] * (1 + eps)
        between[i, :] = False
        np.fill_diagonal(between, False)
        blocked = between.any(axis=0)
        for j in range(i + 1, n):
            if not blocked[j]:
                pairs.append((i, j))
    return np.array(pairs, dtype=np.intp).reshape(-1, 2)


def validate_metric(space_or_dist, rtol=TRIANGLE_RTOL):
    """Raise :class:`InvalidMetricError` unless the matrix is a metric.

    Symmetry and the zero diagonal are checked exactly, the triangle
    inequality up to relative tolerance ``rtol``.
    """
    d = getattr(space_or_dist, "dist", space_or_dist)
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if not np.all(np.isfinite(d)):
        raise InvalidMetricError("distances must be finite")
    if np.any(np.diag(d) != 0):
        raise InvalidMetricError("nonzero diagonal")
    if not np.array_equal(d, d.T):
        raise InvalidMetricError("distance matrix is not symmetric")
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] <= 0):
        raise InvalidMetricError("distinct points at distance zero")
    for y in range(n):
        bound = (d[:, y, None] + d[None, y, :]) * (1 + rtol)
        bad = np.argwhere(d > bound)
        if bad.size:
            x, z = bad[0]
            raise InvalidMetricError(
                f"triangle inequality fails for ({x}, {y}, {z}): "
                f"{d[x, z]!r} > {d[x, y]!r} + {d[y, z]!r}")
    return True


def build_grid_1d(a, b, n):
    """Uniform grid on ``[a, b]`` with ``n`` points and the distance ``|x-y|``."""
    if not isinstance(n, numbers.Integral) or n < 2:
        raise InvalidArgumentError(f"n must be an integer >= 2, got {n!r}")
    a, b = float(a), float(b)
    if not a < b:
        raise InvalidArgumentError(f"need a < b, got a={a}, b={b}")
    h = (b - a) / (n - 1)
    i = np.arange(n)
    # fill from both ends so both endpoints are exact and symmetric grids stay symmetric
    x = np.where(i <= (n - 1) / 2, a + i * h, b - (n - 1 - i) * h)
    dist = h * np.abs(i[:, None] - i[None, :])
    edges = np.column_stack([i[:-1], i[1:]])
    return MetricSpace(dist, kind="grid1d", coords=x[:, None], edge_index=edges,
                       geo_tol=0.0, geodesic=True,
                       params={"a": a, "b": b, "n": int(n)})


def build_grid_2d(a, b, n):
    """``n x n`` grid on ``[a, b]^2`` with the Euclidean distance.

    Edge stencils use the four lattice neighbors. Euclidean lattices only
    contain geodesic witnesses for collinear pairs, so the space is not
    flagged geodesic.
    """
    line = build_grid_1d(a, b, n)
    x = line.coords[:, 0]
    xx, yy = np.meshgrid(x, x, indexing="ij")
    coords = np.column_stack([xx.ravel(), yy.ravel()])
    h = (float(b) - float(a)) / (n - 1)
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    di = ii[:, None] - ii[None, :]
    dj = jj[:, None] - jj[None, :]
    dist = h * np.sqrt(di * di + dj * dj)
    ids = np.arange(n * n).reshape(n, n)
    edges = np.concatenate([
        np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()]),
        np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()]),
    ])
    return MetricSpace(dist, kind="grid2d", coords=coords, edge_index=edges,
                       params={"a": float(a), "b": float(b), "n": int(n)})


def _graph_metric(n, edges):
    edges = np.asarray(edges, dtype=float).reshape(-1, 3)
    i = edges[:, 0].astype(np.intp)
    j = edges[:, 1].astype(np.intp)
    w = edges[:, 2]
    if np.any((i < 0) | (i >= n) | (j < 0) | (j >= n)):
        raise InvalidArgumentError("edge endpoint out of range")
    if np.any(i == j):
        raise InvalidArgumentError("self-loops are not allowed")
    if np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise InvalidArgumentError("edge lengths must be positive and finite")
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    # parallel edges: keep the shortest
    best = {}
    for u, v, length in zip(lo.tolist(), hi.tolist(), w.tolist()):
        if (u, v) not in best or length < best[(u, v)]:
            best[(u, v)] = length
    pairs = np.array(sorted(best), dtype=np.intp).reshape(-1, 2)
    lengths = np.array([best[tuple(p)] for p in pairs.tolist()])
    graph = coo_matrix((lengths, (pairs[:, 0], pairs[:, 1])), shape=(n, n)).tocsr()
    ncomp, _ = connected_components(graph, directed=False)
    if ncomp > 1:
        raise MetricUndefinedError(
            f"graph has {ncomp} connected components; the metric is undefined")
    dist = shortest_path(graph, method="D", directed=False)
    dist = np.minimum(dist, dist.T)
    np.fill_diagonal(dist, 0.0)
    return dist, pairs, lengths


def build_graph(n, edges):
    """Shortest-path metric of a connected weighted graph.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : sequence of (i, j, length)
        Undirected edges with positive lengths.
    """
    if not isinstance(n, numbers.Integral) or n < 1:
        raise InvalidArgumentError(f"n must be a positive integer, got {n!r}")
    if n == 1:
        return MetricSpace(np.zeros((1, 1)), kind="graph", geodesic=True,
                           edge_index=np.zeros((0, 2), dtype=np.intp),
                           params={"n": 1, "edges": []})
    dist, pairs, lengths = _graph_metric(n, edges)
    edge_list = [[int(u), int(v), float(w)] for (u, v), w in zip(pairs.tolist(), lengths)]
    return MetricSpace(dist, kind="graph", edge_index=pairs, geodesic=True,
                       params={"n": int(n), "edges": edge_list})


def _heisenberg_moves(i, j, k):
    # right translation by (+-s, 0, 0) and (0, +-s, 0); the vertical
    # coordinate is counted in units of s^2/2
    return (
        (i + 1, j, k - j),
        (i - 1, j, k + j),
        (i, j + 1, k + i),
        (i, j - 1, k - i),
    )


def build_heisenberg_grid(levels, step):
    """Lattice of the first Heisenberg group reached by horizontal moves.

    Starting from the origin, every point reachable in at most ``levels``
    right translations by ``(+-step, 0, 0)`` or ``(0, +-step, 0)`` is kept,
    using the group law ``z'' = z + z' + (x y' - y x') / 2``. Distances are
    shortest horizontal path lengths inside the lattice: a graph metric
    approximating the Carnot-Caratheodory distance, without any certified
    error bound (the space is tagged ``approximate``).

    Point 0 is the origin; the remaining ids follow (hop count, i, j, k)
    order, where coordinates are ``(i*step, j*step, k*step**2/2)``.
    """
    if not isinstance(levels, numbers.Integral) or levels < 1:
        raise InvalidArgumentError(f"levels must be an integer >= 1, got {levels!r}")
    step = check_positive(step, "step")
    hops = {(0, 0, 0): 0}
    queue = deque([(0, 0, 0)])
    while queue:
        node = queue.popleft()
        if hops[node] == levels:
            continue
        for nxt in _heisenberg_moves(*node):
            if nxt not in hops:
                hops[nxt] = hops[node] + 1
                queue.append(nxt)
    order = sorted(hops, key=lambda p: (hops[p], p))
    index = {p: n for n, p in enumerate(order)}
    pairs = set()
    for p in order:
        for nxt in _heisenberg_moves(*p):
            if nxt in index:
                u, v = index[p], index[nxt]
                pairs.add((min(u, v), max(u, v)))
    pairs = np.array(sorted(pairs), dtype=np.intp)
    n = len(order)
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])),
                       shape=(n, n)).tocsr()
    dist = shortest_path(graph, method="D", directed=False, unweighted=True) * step
    lattice = np.array(order, dtype=float)
    coords = lattice * np.array([step, step, step * step / 2])
    return MetricSpace(dist, kind="heisenberg_grid", coords=coords, edge_index=pairs,
                       geodesic=True, approximate=True,
                       params={"levels": int(levels), "step": step})


def gaussian_measure(space, sigma, center=None):
    """Gaussian weights ``exp(-|x - center|^2 / (2 sigma^2))`` renormalized on the grid.

    Mass outside the grid is not reflected back; normalization absorbs it.
    """
    if space.coords is None:
        raise InvalidArgumentError("gaussian_measure needs a space with coordinates")
    sigma = check_positive(sigma, "sigma")
    if center is None:
        center = np.zeros(space.coords.shape[1])
    center = np.broadcast_to(np.asarray(center, dtype=float), (space.coords.shape[1],))
    r2 = np.sum((space.coords - center) ** 2, axis=1)
    logw = -r2 / (2 * sigma * sigma)
    return normalize(np.exp(logw - logw.max()))


def gibbs_measure(space, base, beta, p):
    """Weights proportional to ``exp(-beta * d(base, x)**p)``."""
    beta = check_positive(beta, "beta")
    if not isinstance(p, numbers.Real) or p < 2:
        raise InvalidArgumentError(f"p must be >= 2, got {p!r}")
    if not 0 <= base < space.n_points:
        raise InvalidArgumentError(f"base point {base} out of range")
    logw = -beta * space.dist[base] ** p
    return normalize(np.exp(logw - logw.max()))


def lipschitz_constant(f, space):
    """Largest difference quotient ``|f(x) - f(y)| / d(x, y)`` over ``x != y``."""
    f = check_field(f, space)
    if space.n_points == 1:
        return 0.0
    diff = np.abs(f[:, None] - f[None, :])
    d = space.dist.copy()
    np.fill_diagonal(d, np.inf)
    return float((diff / d).max())


def metric_subgradient(f, space, neighborhood="edges"):
    """Discrete metric subgradient ``max_y [f(x) - f(y)]_+ / d(x, y)``.

    Parameters
    ----------
    f : array_like of shape (n,)
    space : MetricSpace
    neighborhood : {"edges", "global"} or float
        ``"edges"`` uses neighbor stencils, ``"global"`` every other point
        and a positive number ``r`` the points within distance ``r``.

    Returns
    -------
    ndarray of shape (n,)
    """
    f = check_field(f, space)
    n = space.n_points
    if isinstance(neighborhood, str) and neighborhood == "edges":
        src, dst, length = space.directed_edges
        if n == 1 or np.bincount(src, minlength=n).min() == 0:
            counts = np.bincount(src, minlength=n) if n > 1 else np.zeros(1, int)
            raise EmptyNeighborhoodError(int(np.flatnonzero(counts == 0)[0]))
        quot = np.maximum(f[src] - f[dst], 0.0) / length
        out = np.zeros(n)
        np.maximum.at(out, src, quot)
        return out
    if isinstance(neighborhood, str) and neighborhood == "global":
        mask = ~np.eye(n, dtype=bool)
    elif isinstance(neighborhood, numbers.Real) and neighborhood > 0:
        mask = (space.dist <= neighborhood) & ~np.eye(n, dtype=bool)
    else:
        raise InvalidArgumentError(f"bad neighborhood {neighborhood!r}")
    empty = np.flatnonzero(~mask.any(axis=1))
    if empty.size:
        raise EmptyNeighborhoodError(int(empty[0]))
    d = np.where(mask, space.dist, np.inf)
    quot = np.maximum(f[:, None] - f[None, :], 0.0) / d
    return np.where(mask, quot, 0.0).max(axis=1)
