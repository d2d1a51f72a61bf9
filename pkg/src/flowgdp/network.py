"""Betweenness, closeness and weighted PageRank on city networks, and their correlation with GDP.

Shortest-path lengths are the edge weight on distance graphs and
``1 / weight`` on flow graphs, so heavier flow means "closer".
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import UndefinedCorrelation, Unconverged, UnreachableNode
from .model import DistanceMatrix, FlowMatrix

DISTANCE_KM = "distance_km"
FLOW_VOLUME = "flow_volume"
TIE_RTOL = 1e-12

CORRELATION_LAYOUT = ("GDP", "Betw(D)", "Closeness(D)", "Closeness(C)", "Closeness(K)",
               "PageRank(C)", "PageRank(K)")


@dataclass(frozen=True)
class WeightedGraph:
    """Dense weighted graph; ``weights[u, v] > 0`` is the edge u->v, 0 means no edge."""

    nodes: tuple[str, ...]
    weights: np.ndarray
    weight_kind: str = DISTANCE_KM
    directed: bool = False

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        if W.shape != (len(self.nodes), len(self.nodes)):
            raise ValueError("weight matrix shape does not match node list")
        if np.any(W < 0) or not np.all(np.isfinite(W)):
            raise ValueError("edge weights must be finite and >= 0")
        np.fill_diagonal(W, 0.0)
        if not self.directed and not np.allclose(W, W.T, rtol=1e-12, atol=0):
            raise ValueError("undirected graph needs a symmetric weight matrix")
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "weights", W)

    @property
    def n(self) -> int:
        return len(self.nodes)

    def lengths(self) -> np.ndarray:
        W = self.weights
        L = np.full(W.shape, np.inf)
        edge = W > 0
        L[edge] = W[edge] if self.weight_kind == DISTANCE_KM else 1.0 / W[edge]
        return L

    def scaled(self, factor: float) -> "WeightedGraph":
        return WeightedGraph(self.nodes, self.weights * factor, self.weight_kind, self.directed)

    @classmethod
    def from_distances(cls, distances: DistanceMatrix, city_ids) -> "WeightedGraph":
        D = distances.to_array(city_ids)
        return cls(tuple(city_ids), np.nan_to_num(D, nan=0.0), DISTANCE_KM, directed=False)

    @classmethod
    def from_flows(cls, flows: FlowMatrix, city_ids) -> "WeightedGraph":
        return cls(tuple(city_ids), flows.to_array(city_ids), FLOW_VOLUME, directed=True)


def _shortest_paths(g: WeightedGraph):
    return _kernels.brandes(g.lengths(), TIE_RTOL)


def betweenness(g: WeightedGraph) -> dict[str, float]:
    """Unnormalised shortest-path betweenness.

    Unordered pairs are counted once on undirected graphs, ordered pairs on
    directed ones. Unreachable pairs contribute nothing.
    """
    bc, _ = _shortest_paths(g)
    if not g.directed:
        bc = bc / 2.0
    return dict(zip(g.nodes, bc.tolist()))


def unreachable_pairs(g: WeightedGraph) -> list[tuple[str, str]]:
    _, dist = _shortest_paths(g)
    return [(g.nodes[i], g.nodes[j]) for i, j in zip(*np.nonzero(~np.isfinite(dist)))]


def closeness(g: WeightedGraph) -> dict[str, float]:
    """``1 / sum_j d(i, j)`` over shortest-path lengths from each node."""
    _, dist = _shortest_paths(g)
    out = {}
    for i, node in enumerate(g.nodes):
        row = dist[i]
        if not np.all(np.isfinite(row)):
            reach = [g.nodes[j] for j in np.flatnonzero(np.isfinite(row))]
            rest = [g.nodes[j] for j in np.flatnonzero(~np.isfinite(row))]
            raise UnreachableNode(node, [reach, rest])
        total = row.sum()
        out[node] = 1.0 / total if total > 0 else 0.0
    return out


def transition_matrix(g: WeightedGraph) -> np.ndarray:
    """Row-stochastic ``T[j, i]`` = weight(j->i) / out-weight(j); dangling rows uniform."""
    W = g.weights
    out = W.sum(axis=1)
    T = np.empty_like(W)
    dangling = out == 0
    T[~dangling] = W[~dangling] / out[~dangling, None]
    T[dangling] = 1.0 / g.n
    return T


def pagerank(g: WeightedGraph, damping: float = 0.85, tol: float = 1e-12,
             max_iter: int = 100_000) -> dict[str, float]:
    """Weighted PageRank by power iteration; the result sums to 1."""
    if not 0.0 < damping < 1.0:
        raise ValueError("damping must lie in (0, 1)")
    n = g.n
    T = transition_matrix(g)
    pr = np.full(n, 1.0 / n)
    for it in range(1, max_iter + 1):
        new = (1.0 - damping) / n + damping * (pr @ T)
        new /= new.sum()
        if np.abs(new - pr).sum() < tol:
            return dict(zip(g.nodes, new.tolist()))
        pr = new
    raise Unconverged("PageRank power iteration", max_iter)


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != y.size or x.size < 3:
        raise ValueError("need two series of equal length >= 3")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx, syy = xc @ xc, yc @ yc
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelation("a series has zero variance; correlation undefined")
    return float(np.clip((xc @ yc) / np.sqrt(sxx * syy), -1.0, 1.0))


@dataclass
class NetworkMetrics:
    betweenness: dict[str, float] = field(default_factory=dict)
    closeness: dict[str, float] = field(default_factory=dict)
    pagerank: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {k: v for k, v in (("betweenness", self.betweenness),
                                  ("closeness", self.closeness),
                                  ("pagerank", self.pagerank)) if v}


def correlate_with_gdp(metrics: dict[str, dict[str, float]], gdp: dict[str, float]) -> dict[str, float]:
    """Pearson r between GDP and each named per-city metric."""
    cities = list(gdp)
    y = [gdp[c] for c in cities]
    return {name: pearson([vals[c] for c in cities], y) for name, vals in metrics.items()}


def correlation_table(series: dict[str, dict[str, float]], cities) -> tuple[list[str], np.ndarray]:
    """Pairwise Pearson matrix over the series present, GDP first then the distance and flow metrics."""
    labels = [k for k in CORRELATION_LAYOUT if k in series] + [k for k in series if k not in CORRELATION_LAYOUT]
    M = np.array([[series[k][c] for c in cities] for k in labels], dtype=float)
    out = np.full((len(labels), len(labels)), np.nan)
    for a in range(len(labels)):
        for b in range(len(labels)):
            try:
                out[a, b] = pearson(M[a], M[b])
            except UndefinedCorrelation:
                pass
    return labels, out
