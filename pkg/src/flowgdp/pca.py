"""PCA of an OD flow matrix and dominant sub-network extraction.

Rows of the matrix are origins (observations) and columns destinations
(features). Columns are centered, and z-scored by default, before an SVD.
Each component's sign is fixed so its largest-magnitude loading is positive.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData, ZeroVarianceColumn
from .model import FlowMatrix


@dataclass
class PcaResult:
    origins: tuple[str, ...]
    destinations: tuple[str, ...]
    loadings: np.ndarray              # destination x component, orthonormal columns
    scores: np.ndarray                # origin x component, unit variance per component
    raw_scores: np.ndarray            # origin x component, projections before standardizing
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    center: np.ndarray
    scale: np.ndarray
    standardized: bool

    @property
    def n_components(self) -> int:
        return self.loadings.shape[1]

    def reconstruct(self, k: int | None = None) -> np.ndarray:
        """Centered (and scaled, if standardized) matrix rebuilt from the first ``k`` components."""
        k = self.n_components if k is None else k
        return self.raw_scores[:, :k] @ self.loadings[:, :k].T

    def to_dict(self) -> dict:
        return {
            "standardized": self.standardized,
            "origins": list(self.origins),
            "destinations": list(self.destinations),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "loadings": {d: row.tolist() for d, row in zip(self.destinations, self.loadings)},
            "scores": {o: row.tolist() for o, row in zip(self.origins, self.scores)},
        }


def pca_matrix(F, origins=None, destinations=None, standardize: bool = True) -> PcaResult:
    F = np.asarray(F, dtype=float)
    n, m = F.shape
    origins = tuple(origins) if origins is not None else tuple(f"o{i}" for i in range(n))
    destinations = tuple(destinations) if destinations is not None else tuple(f"d{j}" for j in range(m))
    if n < 2 or m < 2:
        raise InsufficientData("PCA needs at least 2 origins and 2 destinations")
    center = F.mean(axis=0)
    Xc = F - center
    scale = np.ones(m)
    if standardize:
        sd = Xc.std(axis=0, ddof=1)
        if np.any(sd == 0):
            bad = [destinations[j] for j in np.flatnonzero(sd == 0)]
            raise ZeroVarianceColumn(f"destination columns with zero variance: {bad}")
        scale = sd
        Xc = Xc / sd
    U, s, Vt = np.linalg.svd(Xc, full_matrices=False)
    k = min(n - 1, m)
    V = Vt[:k].T
    s = s[:k]
    # deterministic sign: largest |loading| positive (first index on ties)
    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[pivot, np.arange(k)] < 0, -1.0, 1.0)
    V = V * signs
    raw = Xc @ V
    var = s ** 2 / (n - 1)
    total = (Xc ** 2).sum() / (n - 1)
    ratio = var / total if total > 0 else np.zeros(k)
    sd_scores = raw.std(axis=0, ddof=1)
    scores = np.zeros_like(raw)
    ok = sd_scores > 1e-12 * max(1.0, np.sqrt(total))
    scores[:, ok] = raw[:, ok] / sd_scores[ok]
    return PcaResult(origins, destinations, V, scores, raw, var, ratio, center, scale, standardize)


def pca_flows(flows: FlowMatrix, city_ids, standardize: bool = True,
              include_diagonal: bool = False) -> PcaResult:
    """PCA of the origin x destination flow matrix; intracity flows zeroed unless requested."""
    ids = list(city_ids)
    F = flows.to_array(ids)
    if not include_diagonal:
        np.fill_diagonal(F, 0.0)
    return pca_matrix(F, ids, ids, standardize)


@dataclass
class SubNetwork:
    component_index: int
    origins: list[str]
    destinations: list[str]
    edges: list[tuple[str, str, float]]
    loading_threshold: float
    score_threshold: float
    signed: bool = False

    def to_dict(self) -> dict:
        return {
            "component_index": self.component_index,
            "loading_threshold": self.loading_threshold,
            "score_threshold": self.score_threshold,
            "signed": self.signed,
            "origins": self.origins,
            "destinations": self.destinations,
            "edges": [{"origin": o, "destination": d, "flow": f} for o, d, f in self.edges],
        }

    def to_dot(self) -> str:
        lines = [f'digraph "PC{self.component_index}" {{']
        for c in sorted(set(self.origins) | set(self.destinations)):
            lines.append(f"  {json.dumps(c)};")
        for o, d, f in self.edges:
            lines.append(f'  {json.dumps(o)} -> {json.dumps(d)} [label="{f:.12g}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_geojson(self, coords: dict[str, tuple[float, float]]) -> dict:
        """LineString per edge; edges touching a city without coordinates are skipped."""
        feats = []
        for o, d, f in self.edges:
            if o in coords and d in coords:
                feats.append({
                    "type": "Feature",
                    "geometry": {"type": "LineString", "coordinates": [list(coords[o]), list(coords[d])]},
                    "properties": {"origin": o, "destination": d, "flow": f,
                                   "component": self.component_index},
                })
        return {"type": "FeatureCollection", "features": feats}


def extract_subnetwork(pca: PcaResult, flows, component: int = 1, loading_threshold: float = 0.3,
                       score_threshold: float = 1.0, signed: bool = False) -> SubNetwork:
    """Origins with strong component scores linked to destinations with strong loadings.

    ``component`` is 1-based. ``flows`` is a FlowMatrix or a dense array
    aligned with ``pca.origins`` x ``pca.destinations``.
    """
    if not 1 <= component <= pca.n_components:
        raise ValueError(f"component must be in 1..{pca.n_components}")
    if isinstance(flows, FlowMatrix):
        F = np.zeros((len(pca.origins), len(pca.destinations)))
        for i, o in enumerate(pca.origins):
            for j, d in enumerate(pca.destinations):
                F[i, j] = flows.entries.get((o, d), 0.0)
    else:
        F = np.asarray(flows, dtype=float)
    load = pca.loadings[:, component - 1]
    score = pca.scores[:, component - 1]
    if not signed:
        load, score = np.abs(load), np.abs(score)
    dest_idx = np.flatnonzero(load > loading_threshold)
    orig_idx = np.flatnonzero(score > score_threshold)
    edges = [(pca.origins[i], pca.destinations[j], float(F[i, j]))
             for i in orig_idx for j in dest_idx
             if F[i, j] > 0 and pca.origins[i] != pca.destinations[j]]
    return SubNetwork(component, [pca.origins[i] for i in orig_idx],
                      [pca.destinations[j] for j in dest_idx], edges,
                      float(loading_threshold), float(score_threshold), signed)
