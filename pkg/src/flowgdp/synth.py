"""Synthetic datasets with planted ground truth.

Flows follow the gravity model with per-year distance decay; GDP is an
exact linear function of the eight flow features (plus optional noise).
The returned ``truth`` dictionary is what gets written as ``truth.json``.
"""
from __future__ import annotations

import numpy as np

from .gravity import generate_gravity
from .model import (
    FEATURE_NAMES,
    City,
    DistanceMatrix,
    FeatureTable,
    FlowMatrix,
    GdpRecord,
    RegionDataset,
    VehicleClass,
    extract_features,
)

EARTH_RADIUS_KM = 6371.0088
TRUCK_BETA_OFFSET = -0.15


def haversine_km(lon1, lat1, lon2, lat2):
    lon1, lat1, lon2, lat2 = map(np.radians, (lon1, lat1, lon2, lat2))
    a = (np.sin((lat2 - lat1) / 2) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2)
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(a))


def random_layout(n: int, seed: int, center=(108.9, 34.3), spread_deg: float = 2.5):
    """City coordinates scattered around ``center`` (lon, lat) and their great-circle distances."""
    rng = np.random.default_rng(seed)
    lon = center[0] + rng.uniform(-spread_deg, spread_deg, n)
    lat = center[1] + rng.uniform(-spread_deg, spread_deg, n)
    D = haversine_km(lon[:, None], lat[:, None], lon[None, :], lat[None, :])
    np.fill_diagonal(D, 0.0)
    return lon, lat, D


def ring_distances(n: int, lo_km: float = 10.0, hi_km: float = 1000.0) -> np.ndarray:
    """Circulant distances, log-spaced by ring offset.

    Every row holds the same multiset of distances, so row-level nuisance
    terms are orthogonal to ln(d); the null-model estimator is unbiased on
    this design.
    """
    k = np.arange(n)
    off = np.abs(k[:, None] - k[None, :])
    off = np.minimum(off, n - off)
    levels = np.logspace(np.log10(lo_km), np.log10(hi_km), n // 2)
    D = np.where(off > 0, levels[np.maximum(off - 1, 0)], 0.0)
    return D


def planted_block_matrix(n: int = 20, origins=range(0, 4), destinations=range(10, 15),
                         seed: int = 0, block_level: float = 1000.0):
    """Flow matrix with one dominant origin x destination block.

    Background entries are uniform noise; block-origin rows outside the block
    are set to the column mean of the other rows, which makes every
    background column exactly uncorrelated with block membership.
    """
    rng = np.random.default_rng(seed)
    O, Dd = list(origins), list(destinations)
    rest = [i for i in range(n) if i not in O]
    other = [j for j in range(n) if j not in Dd]
    F = rng.uniform(1.0, 10.0, (n, n))
    F[np.ix_(O, Dd)] = block_level + rng.uniform(0.0, 0.05 * block_level, (len(O), len(Dd)))
    F[np.ix_(O, other)] = F[np.ix_(rest, other)].mean(axis=0)
    return F


def _round_sig(x: float, digits: int = 6) -> float:
    return float(f"{x:.{digits}g}")


def synth_dataset(n_cities: int, years, beta_per_year, seed: int = 0, *,
                  flow_sigma: float = 0.05, gdp_sigma: float = 0.0,
                  truck_beta_offset: float = TRUCK_BETA_OFFSET):
    """Return ``(dataset, truth)``.

    ``beta_per_year`` is the cars & buses decay per year; trucks use
    ``beta + truck_beta_offset``. With ``flow_sigma = 0`` every flow matrix is
    symmetric, so in/out ratios are all 1 and the GDP regression design is
    singular; keep a small flow noise when the regression stage is needed.
    """
    years = [int(y) for y in years]
    betas = [float(b) for b in beta_per_year]
    if n_cities < 4:
        raise ValueError("need at least 4 cities")
    if len(betas) != len(years):
        raise ValueError("beta_per_year must match years")
    rng = np.random.default_rng(seed)
    ids = [f"C{i:02d}" for i in range(n_cities)]
    lon, lat, D = random_layout(n_cities, int(rng.integers(2**31)))
    cities = tuple(City(c, f"City {c}", float(x), float(y)) for c, x, y in zip(ids, lon, lat))
    dist = DistanceMatrix.from_array(ids, D)

    pop = np.exp(rng.normal(5.5, 0.6, n_cities))            # base attraction, cars & buses
    freight = pop * np.exp(rng.normal(0.0, 0.3, n_cities))  # trucks
    growth = 1.0 + rng.uniform(0.02, 0.08, n_cities)
    intra_c = rng.uniform(2.0, 6.0, n_cities)
    intra_k = rng.uniform(0.5, 2.0, n_cities)

    flows = []
    truth_beta = {"carbus": {}, "truck": {}}
    truth_attr = {"carbus": {}, "truck": {}}
    for t, (year, beta) in enumerate(zip(years, betas)):
        for vc, base, b, intra, k in (
            (VehicleClass.CARS_BUSES, pop, beta, intra_c, 1.0),
            (VehicleClass.TRUCKS, freight, beta + truck_beta_offset, intra_k, 0.4),
        ):
            P = base * growth ** t
            fm = generate_gravity(n_cities, P, b, D, flow_sigma, int(rng.integers(2**31)),
                                  city_ids=ids, year=year, vehicle_class=vc, k=k)
            G = fm.to_array(ids)
            np.fill_diagonal(G, intra * P ** 2 * np.exp(rng.normal(0.0, 0.1, n_cities)) / 10.0)
            per_vehicle = 3.2 if vc is VehicleClass.CARS_BUSES else 9.5
            payload = G * per_vehicle * np.exp(rng.normal(0.0, 0.05, G.shape))
            flows.append(FlowMatrix.from_array(year, vc, ids, G, payload))
            X = np.log(P)
            truth_beta[vc.value][str(year)] = b
            truth_attr[vc.value][str(year)] = dict(zip(ids, (X - X.mean()).tolist()))

    proto = RegionDataset(cities, (), dist, tuple(flows))
    table = FeatureTable.concat(extract_features(proto, y) for y in years)
    # planted coefficients: each predictor contributes tens of billions on average
    med = np.median(np.abs(table.values), axis=0)
    coef = np.array([_round_sig(rng.uniform(0.2, 1.0) * 40.0 / m) for m in med])
    intercept = _round_sig(rng.uniform(20.0, 80.0))
    gdp_vals = intercept + table.values @ coef
    if gdp_sigma > 0:
        gdp_vals = gdp_vals + rng.normal(0.0, gdp_sigma, gdp_vals.size)
    gdp = tuple(GdpRecord(c, y, float(v)) for (c, y), v in zip(table.keys, gdp_vals))
    ds = RegionDataset(cities, gdp, dist, tuple(flows))
    truth = {
        "seed": seed,
        "n_cities": n_cities,
        "years": years,
        "flow_sigma": flow_sigma,
        "gdp_sigma": gdp_sigma,
        "beta": truth_beta,
        "attractions": truth_attr,
        "regression": {"intercept": intercept, **dict(zip(FEATURE_NAMES, coef.tolist()))},
    }
    return ds, truth
