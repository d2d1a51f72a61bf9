"""Gravity-model calibration: log-linear dummy regression, MINIMAX LP, and the null model.

Model: ``G_ij = k * P_i * P_j / d_ij**beta`` for ``i != j``, fit in log space
as ``ln G_ij = X_i + X_j - beta * ln d_ij + ln k`` with ``X_i = ln P_i``.
The additive gauge (shift every ``X_i`` by ``c`` and ``ln k`` by ``-2c``) is
fixed by ``sum(X_i) = 0``; ``k_constant`` holds the absorbed ``ln k``.
Directed pairs enter separately; diagonal and zero flows are excluded.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientData, InsufficientVariation, LpFailure, SingularDesign
from .lp import OPTIMAL, solve_lp
from .model import DistanceMatrix, FlowMatrix, VehicleClass
from .regression import _ols_core, _r_squared

LOGLINEAR = "loglinear"
MINIMAX = "minimax"
NULLMODEL = "null"


@dataclass
class GravityFit:
    method: str
    beta: float
    attractions: dict[str, float]
    k_constant: float
    fit_metric: float
    fit_metric_name: str
    excluded_zero_flows: int = 0
    n_pairs: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "beta": float(self.beta),
            "attractions": {c: float(x) for c, x in self.attractions.items()},
            "k_constant": float(self.k_constant),
            "fit_metric": float(self.fit_metric),
            "fit_metric_name": self.fit_metric_name,
            "excluded_zero_flows": int(self.excluded_zero_flows),
            "n_pairs": int(self.n_pairs),
        }


def _pairs(flows: FlowMatrix, distances, city_ids=None):
    """Off-diagonal observations ``(i, j, G_ij, d_ij)`` with ``G_ij > 0``."""
    if city_ids is None:
        city_ids = sorted({o for o, _ in flows.entries} | {d for _, d in flows.entries})
    ids = list(city_ids)
    G = flows.to_array(ids)
    D = distances.to_array(ids) if isinstance(distances, DistanceMatrix) else np.asarray(distances, float)
    n = len(ids)
    oi, dj = np.nonzero(~np.eye(n, dtype=bool))
    g = G[oi, dj]
    d = D[oi, dj]
    used = g > 0
    if np.any(~np.isfinite(d[used])) or np.any(d[used] <= 0):
        raise InsufficientData("every flow pair used in the fit needs a positive distance")
    return ids, oi[used], dj[used], g[used], d[used], int(np.sum(~used))


def _normalise(X, lnk):
    shift = X.mean()
    return X - shift, lnk + 2.0 * shift


def fit_loglinear(flows: FlowMatrix, distances, city_ids=None) -> GravityFit:
    """Least-squares fit of the log gravity model with city dummy variables."""
    ids, oi, dj, g, d, n_zero = _pairs(flows, distances, city_ids)
    n = len(ids)
    if n < 4 or g.size == 0:
        raise InsufficientData(f"log-linear gravity fit needs >= 4 cities with flows (got {n})")
    a = np.log(d)
    if np.ptp(a) == 0:
        raise SingularDesign("all distances are equal; distance decay is unidentifiable", ["beta"])
    # dummies under sum(X)=0: column i is e_i - e_{n-1}
    Z = np.zeros((g.size, n))
    rows = np.arange(g.size)
    np.add.at(Z, (rows, oi), 1.0)
    np.add.at(Z, (rows, dj), 1.0)
    C = Z[:, :-1] - Z[:, -1:]
    design = np.column_stack([C, -a])
    names = [f"X[{c}]" for c in ids[:-1]] + ["beta"]
    y = np.log(g)
    sol, fitted, resid, _ = _ols_core(design, y, names)
    lnk = sol[0]
    free = sol[1:n]
    X = np.append(free, -free.sum())
    beta = sol[n]
    return GravityFit(
        LOGLINEAR, float(beta), dict(zip(ids, X.tolist())), float(lnk),
        _r_squared(y, resid), "r_squared", n_zero, int(g.size),
    )


def minimax_lp(ids, oi, dj, g, d):
    """Build and solve the MINIMAX linear program; returns ``(solution, layout)``.

    Variables: ``X_1..X_n, beta, lnk+, lnk-, D1_p, D2_p (per pair), M``.
    For each pair p=(i,j): ``X_i + X_j - a_p*beta + lnk+ - lnk- - D1_p + D2_p = ln G_p``
    and ``D1_p + D2_p - M <= 0``.
    """
    n = len(ids)
    P = g.size
    a = np.log(d)
    b = np.log(g)
    nv = n + 3 + 2 * P + 1
    iX, iB, iKp, iKm = 0, n, n + 1, n + 2
    iD1 = n + 3
    iD2 = iD1 + P
    iM = iD2 + P
    A_eq = np.zeros((P, nv))
    rows = np.arange(P)
    np.add.at(A_eq, (rows, iX + oi), 1.0)
    np.add.at(A_eq, (rows, iX + dj), 1.0)
    A_eq[:, iB] = -a
    A_eq[:, iKp] = 1.0
    A_eq[:, iKm] = -1.0
    A_eq[rows, iD1 + rows] = -1.0
    A_eq[rows, iD2 + rows] = 1.0
    A_ub = np.zeros((P, nv))
    A_ub[rows, iD1 + rows] = 1.0
    A_ub[rows, iD2 + rows] = 1.0
    A_ub[:, iM] = -1.0
    c = np.zeros(nv)
    c[iM] = 1.0
    names = ([f"X[{c_}]" for c_ in ids] + ["beta", "lnk+", "lnk-"]
             + [f"D1[{ids[i]},{ids[j]}]" for i, j in zip(oi, dj)]
             + [f"D2[{ids[i]},{ids[j]}]" for i, j in zip(oi, dj)] + ["M"])
    sol = solve_lp(c, A_ub=A_ub, b_ub=np.zeros(P), A_eq=A_eq, b_eq=b, names=names)
    layout = dict(X=slice(iX, iX + n), beta=iB, kp=iKp, km=iKm, M=iM)
    return sol, layout


def fit_minimax(flows: FlowMatrix, distances, city_ids=None) -> GravityFit:
    """Minimise the largest absolute log-space deviation by linear programming."""
    ids, oi, dj, g, d, n_zero = _pairs(flows, distances, city_ids)
    n = len(ids)
    if n < 4 or g.size == 0:
        raise InsufficientData(f"MINIMAX gravity fit needs >= 4 cities with flows (got {n})")
    if np.ptp(np.log(d)) == 0:
        raise SingularDesign("all distances are equal; distance decay is unidentifiable", ["beta"])
    sol, lay = minimax_lp(ids, oi, dj, g, d)
    if sol.status != OPTIMAL:
        raise LpFailure(sol.status, f"MINIMAX LP ended with status {sol.status}")
    x = sol.x
    X, lnk = _normalise(x[lay["X"]], x[lay["kp"]] - x[lay["km"]])
    fit = GravityFit(
        MINIMAX, float(x[lay["beta"]]), dict(zip(ids, X.tolist())), float(lnk),
        float(x[lay["M"]]), "max_abs_deviation", n_zero, int(g.size),
    )
    fit.extra["lp_iterations"] = sol.iterations
    return fit


def max_abs_deviation(fit: GravityFit, flows: FlowMatrix, distances, city_ids=None) -> float:
    """Largest ``|X_i + X_j - beta*ln d_ij + ln k - ln G_ij|`` over the fitted pairs."""
    ids, oi, dj, g, d, _ = _pairs(flows, distances, city_ids)
    X = np.array([fit.attractions[c] for c in ids])
    dev = X[oi] + X[dj] - fit.beta * np.log(d) + fit.k_constant - np.log(g)
    return float(np.abs(dev).max())


def fit_nullmodel(flows: FlowMatrix, distances, city_ids=None, mode: str = "loglog") -> GravityFit:
    """Distance decay from the ratio of observed to distance-free expected flow.

    ``G_null = W_i W_j F / N``; ``beta`` is minus the slope of ``ln R`` on
    ``ln d`` (``mode="loglog"``) or of ``R`` on ``d`` (``mode="raw"``).
    """
    if mode not in ("loglog", "raw"):
        raise ValueError("mode must be 'loglog' or 'raw'")
    if city_ids is None:
        city_ids = sorted({o for o, _ in flows.entries} | {d for _, d in flows.entries})
    ids = list(city_ids)
    G = flows.to_array(ids)
    np.fill_diagonal(G, 0.0)
    W = G.sum(axis=1)
    if len(ids) < 3 or np.sum(W > 0) < 3:
        raise InsufficientData("null model needs >= 3 cities with positive total flow")
    F = G.sum()
    WW = np.outer(W, W)
    np.fill_diagonal(WW, 0.0)
    N = WW.sum()
    _, oi, dj, g, d, n_zero = _pairs(flows, distances, ids)
    R = g / (W[oi] * W[dj] * F / N)
    if mode == "loglog":
        xs, ys = np.log(d), np.log(R)
    else:
        xs, ys = d, R
    if np.unique(xs).size < 2:
        raise InsufficientVariation("null-model regression needs at least two distinct distances")
    if np.ptp(ys) <= 1e-12 * max(1.0, np.abs(ys).max()):
        slope, r2 = 0.0, 0.0
    else:
        sol, _, resid, _ = _ols_core(xs[:, None], ys, ["distance"])
        slope, r2 = float(sol[1]), _r_squared(ys, resid)
    return GravityFit(NULLMODEL, -slope, {}, float("nan"), r2, "slope_r_squared",
                      n_zero, int(g.size), extra={"mode": mode})


FITTERS = {LOGLINEAR: fit_loglinear, MINIMAX: fit_minimax, NULLMODEL: fit_nullmodel}


def generate_gravity(n_cities: int, attractions, beta: float, distances, noise_sigma: float = 0.0,
                     seed: int = 0, *, city_ids=None, year: int = 0,
                     vehicle_class=VehicleClass.CARS_BUSES, k: float = 1.0) -> FlowMatrix:
    """Synthetic flows ``k P_i P_j / d_ij**beta * exp(eps_ij)``, ``eps ~ N(0, sigma^2)``; zero diagonal."""
    P = np.asarray(attractions, dtype=float)
    if P.size != n_cities or n_cities < 2:
        raise ValueError("attractions must have n_cities >= 2 entries")
    ids = list(city_ids) if city_ids is not None else [f"c{i}" for i in range(n_cities)]
    D = distances.to_array(ids) if isinstance(distances, DistanceMatrix) else np.asarray(distances, float)
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, noise_sigma, size=(n_cities, n_cities)) if noise_sigma > 0 else 0.0
    off = ~np.eye(n_cities, dtype=bool)
    G = np.zeros((n_cities, n_cities))
    G[off] = (k * np.outer(P, P) * np.exp(eps))[off] / D[off] ** beta
    return FlowMatrix.from_array(year, vehicle_class, ids, G)
