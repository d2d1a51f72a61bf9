"""Acceptance suite: one pass/fail line per criterion.

Run under pytest (lines are printed even with output capture on) or
directly with ``python tests/test_acceptance.py``.
"""
import itertools
import json
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from flowgdp.distfit import MODELS, fit_distributions, fit_lognormal, fit_normal
from flowgdp.gravity import fit_loglinear, fit_minimax, fit_nullmodel, generate_gravity
from flowgdp.lp import OPTIMAL, solve_lp
from flowgdp.model import FeatureTable, extract_features
from flowgdp.network import FLOW_VOLUME, WeightedGraph, betweenness, closeness, pagerank
from flowgdp.pca import extract_subnetwork, pca_matrix
from flowgdp.regression import (
    DesignMatrix,
    fit_lasso,
    fit_ols,
    fit_ridge,
    lasso_lambda_max,
    vif,
)
from flowgdp.schemas import validate_report
from flowgdp.synth import planted_block_matrix, random_layout, ring_distances, synth_dataset

YEARS = [2014, 2015, 2016, 2017]
BETAS = [2.0, 1.9, 1.8, 1.7]
STAGE_FILES = ("features", "regression", "gravity", "network", "pca", "distfit")


def synth_design(n_cities=14, seed=1, gdp_sigma=0.0):
    ds, truth = synth_dataset(n_cities, YEARS, BETAS, seed, gdp_sigma=gdp_sigma)
    table = FeatureTable.concat(extract_features(ds, y) for y in YEARS)
    gdp = {(g.city, g.year): g.gdp for g in ds.gdp}
    return DesignMatrix.from_features(table, gdp), truth


def exact_normal_equations(X, y):
    """OLS with intercept solved in rational arithmetic."""
    A = [[Fraction(1)] + [Fraction(v) for v in row] for row in X.tolist()]
    b = [Fraction(v) for v in y.tolist()]
    p = len(A[0])
    M = [[sum(r[i] * r[j] for r in A) for j in range(p)] for i in range(p)]
    v = [sum(r[i] * bk for r, bk in zip(A, b)) for i in range(p)]
    for c in range(p):
        piv = next(r for r in range(c, p) if M[r][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        v[c], v[piv] = v[piv], v[c]
        for r in range(p):
            if r != c and M[r][c] != 0:
                f = M[r][c] / M[c][c]
                M[r] = [a - f * bb for a, bb in zip(M[r], M[c])]
                v[r] -= f * v[c]
    return np.array([float(v[i] / M[i][i]) for i in range(p)])


# --- criteria -----------------------------------------------------------------


def criterion_1():
    t0 = time.perf_counter()
    D, truth = synth_design()
    rep = fit_ols(D)
    want = np.array([truth["regression"][c] for c in D.columns])
    err0 = max(abs(rep.intercept - truth["regression"]["intercept"]), np.abs(rep.coef - want).max())
    Dn, _ = synth_design(gdp_sigma=5.0)
    noisy = fit_ols(Dn)
    oracle = exact_normal_equations(Dn.X, Dn.y)
    got = np.r_[noisy.intercept, noisy.coef]
    err1 = float(np.max(np.abs(got - oracle) / np.maximum(1.0, np.abs(oracle))))
    dt = time.perf_counter() - t0
    ok = D.X.shape == (56, 8) and err0 <= 1e-8 and err1 <= 1e-10 and dt < 1.0
    return ok, f"56x8 planted max err {err0:.2e} (<=1e-8); noisy vs exact normal eqs {err1:.2e} (<=1e-10); {dt:.2f}s (<1s)"


def criterion_2():
    t0 = time.perf_counter()
    D, _ = synth_design(seed=2, gdp_sigma=5.0)
    ridge0 = float(np.max(np.abs(fit_ridge(D, 0.0).coef - fit_ols(D).coef)))
    lmax = lasso_lambda_max(D)
    zero = all(np.all(fit_lasso(D, lam).coef == 0.0) for lam in (lmax, 1.5 * lmax, 10 * lmax))
    sd = D.X.std(axis=0)
    grid = np.r_[0.0, np.logspace(-3, 3, 19) * D.n_obs]
    norms = np.array([np.linalg.norm(fit_ridge(D, lam).coef * sd) for lam in grid])
    ridge_mono = bool(np.all(np.diff(norms) <= 1e-12 * norms[0]))
    worst_rise = 0.0
    for frac in (0.5, 0.1, 0.01, 0.001):
        tr = np.array(fit_lasso(D, frac * lmax).objective_trace)
        worst_rise = max(worst_rise, float(np.max(np.diff(tr) / tr[:-1], initial=0.0)))
    lasso_mono = worst_rise <= 1e-12
    dt = time.perf_counter() - t0
    ok = ridge0 <= 1e-10 and zero and ridge_mono and lasso_mono and dt < 5.0
    return ok, (f"ridge(0)-ols {ridge0:.1e}; lasso zero at >=lmax {zero}; ridge norm monotone over "
                f"{len(grid)} pts {ridge_mono}; lasso worst relative rise per sweep {worst_rise:.1e} "
                f"(<=1e-12); {dt:.2f}s (<5s)")


def criterion_3():
    D, _ = synth_design(seed=3, gdp_sigma=5.0)
    v = vif(D)
    worst = 0.0
    for k in range(D.n_predictors):
        others = [j for j in range(D.n_predictors) if j != k]
        aux = DesignMatrix(D.X[:, others], D.X[:, k], [D.columns[j] for j in others])
        ref = 1.0 / (1.0 - fit_ols(aux).r_squared)
        worst = max(worst, abs(v[k] - ref) / ref)
    H = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], float)
    Xo = np.vstack([H[:, 1:]] * 3)
    vo = vif(DesignMatrix(Xo, np.zeros(12), ["a", "b", "c"]))
    orth = float(np.max(np.abs(vo - 1.0)))
    return worst <= 1e-9 and orth <= 1e-10, f"VIF vs auxiliary fits rel err {worst:.1e} (<=1e-9); orthogonal |VIF-1| {orth:.1e} (<=1e-10)"


def criterion_4():
    t0 = time.perf_counter()
    n = 10
    ids = [f"c{i}" for i in range(n)]
    worst_b, worst_x = 0.0, 0.0
    for beta in (0.85, 1.03, 1.11, 2.0):
        rng = np.random.default_rng(int(beta * 100))
        _, _, D = random_layout(n, int(beta * 100))
        P = np.exp(rng.normal(4.0, 0.7, n))
        X = np.log(P) - np.log(P).mean()
        fm = generate_gravity(n, P, beta, D, city_ids=ids)
        for fit in (fit_loglinear, fit_minimax):
            res = fit(fm, D, ids)
            worst_b = max(worst_b, abs(res.beta - beta))
            worst_x = max(worst_x, float(np.max(np.abs([res.attractions[c] - x for c, x in zip(ids, X)]))))
    Dr = ring_distances(n)
    worst_null = 0.0
    for beta in (0.85, 1.03, 1.11, 2.0):
        for seed in range(100):
            rng = np.random.default_rng(seed)
            P = np.exp(rng.normal(4.0, 0.7, n))
            fm = generate_gravity(n, P, beta, Dr, noise_sigma=0.1, seed=seed, city_ids=ids)
            worst_null = max(worst_null, abs(fit_nullmodel(fm, Dr, ids).beta - beta))
    dt = time.perf_counter() - t0
    ok = worst_b <= 1e-6 and worst_x <= 1e-6 and worst_null <= 0.2 and dt < 30.0
    return ok, (f"loglinear/minimax beta err {worst_b:.1e}, attraction err {worst_x:.1e} (<=1e-6); "
                f"null model worst |beta err| over 4x100 seeds {worst_null:.3f} (<=0.2); {dt:.1f}s (<30s)")


def criterion_5():
    t0 = time.perf_counter()
    ds, _ = synth_dataset(10, YEARS, BETAS, seed=5, flow_sigma=0.0)
    ok = True
    parts = []
    for fit in (fit_loglinear, fit_minimax, fit_nullmodel):
        for vc in ("carbus", "truck"):
            b = [fit(ds.flow(y, vc), ds.distances, ds.city_ids).beta for y in YEARS]
            dec = bool(np.all(np.diff(b) < 0))
            ok &= dec
            if vc == "carbus":
                parts.append(f"{fit.__name__[4:]}=" + "/".join(f"{x:.3f}" for x in b))
    dt = time.perf_counter() - t0
    return ok and dt < 10.0, f"strictly decreasing for all estimators and classes: {ok}; carbus {'; '.join(parts)}; {dt:.2f}s (<10s)"


def vertex_enumeration(c, A, b):
    n = len(c)
    G = np.vstack([A, -np.eye(n)])
    h = np.r_[b, np.zeros(n)]
    combos = np.array(list(itertools.combinations(range(len(h)), n)))
    M = G[combos]
    rhs = h[combos]
    good = np.abs(np.linalg.det(M)) > 1e-10
    x = np.linalg.solve(M[good], rhs[good][..., None])[..., 0]
    feas = np.all(x @ G.T <= h + 1e-9, axis=1)
    return float(np.min(x[feas] @ c))


def criterion_6():
    rng = np.random.default_rng(6)
    worst = 0.0
    solved = 0
    for _ in range(20):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(2, 6))
        A = rng.normal(size=(m, n))
        A[0] = rng.uniform(0.5, 1.5, n)  # bounds the feasible region
        x0 = rng.uniform(0, 1, n)
        b = A @ x0 + rng.uniform(0, 1, m)
        c = rng.normal(size=n)
        sol = solve_lp(c, A_ub=A, b_ub=b)
        if sol.status == OPTIMAL:
            solved += 1
            worst = max(worst, abs(sol.objective - vertex_enumeration(c, A, b)))
    beale = solve_lp([-0.75, 20, -0.5, 6],
                     A_ub=[[0.25, -8, -1, 9], [0.5, -12, -0.5, 3], [0, 0, 1, 0]], b_ub=[0, 0, 1])
    beale_ok = beale.status == OPTIMAL and abs(beale.objective + 1.25) <= 1e-12
    ok = solved == 20 and worst <= 1e-8 and beale_ok
    return ok, f"{solved}/20 optimal, max |obj - vertex oracle| {worst:.1e} (<=1e-8); Beale optimal at -1.25: {beale_ok}"


def _floyd(L):
    D = L.copy()
    np.fill_diagonal(D, 0.0)
    for k in range(len(D)):
        D = np.minimum(D, D[:, k:k + 1] + D[k:k + 1, :])
    return D


def _bc_oracle(L):
    n = len(L)
    bc = np.zeros(n)

    def paths(s, t):
        out = []

        def walk(p, length):
            if p[-1] == t:
                out.append((p, length))
                return
            for v in range(n):
                if v not in p and np.isfinite(L[p[-1], v]):
                    walk(p + [v], length + L[p[-1], v])

        walk([s], 0.0)
        return out

    for s, t in itertools.combinations(range(n), 2):
        ps = paths(s, t)
        if ps:
            best = min(p[1] for p in ps)
            short = [p for p, length in ps if length <= best * (1 + 1e-12)]
            for p in short:
                for v in p[1:-1]:
                    bc[v] += 1.0 / len(short)
    return bc


def criterion_7():
    rng = np.random.default_rng(7)
    worst_b = worst_c = 0.0
    for _ in range(10):
        W = np.triu(rng.integers(1, 5, size=(7, 7)).astype(float), 1)
        W[np.triu(rng.random((7, 7)) < 0.35, 1)] = 0.0
        W[0, 1:] = np.where(W[0, 1:] == 0, 6.0, W[0, 1:])  # keep it connected
        W = W + W.T
        g = WeightedGraph(tuple(f"v{i}" for i in range(7)), W)
        L = g.lengths()
        worst_b = max(worst_b, float(np.max(np.abs(np.array(list(betweenness(g).values())) - _bc_oracle(L)))))
        worst_c = max(worst_c, float(np.max(np.abs(np.array(list(closeness(g).values())) - 1 / _floyd(L).sum(1)))))
    Wf = rng.uniform(0, 10, (8, 8))
    np.fill_diagonal(Wf, 0)
    gf = WeightedGraph(tuple(f"v{i}" for i in range(8)), Wf, FLOW_VOLUME, True)
    pr = np.array(list(pagerank(gf).values()))
    total = abs(pr.sum() - 1.0)
    K = np.ones((6, 6))
    np.fill_diagonal(K, 0)
    pk = np.array(list(pagerank(WeightedGraph(tuple("abcdef"), 3.0 * K, FLOW_VOLUME, True)).values()))
    uniform = float(np.max(np.abs(pk - 1 / 6)))
    scaled = float(np.max(np.abs(np.array(list(pagerank(gf.scaled(1234.5)).values())) - pr)))
    ok = worst_b <= 1e-10 and worst_c <= 1e-10 and total <= 1e-9 and uniform <= 1e-9 and scaled <= 1e-12
    return ok, (f"betweenness err {worst_b:.1e}, closeness err {worst_c:.1e} (<=1e-10); PageRank |sum-1| "
                f"{total:.1e} (<=1e-9), complete-graph |pr-1/n| {uniform:.1e}, scaling drift {scaled:.1e} (<=1e-12)")


def criterion_8():
    rng = np.random.default_rng(8)
    F = rng.gamma(2.0, 100.0, size=(13, 13))
    res = pca_matrix(F)
    V = res.loadings
    ortho = float(np.max(np.abs(V.T @ V - np.eye(V.shape[1]))))
    Z = (F - F.mean(0)) / F.std(0, ddof=1)
    recon = float(np.max(np.abs(res.reconstruct() - Z)))
    a, b = rng.uniform(1, 10, 9), rng.uniform(1, 10, 9)
    rank1 = abs(pca_matrix(np.outer(a, b)).explained_variance_ratio[0] - 1.0)
    ids = [f"c{i:02d}" for i in range(20)]
    B = planted_block_matrix(20, range(4), range(10, 15), seed=8)
    sub = extract_subnetwork(pca_matrix(B, ids, ids), B, 1, 0.3, 1.0)
    block = sub.origins == ids[:4] and sub.destinations == ids[10:15] and len(sub.edges) == 20
    ok = ortho <= 1e-9 and recon <= 1e-9 and rank1 <= 1e-9 and block
    return ok, (f"orthonormality {ortho:.1e}, reconstruction {recon:.1e}, rank-1 PC1 ratio err {rank1:.1e} "
                f"(<=1e-9); planted 4x5 block recovered exactly: {block}")


def criterion_9():
    t0 = time.perf_counter()
    x = np.random.default_rng(9).lognormal(1.5, 0.7, 10_000)
    res = fit_distributions(x, bootstrap_n=1000, seed=9)
    dt = time.perf_counter() - t0
    aic_exact = all(res.fits[m].aic == 2 * 2 - 2 * res.fits[m].log_likelihood for m in MODELS)
    ln, nl = fit_lognormal(x), fit_normal(np.log(x))
    ident = max(abs(ln.params[k] - nl.params[k]) for k in ("mu", "sigma"))
    ok = res.best_model == "lognormal" and aic_exact and ident <= 1e-12 and dt < 10.0 and len(res.bootstrap) == 1000
    return ok, (f"best model {res.best_model}; AIC identity exact {aic_exact}; lognormal vs normal-of-logs "
                f"{ident:.1e} (<=1e-12); {dt:.2f}s with 1000 bootstraps (<10s)")


def _cli(*args):
    return subprocess.run([sys.executable, "-m", "flowgdp", *args], capture_output=True, text=True)


def criterion_10(tmp: Path):
    t0 = time.perf_counter()
    runs = []
    for tag in ("a", "b"):
        data, out = tmp / f"data_{tag}", tmp / f"out_{tag}"
        s = _cli("synth", "--out", str(data), "--seed", "10", "--n-cities", "13",
                 "--years", *map(str, YEARS), "--gdp-sigma", "0")
        t1 = time.perf_counter()
        r = _cli("run", "--data", str(data), "--out", str(out), "--seed", "10")
        runs.append((s.returncode, r.returncode, time.perf_counter() - t1, data, out, r.stderr))
    dt_run = max(r[2] for r in runs)
    codes_ok = all(r[0] == 0 and r[1] == 0 for r in runs)
    if not codes_ok:
        return False, f"exit codes {[(r[0], r[1]) for r in runs]}: {runs[0][5][-300:]}"
    out = runs[0][4]
    truth = json.loads((runs[0][3] / "truth.json").read_text())["regression"]
    coefs = json.loads((out / "regression.json").read_text())["fits"]["ols"]["coefficients"]
    err = max(abs(coefs[k] - v) for k, v in truth.items())
    schema_ok = True
    for stage in STAGE_FILES:
        try:
            validate_report(stage, json.loads((out / f"{stage}.json").read_text()))
        except Exception:
            schema_ok = False
    files_a = sorted(p.name for p in runs[0][4].iterdir())
    files_b = sorted(p.name for p in runs[1][4].iterdir())
    same = files_a == files_b and all(
        (runs[0][4] / f).read_bytes() == (runs[1][4] / f).read_bytes() for f in files_a)
    same_data = all((runs[0][3] / f).read_bytes() == (runs[1][3] / f).read_bytes()
                    for f in ("cities.csv", "flows.csv", "distances.csv", "gdp.csv", "truth.json"))
    dt = time.perf_counter() - t0
    ok = dt_run < 60.0 and err <= 1e-8 and schema_ok and same and same_data
    return ok, (f"run {dt_run:.1f}s (<60s); OLS vs truth max err {err:.1e} (<=1e-8); six reports schema-valid "
                f"{schema_ok}; re-run byte-identical {same and same_data} ({len(files_a)} files); total {dt:.1f}s")


CRITERIA = [
    (1, "OLS planted recovery", criterion_1),
    (2, "Regularization laws", criterion_2),
    (3, "VIF consistency", criterion_3),
    (4, "Gravity round trip", criterion_4),
    (5, "Monotone beta trend", criterion_5),
    (6, "LP correctness", criterion_6),
    (7, "Network oracles", criterion_7),
    (8, "PCA", criterion_8),
    (9, "Distribution fitting", criterion_9),
    (10, "End-to-end", criterion_10),
]


def _line(num, name, ok, detail):
    return f"criterion {num:2d} [{'PASS' if ok else 'FAIL'}] {name}: {detail}"


@pytest.mark.parametrize("num,name,check", CRITERIA, ids=[f"c{c[0]}" for c in CRITERIA])
def test_criterion(num, name, check, tmp_path, capsys):
    ok, detail = check(tmp_path) if num == 10 else check()
    with capsys.disabled():
        print("\n" + _line(num, name, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    import tempfile

    failed = 0
    for num, name, check in CRITERIA:
        if num == 10:
            with tempfile.TemporaryDirectory() as d:
                ok, detail = check(Path(d))
        else:
            ok, detail = check()
        failed += not ok
        print(_line(num, name, ok, detail), flush=True)
    sys.exit(1 if failed else 0)
