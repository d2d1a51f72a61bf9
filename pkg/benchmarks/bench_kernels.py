"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times LASSO coordinate descent (a 56 x 8 design over a lambda path) and
Brandes betweenness (dense random graphs of 13 and 40 nodes).
"""
import argparse
import timeit

import numpy as np

from flowgdp import _kernels


def lasso_case(mod, X, y, alphas):
    for a in alphas:
        mod.lasso_cd(X, y, a, np.zeros(X.shape[1]), 1e-8, 100_000)


def make_lasso(seed=0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(56, 8))
    X[:, 1] = X[:, 0] + 0.05 * X[:, 1]
    X = (X - X.mean(0)) / X.std(0)
    y = X @ rng.normal(size=8) + 0.1 * rng.normal(size=56)
    y -= y.mean()
    amax = np.abs(X.T @ y).max() / len(y)
    return X, y, amax * np.logspace(-3, 0, 20)


def make_graph(n, seed=0):
    rng = np.random.default_rng(seed)
    L = rng.uniform(1, 100, size=(n, n))
    L = np.minimum(L, L.T)
    np.fill_diagonal(L, np.inf)
    return L


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = _kernels.available_backends()
    X, y, alphas = make_lasso()
    cases = {
        "lasso_cd path (56x8, 20 lambdas)": lambda m: lasso_case(m, X, y, alphas),
        "brandes n=13": lambda m, L=make_graph(13): m.brandes(L, 1e-12),
        "brandes n=40": lambda m, L=make_graph(40): m.brandes(L, 1e-12),
    }
    print(f"selected backend: {_kernels.BACKEND}")
    print(f"{'case':36s}" + "".join(f"{b:>14s}" for b in backends) + ("    speedup" if len(backends) > 1 else ""))
    for name, fn in cases.items():
        times = {}
        for b, mod in backends.items():
            t = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
            times[b] = t
        row = f"{name:36s}" + "".join(f"{times[b] * 1e3:12.2f}ms" for b in backends)
        if "cython" in times:
            row += f"   {times['python'] / times['cython']:7.1f}x"
        print(row)


if __name__ == "__main__":
    main()
