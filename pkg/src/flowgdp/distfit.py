"""Maximum-likelihood fits of normal, log-normal, gamma and Weibull models with AIC selection.

Normal and log-normal have closed forms. Gamma and Weibull shapes solve a
one-dimensional profile-likelihood equation by Newton's method with a
bracketing safeguard (bisection whenever a Newton step leaves the bracket).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DomainError, Unconverged, ZeroVariance

MODELS = ("normal", "lognormal", "gamma", "weibull")
N_PARAMS = 2
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 500


@dataclass(frozen=True)
class ModelFit:
    name: str
    params: dict[str, float]
    log_likelihood: float

    @property
    def aic(self) -> float:
        return 2 * N_PARAMS - 2 * self.log_likelihood


@dataclass
class DistFitResult:
    fits: dict[str, ModelFit]
    skewness: float
    kurtosis: float
    bootstrap: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))

    @property
    def best_model(self) -> str:
        return min(MODELS, key=lambda m: self.fits[m].aic)

    def to_dict(self) -> dict:
        boot = self.bootstrap
        spread = None
        if boot.size:
            spread = {
                "skewness": {"mean": float(boot[:, 0].mean()), "sd": float(boot[:, 0].std(ddof=1)),
                             "q025": float(np.quantile(boot[:, 0], 0.025)),
                             "q975": float(np.quantile(boot[:, 0], 0.975))},
                "kurtosis": {"mean": float(boot[:, 1].mean()), "sd": float(boot[:, 1].std(ddof=1)),
                             "q025": float(np.quantile(boot[:, 1], 0.025)),
                             "q975": float(np.quantile(boot[:, 1], 0.975))},
            }
        return {
            "models": {m: {"params": self.fits[m].params,
                           "log_likelihood": self.fits[m].log_likelihood,
                           "aic": self.fits[m].aic} for m in MODELS},
            "best_model": self.best_model,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
            "bootstrap_n": int(len(boot)),
            "bootstrap_spread": spread,
        }

    def bootstrap_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["skewness", "kurtosis"])
        for s, k in self.bootstrap:
            w.writerow([f"{s:.12g}", f"{k:.12g}"])
        return buf.getvalue()


def fit_normal(x) -> ModelFit:
    x = np.asarray(x, dtype=float)
    n = x.size
    mu = x.mean()
    sigma = np.sqrt(((x - mu) ** 2).mean())
    if sigma == 0:
        raise ZeroVariance("sample has zero variance; scale MLE undefined")
    ll = -0.5 * n * (np.log(2 * np.pi * sigma ** 2) + 1.0)
    return ModelFit("normal", {"mu": float(mu), "sigma": float(sigma)}, float(ll))


def fit_lognormal(x) -> ModelFit:
    x = np.asarray(x, dtype=float)
    logs = np.log(x)
    base = fit_normal(logs)
    return ModelFit("lognormal", dict(base.params), float(base.log_likelihood - logs.sum()))


def _safeguarded_newton(f, df, lo, hi, x0, what):
    """Root of a decreasing/increasing ``f`` on ``[lo, hi]`` (sign change required)."""
    flo = f(lo)
    x = min(max(x0, lo), hi)
    trace = []
    for it in range(1, NEWTON_MAX_ITER + 1):
        fx = f(x)
        trace.append(x)
        if fx == 0.0:
            return x
        if np.sign(fx) == np.sign(flo):
            lo, flo = x, fx
        else:
            hi = x
        d = df(x)
        step_ok = d != 0 and np.isfinite(d)
        nxt = x - fx / d if step_ok else np.nan
        if not (step_ok and lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= NEWTON_TOL * max(1.0, abs(x)):
            return nxt
        x = nxt
    raise Unconverged(f"{what} shape iteration", NEWTON_MAX_ITER, trace[-20:])


def _bracket(f, lo, hi):
    """Widen ``[lo, hi]`` geometrically until ``f`` changes sign."""
    for _ in range(200):
        if np.sign(f(lo)) != np.sign(f(hi)):
            return lo, hi
        lo, hi = lo / 2.0, hi * 2.0
    raise Unconverged("shape bracketing", 200)


def fit_gamma(x) -> ModelFit:
    """Shape ``a`` solves ``ln a - digamma(a) = ln(mean) - mean(ln x)``; scale = mean / a."""
    x = np.asarray(x, dtype=float)
    n = x.size
    mean = x.mean()
    s = np.log(mean) - np.log(x).mean()
    if s <= 0:
        raise ZeroVariance("sample has zero variance; gamma MLE undefined")
    f = lambda a: np.log(a) - special.digamma(a) - s
    df = lambda a: 1.0 / a - special.polygamma(1, a)
    a0 = mean ** 2 / x.var() if x.var() > 0 else 1.0
    lo, hi = _bracket(f, a0 / 4.0, a0 * 4.0)
    a = _safeguarded_newton(f, df, lo, hi, a0, "gamma")
    scale = mean / a
    ll = ((a - 1) * np.log(x).sum() - x.sum() / scale - n * a * np.log(scale)
          - n * special.gammaln(a))
    return ModelFit("gamma", {"shape": float(a), "scale": float(scale)}, float(ll))


def fit_weibull(x) -> ModelFit:
    """Shape ``k`` solves ``1/k + mean(ln x) - sum(x^k ln x)/sum(x^k) = 0``."""
    x = np.asarray(x, dtype=float)
    n = x.size
    # rescale by the max for numerical stability; shape is scale-free
    m = x.max()
    z = x / m
    lz = np.log(z)
    mlz = lz.mean()
    if np.ptp(z) == 0:
        raise ZeroVariance("sample has zero variance; Weibull MLE undefined")

    def parts(k):
        zk = z ** k
        s0 = zk.sum()
        s1 = (zk * lz).sum()
        s2 = (zk * lz * lz).sum()
        return s0, s1, s2

    def f(k):
        s0, s1, _ = parts(k)
        return 1.0 / k + mlz - s1 / s0

    def df(k):
        s0, s1, s2 = parts(k)
        return -1.0 / k ** 2 - (s2 * s0 - s1 * s1) / s0 ** 2

    cv = x.std() / x.mean()
    k0 = max(cv ** -1.086, 1e-3)
    lo, hi = _bracket(f, k0 / 4.0, k0 * 4.0)
    k = _safeguarded_newton(f, df, lo, hi, k0, "Weibull")
    lam = m * ((z ** k).mean()) ** (1.0 / k)
    lx = np.log(x)
    ll = n * np.log(k) - n * k * np.log(lam) + (k - 1) * lx.sum() - ((x / lam) ** k).sum()
    return ModelFit("weibull", {"shape": float(k), "scale": float(lam)}, float(ll))


def moment_shape(x) -> tuple[float, float]:
    """Sample skewness and (non-excess) kurtosis from central moments."""
    x = np.asarray(x, dtype=float)
    c = x - x.mean()
    m2 = (c ** 2).mean()
    return float((c ** 3).mean() / m2 ** 1.5), float((c ** 4).mean() / m2 ** 2)


def _moment_shape_rows(X):
    c = X - X.mean(axis=1, keepdims=True)
    m2 = (c ** 2).mean(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.column_stack([(c ** 3).mean(axis=1) / m2 ** 1.5, (c ** 4).mean(axis=1) / m2 ** 2])


def fit_distributions(sample, bootstrap_n: int = 1000, seed: int = 0) -> DistFitResult:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 10:
        raise DomainError(f"need at least 10 observations (got {x.size})")
    if np.any(~np.isfinite(x)) or np.any(x <= 0):
        raise DomainError("all sample values must be finite and > 0")
    if np.ptp(x) == 0:
        raise ZeroVariance("sample is constant; scale MLE undefined")
    fits = {f.name: f for f in (fit_normal(x), fit_lognormal(x), fit_gamma(x), fit_weibull(x))}
    skew, kurt = moment_shape(x)
    boot = np.zeros((0, 2))
    if bootstrap_n > 0:
        rng = np.random.default_rng(seed)
        chunks = []
        for start in range(0, bootstrap_n, 100):
            rows = min(100, bootstrap_n - start)
            idx = rng.integers(0, x.size, size=(rows, x.size))
            chunks.append(_moment_shape_rows(x[idx]))
        boot = np.vstack(chunks)
    return DistFitResult(fits, skew, kurt, boot)
