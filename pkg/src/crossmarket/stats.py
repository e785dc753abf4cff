"""Stylized-fact statistics: basis, returns, spreads, ACF, kurtosis,
AR(2)-GARCH(1,1) and GEV maximum likelihood."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal, special


class DegenerateSeries(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


class NonpositivePrice(ValueError):
    pass


class NonConvergence(RuntimeError):
    pass


# -- series -------------------------------------------------------------------

def compute_basis_series(futures: np.ndarray, index: np.ndarray) -> np.ndarray:
    futures = np.asarray(futures, dtype=float)
    index = np.asarray(index, dtype=float)
    if futures.shape != index.shape:
        raise LengthMismatch(f"futures has {futures.shape}, index has {index.shape}")
    return futures - index


def ols_slope(y: np.ndarray, x: np.ndarray | None = None) -> float:
    y = np.asarray(y, dtype=float)
    x = np.arange(len(y), dtype=float) if x is None else np.asarray(x, dtype=float)
    xm = x - x.mean()
    return float(np.dot(xm, y - y.mean()) / np.dot(xm, xm))


def log_return_series(prices: np.ndarray) -> np.ndarray:
    p = np.asarray(prices, dtype=float)
    if np.any(~(p > 0)):
        raise NonpositivePrice("log returns need strictly positive prices")
    return np.diff(np.log(p))


@dataclass(frozen=True)
class SpreadSeries:
    spreads: np.ndarray
    skipped: int


def bidask_spread_series(best_bid: np.ndarray, best_ask: np.ndarray) -> SpreadSeries:
    """Best ask minus best bid; steps with a missing side (NaN) are skipped."""
    bid = np.asarray(best_bid, dtype=float)
    ask = np.asarray(best_ask, dtype=float)
    ok = ~(np.isnan(bid) | np.isnan(ask))
    return SpreadSeries(ask[ok] - bid[ok], int((~ok).sum()))


# -- moments and autocorrelation ----------------------------------------------

@dataclass(frozen=True)
class AcfResult:
    lags: np.ndarray
    values: np.ndarray
    band: float  # 95% white-noise half-width

    def outside_band(self) -> np.ndarray:
        return np.abs(self.values) > self.band


def acf(series: np.ndarray, max_lag: int = 200) -> AcfResult:
    """Sample autocorrelation normalised by the full-sample variance."""
    x = np.asarray(series, dtype=float)
    n = len(x)
    if not 1 <= max_lag < n:
        raise ValueError(f"need 1 <= max_lag < n (got {max_lag}, n={n})")
    xm = x - x.mean()
    denom = float(np.dot(xm, xm))
    if denom <= 0:
        raise DegenerateSeries("zero-variance series has no autocorrelation")
    vals = np.array([np.dot(xm[:n - k], xm[k:]) for k in range(1, max_lag + 1)]) / denom
    return AcfResult(np.arange(1, max_lag + 1), vals, 1.96 / math.sqrt(n))


def excess_kurtosis(series: np.ndarray) -> float:
    x = np.asarray(series, dtype=float)
    if len(x) < 4:
        raise DegenerateSeries("need at least 4 observations")
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 <= 0:
        raise DegenerateSeries("zero-variance series")
    return float(np.mean(d ** 4) / (m2 * m2) - 3.0)


# -- AR(2)-GARCH(1,1) -----------------------------------------------------------

GARCH_PARAMS = ("a", "b", "c", "alpha", "beta")


@dataclass
class GarchFit:
    a: float
    b: float
    c: float
    alpha: float
    beta: float
    stderr: dict[str, float]
    loglik: float
    converged: bool
    n: int
    message: str = ""

    @property
    def params(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in GARCH_PARAMS}

    def tstat(self, name: str) -> float:
        se = self.stderr.get(name, math.nan)
        return getattr(self, name) / se if se > 0 else math.nan


def _garch_residuals(r: np.ndarray, a: float, b: float) -> np.ndarray:
    return r[2:] - a * r[1:-1] - b * r[:-2]


def garch_variance_path(eps: np.ndarray, c: float, alpha: float, beta: float,
                        sigma0: float) -> np.ndarray:
    """sigma2[t] = c + alpha eps[t-1]^2 + beta sigma2[t-1], sigma2[0] = sigma0."""
    x = np.empty_like(eps)
    x[0] = sigma0
    x[1:] = c + alpha * eps[:-1] ** 2
    out = np.empty_like(eps)
    out[0] = sigma0
    if len(eps) > 1:
        out[1:], _ = signal.lfilter([1.0], [1.0, -beta], x[1:], zi=[beta * sigma0])
    return out


def ar2_garch11_loglik(theta: np.ndarray, r: np.ndarray, sigma0: float | None = None) -> float:
    """Gaussian log-likelihood, conditioning on the first two observations."""
    a, b, c, alpha, beta = theta
    eps = _garch_residuals(r, a, b)
    if sigma0 is None:
        sigma0 = float(np.var(eps))
    s2 = garch_variance_path(eps, c, alpha, beta, sigma0)
    if np.any(s2 <= 0) or not np.all(np.isfinite(s2)):
        return -np.inf
    return float(-0.5 * np.sum(np.log(2 * np.pi) + np.log(s2) + eps * eps / s2))


def numerical_hessian(f, x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    k = len(x)
    h = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k); ei[i] = steps[i]
            ej = np.zeros(k); ej[j] = steps[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej))
            h[i, j] = h[j, i] = v / (4 * steps[i] * steps[j])
    return h


def numerical_gradient(f, x: np.ndarray, steps: np.ndarray) -> np.ndarray:
    g = np.zeros(len(x))
    for i in range(len(x)):
        e = np.zeros(len(x)); e[i] = steps[i]
        g[i] = (f(x + e) - f(x - e)) / (2 * steps[i])
    return g


_PERSIST_MAX = 1.0 - 1e-6


def fit_ar2_garch11(returns: np.ndarray, start: tuple[float, float] = (0.1, 0.8)) -> GarchFit:
    """Joint AR(2)-GARCH(1,1) maximum likelihood.

    Works on returns rescaled to unit variance; ``c`` and its standard
    error are mapped back.  Constraints c>0, alpha, beta>=0,
    alpha+beta<1 are enforced by the optimizer.
    """
    r = np.asarray(returns, dtype=float)
    if not np.all(np.isfinite(r)):
        raise ValueError("returns contain non-finite values")
    if len(r) < 10:
        raise DegenerateSeries("too few observations")
    scale = float(np.std(r))
    if scale <= 0:
        raise DegenerateSeries("constant return series")
    z = r / scale

    # AR(2) start by least squares
    X = np.column_stack([z[1:-1], z[:-2]])
    ab, *_ = np.linalg.lstsq(X, z[2:], rcond=None)
    eps0 = z[2:] - X @ ab
    sigma0 = float(np.var(eps0))
    al0, be0 = start
    theta0 = np.array([ab[0], ab[1], sigma0 * (1 - al0 - be0), al0, be0])

    def negll(th):
        ll = ar2_garch11_loglik(th, z, sigma0)
        return -ll / len(z) if np.isfinite(ll) else 1e10

    bounds = [(-0.999, 0.999), (-0.999, 0.999), (1e-10, 10.0), (0.0, 1.0), (0.0, 1.0)]
    cons = [{"type": "ineq", "fun": lambda th: _PERSIST_MAX - th[3] - th[4]}]
    with warnings.catch_warnings():
        # SLSQP clips trial points to the bounds and says so; harmless here
        warnings.filterwarnings("ignore", "Values in x were outside bounds", RuntimeWarning)
        res = optimize.minimize(negll, theta0, method="SLSQP", bounds=bounds, constraints=cons,
                                options={"ftol": 1e-13, "maxiter": 500})
    th = np.array(res.x)
    # constraint clamps so the returned point is exactly feasible
    th[2] = max(th[2], 1e-10)
    th[3] = min(max(th[3], 0.0), 1.0)
    th[4] = min(max(th[4], 0.0), 1.0)
    if th[3] + th[4] >= _PERSIST_MAX:
        th[4] = _PERSIST_MAX - th[3]

    f = lambda x: ar2_garch11_loglik(x, z, sigma0)
    steps = np.maximum(np.abs(th) * 1e-4, 1e-6)
    stderr = {k: math.nan for k in GARCH_PARAMS}
    try:
        H = numerical_hessian(f, th, steps)
        cov = np.linalg.inv(-H)
        diag = np.diag(cov)
        for k, v in zip(GARCH_PARAMS, diag):
            stderr[k] = math.sqrt(v) if v > 0 else math.nan
    except np.linalg.LinAlgError:
        pass
    stderr["c"] *= scale ** 2
    ll = f(th) - (len(z) - 2) * math.log(scale)
    return GarchFit(float(th[0]), float(th[1]), float(th[2] * scale ** 2), float(th[3]),
                    float(th[4]), stderr, float(ll), bool(res.success), len(r), str(res.message))


def simulate_ar2_garch11(n: int, a: float, b: float, c: float, alpha: float, beta: float,
                         rng: np.random.Generator, burn: int = 1000) -> np.ndarray:
    """Reference simulator used by the estimator tests and scripts."""
    m = n + burn
    z = rng.standard_normal(m)
    r = np.zeros(m)
    s2 = c / (1 - alpha - beta)
    e_prev = 0.0
    for t in range(2, m):
        s2 = c + alpha * e_prev * e_prev + beta * s2
        e = math.sqrt(s2) * z[t]
        r[t] = a * r[t - 1] + b * r[t - 2] + e
        e_prev = e
    return r[burn:]


# -- GEV ------------------------------------------------------------------------

@dataclass
class GevFit:
    loc: float
    scale: float
    shape: float  # xi > 0 Frechet, < 0 Weibull-type bounded tail
    loglik: float
    start_loglik: float
    ks: float
    normal_loglik: float
    converged: bool
    method: str = "mle"

    @property
    def beats_normal(self) -> bool:
        return self.loglik > self.normal_loglik


def gev_logpdf(x: np.ndarray, loc: float, scale: float, shape: float) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - loc) / scale
    if abs(shape) < 1e-9:
        return -math.log(scale) - z - np.exp(-z)
    t = 1.0 + shape * z
    out = np.full_like(z, -np.inf)
    ok = t > 0
    lt = np.log(t[ok])
    out[ok] = -math.log(scale) - (1.0 + 1.0 / shape) * lt - np.exp(-lt / shape)
    return out


def gev_cdf(x: np.ndarray, loc: float, scale: float, shape: float) -> np.ndarray:
    z = (np.asarray(x, dtype=float) - loc) / scale
    if abs(shape) < 1e-9:
        return np.exp(-np.exp(-z))
    t = np.maximum(1.0 + shape * z, 0.0)
    with np.errstate(divide="ignore"):
        return np.exp(-t ** (-1.0 / shape))


def gev_pwm(data: np.ndarray) -> tuple[float, float, float]:
    """Probability-weighted-moment estimates (Hosking, Wallis and Wood)."""
    x = np.sort(np.asarray(data, dtype=float))
    n = len(x)
    j = np.arange(n)
    b0 = x.mean()
    b1 = np.sum(j * x) / (n * (n - 1))
    b2 = np.sum(j * (j - 1) * x) / (n * (n - 1) * (n - 2))
    cc = (2 * b1 - b0) / (3 * b2 - b0) - math.log(2) / math.log(3)
    k = 7.8590 * cc + 2.9554 * cc * cc
    if abs(k) < 1e-6:
        scale = (2 * b1 - b0) / math.log(2)
        loc = b0 - 0.5772156649 * scale
        return loc, scale, 0.0
    g = special.gamma(1 + k)
    scale = (2 * b1 - b0) * k / (g * (1 - 2.0 ** (-k)))
    loc = b0 + scale * (g - 1) / k
    return float(loc), float(scale), float(-k)


def normal_loglik(data: np.ndarray) -> float:
    x = np.asarray(data, dtype=float)
    v = np.var(x)
    return float(-0.5 * len(x) * (math.log(2 * math.pi * v) + 1.0))


def fit_gev(data: np.ndarray) -> GevFit:
    """Maximum likelihood over (loc, log scale, shape) from a PWM start."""
    x = np.asarray(data, dtype=float)
    if len(x) < 50:
        raise DegenerateSeries("need at least 50 observations")
    if np.ptp(x) <= 0:
        raise DegenerateSeries("constant data")
    mu, sd = x.mean(), x.std()
    z = (x - mu) / sd

    loc0, scale0, shape0 = gev_pwm(z)
    if not (np.isfinite(loc0) and scale0 > 0 and np.isfinite(shape0)):
        loc0, scale0, shape0 = -0.45, 0.78, 0.0
    # the support must cover every observation at the start point
    if shape0 != 0 and np.any(1 + shape0 * (z - loc0) / scale0 <= 0):
        shape0 = 0.0

    def nll(p):
        s = math.exp(p[1])
        v = gev_logpdf(z, p[0], s, p[2])
        tot = v.sum()
        return -tot if np.isfinite(tot) else 1e300

    p0 = np.array([loc0, math.log(scale0), shape0])
    start = -nll(p0)
    best = optimize.minimize(nll, p0, method="Nelder-Mead",
                             options={"xatol": 1e-9, "fatol": 1e-9, "maxiter": 20000,
                                      "maxfev": 40000})
    pol = optimize.minimize(nll, best.x, method="BFGS", options={"gtol": 1e-8})
    if pol.fun < best.fun:
        best = pol
    converged = bool(best.success) or pol.success
    method = "mle"
    if not best.fun < 1e299:
        method = "pwm"
        best = optimize.OptimizeResult(x=p0, fun=-start)
        converged = False
    loc_z, scale_z, shape = best.x[0], math.exp(best.x[1]), float(best.x[2])
    loc, scale = mu + sd * loc_z, sd * scale_z
    ll = -best.fun - len(x) * math.log(sd)
    start_ll = start - len(x) * math.log(sd)
    xs = np.sort(x)
    cdf = gev_cdf(xs, loc, scale, shape)
    i = np.arange(1, len(xs) + 1)
    ks = float(max(np.max(i / len(xs) - cdf), np.max(cdf - (i - 1) / len(xs))))
    return GevFit(float(loc), float(scale), shape, float(ll), float(start_ll), ks,
                  normal_loglik(x), converged, method)
