"""Raw-return ACF against the iid band and a heteroskedasticity-robust band.

The iid band 1.96/sqrt(n) assumes independent returns.  Under volatility
clustering the sampling s.d. of acf(k) is closer to

    sqrt(sum_t x_t^2 x_{t-k}^2) / sum_t x_t^2,

so a series can be uncorrelated yet fall outside the iid band at many lags.

    python scripts/acf_band.py RUN_DIR [RUN_DIR ...]
"""

import argparse

import numpy as np

from crossmarket import stats
from crossmarket.report import load_input


def robust_se(r: np.ndarray, lags: int) -> np.ndarray:
    x = r - r.mean()
    den = np.dot(x, x)
    return np.array([np.sqrt(np.sum(x[k:] ** 2 * x[:-k] ** 2)) / den for k in range(1, lags + 1)])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("runs", nargs="+", help="run directories or price CSVs")
    ap.add_argument("--lags", type=int, default=50)
    args = ap.parse_args()
    for path in args.runs:
        r = stats.log_return_series(load_input(path).futures)
        a = stats.acf(r, args.lags)
        se = robust_se(r, args.lags)
        sl = slice(10, args.lags)
        print(f"{path}: n={len(r)} iid band {a.band:.4f}")
        print(f"  lags 11-{args.lags} inside iid band    {np.mean(np.abs(a.values[sl]) <= a.band):.3f}")
        print(f"  lags 11-{args.lags} inside robust band {np.mean(np.abs(a.values[sl]) <= 1.96 * se[sl]):.3f}")
        print(f"  robust/iid band width ratio      {np.mean(1.96 * se[sl] / a.band):.2f}")
        print(f"  mean acf over lags 11-{args.lags}       {a.values[sl].mean():+.4f}")


if __name__ == "__main__":
    main()
