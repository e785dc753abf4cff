"""Exogenous fundamentals: stock common values, the composite index and the
futures theoretical value."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import StocksConfig

INDEX_BASE = 3000.0


@dataclass(frozen=True)
class StockSpec:
    initial_value: float
    sigma: float
    shares: float
    drift: float = 0.0

    def __post_init__(self) -> None:
        if self.initial_value <= 0 or self.shares <= 0 or self.sigma < 0:
            raise ValueError(f"bad stock spec {self}")


def stock_specs(cfg: StocksConfig) -> list[StockSpec]:
    return [StockSpec(v, s, n, d) for v, s, n, d in
            zip(cfg.initial_value, cfg.sigma, cfg.shares, cfg.drift)]


@dataclass(frozen=True)
class CommonValuePath:
    """``values[t, i]`` is stock i's common value at step t (row 0 = initial)."""

    values: np.ndarray
    shocks: np.ndarray

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    def at(self, t: int) -> np.ndarray:
        return self.values[min(max(t, 0), self.n_steps)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "stock", "value"])
            for t, row in enumerate(self.values):
                for i, v in enumerate(row):
                    w.writerow([t, i, repr(float(v))])


def evolve_common_value(v: float, drift: float, sigma: float, eps: float) -> float:
    return (1.0 + drift + sigma * eps) * v


def generate_common_values(specs: Sequence[StockSpec], n_steps: int,
                           rng: np.random.Generator, common_shock: bool = False) -> CommonValuePath:
    """Multiplicative random walk for every stock, generated up front.

    Shocks that would make a growth factor non-positive are redrawn.
    """
    k = len(specs)
    width = 1 if common_shock else k
    eps = rng.standard_normal((n_steps, width))
    sigma = np.array([s.sigma for s in specs])
    drift = np.array([s.drift for s in specs])
    while True:
        growth = 1.0 + drift + sigma * eps
        bad = np.any(growth <= 0.0, axis=1)
        if not bad.any():
            break
        eps[bad] = rng.standard_normal((int(bad.sum()), width))
    values = np.empty((n_steps + 1, k))
    values[0] = [s.initial_value for s in specs]
    values[1:] = values[0] * np.cumprod(growth, axis=0)
    if common_shock:
        eps = np.repeat(eps, k, axis=1)
    return CommonValuePath(values, eps)


def base_market_value(specs: Iterable[StockSpec]) -> float:
    return sum(s.initial_value * s.shares for s in specs)


def compute_index(prices: Sequence[float], shares: Sequence[float], m0: float) -> float:
    if any(p <= 0 for p in prices):
        raise ValueError("index prices must be positive")
    mt = sum(p * s for p, s in zip(prices, shares))
    return mt / m0 * INDEX_BASE


def futures_common_value(index: float, rate: float, expiry_day: int, day: int) -> float:
    """Theoretical futures value ``I (1+r)^(T-d+1)`` with ``r`` per trading day."""
    if not 1 <= day <= expiry_day:
        raise ValueError(f"listed day {day} outside 1..{expiry_day}")
    return index * (1.0 + rate) ** (expiry_day - day + 1)


def period_transaction_price(trade_prices: Sequence[float], previous_price: float) -> float:
    """Mean of the step's trade prices, or the previous price when nothing traded."""
    if not trade_prices:
        return previous_price
    return sum(trade_prices) / len(trade_prices)
