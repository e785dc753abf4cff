"""Single-market traders: expectations, CARA demand and order generation."""

from __future__ import annotations

import enum
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .assets import INDEX_BASE, CommonValuePath
from .book import Side


class TraderKind(enum.Enum):
    INFORMED = "informed"
    UNINFORMED = "uninformed"
    NOISE = "noise"


class Market(enum.Enum):
    STOCK = "stock"
    FUTURES = "futures"


class DegenerateWeights(ValueError):
    pass


@dataclass(slots=True, eq=False)
class Trader:
    id: int  # ledger account
    kind: TraderKind
    market: Market
    instrument: int
    alpha: float
    tau: int
    mean_interval: float
    a: float = 1.0
    b: float = 1.0
    c: float = 1.0
    initial_cash: int = 0  # cents
    initial_holdings: int = 0
    next_arrival: int = 0
    live_order: int | None = None
    active: bool = True

    def clone(self, new_id: int) -> "Trader":
        return Trader(new_id, self.kind, self.market, self.instrument, self.alpha, self.tau,
                      self.mean_interval, self.a, self.b, self.c, self.initial_cash,
                      self.initial_holdings)


# -- expectations -----------------------------------------------------------

def expected_price_informed_stock(path: CommonValuePath, t: int, tau: int, stock: int) -> float:
    """Perfect foresight of the common value ``tau`` steps ahead (clamped to the run)."""
    return float(path.at(t + tau)[stock])


def expected_price_informed_futures(values_ahead: Sequence[float], shares: Sequence[float],
                                    m0: float, rate: float, expiry_day: int, day: int) -> float:
    index_ahead = sum(v * s for v, s in zip(values_ahead, shares)) / m0 * INDEX_BASE
    return index_ahead * (1.0 + rate) ** (expiry_day - day + 1)


def expected_price_uninformed(value: float, mean_price: float, midpoint: float,
                              a: float, b: float, c: float) -> float:
    w = a + b + c
    if w <= 0:
        raise DegenerateWeights(f"weights sum to {w}")
    return (a * value + b * mean_price + c * midpoint) / w


def expected_price_noise(bid5: float, ask5: float, u: float) -> float:
    return bid5 + u * (ask5 - bid5)


# -- risk and demand --------------------------------------------------------

@dataclass(frozen=True)
class VarianceEstimate:
    variance: float
    mean: float
    raw_variance: float
    n: int


def estimate_variance(prices: Sequence[float], tau: int, floor: float = 1e-8) -> VarianceEstimate | None:
    """Population variance of the last ``tau`` log returns (fewer during warm-up).

    Returns None when fewer than two prices exist.
    """
    if len(prices) < 2:
        return None
    window = list(prices[-(tau + 1):])
    rets = [math.log(window[j] / window[j - 1]) for j in range(1, len(window))]
    m = len(rets)
    mean = sum(rets) / m
    raw = sum((r - mean) ** 2 for r in rets) / m
    return VarianceEstimate(max(raw, floor), mean, raw, m)


def optimal_position(expected: float, price: float, alpha: float, variance: float) -> float:
    """CARA-optimal holding ``ln(p_hat/p) / (alpha V p)``."""
    return math.log(expected / price) / (alpha * variance * price)


def round_to_lot(x: float, lot: int) -> int:
    """Truncate toward zero to a whole number of lots."""
    return int(x / lot) * lot


def next_arrival_time(mean_interval: float, rng: random.Random) -> int:
    return max(1, math.ceil(rng.expovariate(1.0 / mean_interval)))


class PriceHistory:
    """Per-step price series with prefix sums for O(1) window statistics."""

    __slots__ = ("prices", "_cum_p", "_cum_r", "_cum_r2")

    def __init__(self, first: float):
        self.prices = [first]
        self._cum_p = [0.0, first]
        self._cum_r = [0.0]
        self._cum_r2 = [0.0]

    def append(self, price: float) -> None:
        r = math.log(price / self.prices[-1])
        self.prices.append(price)
        self._cum_p.append(self._cum_p[-1] + price)
        self._cum_r.append(self._cum_r[-1] + r)
        self._cum_r2.append(self._cum_r2[-1] + r * r)

    def __len__(self) -> int:
        return len(self.prices)

    @property
    def last(self) -> float:
        return self.prices[-1]

    def mean_price(self, tau: int) -> float:
        n = len(self.prices)
        m = min(tau, n)
        return (self._cum_p[n] - self._cum_p[n - m]) / m

    def variance(self, tau: int, floor: float) -> float | None:
        n = len(self._cum_r) - 1  # number of returns
        if n < 1:
            return None
        m = min(tau, n)
        s1 = self._cum_r[n] - self._cum_r[n - m]
        s2 = self._cum_r2[n] - self._cum_r2[n - m]
        mean = s1 / m
        v = s2 / m - mean * mean
        return v if v > floor else floor


# -- order decision -----------------------------------------------------------

@dataclass(slots=True)
class MarketView:
    """What a trader sees when it arrives.  Prices in currency units."""

    tick: float
    lot: int
    bid5: float
    ask5: float
    midpoint: float
    mean_price: float
    variance: float
    value_now: float
    value_ahead: float
    holdings: int
    cash: float = math.inf  # stock traders' buying power
    max_position: int | None = None  # futures traders' margin cap (contracts)


@dataclass(slots=True, frozen=True)
class Decision:
    side: Side
    price: int  # ticks
    quantity: int
    expected: float
    target: float


def expected_price(trader: Trader, view: MarketView, rng: random.Random) -> float:
    if trader.kind is TraderKind.INFORMED:
        return view.value_ahead
    if trader.kind is TraderKind.UNINFORMED:
        return expected_price_uninformed(view.value_now, view.mean_price, view.midpoint,
                                         trader.a, trader.b, trader.c)
    return expected_price_noise(view.bid5, view.ask5, rng.random())


def make_order_decision(trader: Trader, view: MarketView, rng: random.Random,
                        jitter: float) -> Decision | None:
    """Quote around the expectation and size the order from CARA demand.

    Stock sells are truncated at current holdings; buys at what cash
    affords.  Futures targets are capped at the margin-safety position.
    """
    p_hat = expected_price(trader, view, rng)
    if not p_hat > 0:
        return None
    ticks = max(1, round(p_hat * (1.0 + rng.uniform(-jitter, jitter)) / view.tick))
    price = ticks * view.tick
    target = optimal_position(p_hat, price, trader.alpha, view.variance)
    if view.max_position is not None:
        target = max(-view.max_position, min(view.max_position, target))
    qty = round_to_lot(target - view.holdings, view.lot)
    if qty > 0:
        affordable = round_to_lot(view.cash / price, view.lot) if view.cash != math.inf else qty
        qty = min(qty, affordable)
    elif qty < 0 and trader.market is Market.STOCK:
        qty = max(qty, -view.holdings)
    if qty == 0:
        return None
    side = Side.BUY if qty > 0 else Side.SELL
    return Decision(side, ticks, abs(qty), p_hat, target)


def draw_population(rng: np.random.Generator, n: int, kind: TraderKind, market: Market,
                    alpha_range, tau_range, mean_interval: float) -> list[dict]:
    """Per-agent parameters; weights only matter for uninformed traders."""
    alphas = rng.uniform(alpha_range[0], alpha_range[1], n)
    taus = rng.integers(tau_range[0], tau_range[1] + 1, n)
    weights = rng.uniform(0.0, 1.0, (n, 3))
    out = []
    for i in range(n):
        a, b, c = (float(x) for x in weights[i])
        if a + b + c <= 0:
            a = b = c = 1.0
        out.append(dict(kind=kind, market=market, alpha=float(alphas[i]), tau=int(taus[i]),
                        mean_interval=mean_interval, a=a, b=b, c=c))
    return out
