"""Positive cash-and-carry arbitrage: long the index basket, short futures."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

from .assets import INDEX_BASE
from .book import Side


class ArbState(enum.Enum):
    FLAT = "flat"
    OPEN = "open"
    CLOSING = "closing"


@dataclass(slots=True, eq=False)
class Arbitrageur:
    id: int
    kappa: float  # required premium, index points
    initial_cash: int = 0  # cents
    state: ArbState = ArbState.FLAT
    contracts: int = 0  # target short size while open
    entry_step: int = -1
    entry_premium: float = 0.0
    entry_wealth: float = 0.0
    active: bool = True

    def clone(self, new_id: int) -> "Arbitrageur":
        return Arbitrageur(new_id, self.kappa, self.initial_cash)


@dataclass(frozen=True)
class OrderRequest:
    """A market order the engine should route: ``instrument`` index, side, quantity."""

    instrument: int
    side: Side
    quantity: int


def basket_shares(n: int, shares: Sequence[float], m0: float, multiplier: int, lot: int) -> list[int]:
    """Shares per stock replicating ``n`` contracts' notional, rounded down to lots.

    With weights proportional to shares outstanding the count is price-free:
    ``n * multiplier * 3000 * S_i / M_0``.
    """
    return [int(n * multiplier * INDEX_BASE * s / m0 // lot) * lot for s in shares]


def size_position(wealth: float, futures_price: float, basket_prices: Sequence[float],
                  shares: Sequence[float], m0: float, margin_rate: float,
                  safety_ratio: float = 0.60, multiplier: int = 300, lot: int = 100,
                  max_contracts: int = 0) -> tuple[int, list[int]]:
    """Largest contract count whose margin respects the safety cap and whose
    margin plus basket cost fits in wealth.  Returns ``(n, basket)``."""
    if wealth <= 0:
        return 0, [0] * len(shares)
    margin = multiplier * futures_price * margin_rate
    n = 0
    best = [0] * len(shares)
    while True:
        cand = n + 1
        if max_contracts and cand > max_contracts:
            break
        if cand * margin > safety_ratio * wealth:
            break
        basket = basket_shares(cand, shares, m0, multiplier, lot)
        cost = sum(q * p for q, p in zip(basket, basket_prices))
        if cand * margin + cost > wealth:
            break
        n, best = cand, basket
    return n, best


@dataclass(frozen=True)
class ArbView:
    futures_price: float
    theoretical: float
    wealth: float  # currency
    futures_position: int
    holdings: Sequence[int]
    stock_prices: Sequence[float]


def evaluate_and_act(arb: Arbitrageur, view: ArbView, step: int, *, shares: Sequence[float],
                     m0: float, margin_rate: float, safety_ratio: float, multiplier: int,
                     lot: int, futures_instrument: int, close_threshold: float = 0.0,
                     max_contracts: int = 0) -> list[OrderRequest]:
    """Decide this step's market orders; mutates ``arb``'s state."""
    premium = view.futures_price - view.theoretical
    pos = view.futures_position
    holdings = view.holdings
    orders: list[OrderRequest] = []

    if arb.state is ArbState.OPEN and pos == 0 and not any(holdings):
        arb.state = ArbState.FLAT

    if arb.state is ArbState.FLAT:
        if premium >= arb.kappa:
            n, basket = size_position(view.wealth, view.futures_price, view.stock_prices, shares,
                                      m0, margin_rate, safety_ratio, multiplier, lot, max_contracts)
            if n > 0:
                arb.state = ArbState.OPEN
                arb.contracts = n
                arb.entry_step = step
                arb.entry_premium = premium
                arb.entry_wealth = view.wealth
                orders.append(OrderRequest(futures_instrument, Side.SELL, n))
                orders.extend(OrderRequest(i, Side.BUY, q) for i, q in enumerate(basket) if q)
        return orders

    if arb.state is ArbState.OPEN and premium <= close_threshold:
        arb.state = ArbState.CLOSING

    if arb.state is ArbState.CLOSING:
        if pos < 0:
            orders.append(OrderRequest(futures_instrument, Side.BUY, -pos))
        orders.extend(OrderRequest(i, Side.SELL, q) for i, q in enumerate(holdings) if q)
        if not orders:
            arb.state = ArbState.FLAT
            arb.contracts = 0
        return orders

    # open: repair hedge residue left by partial fills
    if pos > -arb.contracts:
        orders.append(OrderRequest(futures_instrument, Side.SELL, arb.contracts + pos))
    target = basket_shares(-pos, shares, m0, multiplier, lot) if pos < 0 else [0] * len(holdings)
    for i, (have, want) in enumerate(zip(holdings, target)):
        if want > have:
            orders.append(OrderRequest(i, Side.BUY, want - have))
        elif have > want:
            orders.append(OrderRequest(i, Side.SELL, have - want))
    return orders


def settle_at_expiry(position: int, cost_ticks: int, final_ticks: int, tick_value: int) -> int:
    """Cash delta (cents) from cash-settling a futures position at the final index."""
    return (position * final_ticks - cost_ticks) * tick_value


def expiry_liquidation(holdings: Sequence[int]) -> list[OrderRequest]:
    return [OrderRequest(i, Side.SELL, q) for i, q in enumerate(holdings) if q]
