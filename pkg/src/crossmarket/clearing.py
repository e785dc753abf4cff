"""Cash/position accounting, daily futures mark-to-market, forced liquidation
and bankruptcy checks.

All money is held in integer cents and futures P&L in integer ticks, so
conservation laws hold exactly.  ``Ledger`` is the vectorised store the
engine uses; ``MarginAccount``/``PortfolioState`` and the free functions are
the per-account reference implementation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .book import Side, Trade

STOCK_TRADER, FUTURES_TRADER, ARBITRAGEUR = 0, 1, 2


@dataclass
class MarginAccount:
    owner: int
    position: int = 0
    cost_ticks: int = 0  # sum of signed qty * price since last settlement
    balance: int = 0  # cents
    flagged: bool = False

    def unrealized(self, mark_ticks: int, tick_value: int) -> int:
        return (self.position * mark_ticks - self.cost_ticks) * tick_value

    def equity(self, mark_ticks: int, tick_value: int) -> int:
        return self.balance + self.unrealized(mark_ticks, tick_value)

    def trade(self, qty: int, price_ticks: int) -> None:
        """Signed ``qty``: positive buys, negative sells."""
        self.position += qty
        self.cost_ticks += qty * price_ticks


def maintenance_requirement(position: int, price_ticks: float, tick_value: int,
                            margin_rate: float) -> float:
    return abs(position) * price_ticks * tick_value * margin_rate


def daily_settlement(accounts: Iterable[MarginAccount], settlement_ticks: int, tick_value: int,
                     margin_rate: float) -> list[int]:
    """Credit each account's variation margin; flag those below maintenance."""
    deltas = []
    for acct in accounts:
        pnl = (acct.position * settlement_ticks - acct.cost_ticks) * tick_value
        acct.balance += pnl
        acct.cost_ticks = acct.position * settlement_ticks
        req = maintenance_requirement(acct.position, settlement_ticks, tick_value, margin_rate)
        acct.flagged = acct.position != 0 and acct.balance < req
        deltas.append(pnl)
    return deltas


def forced_liquidation_scan(accounts: Iterable[MarginAccount], mark_ticks: int, tick_value: int,
                            margin_rate: float) -> list[tuple[int, Side, int]]:
    """One-contract closing market orders for each flagged, still-deficient account."""
    orders = []
    for acct in accounts:
        if not acct.flagged:
            continue
        req = maintenance_requirement(acct.position, mark_ticks, tick_value, margin_rate)
        if acct.position == 0 or acct.equity(mark_ticks, tick_value) >= req:
            acct.flagged = False
            continue
        orders.append((acct.owner, Side.BUY if acct.position < 0 else Side.SELL, 1))
    return orders


@dataclass
class PortfolioState:
    owner: int
    cash: int  # cents
    holdings: list[int] = field(default_factory=list)


def update_wealth(portfolio: PortfolioState, last_prices_cents: Sequence[float],
                  account: MarginAccount | None = None, mark_ticks: int = 0,
                  tick_value: int = 0) -> float:
    """Cash + stock value at last prices + futures equity beyond the cash balance."""
    stock_value = sum(h * p for h, p in zip(portfolio.holdings, last_prices_cents))
    fut = account.unrealized(mark_ticks, tick_value) if account is not None else 0
    return portfolio.cash + stock_value + fut


def is_bankrupt(wealth: float, threshold: float) -> bool:
    """Strict inequality: wealth exactly at the threshold survives."""
    return wealth < threshold


class Ledger:
    """Columnar account store.  One row per account, including retired ones.

    Futures balances live in ``cash`` (one cash account per agent), so a
    futures trader's equity is ``cash + unrealized``.
    """

    def __init__(self, n_stocks: int, stock_tick_cents: Sequence[int], futures_tick_value: int,
                 margin_rate: float, capacity: int = 1024):
        self.k = n_stocks
        self.stock_tick_cents = np.asarray(stock_tick_cents, dtype=np.int64)
        self.tick_value = int(futures_tick_value)
        self.margin_rate = margin_rate
        self.n = 0
        self._alloc(capacity)
        self.shares_placed = np.zeros(n_stocks, dtype=np.int64)

    def _alloc(self, cap: int) -> None:
        old = self.n
        def grow(arr, shape, dtype):
            new = np.zeros(shape, dtype=dtype)
            if arr is not None:
                new[:old] = arr[:old]
            return new
        g = lambda name: getattr(self, name, None)
        self.cash = grow(g("cash"), cap, np.int64)
        self.stock = grow(g("stock"), (cap, self.k), np.int64)
        self.fpos = grow(g("fpos"), cap, np.int64)
        self.fcost = grow(g("fcost"), cap, np.int64)
        self.kind = grow(g("kind"), cap, np.int8)
        self.instrument = grow(g("instrument"), cap, np.int16)
        self.active = grow(g("active"), cap, bool)
        self.flagged = grow(g("flagged"), cap, bool)
        self.cap = cap

    def open_account(self, kind: int, instrument: int, cash_cents: int,
                     holdings: Sequence[int] | None = None) -> int:
        if self.n == self.cap:
            self._alloc(self.cap * 2)
        i = self.n
        self.n += 1
        self.cash[i] = cash_cents
        self.kind[i] = kind
        self.instrument[i] = instrument
        self.active[i] = True
        if holdings is not None:
            self.stock[i] = holdings
            self.shares_placed += np.asarray(holdings, dtype=np.int64)
        return i

    def retire(self, i: int) -> None:
        """Agent leaves the market; its positions stay on the books, frozen."""
        self.active[i] = False
        self.flagged[i] = False

    def apply(self, trade: Trade) -> None:
        b, s, q, p = trade.buyer, trade.seller, trade.quantity, trade.price
        inst = trade.instrument
        if inst < self.k:
            value = p * q * int(self.stock_tick_cents[inst])
            self.cash[b] -= value
            self.cash[s] += value
            self.stock[b, inst] += q
            self.stock[s, inst] -= q
        else:
            self.fpos[b] += q
            self.fcost[b] += q * p
            self.fpos[s] -= q
            self.fcost[s] -= q * p

    # -- valuation ---------------------------------------------------------
    def stock_value(self, prices_cents: np.ndarray) -> np.ndarray:
        return self.stock[: self.n] @ prices_cents

    def unrealized(self, mark_ticks: float) -> np.ndarray:
        n = self.n
        return (self.fpos[:n] * mark_ticks - self.fcost[:n]) * self.tick_value

    def wealth(self, prices_cents: np.ndarray, mark_ticks: float) -> np.ndarray:
        return self.cash[: self.n] + self.stock_value(prices_cents) + self.unrealized(mark_ticks)

    def wealth_of(self, i: int, prices_cents: Sequence[float], mark_ticks: float) -> float:
        w = float(self.cash[i]) + float(np.dot(self.stock[i], prices_cents))
        return w + (float(self.fpos[i]) * mark_ticks - float(self.fcost[i])) * self.tick_value

    def requirement(self, mark_ticks: float) -> np.ndarray:
        return np.abs(self.fpos[: self.n]) * mark_ticks * self.tick_value * self.margin_rate

    # -- day boundary -----------------------------------------------------
    def settle(self, settlement_ticks: int, equity_extra: np.ndarray | None = None) -> np.ndarray:
        """Mark every account to ``settlement_ticks``; flag active deficient accounts.

        ``equity_extra`` (cents) adds non-futures wealth to the equity test;
        arbitrageurs margin against their whole account.
        """
        n = self.n
        pnl = (self.fpos[:n] * settlement_ticks - self.fcost[:n]) * self.tick_value
        self.cash[:n] += pnl
        self.fcost[:n] = self.fpos[:n] * settlement_ticks
        equity = self.cash[:n].astype(float)
        if equity_extra is not None:
            equity = equity + equity_extra
        req = self.requirement(settlement_ticks)
        self.flagged[:n] = self.active[:n] & (self.fpos[:n] != 0) & (equity < req)
        return pnl

    def futures_pnl_total(self, mark_ticks: int) -> int:
        """Sum of unrealized futures P&L over all accounts (zero by construction)."""
        n = self.n
        return int(np.sum(self.fpos[:n] * mark_ticks - self.fcost[:n]))
