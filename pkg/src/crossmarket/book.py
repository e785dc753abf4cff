"""Continuous double auction limit order book with price-time priority.

Prices are integer tick counts and quantities integer units (shares or
contracts), so matching arithmetic is exact.  One book per instrument.
"""

from __future__ import annotations

import enum
from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass, field


class Side(enum.Enum):
    BUY = "buy"
    SELL = "sell"

    @property
    def opposite(self) -> "Side":
        return Side.SELL if self is Side.BUY else Side.BUY


class Kind(enum.Enum):
    LIMIT = "limit"
    MARKET = "market"


class OrderError(ValueError):
    pass


class InvalidTick(OrderError):
    pass


class InvalidLot(OrderError):
    pass


class EmptyBookMarketOrder(OrderError):
    pass


@dataclass(slots=True, eq=False)
class Order:
    id: int
    instrument: int
    side: Side
    kind: Kind
    price: int | None
    quantity: int
    owner: int
    submitted_at: int
    expires_at: int
    remaining: int = -1
    cancelled: int = 0

    def __post_init__(self) -> None:
        if self.remaining < 0:
            self.remaining = self.quantity

    @property
    def executed(self) -> int:
        return self.quantity - self.remaining - self.cancelled


@dataclass(slots=True, frozen=True)
class Trade:
    step: int
    instrument: int
    price: int
    quantity: int
    buyer: int
    seller: int
    aggressor: Side


@dataclass(slots=True)
class QuoteSnapshot:
    """Top five levels per side, as ``(price_ticks, size)`` pairs, best first."""

    bids: list[tuple[int, int]]
    asks: list[tuple[int, int]]
    bid5: float
    ask5: float
    midpoint: float

    @property
    def best_bid(self) -> int | None:
        return self.bids[0][0] if self.bids else None

    @property
    def best_ask(self) -> int | None:
        return self.asks[0][0] if self.asks else None


def to_ticks(price: float, tick: float) -> int:
    """Convert a currency price to ticks; raises InvalidTick off the grid."""
    ticks = round(price / tick)
    if ticks <= 0 or abs(price / tick - ticks) > 1e-6:
        raise InvalidTick(f"price {price} is not a positive multiple of tick {tick}")
    return ticks


@dataclass(eq=False)
class OrderBook:
    instrument: int
    tick: float
    lot: int
    bid_prices: list[int] = field(default_factory=list)  # ascending; best bid last
    ask_prices: list[int] = field(default_factory=list)  # ascending; best ask first
    bid_levels: dict[int, deque] = field(default_factory=dict)
    ask_levels: dict[int, deque] = field(default_factory=dict)
    bid_volume: dict[int, int] = field(default_factory=dict)
    ask_volume: dict[int, int] = field(default_factory=dict)
    live: dict[int, Order] = field(default_factory=dict)
    _expiry: dict[int, list[Order]] = field(default_factory=dict)

    # -- validation -------------------------------------------------------
    def validate(self, order: Order, now: int) -> None:
        if order.quantity <= 0 or order.quantity % self.lot:
            raise InvalidLot(f"quantity {order.quantity} is not a positive multiple of lot {self.lot}")
        if order.kind is Kind.LIMIT:
            if not isinstance(order.price, int) or order.price <= 0:
                raise InvalidTick(f"limit price {order.price!r} must be a positive tick count")
        if now >= order.expires_at:
            raise OrderError(f"order {order.id} already expired at step {now}")

    # -- queries ----------------------------------------------------------
    @property
    def best_bid(self) -> int | None:
        return self.bid_prices[-1] if self.bid_prices else None

    @property
    def best_ask(self) -> int | None:
        return self.ask_prices[0] if self.ask_prices else None

    def depth(self, side: Side) -> int:
        vol = self.bid_volume if side is Side.BUY else self.ask_volume
        return sum(vol.values())

    def __len__(self) -> int:
        return len(self.live)

    # -- mutation ---------------------------------------------------------
    def submit(self, order: Order, now: int, max_notional: int | None = None) -> list[Trade]:
        """Match ``order`` against the opposite side, resting any limit remainder.

        ``max_notional`` (ticks x units) caps what a market buy may spend;
        the unaffordable remainder is cancelled like any market remainder.
        """
        self.validate(order, now)
        buy = order.side is Side.BUY
        if buy:
            prices, levels, volume = self.ask_prices, self.ask_levels, self.ask_volume
        else:
            prices, levels, volume = self.bid_prices, self.bid_levels, self.bid_volume
        market = order.kind is Kind.MARKET
        if market and not prices:
            raise EmptyBookMarketOrder(f"no resting liquidity for market order {order.id}")

        trades: list[Trade] = []
        lot = self.lot
        limit = order.price
        budget = max_notional
        while order.remaining and prices:
            level_price = prices[0] if buy else prices[-1]
            if not market and (level_price > limit if buy else level_price < limit):
                break
            if budget is not None:
                affordable = (budget // level_price) // lot * lot
                if affordable <= 0:
                    break
            else:
                affordable = order.remaining
            queue = levels[level_price]
            while queue and order.remaining and affordable:
                resting = queue[0]
                if not resting.remaining:
                    queue.popleft()
                    continue
                qty = min(order.remaining, resting.remaining, affordable)
                resting.remaining -= qty
                order.remaining -= qty
                affordable -= qty
                volume[level_price] -= qty
                if budget is not None:
                    budget -= qty * level_price
                if buy:
                    trades.append(Trade(now, self.instrument, level_price, qty,
                                        order.owner, resting.owner, order.side))
                else:
                    trades.append(Trade(now, self.instrument, level_price, qty,
                                        resting.owner, order.owner, order.side))
                if not resting.remaining:
                    queue.popleft()
                    del self.live[resting.id]
            if not volume[level_price]:
                self._drop_level(level_price, buy_side=not buy)
            if budget is not None and order.remaining and queue:
                # budget ran out part-way through this level
                break

        if order.remaining:
            if market:
                order.cancelled += order.remaining
                order.remaining = 0
            else:
                self._rest(order)
        return trades

    def _rest(self, order: Order) -> None:
        p = order.price
        if order.side is Side.BUY:
            levels, volume, prices = self.bid_levels, self.bid_volume, self.bid_prices
        else:
            levels, volume, prices = self.ask_levels, self.ask_volume, self.ask_prices
        queue = levels.get(p)
        if queue is None:
            levels[p] = queue = deque()
            volume[p] = 0
            insort(prices, p)
        queue.append(order)
        volume[p] += order.remaining
        self.live[order.id] = order
        self._expiry.setdefault(order.expires_at, []).append(order)

    def _drop_level(self, price: int, buy_side: bool) -> None:
        if buy_side:
            prices, levels, volume = self.bid_prices, self.bid_levels, self.bid_volume
        else:
            prices, levels, volume = self.ask_prices, self.ask_levels, self.ask_volume
        del levels[price]
        del volume[price]
        del prices[bisect_left(prices, price)]

    def cancel(self, order_id: int) -> int:
        """Remove a live order's remainder; returns the quantity removed (0 if gone)."""
        order = self.live.pop(order_id, None)
        if order is None or not order.remaining:
            return 0
        qty = order.remaining
        order.remaining = 0
        order.cancelled += qty
        buy = order.side is Side.BUY
        volume = self.bid_volume if buy else self.ask_volume
        volume[order.price] -= qty
        if not volume[order.price]:
            self._drop_level(order.price, buy_side=buy)
        return qty

    def expire(self, now: int) -> int:
        """Cancel every order whose life ends at ``now``; returns the quantity removed."""
        due = self._expiry.pop(now, None)
        if not due:
            return 0
        return sum(self.cancel(o.id) for o in due)

    def clear(self) -> list[Order]:
        """Empty both sides (day boundary); returns the removed orders."""
        removed = list(self.live.values())
        for o in removed:
            o.cancelled += o.remaining
            o.remaining = 0
        self.live.clear()
        self.bid_prices.clear()
        self.ask_prices.clear()
        self.bid_levels.clear()
        self.ask_levels.clear()
        self.bid_volume.clear()
        self.ask_volume.clear()
        self._expiry.clear()
        return removed

    def snapshot(self, last_price: float) -> QuoteSnapshot:
        """Five-level quote with fallbacks for thin or empty books.

        ``last_price`` is in ticks.  A side with fewer than five levels uses
        its deepest level as the fifth; an empty side uses last price -/+ 5
        ticks (kept on its own side of the opposite best).
        """
        bids = [(p, self.bid_volume[p]) for p in self.bid_prices[:-6:-1]]
        asks = [(p, self.ask_volume[p]) for p in self.ask_prices[:5]]
        if bids and asks:
            mid = (bids[0][0] + asks[0][0]) / 2.0
            return QuoteSnapshot(bids, asks, float(bids[-1][0]), float(asks[-1][0]), mid)
        if bids:
            bid5 = float(bids[-1][0])
            ask5 = max(last_price + 5, float(bids[0][0]))
        elif asks:
            ask5 = float(asks[-1][0])
            bid5 = min(last_price - 5, float(asks[0][0]))
        else:
            bid5, ask5 = last_price - 5, last_price + 5
        return QuoteSnapshot(bids, asks, bid5, ask5, float(last_price))


# functional aliases mirroring the operation names
def submit_order(book: OrderBook, order: Order, now: int) -> tuple[list[Trade], Order]:
    return book.submit(order, now), order


def cancel_order(book: OrderBook, order_id: int) -> int:
    return book.cancel(order_id)


def clear_book(book: OrderBook) -> int:
    return len(book.clear())


def quote_snapshot(book: OrderBook, last_price: float) -> QuoteSnapshot:
    return book.snapshot(last_price)
