"""Deterministic event loop coupling five stock books and one futures book.

Phase order inside ``World.step`` is fixed:

1. expire orders and read the step's common values
2. collect due agents (plus arbitrageurs) and shuffle them
3. forced futures closes, then each agent cancels/decides/submits
4. per-step transaction price for every instrument
5. index and futures theoretical value
6. wealth update and bankruptcy replacement
7. quote snapshot
8. day end: clear books, mark futures to market, flag margin deficits
"""

from __future__ import annotations

import logging
import math
import random
from collections import defaultdict

import numpy as np

from . import arbitrage as arb_mod
from .agents import (Market, MarketView, PriceHistory, Trader, TraderKind, draw_population,
                     make_order_decision, next_arrival_time)
from .arbitrage import ArbState, Arbitrageur, ArbView, OrderRequest
from .assets import (INDEX_BASE, base_market_value, futures_common_value, generate_common_values,
                     stock_specs)
from .book import EmptyBookMarketOrder, Kind, Order, OrderBook, Side
from .clearing import ARBITRAGEUR, FUTURES_TRADER, STOCK_TRADER, Ledger
from .config import SimConfig
from .records import RunRecord, TradeLog

log = logging.getLogger(__name__)

# named RNG streams; indices are stable so adding agents never shifts another stream
STREAMS = {
    "common_values": 0,
    "stock_population": 1,
    "futures_population": 2,
    "arbitrage_population": 3,
    "stock_arrivals": 4,
    "futures_arrivals": 5,
    "shuffle": 6,
    "stock_decisions": 7,
    "futures_decisions": 8,
}


def stream_seed(master: int, name: str) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(STREAMS[name],))


def numpy_stream(master: int, name: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(stream_seed(master, name)))


def python_stream(master: int, name: str) -> random.Random:
    state = stream_seed(master, name).generate_state(4, dtype=np.uint32)
    return random.Random(int.from_bytes(state.tobytes(), "little"))


class World:
    def __init__(self, config: SimConfig, seed: int | None = None):
        self.cfg = config.validate()
        self.seed = config.run.seed if seed is None else seed
        run, sc, fc, ac = config.run, config.stocks, config.futures, config.agents
        self.spd = run.steps_per_day
        self.n_steps = run.total_steps
        self.k = sc.count
        self.fut = self.k  # futures instrument index
        self.specs = stock_specs(sc)
        self.shares = list(sc.shares)
        self.m0 = base_market_value(self.specs)
        self.rate = fc.daily_rate
        self.expiry = fc.expiry_days
        self.mult = fc.multiplier

        self.path = generate_common_values(self.specs, self.n_steps,
                                           numpy_stream(self.seed, "common_values"),
                                           common_shock=sc.shock_mode == "common")
        self._values = self.path.values.tolist()

        self.ticks = [sc.tick] * self.k + [fc.tick]
        self.lots = [sc.lot] * self.k + [1]
        self.books = [OrderBook(i, self.ticks[i], self.lots[i]) for i in range(self.k + 1)]
        self.stock_tick_cents = round(sc.tick * 100)
        self.tick_value = round(fc.tick * fc.multiplier * 100)  # cents per futures tick
        self.ledger = Ledger(self.k, [self.stock_tick_cents] * self.k, self.tick_value,
                             fc.margin_rate, capacity=2048)

        self.day = 1
        v0 = [s.initial_value for s in self.specs]
        f0 = futures_common_value(INDEX_BASE, self.rate, self.expiry, 1)
        self.last_ticks = [round(v / sc.tick) for v in v0] + [round(f0 / fc.tick)]
        self.histories = [PriceHistory(p) for p in v0 + [f0]]

        self.arrival_rng = {Market.STOCK: python_stream(self.seed, "stock_arrivals"),
                            Market.FUTURES: python_stream(self.seed, "futures_arrivals")}
        self.decision_rng = {Market.STOCK: python_stream(self.seed, "stock_decisions"),
                             Market.FUTURES: python_stream(self.seed, "futures_decisions")}
        self.shuffle_rng = python_stream(self.seed, "shuffle")

        self.agents: dict[int, Trader | Arbitrageur] = {}
        self.schedule: dict[int, list[int]] = defaultdict(list)
        self.arbitrageurs: list[Arbitrageur] = []
        self._order_id = 0
        self._acc = [[0, 0] for _ in range(self.k + 1)]
        self._populate()

        n, k1 = self.n_steps, self.k + 1
        self.prices = np.empty((n, k1))
        self.index = np.empty(n)
        self.theoretical = np.empty(n)
        self.quotes = np.full((n, k1, 5), np.nan)
        self.trade_log = TradeLog()
        self.settlements: list[tuple] = []
        self.wealth_rows: list[tuple] = []
        self.arbitrage_rows: list[tuple] = []
        self.counters = dict(bankruptcies=0, forced_closes=0, deferred_liquidations=0,
                             arbitrage_opens=0, arbitrage_closes=0, orders=0)
        self.checks = dict(zero_sum=True, zero_sum_days=0, share_conservation=True,
                           cash_conservation=True, min_stock_holding=0,
                           max_arb_margin_excess=-math.inf, max_arb_margin_ratio=0.0,
                           book_crossed=False)
        self.cash_placed = int(self.ledger.cash[: self.ledger.n].sum())
        self._day_forced = 0
        self._day_vwap = [0, 0]
        self._day_last_fut: int | None = None
        self._prev_settle = self.last_ticks[self.fut]
        self._arb_ids = np.array([a.id for a in self.arbitrageurs], dtype=np.int64)

    # -- construction -------------------------------------------------------
    def _populate(self) -> None:
        cfg = self.cfg
        ac, sc = cfg.agents, cfg.stocks
        kinds = (TraderKind.INFORMED, TraderKind.UNINFORMED, TraderKind.NOISE)

        rng = numpy_stream(self.seed, "stock_population")
        for kind in kinds:
            n = getattr(ac.stock, kind.value)
            params = draw_population(rng, n, kind, Market.STOCK, ac.stock.alpha_range, ac.tau_range,
                                     ac.stock.mean_interval)
            stocks = rng.integers(0, self.k, n)
            lo, hi = ac.initial_shares
            lots = rng.integers(-(-lo // sc.lot), hi // sc.lot + 1, n)
            for p, inst, nl in zip(params, stocks, lots):
                inst = int(inst)
                qty = int(nl) * sc.lot
                cash = qty * round(sc.initial_value[inst] / sc.tick) * self.stock_tick_cents
                holdings = [0] * self.k
                holdings[inst] = qty
                i = self.ledger.open_account(STOCK_TRADER, inst, cash, holdings)
                self._add_trader(Trader(i, instrument=inst, initial_cash=cash,
                                        initial_holdings=qty, **p), 0)

        rng = numpy_stream(self.seed, "futures_population")
        cash = round(ac.futures_wealth * 100)
        for kind in kinds:
            n = getattr(ac.futures, kind.value)
            params = draw_population(rng, n, kind, Market.FUTURES, ac.futures.alpha_range, ac.tau_range,
                                     ac.futures.mean_interval)
            for p in params:
                i = self.ledger.open_account(FUTURES_TRADER, self.fut, cash)
                self._add_trader(Trader(i, instrument=self.fut, initial_cash=cash, **p), 0)

        rng = numpy_stream(self.seed, "arbitrage_population")
        ab = cfg.arbitrage
        kappas = rng.uniform(ab.profit_range[0], ab.profit_range[1], ab.count)
        cash = round(ab.wealth * 100)
        for kappa in kappas:
            i = self.ledger.open_account(ARBITRAGEUR, -1, cash, [0] * self.k)
            a = Arbitrageur(i, float(kappa), cash)
            self.agents[i] = a
            self.arbitrageurs.append(a)

    def _add_trader(self, tr: Trader, now: int) -> None:
        self.agents[tr.id] = tr
        first = now + next_arrival_time(tr.mean_interval, self.arrival_rng[tr.market])
        if now == 0:
            first -= 1
        tr.next_arrival = first
        self.schedule[first].append(tr.id)

    # -- helpers ------------------------------------------------------------
    def live_index(self) -> float:
        lt, tick = self.last_ticks, self.ticks[0]
        return sum(lt[i] * tick * self.shares[i] for i in range(self.k)) / self.m0 * INDEX_BASE

    def _route(self, owner: int, inst: int, side: Side, kind: Kind, price: int | None, qty: int,
               now: int, expires: int, max_notional: int | None = None) -> Order | None:
        self._order_id += 1
        self.counters["orders"] += 1
        order = Order(self._order_id, inst, side, kind, price, qty, owner, now, expires)
        try:
            trades = self.books[inst].submit(order, now, max_notional)
        except EmptyBookMarketOrder:
            return None
        if trades:
            ledger, acc = self.ledger, self._acc
            for tr in trades:
                ledger.apply(tr)
                self.trade_log.append(tr)
                acc[inst][0] += tr.price
                acc[inst][1] += 1
                if inst == self.fut:
                    self._day_vwap[0] += tr.price * tr.quantity
                    self._day_vwap[1] += tr.quantity
            self.last_ticks[inst] = trades[-1].price
            if inst == self.fut:
                self._day_last_fut = trades[-1].price
        return order

    def _market_request(self, owner: int, req: OrderRequest, now: int) -> int:
        """Route an arbitrage/liquidation market order; returns units filled."""
        ledger = self.ledger
        qty = req.quantity
        max_notional = None
        if req.instrument < self.k:
            lot = self.lots[req.instrument]
            if req.side is Side.SELL:
                qty = min(qty, int(ledger.stock[owner, req.instrument]))
            else:
                max_notional = int(ledger.cash[owner]) // self.stock_tick_cents
            qty = qty // lot * lot
        if qty <= 0:
            return 0
        order = self._route(owner, req.instrument, req.side, Kind.MARKET, None, qty, now, now + 1,
                            max_notional)
        return 0 if order is None else order.executed

    # -- agent turns ----------------------------------------------------------
    def _trader_turn(self, tr: Trader, t: int) -> None:
        ledger = self.ledger
        inst = tr.instrument
        book = self.books[inst]
        if tr.live_order is not None:
            book.cancel(tr.live_order)
            tr.live_order = None
        gap = next_arrival_time(tr.mean_interval, self.arrival_rng[tr.market])
        tr.next_arrival = t + gap
        self.schedule[t + gap].append(tr.id)
        if ledger.flagged[tr.id]:
            return

        ac = self.cfg.agents
        hist = self.histories[inst]
        variance = hist.variance(tr.tau, ac.variance_floor)
        if variance is None:
            return
        tick = self.ticks[inst]
        snap = book.snapshot(self.last_ticks[inst])
        ahead = self._values[min(t + 1 + tr.tau, self.n_steps)]
        if tr.market is Market.STOCK:
            value_now = self._values[t + 1][inst]
            value_ahead = ahead[inst]
            holdings = int(ledger.stock[tr.id, inst])
            cash = int(ledger.cash[tr.id]) / 100.0
            max_pos = None
        else:
            growth = (1.0 + self.rate) ** (self.expiry - self.day + 1)
            value_now = self.live_index() * growth
            value_ahead = (sum(v * s for v, s in zip(ahead, self.shares)) / self.m0
                           * INDEX_BASE * growth)
            holdings = int(ledger.fpos[tr.id])
            cash = math.inf
            f_ticks = self.last_ticks[inst]
            equity = (int(ledger.cash[tr.id])
                      + (holdings * f_ticks - int(ledger.fcost[tr.id])) * self.tick_value)
            per_contract = f_ticks * self.tick_value * self.cfg.futures.margin_rate
            max_pos = max(0, int(self.cfg.futures.safety_ratio * equity / per_contract))
        view = MarketView(tick, self.lots[inst], snap.bid5 * tick, snap.ask5 * tick,
                          snap.midpoint * tick, hist.mean_price(tr.tau), variance, value_now,
                          value_ahead, holdings, cash, max_pos)
        jitter = (ac.stock if tr.market is Market.STOCK else ac.futures).price_jitter
        dec = make_order_decision(tr, view, self.decision_rng[tr.market], jitter)
        if dec is None:
            return
        order = self._route(tr.id, inst, dec.side, Kind.LIMIT, dec.price, dec.quantity, t, t + gap)
        if order is not None and order.remaining:
            tr.live_order = order.id

    def _prices_cents(self) -> list[float]:
        return [self.last_ticks[i] * self.stock_tick_cents for i in range(self.k)]

    def _arb_turn(self, a: Arbitrageur, t: int) -> None:
        ledger, fc = self.ledger, self.cfg.futures
        f_ticks = self.last_ticks[self.fut]
        F = f_ticks * fc.tick
        vF = futures_common_value(self.live_index(), self.rate, self.expiry, self.day)
        prices = [self.last_ticks[i] * self.ticks[i] for i in range(self.k)]
        wealth = ledger.wealth_of(a.id, self._prices_cents(), f_ticks) / 100.0
        before = a.state
        view = ArbView(F, vF, wealth, int(ledger.fpos[a.id]),
                       [int(x) for x in ledger.stock[a.id]], prices)
        ab = self.cfg.arbitrage
        reqs = arb_mod.evaluate_and_act(
            a, view, t, shares=self.shares, m0=self.m0, margin_rate=fc.margin_rate,
            safety_ratio=fc.safety_ratio, multiplier=self.mult, lot=self.lots[0],
            futures_instrument=self.fut, close_threshold=ab.close_threshold,
            max_contracts=ab.max_contracts)
        if before is ArbState.FLAT and a.state is ArbState.OPEN:
            self.counters["arbitrage_opens"] += 1
            cost = sum(r.quantity * prices[r.instrument] for r in reqs if r.instrument < self.k)
            self.arbitrage_rows.append((t, a.id, "open", repr(F - vF), a.contracts, repr(cost), ""))
        for req in reqs:
            self._market_request(a.id, req, t)
        if before is not ArbState.FLAT and a.state is ArbState.FLAT:
            self.counters["arbitrage_closes"] += 1
            self.arbitrage_rows.append((t, a.id, "close", repr(F - vF), 0, "",
                                        repr(wealth - a.entry_wealth)))

    def _forced_closes(self, t: int) -> None:
        ledger = self.ledger
        flagged = np.flatnonzero(ledger.flagged[: ledger.n])
        if not len(flagged):
            return
        fc = self.cfg.futures
        f_ticks = self.last_ticks[self.fut]
        for i in flagged.tolist():
            pos = int(ledger.fpos[i])
            agent = self.agents.get(i)
            if isinstance(agent, Trader) and agent.live_order is not None:
                self.books[agent.instrument].cancel(agent.live_order)
                agent.live_order = None
            equity = ledger.wealth_of(i, self._prices_cents(), f_ticks)
            req = abs(pos) * f_ticks * self.tick_value * fc.margin_rate
            if pos == 0 or equity >= req:
                ledger.flagged[i] = False
                continue
            side = Side.BUY if pos < 0 else Side.SELL
            filled = self._market_request(i, OrderRequest(self.fut, side, 1), t)
            if filled:
                self.counters["forced_closes"] += filled
                self._day_forced += filled
            else:
                self.counters["deferred_liquidations"] += 1

    # -- the step -------------------------------------------------------------
    def step(self, t: int) -> None:
        k1 = self.k + 1
        last_step = t == self.n_steps - 1
        expiry_step = last_step and self.day == self.expiry
        for book in self.books:
            book.expire(t)

        due = self.schedule.pop(t, [])
        actors: list = [self.agents[i] for i in due]
        if not expiry_step and t % self.cfg.arbitrage.interval == 0:
            actors.extend(a for a in self.arbitrageurs if a.active)
        self.shuffle_rng.shuffle(actors)

        self._acc = [[0, 0] for _ in range(k1)]
        self._forced_closes(t)
        for agent in actors:
            if not agent.active:
                continue
            if isinstance(agent, Trader):
                self._trader_turn(agent, t)
            else:
                self._arb_turn(agent, t)
        if expiry_step:
            for a in self.arbitrageurs:
                if not a.active:
                    continue
                for req in arb_mod.expiry_liquidation([int(x) for x in self.ledger.stock[a.id]]):
                    self._market_request(a.id, req, t)

        # period prices
        for i in range(k1):
            s, c = self._acc[i]
            p = s * self.ticks[i] / c if c else self.histories[i].last
            self.histories[i].append(p)
            self.prices[t, i] = p
        stock_p = self.prices[t, : self.k]
        idx = float(np.dot(stock_p, self.shares)) / self.m0 * INDEX_BASE
        self.index[t] = idx
        self.theoretical[t] = futures_common_value(idx, self.rate, self.expiry, self.day)

        self._end_of_period(t)

        for i, book in enumerate(self.books):
            snap = book.snapshot(self.last_ticks[i])
            q = self.quotes[t, i]
            if snap.bids:
                q[0] = snap.bids[0][0]
            if snap.asks:
                q[1] = snap.asks[0][0]
            if snap.bids and snap.asks and snap.bids[0][0] >= snap.asks[0][0]:
                self.checks["book_crossed"] = True
            q[2], q[3], q[4] = snap.bid5, snap.ask5, snap.midpoint

        if t % self.spd == self.spd - 1:
            self._end_of_day(t, expiry_step)

    def _end_of_period(self, t: int) -> None:
        ledger, n = self.ledger, self.ledger.n
        cfg = self.cfg
        prices_cents = self.prices[t, : self.k] * 100.0
        f_ticks = self.prices[t, self.fut] / cfg.futures.tick
        wealth = ledger.wealth(prices_cents, f_ticks)
        kind = ledger.kind[:n]
        inst = ledger.instrument[:n]
        contract_margin = self.mult * self.prices[t, self.fut] * cfg.futures.margin_rate * 100.0
        lot_cost = cfg.stocks.lot * prices_cents[np.clip(inst, 0, self.k - 1)]
        threshold = np.where(kind == STOCK_TRADER, lot_cost, contract_margin)
        broke = np.flatnonzero(ledger.active[:n] & (wealth < threshold))
        for i in broke.tolist():
            self._replace(int(i), t)

        if len(self._arb_ids):
            ids = self._arb_ids
            w = wealth[ids]
            margin = np.abs(ledger.fpos[ids]) * f_ticks * self.tick_value * cfg.futures.margin_rate
            ratio = np.where(w > 0, margin / np.where(w > 0, w, 1.0), 0.0)
            excess = ratio - cfg.futures.safety_ratio - contract_margin / np.where(w > 0, w, 1.0)
            self.checks["max_arb_margin_ratio"] = max(self.checks["max_arb_margin_ratio"],
                                                      float(ratio.max()))
            self.checks["max_arb_margin_excess"] = max(self.checks["max_arb_margin_excess"],
                                                       float(excess.max()))
        m = int(ledger.stock[:n].min()) if n else 0
        if m < self.checks["min_stock_holding"]:
            self.checks["min_stock_holding"] = m

    def _replace(self, i: int, t: int) -> None:
        old = self.agents[i]
        if isinstance(old, Trader) and old.live_order is not None:
            self.books[old.instrument].cancel(old.live_order)
            old.live_order = None
        old.active = False
        self.ledger.retire(i)
        self.counters["bankruptcies"] += 1
        ledger = self.ledger
        if isinstance(old, Trader):
            holdings = None
            kind = FUTURES_TRADER
            if old.market is Market.STOCK:
                holdings = [0] * self.k
                holdings[old.instrument] = old.initial_holdings
                kind = STOCK_TRADER
            j = ledger.open_account(kind, old.instrument, old.initial_cash, holdings)
            self._add_trader(old.clone(j), t)
        else:
            j = ledger.open_account(ARBITRAGEUR, -1, old.initial_cash, [0] * self.k)
            new = old.clone(j)
            self.agents[j] = new
            self.arbitrageurs.append(new)
            self._arb_ids = np.array([a.id for a in self.arbitrageurs if a.active], dtype=np.int64)
        self.cash_placed += old.initial_cash
        log.debug("step %d: agent %d bankrupt, replaced by %d", t, i, j)

    def _end_of_day(self, t: int, expiry_step: bool) -> None:
        ledger, fc = self.ledger, self.cfg.futures
        n = ledger.n
        day = self.day
        for book in self.books:
            book.clear()
        for agent in self.agents.values():
            if isinstance(agent, Trader):
                agent.live_order = None

        # wealth log before marking: futures_equity is the unrealized P&L
        prices_cents = self.prices[t, : self.k] * 100.0
        if fc.settlement == "vwap" and self._day_vwap[1]:
            settle = round(self._day_vwap[0] / self._day_vwap[1])
        elif self._day_last_fut is not None:
            settle = self._day_last_fut
        else:
            settle = self._prev_settle
        if expiry_step:
            settle = round(self.index[t] / fc.tick)
        stock_value = ledger.stock_value(prices_cents)
        unreal = ledger.unrealized(settle)
        if self.cfg.output.wealth:
            names = {STOCK_TRADER: "stock", FUTURES_TRADER: "futures", ARBITRAGEUR: "arbitrageur"}
            for i in range(n):
                agent = self.agents[i]
                label = (f"{agent.kind.value}_{agent.market.value}" if isinstance(agent, Trader)
                         else names[ARBITRAGEUR])
                c = int(ledger.cash[i])
                self.wealth_rows.append((day, i, label, c / 100, repr(stock_value[i] / 100),
                                         unreal[i] / 100, repr((c + stock_value[i] + unreal[i]) / 100)))

        pnl = ledger.settle(settle, stock_value)
        if int(pnl.sum()) != 0 or ledger.futures_pnl_total(settle) != 0:
            self.checks["zero_sum"] = False
        self.checks["zero_sum_days"] += 1
        if expiry_step:
            for a in self.arbitrageurs:
                if a.state is not ArbState.FLAT and a.active:
                    w = ledger.wealth_of(a.id, list(prices_cents), settle) / 100.0
                    self.arbitrage_rows.append((t, a.id, "settle", repr(self.prices[t, self.fut]
                                                - self.theoretical[t]), int(-ledger.fpos[a.id]),
                                                "", repr(w - a.entry_wealth)))
                    a.state = ArbState.FLAT
            ledger.fpos[:n] = 0
            ledger.fcost[:n] = 0
            ledger.flagged[:n] = False
        if not np.array_equal(ledger.stock[:n].sum(axis=0), ledger.shares_placed):
            self.checks["share_conservation"] = False
        if int(ledger.cash[:n].sum()) != self.cash_placed:
            self.checks["cash_conservation"] = False
        flagged = int(ledger.flagged[:n].sum())
        self.settlements.append((day, f"{settle * fc.tick:.1f}", flagged, self._day_forced))
        self._prev_settle = settle
        self._day_forced = 0
        self._day_vwap = [0, 0]
        self._day_last_fut = None
        if self.day < self.expiry:
            self.day += 1

    # -- driver -----------------------------------------------------------------
    def run(self) -> RunRecord:
        for t in range(self.n_steps):
            self.step(t)
        return self.record()

    def record(self) -> RunRecord:
        names = [f"stock{i + 1}" for i in range(self.k)] + ["futures"]
        agents = []
        for i, a in sorted(self.agents.items()):
            if isinstance(a, Trader):
                agents.append(dict(id=i, type=f"{a.kind.value}_{a.market.value}",
                                   instrument=a.instrument, alpha=a.alpha, tau=a.tau,
                                   active=a.active))
            else:
                agents.append(dict(id=i, type="arbitrageur", kappa=a.kappa, active=a.active))
        return RunRecord(self.cfg, self.seed, names, list(self.ticks), self.prices,
                         self.index, self.theoretical, self.quotes, self.trade_log,
                         self.settlements, self.wealth_rows, self.arbitrage_rows,
                         dict(self.checks), dict(self.counters), agents)


def run(config: SimConfig, seed: int | None = None) -> RunRecord:
    """Execute a full simulation and return its in-memory record."""
    return World(config, seed).run()
