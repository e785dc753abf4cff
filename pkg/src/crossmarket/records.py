"""In-memory run logs and their CSV serialisation."""

from __future__ import annotations

import csv
import hashlib
import json
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .book import Side, Trade
from .config import SimConfig

TRADE_COLUMNS = ("step", "instrument", "price", "quantity", "buyer", "seller", "aggressor")
QUOTE_COLUMNS = ("step", "instrument", "best_bid", "best_ask", "bid5", "ask5", "midpoint")
BASIS_COLUMNS = ("step", "day", "futures", "index", "theoretical", "basis")
WEALTH_COLUMNS = ("day", "agent", "type", "cash", "stock_value", "futures_equity", "total")
SETTLEMENT_COLUMNS = ("day", "settlement_price", "flagged", "forced_closes")
ARBITRAGE_COLUMNS = ("step", "agent", "action", "premium", "contracts", "basket_cost", "realized_pnl")


class TradeLog:
    """Columnar trade store; prices in ticks."""

    def __init__(self) -> None:
        self.cols = {c: array("q") for c in TRADE_COLUMNS}

    def append(self, t: Trade) -> None:
        c = self.cols
        c["step"].append(t.step)
        c["instrument"].append(t.instrument)
        c["price"].append(t.price)
        c["quantity"].append(t.quantity)
        c["buyer"].append(t.buyer)
        c["seller"].append(t.seller)
        c["aggressor"].append(1 if t.aggressor is Side.BUY else -1)

    def __len__(self) -> int:
        return len(self.cols["step"])

    def column(self, name: str) -> np.ndarray:
        # copy: a live buffer view would block further appends
        return np.frombuffer(self.cols[name], dtype=np.int64).copy()


def _fmt(x: float) -> str:
    return "" if x != x else repr(float(x))


@dataclass
class RunRecord:
    config: SimConfig
    seed: int
    instruments: list[str]
    ticks: list[float]
    prices: np.ndarray  # (steps, instruments), currency
    index: np.ndarray
    theoretical: np.ndarray
    quotes: np.ndarray  # (steps, instruments, 5): best_bid, best_ask, bid5, ask5, mid in ticks
    trades: TradeLog
    settlements: list[tuple] = field(default_factory=list)
    wealth_rows: list[tuple] = field(default_factory=list)
    arbitrage_rows: list[tuple] = field(default_factory=list)
    checks: dict[str, Any] = field(default_factory=dict)
    counters: dict[str, int] = field(default_factory=dict)
    agents: list[dict] = field(default_factory=list)

    @property
    def futures_prices(self) -> np.ndarray:
        return self.prices[:, -1]

    @property
    def basis(self) -> np.ndarray:
        return self.futures_prices - self.index

    @property
    def steps(self) -> int:
        return self.prices.shape[0]

    def spreads(self, instrument: int = -1) -> np.ndarray:
        q = self.quotes[:, instrument]
        return (q[:, 1] - q[:, 0]) * self.ticks[instrument]

    # -- serialisation ------------------------------------------------------
    def write(self, out: str | Path, trades: bool = True, quotes: bool = True,
              wealth: bool = True) -> dict[str, str]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written = {}

        def table(name, header, rows):
            path = out / name
            with open(path, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
            written[name] = str(path)

        spd = self.config.run.steps_per_day
        table("basis.csv", BASIS_COLUMNS,
              ((t, t // spd + 1, _fmt(self.futures_prices[t]), _fmt(self.index[t]),
                _fmt(self.theoretical[t]), _fmt(self.basis[t])) for t in range(self.steps)))
        table("prices.csv", ("step", *self.instruments),
              ((t, *(_fmt(x) for x in row)) for t, row in enumerate(self.prices)))
        if trades:
            c = self.trades.cols
            decimals = [max(0, -int(np.floor(np.log10(tk) + 1e-9))) for tk in self.ticks]
            table("trades.csv", TRADE_COLUMNS,
                  ((s, i, f"{p * self.ticks[i]:.{decimals[i]}f}", q, b, sl, "buy" if a > 0 else "sell")
                   for s, i, p, q, b, sl, a in zip(c["step"], c["instrument"], c["price"],
                                                   c["quantity"], c["buyer"], c["seller"],
                                                   c["aggressor"])))
        if quotes:
            def quote_rows():
                for t in range(self.steps):
                    for i, tk in enumerate(self.ticks):
                        bb, ba, b5, a5, mid = self.quotes[t, i]
                        yield (t, i, _fmt(bb * tk), _fmt(ba * tk), _fmt(b5 * tk),
                               _fmt(a5 * tk), _fmt(mid * tk))
            table("quotes.csv", QUOTE_COLUMNS, quote_rows())
        if wealth:
            table("wealth.csv", WEALTH_COLUMNS, self.wealth_rows)
        table("settlement.csv", SETTLEMENT_COLUMNS, self.settlements)
        table("arbitrage.csv", ARBITRAGE_COLUMNS, self.arbitrage_rows)
        (out / "config.json").write_text(self.config.to_json() + "\n", encoding="utf-8")
        summary = {"seed": self.seed, "steps": self.steps, "trades": len(self.trades),
                   "counters": self.counters, "checks": self.checks}
        (out / "run.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n",
                                      encoding="utf-8")
        written["config.json"] = str(out / "config.json")
        written["run.json"] = str(out / "run.json")
        return written


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
