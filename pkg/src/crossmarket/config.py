"""Simulation configuration: dataclasses, TOML loading and validation."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigInvalid(ValueError):
    """Raised with one ``path: message`` line per offending field."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


@dataclass
class RunConfig:
    steps_per_day: int = 2882
    days: int = 19
    step_seconds: int = 5
    seed: int = 20100820

    @property
    def total_steps(self) -> int:
        return self.steps_per_day * self.days


@dataclass
class StocksConfig:
    initial_value: list[float] = field(default_factory=lambda: [10.0, 20.0, 30.0, 40.0, 50.0])
    sigma: list[float] = field(default_factory=lambda: [0.0007, 0.0007, 0.0003, 0.0003, 0.0005])
    shares: list[float] = field(default_factory=lambda: [50.0, 40.0, 60.0, 30.0, 50.0])
    drift: list[float] = field(default_factory=lambda: [0.0] * 5)
    tick: float = 0.01
    lot: int = 100
    # "independent": one shock per stock per step; "common": one shock shared by all stocks
    shock_mode: str = "independent"

    @property
    def count(self) -> int:
        return len(self.initial_value)


@dataclass
class FuturesConfig:
    expiry_days: int = 19
    annual_rate: float = 0.08
    trading_days_per_year: int = 245
    multiplier: int = 300
    tick: float = 0.2
    margin_rate: float = 0.18
    safety_ratio: float = 0.60
    settlement: str = "last"  # or "vwap"

    @property
    def daily_rate(self) -> float:
        return self.annual_rate / self.trading_days_per_year


@dataclass
class PopulationConfig:
    informed: int = 170
    uninformed: int = 100
    noise: int = 70
    mean_interval: float = 20.0
    alpha_range: tuple[float, float] = (0.1, 1.0)
    price_jitter: float = 0.01  # candidate price = expectation * (1 + U(-d, d))


@dataclass
class AgentsConfig:
    # stock traders hold large inventories, so their risk aversion is scaled down to match
    stock: PopulationConfig = field(default_factory=lambda: PopulationConfig(alpha_range=(1e-4, 1e-3)))
    futures: PopulationConfig = field(default_factory=PopulationConfig)
    tau_range: tuple[int, int] = (10, 120)
    initial_shares: tuple[int, int] = (30_000, 150_000)
    futures_wealth: float = 3_000_000.0
    variance_floor: float = 1e-8


@dataclass
class ArbitrageConfig:
    count: int = 10
    wealth: float = 10_000_000.0
    profit_range: tuple[float, float] = (10.0, 20.0)
    close_threshold: float = 0.0
    interval: int = 1
    max_contracts: int = 0  # 0 = no cap beyond wealth sizing


@dataclass
class OutputConfig:
    directory: str = "runs/default"
    trades: bool = True
    quotes: bool = True
    wealth: bool = True


@dataclass
class SimConfig:
    run: RunConfig = field(default_factory=RunConfig)
    stocks: StocksConfig = field(default_factory=StocksConfig)
    futures: FuturesConfig = field(default_factory=FuturesConfig)
    agents: AgentsConfig = field(default_factory=AgentsConfig)
    arbitrage: ArbitrageConfig = field(default_factory=ArbitrageConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def replace(self, **sections: Any) -> "SimConfig":
        return dataclasses.replace(self, **sections)

    def validate(self) -> "SimConfig":
        errors = _validate(self)
        if errors:
            raise ConfigInvalid(errors)
        return self


def _check(errors: list[str], ok: bool, path: str, msg: str) -> None:
    if not ok:
        errors.append(f"{path}: {msg}")


def _validate(cfg: SimConfig) -> list[str]:
    e: list[str] = []
    r, s, f, a, arb = cfg.run, cfg.stocks, cfg.futures, cfg.agents, cfg.arbitrage
    _check(e, r.steps_per_day >= 1, "run.steps_per_day", "must be >= 1")
    _check(e, r.days >= 1, "run.days", "must be >= 1")
    _check(e, r.step_seconds >= 1, "run.step_seconds", "must be >= 1")
    _check(e, r.seed >= 0, "run.seed", "must be a non-negative integer")

    n = len(s.initial_value)
    _check(e, n >= 1, "stocks.initial_value", "need at least one stock")
    for name in ("sigma", "shares", "drift"):
        _check(e, len(getattr(s, name)) == n, f"stocks.{name}", f"expected {n} entries")
    for i, v in enumerate(s.initial_value):
        _check(e, v > 0, f"stocks.initial_value[{i}]", "must be > 0")
    for i, v in enumerate(s.sigma):
        _check(e, v >= 0, f"stocks.sigma[{i}]", "must be >= 0")
    for i, v in enumerate(s.shares):
        _check(e, v > 0, f"stocks.shares[{i}]", "must be > 0")
    _check(e, s.tick > 0, "stocks.tick", "must be > 0")
    _check(e, s.lot >= 1, "stocks.lot", "must be >= 1")
    _check(e, s.shock_mode in ("independent", "common"), "stocks.shock_mode",
           "must be 'independent' or 'common'")
    for i, v in enumerate(s.initial_value):
        _check(e, abs(v / s.tick - round(v / s.tick)) < 1e-9,
               f"stocks.initial_value[{i}]", "must lie on the tick grid")

    _check(e, f.expiry_days >= 1, "futures.expiry_days", "must be >= 1")
    _check(e, f.expiry_days >= r.days, "futures.expiry_days", "must be >= run.days")
    _check(e, f.annual_rate >= 0, "futures.annual_rate", "must be >= 0")
    _check(e, f.trading_days_per_year >= 1, "futures.trading_days_per_year", "must be >= 1")
    _check(e, f.multiplier >= 1, "futures.multiplier", "must be >= 1")
    _check(e, f.tick > 0, "futures.tick", "must be > 0")
    _check(e, 0 < f.margin_rate < 1, "futures.margin_rate", "must be in (0, 1)")
    _check(e, 0 < f.safety_ratio <= 1, "futures.safety_ratio", "must be in (0, 1]")
    _check(e, f.settlement in ("last", "vwap"), "futures.settlement", "must be 'last' or 'vwap'")

    for market in ("stock", "futures"):
        p = getattr(a, market)
        for kind in ("informed", "uninformed", "noise"):
            _check(e, getattr(p, kind) >= 0, f"agents.{market}.{kind}", "must be >= 0")
        _check(e, p.mean_interval > 0, f"agents.{market}.mean_interval", "must be > 0")
        lo, hi = p.alpha_range
        _check(e, 0 < lo <= hi, f"agents.{market}.alpha_range", "need 0 < low <= high")
        _check(e, 0 <= p.price_jitter < 1, f"agents.{market}.price_jitter", "must be in [0, 1)")
    lo, hi = a.tau_range
    _check(e, 2 <= lo <= hi, "agents.tau_range", "need 2 <= low <= high")
    lo, hi = a.initial_shares
    _check(e, 0 <= lo <= hi, "agents.initial_shares", "need 0 <= low <= high")
    _check(e, a.futures_wealth > 0, "agents.futures_wealth", "must be > 0")
    _check(e, a.variance_floor > 0, "agents.variance_floor", "must be > 0")

    _check(e, arb.count >= 0, "arbitrage.count", "must be >= 0")
    _check(e, arb.wealth > 0, "arbitrage.wealth", "must be > 0")
    lo, hi = arb.profit_range
    _check(e, 0 <= lo <= hi, "arbitrage.profit_range", "need 0 <= low <= high")
    _check(e, arb.interval >= 1, "arbitrage.interval", "must be >= 1")
    _check(e, arb.max_contracts >= 0, "arbitrage.max_contracts", "must be >= 0")
    return e


_SECTIONS = {
    "run": RunConfig,
    "stocks": StocksConfig,
    "futures": FuturesConfig,
    "arbitrage": ArbitrageConfig,
    "output": OutputConfig,
}


def _build(cls: type, data: dict[str, Any], path: str, errors: list[str], base: Any = None) -> Any:
    """``base`` supplies values for missing keys (a fresh ``cls()`` by default)."""
    base = cls() if base is None else base
    if not isinstance(data, dict):
        errors.append(f"{path}: expected a table")
        return base
    names = {f.name: f for f in dataclasses.fields(cls)}
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key not in names:
            errors.append(f"{path}.{key}: unknown key")
            continue
        default = getattr(base, key)
        if isinstance(default, tuple):
            if not (isinstance(value, (list, tuple)) and len(value) == 2):
                errors.append(f"{path}.{key}: expected a [low, high] pair")
                continue
            value = tuple(value)
        elif isinstance(default, list):
            if not isinstance(value, (list, tuple)):
                errors.append(f"{path}.{key}: expected a list")
                continue
            value = [float(v) for v in value]
        elif isinstance(default, bool):
            if not isinstance(value, bool):
                errors.append(f"{path}.{key}: expected true/false")
                continue
        elif isinstance(default, (int, float)) and not isinstance(default, bool):
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                errors.append(f"{path}.{key}: expected a number")
                continue
            if isinstance(default, int) and not isinstance(default, bool):
                if float(value) != int(value):
                    errors.append(f"{path}.{key}: expected an integer")
                    continue
                value = int(value)
            else:
                value = float(value)
        elif isinstance(default, str) and not isinstance(value, str):
            errors.append(f"{path}.{key}: expected a string")
            continue
        kwargs[key] = value
    return dataclasses.replace(base, **kwargs)


def from_dict(data: dict[str, Any]) -> SimConfig:
    errors: list[str] = []
    sections: dict[str, Any] = {}
    for key, value in data.items():
        if key in _SECTIONS:
            sections[key] = _build(_SECTIONS[key], value, key, errors)
        elif key == "agents":
            value = dict(value) if isinstance(value, dict) else {}
            pops = {m: _build(PopulationConfig, value.pop(m, {}), f"agents.{m}", errors,
                              getattr(AgentsConfig(), m))
                    for m in ("stock", "futures")}
            agents = _build(AgentsConfig, value, "agents", errors)
            sections["agents"] = dataclasses.replace(agents, **pops)
        else:
            errors.append(f"{key}: unknown section")
    if errors:
        raise ConfigInvalid(errors)
    return SimConfig(**sections).validate()


def load_config(path: str | os.PathLike) -> SimConfig:
    """Read a TOML config file; missing keys take the built-in defaults."""
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigInvalid([f"{path}: {exc}"]) from exc
    return from_dict(data)


BUNDLED = ("default", "table3_sim1", "table3_sim2", "smoke")


def bundled_config_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled config {name!r}; choose from {', '.join(BUNDLED)}")
    return Path(str(resources.files("crossmarket") / "configs" / f"{name}.toml"))


def load_bundled(name: str) -> SimConfig:
    return load_config(bundled_config_path(name))
