"""Statistics reports from engine logs or external CSV series.

Accepted inputs:

* an engine output directory (``basis.csv`` and, when present, ``quotes.csv``);
* a CSV with header ``step,price`` (a futures price series);
* a CSV with header ``step,F,S`` (futures and spot index levels).

Sections that the input cannot support are reported as absent.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import stats

SECTIONS = ("basis", "spread", "returns", "acf", "garch", "gev")


class InputError(ValueError):
    """Malformed statistics input; the message names the file and line."""


@dataclass
class SeriesInput:
    source: str
    futures: np.ndarray | None = None  # price series used for returns
    basis_futures: np.ndarray | None = None
    index: np.ndarray | None = None
    best_bid: np.ndarray | None = None
    best_ask: np.ndarray | None = None
    steps_per_day: int | None = None


def _read_table(path: Path, required: dict[str, tuple[str, ...]] | None = None
                ) -> tuple[list[str], dict[str, np.ndarray]]:
    """Parse a headed numeric CSV; empty cells become NaN."""
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        cols: list[list[float]] = [[] for _ in header]
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            line = reader.line_num
            if len(row) != len(header):
                raise InputError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
            for j, cell in enumerate(row):
                cell = cell.strip()
                if cell == "":
                    cols[j].append(math.nan)
                    continue
                try:
                    cols[j].append(float(cell))
                except ValueError:
                    raise InputError(f"{path}: line {line}: column {header[j]!r} "
                                     f"is not a number: {cell!r}") from None
    return header, {h: np.asarray(c, dtype=float) for h, c in zip(header, cols)}


def _series(path: Path, data: dict[str, np.ndarray], name: str) -> np.ndarray:
    x = data[name]
    if len(x) == 0:
        raise InputError(f"{path}: no data rows")
    bad = np.flatnonzero(~np.isfinite(x))
    if len(bad):
        raise InputError(f"{path}: line {bad[0] + 2}: missing value in column {name!r}")
    return x


def load_input(path: str | Path) -> SeriesInput:
    path = Path(path)
    if path.is_dir():
        return _load_run_dir(path)
    if not path.exists():
        raise InputError(f"{path}: file not found")
    header, data = _read_table(path)
    cols = [h for h in header if h != "step"]
    if "step" not in header:
        raise InputError(f"{path}: line 1: header must start with a 'step' column")
    if {"futures", "index"} <= set(header):  # engine basis.csv passed directly
        f, i = _series(path, data, "futures"), _series(path, data, "index")
        return SeriesInput(str(path), futures=f, basis_futures=f, index=i)
    if cols == ["price"]:
        return SeriesInput(str(path), futures=_series(path, data, "price"))
    if cols == ["F", "S"]:
        return SeriesInput(str(path), basis_futures=_series(path, data, "F"),
                           index=_series(path, data, "S"))
    raise InputError(f"{path}: line 1: expected columns (step, price) or (step, F, S), "
                     f"got ({', '.join(header)})")


def _load_run_dir(path: Path) -> SeriesInput:
    basis_path = path / "basis.csv"
    if not basis_path.exists():
        raise InputError(f"{path}: no basis.csv in run directory")
    _, data = _read_table(basis_path)
    for name in ("step", "day", "futures", "index"):
        if name not in data:
            raise InputError(f"{basis_path}: line 1: missing column {name!r}")
    f = _series(basis_path, data, "futures")
    inp = SeriesInput(str(path), futures=f, basis_futures=f,
                      index=_series(basis_path, data, "index"))
    days = data["day"]
    if len(days) and days[-1] > 0:
        inp.steps_per_day = int(np.sum(days == days[0]))
    quotes = path / "quotes.csv"
    if quotes.exists():
        _, q = _read_table(quotes)
        inst = q["instrument"]
        fut = inst == inst.max()
        inp.best_bid, inp.best_ask = q["best_bid"][fut], q["best_ask"][fut]
    return inp


# -- report ---------------------------------------------------------------------

def histogram(x: np.ndarray, bins: int = 50) -> list[tuple[float, float, int]]:
    counts, edges = np.histogram(x, bins=bins)
    return [(float(edges[i]), float(edges[i + 1]), int(c)) for i, c in enumerate(counts)]


@dataclass
class Report:
    source: str
    sections: dict[str, dict[str, Any] | None] = field(default_factory=dict)
    tables: dict[str, tuple[tuple[str, ...], list[tuple]]] = field(default_factory=dict)

    def present(self, name: str) -> bool:
        return self.sections.get(name) is not None

    def to_json(self) -> str:
        return json.dumps({"source": self.source, "sections": self.sections}, indent=2,
                          sort_keys=True, default=float)

    def to_text(self) -> str:
        out = [f"Statistics report for {self.source}", ""]
        for name in SECTIONS:
            sec = self.sections.get(name)
            out.append(f"[{name}]")
            if sec is None:
                out.append("  absent (input has no data for this section)")
            elif name == "garch":
                out.extend(_garch_table(sec))
            else:
                for k, v in sec.items():
                    out.append(f"  {k:<22} {_fmt(v)}")
            out.append("")
        return "\n".join(out)

    def write(self, out: str | Path) -> dict[str, str]:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        written = {}
        for name, (header, rows) in self.tables.items():
            p = out / f"{name}.csv"
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                w.writerows(rows)
            written[name] = str(p)
        (out / "report.txt").write_text(self.to_text(), encoding="utf-8")
        (out / "report.json").write_text(self.to_json() + "\n", encoding="utf-8")
        written["report.txt"] = str(out / "report.txt")
        written["report.json"] = str(out / "report.json")
        return written


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _garch_table(sec: dict[str, Any]) -> list[str]:
    names = stats.GARCH_PARAMS
    est = "".join(f"{sec[k]:>14.6g}" for k in names)
    se = "".join(f"{'(' + format(sec['stderr'][k], '.4g') + ')':>14}" for k in names)
    return [
        "  AR(2)-GARCH(1,1): r_t = a r_{t-1} + b r_{t-2} + e_t,"
        " s2_t = c + alpha e_{t-1}^2 + beta s2_{t-1}",
        "            " + "".join(f"{k:>14}" for k in names),
        "  estimate  " + est,
        "  (s.e.)    " + se,
        f"  log-likelihood {sec['loglik']:.6g}   n = {sec['n']}   converged = {sec['converged']}",
    ]


def build_report(inp: SeriesInput, lags: int = 200, bins: int = 50) -> Report:
    rep = Report(inp.source, {s: None for s in SECTIONS})

    if inp.basis_futures is not None and inp.index is not None:
        basis = stats.compute_basis_series(inp.basis_futures, inp.index)
        sec = {"n": len(basis), "mean": float(basis.mean()), "std": float(basis.std()),
               "min": float(basis.min()), "max": float(basis.max()),
               "ols_slope": stats.ols_slope(basis)}
        spd = inp.steps_per_day
        if spd and len(basis) >= 2 * spd:
            daily = [float(np.mean(np.abs(basis[i:i + spd]))) for i in range(0, len(basis), spd)]
            sec["mean_abs_first_day"], sec["mean_abs_last_day"] = daily[0], daily[-1]
            rep.tables["basis_daily"] = (("day", "mean_abs_basis"),
                                         [(d + 1, v) for d, v in enumerate(daily)])
        rep.sections["basis"] = sec
        rep.tables["basis_series"] = (("step", "basis"), list(enumerate(basis.tolist())))
        rep.tables["basis_hist"] = (("low", "high", "count"), histogram(basis, bins))
        try:
            g = stats.fit_gev(basis)
            rep.sections["gev"] = {"loc": g.loc, "scale": g.scale, "shape": g.shape,
                                   "loglik": g.loglik, "normal_loglik": g.normal_loglik,
                                   "beats_normal": g.beats_normal, "ks": g.ks,
                                   "converged": g.converged, "method": g.method}
        except stats.DegenerateSeries:
            pass

    if inp.best_bid is not None:
        sp = stats.bidask_spread_series(inp.best_bid, inp.best_ask)
        if len(sp.spreads):
            rep.sections["spread"] = {"n": len(sp.spreads), "skipped": sp.skipped,
                                      "mean": float(sp.spreads.mean()),
                                      "median": float(np.median(sp.spreads))}
            rep.tables["spread_hist"] = (("low", "high", "count"), histogram(sp.spreads, bins))

    if inp.futures is not None and len(inp.futures) > 2:
        r = stats.log_return_series(inp.futures)
        if np.ptp(r) > 0:
            rep.sections["returns"] = {"n": len(r), "mean": float(r.mean()), "std": float(r.std()),
                                       "excess_kurtosis": stats.excess_kurtosis(r),
                                       "zero_fraction": float(np.mean(r == 0))}
            rep.tables["return_hist"] = (("low", "high", "count"), histogram(r, bins))
            L = min(lags, len(r) - 1)
            a_abs, a_raw = stats.acf(np.abs(r), L), stats.acf(r, L)
            rep.sections["acf"] = {
                "lags": L, "band": a_raw.band,
                "abs_share_above_band_1_50": float(np.mean(a_abs.values[:50] > a_abs.band)),
                "raw_share_inside_band_11_50": float(np.mean(np.abs(a_raw.values[10:50]) <= a_raw.band)),
            }
            rep.tables["acf"] = (("lag", "abs_returns", "returns", "band"),
                                 [(int(k), float(x), float(y), a_raw.band)
                                  for k, x, y in zip(a_raw.lags, a_abs.values, a_raw.values)])
            g = stats.fit_ar2_garch11(r)
            rep.sections["garch"] = {**g.params, "stderr": g.stderr, "loglik": g.loglik, "n": g.n,
                                     "converged": g.converged, "beta_t": g.tstat("beta")}
    return rep
