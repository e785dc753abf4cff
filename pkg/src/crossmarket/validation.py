"""Stylized-fact checks on a simulated run (basis, tails, clustering, memory)."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import stats


@dataclass
class StylizedFacts:
    basis_slope: float
    basis_day1: float  # mean |basis| on the first day
    basis_last: float  # mean |basis| on the final day
    gev_loglik: float
    normal_loglik: float
    gev_shape: float
    kurtosis: float
    garch_beta: float
    garch_alpha: float
    garch_beta_t: float
    abs_acf_outside: float  # share of lags 1..50 above the white-noise band
    raw_acf_inside: float  # share of lags 11..50 inside the band

    # criterion predicates
    @property
    def basis_converges(self) -> bool:
        return self.basis_slope < 0 and self.basis_last < self.basis_day1

    @property
    def gev_beats_normal(self) -> bool:
        return self.gev_loglik > self.normal_loglik

    @property
    def fat_tails(self) -> bool:
        return self.kurtosis > 1.0

    @property
    def volatility_clustering(self) -> bool:
        return (0.60 <= self.garch_beta <= 0.98 and self.garch_alpha + self.garch_beta < 1.0
                and self.garch_beta_t > 3.0)

    @property
    def long_memory(self) -> bool:
        return self.abs_acf_outside >= 0.70 and self.raw_acf_inside >= 0.90

    def as_dict(self) -> dict:
        d = asdict(self)
        d.update(basis_converges=self.basis_converges, gev_beats_normal=self.gev_beats_normal,
                 fat_tails=self.fat_tails, volatility_clustering=self.volatility_clustering,
                 long_memory=self.long_memory)
        return d


def stylized_facts(futures: np.ndarray, index: np.ndarray, steps_per_day: int,
                   fit_garch: bool = True) -> StylizedFacts:
    basis = stats.compute_basis_series(futures, index)
    slope = stats.ols_slope(basis)
    day1 = float(np.mean(np.abs(basis[:steps_per_day])))
    last = float(np.mean(np.abs(basis[-steps_per_day:])))
    gev = stats.fit_gev(basis)
    r = stats.log_return_series(futures)
    kurt = stats.excess_kurtosis(r)
    if fit_garch:
        g = stats.fit_ar2_garch11(r)
        beta, alpha, bt = g.beta, g.alpha, g.tstat("beta")
    else:
        beta = alpha = bt = math.nan
    abs_acf = stats.acf(np.abs(r), 50)
    raw_acf = stats.acf(r, 50)
    outside = float(np.mean(abs_acf.values > abs_acf.band))
    inside = float(np.mean(np.abs(raw_acf.values[10:50]) <= raw_acf.band))
    return StylizedFacts(slope, day1, last, gev.loglik, gev.normal_loglik, gev.shape, kurt,
                         beta, alpha, bt, outside, inside)


def record_facts(record, fit_garch: bool = True) -> StylizedFacts:
    return stylized_facts(record.futures_prices, record.index,
                          record.config.run.steps_per_day, fit_garch)
