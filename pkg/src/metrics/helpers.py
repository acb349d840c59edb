#metrics/helpers.py

"""
Purpose:
- Evaluation indices of a day's schedule (% load met per house and cohort, % PV utilization) and their
  daily / monthly / annual aggregation, plus the houses-supplied histogram.
- Writes metrics_daily.csv, metrics_period.csv and histogram.csv.
Works with:
- run/workers.py
- run/helpers.py
"""

from __future__ import annotations

import datetime as dt
import os
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from typing import Optional

import numpy as np
import pandas as pd
from loguru import logger

from config import OUTPUT_FILES, STRATEGY_ORDER

SOLVED = "Solved"
INFEASIBLE = "Infeasible"
LIMIT_EXCEEDED = "LimitExceeded"
GRANULARITIES = ("daily", "monthly", "annual")


def _ratio(num: int, den: int, when_empty: int) -> Fraction:
    return Fraction(when_empty) if den == 0 else Fraction(int(num), int(den))


def format_pct(value: Optional[Fraction]) -> str:
    """Fraction -> percentage text with 2 decimals, round-half-even; empty for missing values."""
    if value is None:
        return ""
    with localcontext() as ctx:
        ctx.prec = 40
        pct = Decimal(value.numerator * 100) / Decimal(value.denominator)
        return str(pct.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def format_mean(value: Optional[Fraction]) -> str:
    if value is None:
        return ""
    with localcontext() as ctx:
        ctx.prec = 40
        mean = Decimal(value.numerator) / Decimal(value.denominator)
        return str(mean.quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def strategy_rank(label: str) -> int:
    return STRATEGY_ORDER.index(label) if label in STRATEGY_ORDER else len(STRATEGY_ORDER)


def supplied_load(U: np.ndarray, L: np.ndarray) -> np.ndarray:
    """Y = U o L."""
    U = np.asarray(U, dtype=np.int64)
    L = np.asarray(L, dtype=np.int64)
    if U.shape != L.shape:
        raise ValueError(f"U shape {U.shape} does not match L shape {L.shape}")
    return U * L


def load_met_fraction(Y: np.ndarray, L: np.ndarray) -> np.ndarray:
    """
    Purpose:
    - Per-house share of daily load that was supplied.
    - A house with no load counts as fully met (1.0).
    """
    supplied = np.asarray(Y, dtype=np.int64).sum(axis=1)
    load = np.asarray(L, dtype=np.int64).sum(axis=1)
    if (load == 0).any():
        logger.debug(f"{int((load == 0).sum())} house(s) with zero load counted as fully met")
    return np.array([float(_ratio(s, l, 1)) for s, l in zip(supplied.tolist(), load.tolist())])


def pv_utilization(Y: np.ndarray, G: np.ndarray) -> float:
    """Share of the available PV energy that reached a load; 0.0 when there was no PV."""
    total_gen = int(np.asarray(G, dtype=np.int64).sum())
    if total_gen == 0:
        logger.debug("zero generation, utilization reported as 0")
    return float(_ratio(int(np.asarray(Y, dtype=np.int64).sum()), total_gen, 0))


@dataclass(frozen=True)
class DayResult:
    date: dt.date
    strategy: str
    house_ids: tuple
    supplied_wh: np.ndarray         #per house
    load_wh: np.ndarray             #per house
    gen_wh: np.ndarray              #per house
    houses_supplied: int
    status: str
    nodes: int = 0
    objective: Optional[int] = None

    def __post_init__(self):
        if (np.asarray(self.supplied_wh) > np.asarray(self.load_wh)).any():
            raise ValueError(f"{self.date} {self.strategy}: supplied energy exceeds load")
        if int(np.sum(self.supplied_wh)) > int(np.sum(self.gen_wh)):
            raise ValueError(f"{self.date} {self.strategy}: supplied energy exceeds the day's generation")

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    @property
    def total_gen_wh(self) -> int:
        return int(np.sum(self.gen_wh))

    def house_fractions(self) -> list:
        return [_ratio(s, l, 1) for s, l in zip(self.supplied_wh.tolist(), self.load_wh.tolist())]

    def cohort_fraction(self) -> Fraction:
        return _ratio(int(self.supplied_wh.sum()), int(self.load_wh.sum()), 1)

    def utilization(self) -> Fraction:
        return _ratio(int(self.supplied_wh.sum()), self.total_gen_wh, 0)

    def gen_over_load(self) -> Fraction:
        """Daily generation over daily load, the alternative utilization reading."""
        return _ratio(self.total_gen_wh, int(self.load_wh.sum()), 0)


def day_result(d, strategy: str, U: Optional[np.ndarray], status: str, nodes: int = 0,
               objective: Optional[int] = None) -> DayResult:
    """
    Purpose:
    - Summarises one solved (or unsolved) day for one strategy.
    Args:
    - d (DayInstance): The day.
    - strategy (str): Strategy label.
    - U (np.ndarray or None): Switching matrix; None for days without a schedule.
    - status (str): Solved, Infeasible or LimitExceeded.
    """
    if U is None:
        U = np.zeros_like(d.L)
    Y = supplied_load(U, d.L)
    return DayResult(
        date=d.day,
        strategy=strategy,
        house_ids=tuple(d.house_ids),
        supplied_wh=Y.sum(axis=1),
        load_wh=d.L.sum(axis=1),
        gen_wh=d.G.sum(axis=1),
        houses_supplied=int((np.asarray(U).sum(axis=1) > 0).sum()),
        status=status,
        nodes=nodes,
        objective=objective,
    )


def houses_supplied_histogram(results: list, n_houses: Optional[int] = None) -> list:
    """
    Purpose:
    - Cumulative tally: for k = N..0, the number of days on which at least k houses were supplied.
    - Days without a schedule count as 0 houses supplied.
    Returns:
    - list[tuple[int, int]]: (k, days) pairs, k descending.
    """
    if n_houses is None:
        n_houses = len(results[0].house_ids) if results else 0
    counts = [r.houses_supplied if r.solved else 0 for r in results]
    return [(k, sum(1 for c in counts if c >= k)) for k in range(n_houses, -1, -1)]


@dataclass(frozen=True)
class PeriodSummary:
    granularity: str
    label: str
    strategy: str
    load_met: Optional[Fraction]            #cohort, energy weighted; None if no solved day
    house_load_met: tuple                   #per house, same convention
    pv_utilization: Optional[Fraction]
    mean_houses_supplied: Optional[Fraction]
    days_counted: int
    infeasible_days: int                    #Infeasible and LimitExceeded days

    def as_dict(self) -> dict:
        def _float(value):
            return None if value is None else float(value)
        return {
            "granularity": self.granularity,
            "period": self.label,
            "strategy": self.strategy,
            "load_met_pct": _float(None if self.load_met is None else self.load_met * 100),
            "house_load_met_pct": [_float(None if f is None else f * 100) for f in self.house_load_met],
            "pv_utilization_pct": _float(None if self.pv_utilization is None else self.pv_utilization * 100),
            "mean_houses_supplied": _float(self.mean_houses_supplied),
            "days_counted": self.days_counted,
            "infeasible_days": self.infeasible_days,
        }


def _period_label(day: dt.date, granularity: str, first: dt.date, last: dt.date) -> str:
    if granularity == "daily":
        return day.isoformat()
    if granularity == "monthly":
        return f"{day.year:04d}-{day.month:02d}"
    return f"{first.isoformat()}..{last.isoformat()}"


def _ordered(results: list) -> list:
    return sorted(results, key=lambda r: (strategy_rank(r.strategy), r.strategy, r.date))


def aggregate(results: list, granularity: str) -> list:
    """
    Purpose:
    - Groups day results by strategy and period and computes energy-weighted indices over solved days.
    - Unsolved days are counted in infeasible_days and left out of every mean.
    Args:
    - results (list[DayResult]): Any mix of strategies; one house cohort.
    - granularity (str): daily, monthly or annual (one period over the full span).
    Returns:
    - list[PeriodSummary]: Strategy order first, then period.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}, got '{granularity}'")
    if not results:
        return []
    first = min(r.date for r in results)
    last = max(r.date for r in results)
    n_houses = len(results[0].house_ids)

    frame = pd.DataFrame({
        "strategy": [r.strategy for r in _ordered(results)],
        "period": [_period_label(r.date, granularity, first, last) for r in _ordered(results)],
        "result": _ordered(results),
    })

    summaries = []
    for (strategy, label), group in frame.groupby(["strategy", "period"], sort=False):
        solved = [r for r in group["result"] if r.solved]
        unsolved = len(group) - len(solved)
        if not solved:
            summaries.append(PeriodSummary(granularity, label, strategy, None, (None,) * n_houses,
                                           None, None, 0, unsolved))
            continue
        supplied = np.sum([r.supplied_wh for r in solved], axis=0)
        load = np.sum([r.load_wh for r in solved], axis=0)
        gen = sum(r.total_gen_wh for r in solved)
        summaries.append(PeriodSummary(
            granularity=granularity,
            label=label,
            strategy=strategy,
            load_met=_ratio(int(supplied.sum()), int(load.sum()), 1),
            house_load_met=tuple(_ratio(s, l, 1) for s, l in zip(supplied.tolist(), load.tolist())),
            pv_utilization=_ratio(int(supplied.sum()), gen, 0),
            mean_houses_supplied=Fraction(sum(r.houses_supplied for r in solved), len(solved)),
            days_counted=len(solved),
            infeasible_days=unsolved,
        ))
    return summaries


def daily_frame(results: list) -> pd.DataFrame:
    if not results:
        return pd.DataFrame(columns=["date", "strategy"])
    house_ids = results[0].house_ids
    rows = []
    for r in sorted(results, key=lambda r: (r.date, strategy_rank(r.strategy), r.strategy)):
        row = {"date": r.date.isoformat(), "strategy": r.strategy}
        fractions = r.house_fractions() if r.solved else [None] * len(house_ids)
        for house, fraction in zip(house_ids, fractions):
            row[f"house_{house}_load_met_pct"] = format_pct(fraction)
        row["cohort_load_met_pct"] = format_pct(r.cohort_fraction() if r.solved else None)
        row["pv_utilization_pct"] = format_pct(r.utilization() if r.solved else None)
        row["gen_over_load_pct"] = format_pct(r.gen_over_load())
        row["houses_supplied"] = r.houses_supplied if r.solved else 0
        row["status"] = r.status
        rows.append(row)
    return pd.DataFrame(rows)


def period_frame(summaries: list, house_ids: tuple) -> pd.DataFrame:
    rows = []
    for s in summaries:
        row = {"granularity": s.granularity, "period": s.label, "strategy": s.strategy,
               "cohort_load_met_pct": format_pct(s.load_met)}
        for house, fraction in zip(house_ids, s.house_load_met):
            row[f"house_{house}_load_met_pct"] = format_pct(fraction)
        row["pv_utilization_pct"] = format_pct(s.pv_utilization)
        row["mean_houses_supplied"] = format_mean(s.mean_houses_supplied)
        row["days_counted"] = s.days_counted
        row["infeasible_days"] = s.infeasible_days
        rows.append(row)
    return pd.DataFrame(rows)


def histogram_frame(results: list) -> pd.DataFrame:
    """
    Purpose:
    - One row per k (houses supplied, descending), per strategy the cumulative day count and the cohort
      % load met over the solved days in that count.
    """
    if not results:
        return pd.DataFrame(columns=["houses_supplied"])
    n_houses = len(results[0].house_ids)
    strategies = sorted({r.strategy for r in results}, key=lambda s: (strategy_rank(s), s))
    table = pd.DataFrame({"houses_supplied": list(range(n_houses, -1, -1))})
    for strategy in strategies:
        picked = [r for r in results if r.strategy == strategy]
        table[f"{strategy}_days"] = [days for _, days in houses_supplied_histogram(picked, n_houses)]
        pcts = []
        for k in table["houses_supplied"]:
            counted = [r for r in picked if r.solved and r.houses_supplied >= k]
            supplied = sum(int(r.supplied_wh.sum()) for r in counted)
            load = sum(int(r.load_wh.sum()) for r in counted)
            pcts.append(format_pct(_ratio(supplied, load, 1) if counted else None))
        table[f"{strategy}_load_met_pct"] = pcts
    return table


def write_metrics(results: list, out_dir: str) -> dict:
    """
    Purpose:
    - Writes the daily table, every period granularity and the histogram as UTF-8, LF-terminated CSV.
    Returns:
    - dict: {"daily": path, "period": path, "histogram": path}
    """
    os.makedirs(out_dir, exist_ok=True)
    house_ids = results[0].house_ids if results else ()
    summaries = [s for g in GRANULARITIES for s in aggregate(results, g)]
    frames = {
        "daily": daily_frame(results),
        "period": period_frame(summaries, house_ids),
        "histogram": histogram_frame(results),
    }
    paths = {}
    for key, frame in frames.items():
        paths[key] = os.path.join(out_dir, OUTPUT_FILES[key])
        frame.to_csv(paths[key], index=False, encoding="utf-8", lineterminator="\n")
    logger.info(f"Metrics written to {out_dir}")
    return paths
