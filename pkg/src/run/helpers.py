#run/helpers.py

"""
Purpose:
- Run configuration: flat key = value file, command-line overrides, validation.
- Report writers for the run stage: schedule.csv, summary.json, per-figure CSV series and sample-day series.
Works with:
- run/workers.py
- run/user_interface.py
"""

from __future__ import annotations

import configparser
import datetime as dt
import json
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
from loguru import logger

from config import (DEFAULT_HOUSE_IDS, MAX_NODES, MAX_SECONDS, MIN_DOWN_STEPS, MIN_UP_STEPS, OUTPUT_FILES,
                    STEP_MINUTES, STEPS_PER_DAY, STRATEGY_ORDER, WEIGHT_SCALE)
from ingest.workers import PARSERS
from metrics.helpers import aggregate, format_pct, strategy_rank
from model.helpers import StrategyKind, StrategySpec
from solve.helpers import SolveLimits


class ConfigError(ValueError):
    """Config file or flags cannot be turned into a RunConfig."""


class DataError(RuntimeError):
    """Data file missing, or nothing in it can be scheduled."""


class ConsistencyError(RuntimeError):
    """A solver answer failed exact re-verification or disagreed with the oracle."""

    def __init__(self, message: str, dump: Optional[str] = None):
        super().__init__(message)
        self.dump = dump

    def __reduce__(self):
        #keep the dump when raised inside a pool worker
        return self.__class__, (str(self), self.dump)


@dataclass(frozen=True)
class RunConfig:
    data_path: str
    start: dt.date
    end: dt.date
    house_ids: tuple = tuple(DEFAULT_HOUSE_IDS)
    strategies: tuple = tuple(STRATEGY_ORDER)
    data_format: str = "canonical"
    min_up: int = MIN_UP_STEPS
    min_down: int = MIN_DOWN_STEPS
    weight_scale: int = WEIGHT_SCALE
    literal_updown_signs: bool = False
    max_nodes: int = MAX_NODES
    max_seconds: float = MAX_SECONDS
    lexicographic_ties: bool = True
    oracle_check: bool = False
    jobs: int = 1
    out_dir: str = "out"
    steps_per_day: int = STEPS_PER_DAY
    step_minutes: int = STEP_MINUTES
    sample_dates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        if not self.house_ids:
            raise ConfigError("at least one house id is required")
        if len(set(self.house_ids)) != len(self.house_ids):
            raise ConfigError("house ids must be distinct")
        if self.start > self.end:
            raise ConfigError(f"start {self.start} is after end {self.end}")
        if self.min_up < 1 or self.min_down < 1:
            raise ConfigError(f"min_up and min_down must be >= 1, got {self.min_up}/{self.min_down}")
        if self.weight_scale < 1:
            raise ConfigError(f"weight_scale must be >= 1, got {self.weight_scale}")
        if self.max_nodes < 1 or self.max_seconds <= 0:
            raise ConfigError("solver limits must be positive")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.data_format not in PARSERS:
            raise ConfigError(f"data_format must be one of {sorted(PARSERS)}, got '{self.data_format}'")
        if self.steps_per_day < 1 or self.step_minutes < 1:
            raise ConfigError("steps_per_day and step_minutes must be >= 1")

    def strategy_spec(self, label: str) -> StrategySpec:
        return StrategySpec(StrategyKind.parse(label), self.min_up, self.min_down,
                            self.weight_scale, self.literal_updown_signs)

    @property
    def limits(self) -> SolveLimits:
        return SolveLimits(self.max_nodes, self.max_seconds, self.lexicographic_ties)

    def as_dict(self) -> dict:
        out = asdict(self)
        for key in ("start", "end"):
            out[key] = out[key].isoformat()
        out["sample_dates"] = [d.isoformat() for d in self.sample_dates]
        out["house_ids"] = list(self.house_ids)
        out["strategies"] = list(self.strategies)
        return out


# -- parsing ---------------------------------------------------------------

def _parse_date(text: str) -> dt.date:
    return dt.date.fromisoformat(text.strip())


def _parse_list(text: str) -> tuple:
    return tuple(item.strip() for item in text.split(",") if item.strip())


def _parse_strategies(text: str) -> tuple:
    labels = [StrategyKind.parse(item).value for item in _parse_list(text)]
    return tuple(sorted(dict.fromkeys(labels), key=strategy_rank))


def _parse_bool(text: str) -> bool:
    states = configparser.ConfigParser.BOOLEAN_STATES
    if text.strip().lower() not in states:
        raise ValueError(f"not a boolean: '{text}'")
    return states[text.strip().lower()]


# config key -> (RunConfig field, parser)
CONFIG_KEYS = {
    "data": ("data_path", str.strip),
    "data_format": ("data_format", str.strip),
    "houses": ("house_ids", _parse_list),
    "start": ("start", _parse_date),
    "end": ("end", _parse_date),
    "strategies": ("strategies", _parse_strategies),
    "min_up": ("min_up", int),
    "min_down": ("min_down", int),
    "weight_scale": ("weight_scale", int),
    "literal_updown_signs": ("literal_updown_signs", _parse_bool),
    "max_nodes": ("max_nodes", int),
    "max_seconds": ("max_seconds", float),
    "lexicographic_ties": ("lexicographic_ties", _parse_bool),
    "oracle_check": ("oracle_check", _parse_bool),
    "jobs": ("jobs", int),
    "out": ("out_dir", str.strip),
    "steps_per_day": ("steps_per_day", int),
    "step_minutes": ("step_minutes", int),
    "sample_dates": ("sample_dates", lambda text: tuple(_parse_date(d) for d in _parse_list(text))),
}

_SECTION = "run"


def _convert(key: str, raw) -> tuple:
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown config key '{key}'")
    name, parse = CONFIG_KEYS[key]
    if not isinstance(raw, str):
        return name, raw
    try:
        return name, parse(raw)
    except ValueError as e:
        raise ConfigError(f"bad value for '{key}': {e}") from e


def load_config(path: Optional[str], overrides: Optional[dict] = None) -> RunConfig:
    """
    Purpose:
    - Reads a flat `key = value` file (implicit section, `#` comments) and applies command-line overrides.
    - Relative data / out paths in the file resolve against the file's directory.
    Args:
    - path (str or None): Config file; None builds the config from overrides alone.
    - overrides (dict, optional): Config keys to values (strings or already-parsed); None values are ignored.
    Returns:
    - RunConfig
    Raises:
    - ConfigError: unreadable file, unknown key, bad value, or missing data/start/end.
    """
    values = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"Config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#",),
                                           inline_comment_prefixes=("#",), delimiters=("=",))
        parser.optionxform = str
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
        try:
            parser.read_string(f"[{_SECTION}]\n{text}", source=path)
        except configparser.Error as e:
            raise ConfigError(f"cannot parse {path}: {e}") from e
        if parser.sections() != [_SECTION]:
            raise ConfigError(f"{path}: sections are not supported, use plain key = value lines")

        base = os.path.dirname(os.path.abspath(path))
        for key, raw in parser.items(_SECTION):
            name, value = _convert(key.strip().lower(), raw)
            if name in ("data_path", "out_dir") and not os.path.isabs(value):
                value = os.path.normpath(os.path.join(base, value))
            values[name] = value

    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        name, value = _convert(key, raw)
        values[name] = value

    for required in ("data_path", "start", "end"):
        if required not in values:
            raise ConfigError(f"'{required.replace('_path', '')}' must be set in the config file or on the command line")
    try:
        return RunConfig(**values)
    except TypeError as e:
        raise ConfigError(str(e)) from e


# -- writers ---------------------------------------------------------------

def _write_frame(frame: pd.DataFrame, out_dir: str, key: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, OUTPUT_FILES[key])
    frame.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def schedule_frame(outcomes: list, steps: int) -> pd.DataFrame:
    """One row per (house, date, strategy) of every solved outcome; s1..sT hold the 0/1 switching row."""
    columns = ["house_id", "date", "strategy"] + [f"s{t + 1}" for t in range(steps)]
    rows = []
    for outcome in outcomes:
        if outcome.U is None or outcome.status != "Solved":
            continue
        for house, row in zip(outcome.house_ids, outcome.U.tolist()):
            rows.append([house, outcome.day.isoformat(), outcome.strategy] + row)
    return pd.DataFrame(rows, columns=columns)


def write_schedule(outcomes: list, steps: int, out_dir: str) -> str:
    return _write_frame(schedule_frame(outcomes, steps), out_dir, "schedule")


def write_summary(results: list, outcomes: list, cfg: RunConfig, skipped: list, invalid: dict,
                  wall_seconds: float, out_dir: str) -> str:
    """
    Purpose:
    - summary.json: per-strategy annual summary, unsolved-day lists and node counts.
    - Everything run-specific (timestamp, wall time, config echo) sits under "metadata".
    """
    annual = {s.strategy: s for s in aggregate(results, "annual")}
    strategies = {}
    for label in sorted({r.strategy for r in results}, key=strategy_rank):
        picked = [r for r in results if r.strategy == label]
        strategies[label] = {
            "days": len(picked),
            "annual": annual[label].as_dict() if label in annual else None,
            "infeasible_dates": [r.date.isoformat() for r in picked if r.status == "Infeasible"],
            "limit_exceeded_dates": [r.date.isoformat() for r in picked if r.status == "LimitExceeded"],
            "nodes_explored": int(sum(r.nodes for r in picked)),
        }
    summary = {
        "metadata": {
            "generated_at": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
            "wall_seconds": round(wall_seconds, 3),
            "config": cfg.as_dict(),
        },
        "day_results": len(results),
        "strategies": strategies,
        "skipped_dates": [d.isoformat() for d in skipped],
        "invalid_dates": {d.isoformat(): v for d, v in sorted(invalid.items())},
        "oracle_checked": sum(1 for o in outcomes if o.oracle_checked),
    }
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, OUTPUT_FILES["summary"])
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(summary, handle, indent=2)
        handle.write("\n")
    return path


def emit_plot_data(results: list, out_dir: str) -> dict:
    """
    Purpose:
    - Data behind the daily per-house, monthly cohort and annual per-house load-met charts, as CSV.
    Returns:
    - dict: {"fig4": path, "fig5": path, "fig6": path}
    """
    if not results:
        raise ValueError("emit_plot_data needs at least one day result")
    house_ids = results[0].house_ids
    strategies = sorted({r.strategy for r in results}, key=strategy_rank)

    #daily, one row per (date, house)
    daily = {}
    for r in results:
        fractions = r.house_fractions() if r.solved else [None] * len(house_ids)
        for house, fraction in zip(house_ids, fractions):
            daily.setdefault((r.date, house), {})[r.strategy] = format_pct(fraction)
    fig4 = pd.DataFrame([
        {"date": day.isoformat(), "house_id": house, **{s: row.get(s, "") for s in strategies}}
        for (day, house), row in sorted(daily.items(), key=lambda item: (item[0][0], house_ids.index(item[0][1])))
    ])

    #monthly cohort series plus mean daily load and generation
    monthly = {}
    for s in aggregate(results, "monthly"):
        monthly.setdefault(s.label, {})[s.strategy] = format_pct(s.load_met)
    energy = {}
    for r in results:
        if r.strategy == strategies[0]:
            month = f"{r.date.year:04d}-{r.date.month:02d}"
            energy.setdefault(month, []).append((int(r.load_wh.sum()), r.total_gen_wh))
    fig5_rows = []
    for month in sorted(monthly):
        days = energy.get(month, [])
        row = {"month": month, **{s: monthly[month].get(s, "") for s in strategies}}
        row["mean_daily_load_kwh"] = f"{np.mean([load for load, _ in days]) / 1000:.3f}" if days else ""
        row["mean_daily_gen_kwh"] = f"{np.mean([gen for _, gen in days]) / 1000:.3f}" if days else ""
        fig5_rows.append(row)
    fig5 = pd.DataFrame(fig5_rows)

    #annual per house
    annual = {s.strategy: s for s in aggregate(results, "annual")}
    fig6 = pd.DataFrame([
        {"house_id": house, **{s: format_pct(annual[s].house_load_met[i]) for s in strategies}}
        for i, house in enumerate(house_ids)
    ])

    return {key: _write_frame(frame, out_dir, key) for key, frame in
            (("fig4", fig4), ("fig5", fig5), ("fig6", fig6))}


def emit_sample_day_data(outcomes: list, instances: list, sample_dates: tuple, out_dir: str) -> dict:
    """
    Purpose:
    - For each sample date: per-house daily load and supplied energy per strategy (stacked-bar series),
      and per-step load, supplied load and PV per house and strategy (profile series).
    - Dates not present in the run are logged and skipped.
    """
    if not sample_dates:
        return {}
    by_day = {d.day: d for d in instances}
    totals, steps = [], []
    for day in sample_dates:
        if day not in by_day:
            logger.warning(f"sample date {day} is not part of this run")
            continue
        d = by_day[day]
        picked = sorted((o for o in outcomes if o.day == day), key=lambda o: strategy_rank(o.strategy))
        for outcome in picked:
            U = outcome.U if (outcome.U is not None and outcome.status == "Solved") else np.zeros_like(d.L)
            Y = U * d.L
            for i, house in enumerate(d.house_ids):
                totals.append({"date": day.isoformat(), "strategy": outcome.strategy, "house_id": house,
                               "load_wh": int(d.L[i].sum()), "supplied_wh": int(Y[i].sum()),
                               "status": outcome.status})
                for t in range(d.n_steps):
                    steps.append({"date": day.isoformat(), "strategy": outcome.strategy, "house_id": house,
                                  "step": t + 1, "load_wh": int(d.L[i, t]), "supplied_wh": int(Y[i, t]),
                                  "pv_wh": int(d.G[i, t])})
    if not totals:
        return {}
    return {
        "sample_totals": _write_frame(pd.DataFrame(totals), out_dir, "sample_totals"),
        "sample_steps": _write_frame(pd.DataFrame(steps), out_dir, "sample_steps"),
    }
