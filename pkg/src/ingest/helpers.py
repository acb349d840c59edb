# ingest/helpers.py

"""
Purpose:
- Parses per-house half-hourly load and PV generation into exact integer watt-hours.
- Slices the parsed data into one solvable DayInstance per calendar day for a cohort of houses.
- Used by ingest/workers.py and by the run stage.
"""

from __future__ import annotations

import datetime as dt
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional, TextIO

import numpy as np
import pandas as pd
from loguru import logger

from config import CSV_COLUMNS, ENERGY_BOUND_WH, KWH_DECIMALS, KWH_WHOLE_DIGITS, STEP_MINUTES, STEPS_PER_DAY


class IngestError(ValueError):
    """Raised for input that cannot be turned into a Dataset. `row` is the 1-based file line when known."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.int64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HouseDayRecord:
    house_id: str
    date: dt.date
    load: np.ndarray     #Wh per interval, length T
    gen: np.ndarray      #Wh per interval, length T

    def __post_init__(self):
        object.__setattr__(self, "load", _frozen(self.load))
        object.__setattr__(self, "gen", _frozen(self.gen))
        if self.load.shape != self.gen.shape:
            raise IngestError(f"load/gen length mismatch for {self.house_id} {self.date}")

    def __eq__(self, other):
        if not isinstance(other, HouseDayRecord):
            return NotImplemented
        return (self.house_id == other.house_id and self.date == other.date
                and np.array_equal(self.load, other.load) and np.array_equal(self.gen, other.gen))


@dataclass(frozen=True)
class DayInstance:
    """
    Purpose:
    - One day's load matrix L and generation matrix G (N houses x T steps, integer Wh).
    - Row i belongs to house_ids[i]; rows are in sorted house_id order.
    """
    house_ids: tuple
    L: np.ndarray
    G: np.ndarray
    step_minutes: int = STEP_MINUTES
    day: Optional[dt.date] = None

    def __post_init__(self):
        object.__setattr__(self, "house_ids", tuple(self.house_ids))
        for name in ("L", "G"):
            matrix = _frozen(getattr(self, name))
            if self.house_ids and matrix.ndim != 2:
                matrix = matrix.reshape(len(self.house_ids), -1)
            object.__setattr__(self, name, matrix)

    @property
    def n_houses(self) -> int:
        return len(self.house_ids)

    @property
    def n_steps(self) -> int:
        return int(self.L.shape[1]) if self.L.ndim == 2 else 0

    def restrict(self, k: int) -> "DayInstance":
        """Single-house instance made of row k."""
        return DayInstance((self.house_ids[k],), self.L[k:k + 1], self.G[k:k + 1], self.step_minutes, self.day)


@dataclass(frozen=True)
class Dataset:
    records: dict = field(default_factory=dict)     #(house_id, date) -> HouseDayRecord
    rejected: tuple = ()                            #(house_id, date) keys dropped as incomplete
    steps_per_day: int = STEPS_PER_DAY

    @property
    def span(self) -> Optional[tuple]:
        if not self.records:
            return None
        dates = [key[1] for key in self.records]
        return min(dates), max(dates)

    def __len__(self) -> int:
        return len(self.records)


def _first_violation(checks: list) -> Optional[tuple]:
    """
    Purpose:
    - Finds the earliest frame row that fails any (mask, message) check.
    - Ties on the same row resolve to the check listed first.
    Returns:
    - Optional[tuple]: (row position, message) or None when every row passes.
    """
    best = None
    for mask, message in checks:
        hits = np.flatnonzero(np.asarray(mask, dtype=bool))
        if hits.size and (best is None or hits[0] < best[0]):
            best = (int(hits[0]), message)
    return best


def _kwh_to_wh(text: pd.Series) -> pd.Series:
    """Exact kWh -> Wh for strings already checked against the <=3 decimals rule."""
    parts = text.str.partition(".")
    whole = parts[0].astype("int64")
    frac = parts[2].str.ljust(KWH_DECIMALS, "0").astype("int64")
    return whole * 10 ** KWH_DECIMALS + frac


def _kwh_checks(text: pd.Series, name: str) -> list:
    number = text.str.fullmatch(r"-?\d+(\.\d+)?")
    negative = number & text.str.startswith("-")
    parts = text.str.partition(".")
    digits = parts[0].str.lstrip("-").str.lstrip("0").str.len()
    return [
        (~number, f"malformed {name} value"),
        (negative, f"negative {name} value"),
        (number & (parts[2].str.len() > KWH_DECIMALS),
         f"{name} has more than {KWH_DECIMALS} decimals (precision would be lost)"),
        (number & (digits > KWH_WHOLE_DIGITS), f"{name} exceeds the overflow bound ({KWH_WHOLE_DIGITS} whole digits)"),
    ]


def _dataset_from_frame(frame: pd.DataFrame, steps_per_day: int) -> Dataset:
    """
    Purpose:
    - Turns a validated long frame (house_id, date, interval, load_wh, pv_wh) into a Dataset.
    - (house, date) groups without all T intervals are rejected and logged, not raised.
    """
    if frame.empty:
        return Dataset(steps_per_day=steps_per_day)

    frame = frame.sort_values(["house_id", "date", "interval"], kind="mergesort")
    sizes = frame.groupby(["house_id", "date"], sort=True).size()
    complete = sizes[sizes == steps_per_day].index
    incomplete = list(sizes[sizes != steps_per_day].index)
    if incomplete:
        logger.warning(f"Rejected {len(incomplete)} incomplete house-day record(s), e.g. {incomplete[0]}")

    keyed = frame.set_index(["house_id", "date"])
    kept = keyed.loc[keyed.index.isin(complete)]
    loads = kept["load_wh"].to_numpy(dtype=np.int64).reshape(-1, steps_per_day)
    gens = kept["pv_wh"].to_numpy(dtype=np.int64).reshape(-1, steps_per_day)
    keys = kept.index[::steps_per_day]

    records = {}
    for (house_id, date), load, gen in zip(keys, loads, gens):
        records[(house_id, date)] = HouseDayRecord(house_id, date, load, gen)

    return Dataset(records=records, rejected=tuple(incomplete), steps_per_day=steps_per_day)


def parse_canonical_csv(stream: TextIO, steps_per_day: int = STEPS_PER_DAY) -> Dataset:
    """
    Purpose:
    - Reads the long-form canonical CSV `house_id,date,interval,load_kwh,pv_kwh`.
    - Converts kWh to integer Wh by exact x1000; no float ever touches an energy value.
    Args:
    - stream (TextIO): UTF-8 text, LF or CRLF line endings.
    - steps_per_day (int): T, the number of intervals a complete day carries.
    Returns:
    - Dataset: complete records only; incomplete ones are listed in `rejected`.
    Raises:
    - IngestError: malformed row, duplicate interval, interval out of range, >3 decimals, negative value.
    """
    try:
        frame = pd.read_csv(stream, dtype=str, keep_default_na=False, na_filter=False, skip_blank_lines=False)
    except pd.errors.EmptyDataError:
        raise IngestError("missing header", row=1)
    except pd.errors.ParserError as error:
        raise IngestError(f"malformed row ({error})")

    if [c.strip() for c in frame.columns] != CSV_COLUMNS:
        raise IngestError(f"header must be {','.join(CSV_COLUMNS)}", row=1)
    if frame.empty:
        return Dataset(steps_per_day=steps_per_day)
    frame.columns = CSV_COLUMNS
    frame = frame.fillna("").astype(str).apply(lambda col: col.str.strip())
    blank = (frame == "").all(axis=1)
    #blank lines after the last record are tolerated, anywhere else they are malformed rows
    trailing = blank.astype(int)[::-1].cummin()[::-1].astype(bool)
    frame, blank = frame[~trailing], blank[~trailing]
    if frame.empty:
        return Dataset(steps_per_day=steps_per_day)

    dates = pd.to_datetime(frame["date"], format="%Y-%m-%d", errors="coerce")
    interval_ok = frame["interval"].str.fullmatch(r"\d+")
    interval = pd.to_numeric(frame["interval"].where(interval_ok, "0"), errors="coerce").fillna(0).astype("int64")

    checks = [
        (blank, "malformed row (blank line)"),
        (frame["house_id"] == "", "missing house_id"),
        (~frame["date"].str.fullmatch(r"\d{4}-\d{2}-\d{2}") | dates.isna(), "malformed date"),
        (~interval_ok, "malformed interval"),
        (interval_ok & ((interval < 1) | (interval > steps_per_day)), f"interval out of range 1..{steps_per_day}"),
    ]
    checks += _kwh_checks(frame["load_kwh"], "load_kwh")
    checks += _kwh_checks(frame["pv_kwh"], "pv_kwh")
    checks.append((frame.assign(interval=interval).duplicated(["house_id", "date", "interval"]),
                   "duplicate (house_id, date, interval)"))

    bad = _first_violation(checks)
    if bad is not None:
        raise IngestError(bad[1], row=bad[0] + 2)   #+1 for the header, +1 for 1-based lines

    long_frame = pd.DataFrame({
        "house_id": frame["house_id"],
        "date": dates.dt.date,
        "interval": interval,
        "load_wh": _kwh_to_wh(frame["load_kwh"]),
        "pv_wh": _kwh_to_wh(frame["pv_kwh"]),
    })
    dataset = _dataset_from_frame(long_frame, steps_per_day)
    logger.debug(f"Parsed {len(frame)} rows into {len(dataset)} house-day records")
    return dataset


def parse_ausgrid_csv(stream: TextIO, steps_per_day: int = STEPS_PER_DAY) -> Dataset:
    """
    Purpose:
    - Reads the wide solar-home layout: one row per customer, day and consumption category,
      followed by one column per half-hour (`0:30` ... `0:00`).
    - GC (general consumption) and CL (controlled load) add up to load; GG (gross generation) is PV.
    - An optional title line above the header is skipped.
    Returns:
    - Dataset: same form and precision rules as parse_canonical_csv. A house-day needs both GC and GG rows.
    """
    text = stream.read()
    lines = text.splitlines()
    skip = 0 if lines and lines[0].lstrip().startswith("Customer") else 1
    try:
        frame = pd.read_csv(io.StringIO(text), skiprows=skip, dtype=str,
                            keep_default_na=False, na_filter=False)
    except pd.errors.EmptyDataError:
        return Dataset(steps_per_day=steps_per_day)
    frame.columns = [c.strip() for c in frame.columns]

    missing = [c for c in ("Customer", "Consumption Category", "date") if c not in frame.columns]
    if missing:
        raise IngestError(f"wide-format header lacks {missing}", row=skip + 1)
    if frame.empty:
        return Dataset(steps_per_day=steps_per_day)

    first_step = frame.columns.get_loc("date") + 1
    step_cols = list(frame.columns[first_step:first_step + steps_per_day])
    if len(step_cols) != steps_per_day:
        raise IngestError(f"expected {steps_per_day} interval columns, found {len(step_cols)}", row=skip + 1)

    frame = frame.fillna("").astype(str)
    house = frame["Customer"].str.strip()
    category = frame["Consumption Category"].str.strip().str.upper()
    dates = pd.to_datetime(frame["date"].str.strip(), format="%d/%m/%Y", errors="coerce")
    values = frame[step_cols].apply(lambda col: col.str.strip())

    checks = [
        (house == "", "missing Customer"),
        (dates.isna(), "malformed date"),
        (~category.isin(["GC", "CL", "GG"]), "unknown consumption category"),
    ]
    for col in step_cols:
        checks += _kwh_checks(values[col], f"'{col}'")
    checks.append((pd.DataFrame({"h": house, "d": dates, "k": category}).duplicated(),
                   "duplicate (Customer, date, category)"))
    bad = _first_violation(checks)
    if bad is not None:
        raise IngestError(bad[1], row=bad[0] + skip + 2)

    wh = values.apply(_kwh_to_wh)
    wh.columns = range(1, steps_per_day + 1)
    wh["house_id"] = house
    wh["date"] = dates.dt.date
    wh["kind"] = np.where(category == "GG", "pv_wh", "load_wh")
    long_wh = wh.melt(id_vars=["house_id", "date", "kind"], var_name="interval", value_name="wh")

    #GC and CL both land on load_wh and are summed here
    table = long_wh.pivot_table(index=["house_id", "date", "interval"], columns="kind",
                                values="wh", aggfunc="sum")
    table = table.reindex(columns=["load_wh", "pv_wh"]).reset_index()

    categories = pd.DataFrame({"house_id": house, "date": dates.dt.date, "category": category})
    usable = categories.groupby(["house_id", "date"])["category"].agg(lambda s: {"GC", "GG"} <= set(s))
    keep = table.set_index(["house_id", "date"]).index.isin(usable[usable].index)
    table = table[keep]
    if table.empty:
        return Dataset(steps_per_day=steps_per_day)

    long_frame = pd.DataFrame({
        "house_id": table["house_id"],
        "date": table["date"],
        "interval": table["interval"].astype("int64"),
        "load_wh": table["load_wh"].astype("int64"),
        "pv_wh": table["pv_wh"].astype("int64"),
    })
    return _dataset_from_frame(long_frame, steps_per_day)


def _format_kwh(wh: np.ndarray) -> list:
    return [f"{value // 1000}.{value % 1000:03d}" for value in wh.tolist()]


def write_canonical_csv(ds: Dataset, stream: TextIO) -> None:
    """Writes `ds` as canonical CSV, rows ordered by house_id, then date, then interval."""
    rows = []
    for key in sorted(ds.records):
        record = ds.records[key]
        steps = len(record.load)
        rows.append(pd.DataFrame({
            "house_id": record.house_id,
            "date": record.date.isoformat(),
            "interval": np.arange(1, steps + 1),
            "load_kwh": _format_kwh(record.load),
            "pv_kwh": _format_kwh(record.gen),
        }))
    frame = pd.concat(rows, ignore_index=True) if rows else pd.DataFrame(columns=CSV_COLUMNS)
    frame.to_csv(stream, index=False, lineterminator="\n")


def _date_range(start: dt.date, end: dt.date) -> Iterable[dt.date]:
    for offset in range((end - start).days + 1):
        yield start + dt.timedelta(days=offset)


def select_cohort(ds: Dataset, ids: list, start: dt.date, end: dt.date,
                  step_minutes: int = STEP_MINUTES) -> tuple:
    """
    Purpose:
    - Builds one DayInstance per date in [start, end] for which every house in `ids` has a complete record.
    - Dates with a missing house are skipped, never zero-filled.
    Args:
    - ds (Dataset): Parsed data.
    - ids (list[str]): Non-empty, distinct house ids.
    - start, end (date): Inclusive range, start <= end.
    Returns:
    - tuple[list[DayInstance], list[date]]: Instances ordered by date, and the skipped dates.
    """
    if not ids:
        raise ValueError("cohort needs at least one house id")
    if len(set(ids)) != len(ids):
        raise ValueError("cohort house ids must be distinct")
    if start > end:
        raise ValueError(f"start {start} is after end {end}")

    house_ids = sorted(ids)
    instances, skipped = [], []
    for day in _date_range(start, end):
        rows = [ds.records.get((house, day)) for house in house_ids]
        if any(row is None for row in rows):
            skipped.append(day)
            continue
        instances.append(DayInstance(
            house_ids=tuple(house_ids),
            L=np.stack([row.load for row in rows]),
            G=np.stack([row.gen for row in rows]),
            step_minutes=step_minutes,
            day=day,
        ))

    if skipped:
        logger.warning(f"Skipped {len(skipped)} date(s) with missing houses, first {skipped[0]}")
    return instances, skipped


def validate_day(d: DayInstance) -> list:
    """Returns a list of violations; an empty list means the instance is solvable."""
    violations = []
    if d.n_houses == 0:
        violations.append("zero houses")
    if d.L.ndim != 2 or d.n_steps == 0:
        violations.append("zero time steps")
    if d.L.shape != d.G.shape:
        violations.append(f"L shape {d.L.shape} differs from G shape {d.G.shape}")
    if violations:
        return violations

    for name, matrix in (("L", d.L), ("G", d.G)):
        if not np.issubdtype(matrix.dtype, np.integer) and not np.all(np.isfinite(matrix)):
            violations.append(f"non-finite entry in {name}")
        if (matrix < 0).any():
            violations.append(f"negative entry in {name}")

    peak = int(max(d.L.max(), d.G.max()))
    if d.n_houses * d.n_steps * peak >= ENERGY_BOUND_WH:
        violations.append(f"overflow bound: N*T*max-entry = {d.n_houses * d.n_steps * peak} >= 2^40")
    return violations
