#ingest/workers.py

"""
Purpose:
- Worker that uses ingest/helpers.py to read a data file and cut it into validated day instances.
Works with:
- run/workers.py
- ingest/helpers.py
"""

import datetime as dt
import os
from dataclasses import dataclass, field

from loguru import logger

from config import STEP_MINUTES, STEPS_PER_DAY
from ingest.helpers import parse_ausgrid_csv, parse_canonical_csv, select_cohort, validate_day

PARSERS = {
    "canonical": parse_canonical_csv,
    "ausgrid": parse_ausgrid_csv,
}


@dataclass
class IngestResult:
    instances: list                                   #DayInstance per solvable date
    skipped: list                                     #dates with at least one missing house
    invalid: dict = field(default_factory=dict)       #date -> validate_day violations


class IngestWorker:
    """
    Purpose:
    - Reads the data file, selects the cohort over the date range and drops days that fail validate_day.
    - Reports progress through status_callback, like the other stage workers.
    """

    def __init__(self, data_path: str, house_ids: list, start: dt.date, end: dt.date,
                 data_format: str = "canonical", steps_per_day: int = STEPS_PER_DAY,
                 step_minutes: int = STEP_MINUTES, status_callback=None):
        if data_format not in PARSERS:
            raise ValueError(f"unknown data format '{data_format}', expected one of {sorted(PARSERS)}")
        self.data_path = data_path
        self.house_ids = list(house_ids)
        self.start = start
        self.end = end
        self.data_format = data_format
        self.steps_per_day = steps_per_day
        self.step_minutes = step_minutes
        self.status_callback = status_callback

    def _status(self, message: str):
        if self.status_callback:
            self.status_callback(message)

    def run(self) -> IngestResult:
        if not os.path.isfile(self.data_path):
            raise FileNotFoundError(f"Data file not found: {self.data_path}")

        self._status("Reading data…")
        with open(self.data_path, "r", encoding="utf-8", newline="") as handle:
            dataset = PARSERS[self.data_format](handle, steps_per_day=self.steps_per_day)

        self._status(f"Selecting {len(self.house_ids)} house(s) from {self.start} to {self.end}…")
        instances, skipped = select_cohort(dataset, self.house_ids, self.start, self.end,
                                           step_minutes=self.step_minutes)

        invalid = {}
        kept = []
        for instance in instances:
            violations = validate_day(instance)
            if violations:
                invalid[instance.day] = violations
                logger.warning(f"{instance.day}: not solvable ({'; '.join(violations)})")
            else:
                kept.append(instance)

        logger.info(f"{len(kept)} day(s) ready, {len(skipped)} skipped, {len(invalid)} invalid")
        return IngestResult(instances=kept, skipped=skipped, invalid=invalid)
