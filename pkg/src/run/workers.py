#run/workers.py

"""
Purpose:
- Per-(day, strategy) task: build the program(s), solve, re-verify, optionally compare with the oracle.
- RunWorker chains ingest -> tasks -> metrics -> reports, on a process pool when jobs > 1.
Works with:
- run/user_interface.py
- run/helpers.py
- ingest/workers.py
"""

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from loguru import logger

from config import ORACLE_MAX_VARS
from ingest.helpers import DayInstance
from ingest.workers import IngestWorker
from metrics.helpers import INFEASIBLE, LIMIT_EXCEEDED, SOLVED, day_result, write_metrics
from model.helpers import StrategyKind, StrategySpec, build_program, check_feasible, self_consumption_programs
from run.helpers import (ConsistencyError, DataError, RunConfig, emit_plot_data, emit_sample_day_data,
                         write_schedule, write_summary)
from solve.helpers import LIMIT_EXCEEDED as SOLVER_LIMIT, OPTIMAL, SolveLimits, brute_force, solve


@dataclass
class TaskOutcome:
    day: object
    strategy: str
    house_ids: tuple
    U: Optional[np.ndarray]         #switching matrix of a solved day
    status: str                     #Solved, Infeasible or LimitExceeded
    nodes: int = 0
    objective: Optional[int] = None
    oracle_checked: bool = False


def _oracle_compare(program, result, limits: SolveLimits, where: str) -> bool:
    """Runs brute_force on small programs; raises ConsistencyError on disagreement. Returns whether it ran."""
    if len(program.u_indices) > ORACLE_MAX_VARS or result.status == SOLVER_LIMIT:
        return False
    oracle = brute_force(program)
    same = oracle.status == result.status and oracle.objective_value == result.objective_value
    if limits.lexicographic:
        same = same and oracle.assignment == result.assignment
    if not same:
        raise ConsistencyError(
            f"{where}: solver {result.status}/{result.objective_value} but oracle "
            f"{oracle.status}/{oracle.objective_value}",
            dump="\n".join([
                f"# {where}",
                f"# solver: {result.as_dict()}",
                f"# oracle: {oracle.as_dict()}",
                program.dump(),
            ]),
        )
    return True


def solve_task(d: DayInstance, spec: StrategySpec, limits: SolveLimits, oracle_check: bool = False) -> TaskOutcome:
    """
    Purpose:
    - Solves one day under one strategy; SELF solves one single-house program per house and merges them.
    - Every schedule is re-checked with check_feasible in exact integers before it is returned.
    Raises:
    - ConsistencyError: a schedule violates a constraint, or the oracle disagrees.
    """
    where = f"{d.day} {spec.label}"
    if spec.kind is StrategyKind.SELF:
        programs = self_consumption_programs(d, spec)
    else:
        programs = [build_program(d, spec)]

    rows, statuses, nodes, objective, checked = [], [], 0, 0, False
    for program in programs:
        result = solve(program, limits)
        nodes += result.nodes_explored
        statuses.append(result.status)
        if oracle_check:
            checked = _oracle_compare(program, result, limits, where) or checked
        if result.status == OPTIMAL:
            rows.append(result.assignment)
            objective += result.objective_value

    if all(s == OPTIMAL for s in statuses):
        U = np.array(rows, dtype=np.int64).reshape(d.L.shape)
        violations = check_feasible(U, d, spec)
        if violations:
            raise ConsistencyError(f"{where}: solver schedule violates {', '.join(violations[:5])}",
                                   dump="\n".join(p.dump() for p in programs))
        return TaskOutcome(d.day, spec.label, d.house_ids, U, SOLVED, nodes, objective, checked)

    status = LIMIT_EXCEEDED if SOLVER_LIMIT in statuses else INFEASIBLE
    logger.warning(f"{where}: {status}")
    return TaskOutcome(d.day, spec.label, d.house_ids, None, status, nodes, None, checked)


def _run_task(args: tuple) -> TaskOutcome:
    return solve_task(*args)


@dataclass
class RunReport:
    results: list                                   #DayResult in (date, strategy) order
    outcomes: list                                  #TaskOutcome, same order
    paths: dict = field(default_factory=dict)
    wall_seconds: float = 0.0


class RunWorker:
    """
    Purpose:
    - Executes a full run for one RunConfig and writes every report file into cfg.out_dir.
    - Task results are collected in submission order, so output never depends on completion order.
    """

    def __init__(self, cfg: RunConfig, status_callback=None):
        self.cfg = cfg
        self.status_callback = status_callback

    def _status(self, message: str):
        if self.status_callback:
            self.status_callback(message)

    def _write_dump(self, error: ConsistencyError):
        if not error.dump:
            return
        os.makedirs(self.cfg.out_dir, exist_ok=True)
        path = os.path.join(self.cfg.out_dir, "consistency_failure.txt")
        with open(path, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(error.dump)
        logger.error(f"Diagnostic dump written to {path}")

    def run(self) -> RunReport:
        cfg = self.cfg
        started = time.monotonic()

        try:
            ingest = IngestWorker(cfg.data_path, list(cfg.house_ids), cfg.start, cfg.end, cfg.data_format,
                                  cfg.steps_per_day, cfg.step_minutes, status_callback=self._status).run()
        except FileNotFoundError as e:
            raise DataError(str(e)) from e
        if not ingest.instances:
            raise DataError(f"no solvable day for houses {list(cfg.house_ids)} between {cfg.start} and {cfg.end}")

        specs = [cfg.strategy_spec(label) for label in cfg.strategies]
        tasks = [(d, spec, cfg.limits, cfg.oracle_check) for d in ingest.instances for spec in specs]
        self._status(f"Solving {len(tasks)} task(s) on {cfg.jobs} worker(s)…")

        try:
            if cfg.jobs > 1:
                with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                    outcomes = list(pool.map(_run_task, tasks))
            else:
                outcomes = []
                for task in tasks:
                    self._status(f"Solving {task[0].day} {task[1].label}…")
                    outcomes.append(_run_task(task))
        except ConsistencyError as e:
            self._write_dump(e)
            raise

        if cfg.oracle_check:
            logger.info(f"Oracle agreed on {sum(o.oracle_checked for o in outcomes)} task(s)")

        by_day = {d.day: d for d in ingest.instances}
        results = [day_result(by_day[o.day], o.strategy, o.U, o.status, o.nodes, o.objective) for o in outcomes]

        self._status("Writing reports…")
        steps = ingest.instances[0].n_steps
        paths = {"schedule": write_schedule(outcomes, steps, cfg.out_dir)}
        paths.update(write_metrics(results, cfg.out_dir))
        paths.update(emit_plot_data(results, cfg.out_dir))
        paths.update(emit_sample_day_data(outcomes, ingest.instances, cfg.sample_dates, cfg.out_dir))
        wall = time.monotonic() - started
        paths["summary"] = write_summary(results, outcomes, cfg, ingest.skipped, ingest.invalid, wall, cfg.out_dir)

        logger.info(f"{len(results)} day result(s) written to {cfg.out_dir} in {wall:.1f} s")
        return RunReport(results=results, outcomes=outcomes, paths=paths, wall_seconds=wall)
