#solve/helpers.py

"""
Purpose:
- Exact branch-and-bound over the u-variables of a BinaryProgram, LP bounds from solve/simplex.py and
  enumerated row bounds from solve/knapsack.py.
- Exhaustive enumeration oracle for small programs.
Works with:
- model/program.py
- solve/simplex.py
- solve/knapsack.py
- run/workers.py
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from config import (BOUND_SLACK, BOUND_SLACK_REL, INTEGRALITY_TOL, MAX_NODES, MAX_SECONDS,
                    ORACLE_CHUNK, ORACLE_MAX_VARS)
from model.program import BinaryProgram
from solve.knapsack import KnapsackRows
from solve.simplex import INFEASIBLE, UNBOUNDED, BoundedSimplex, TimeLimitReached

OPTIMAL = "Optimal"
INFEASIBLE_STATUS = "Infeasible"
LIMIT_EXCEEDED = "LimitExceeded"


class InstanceTooLarge(ValueError):
    """Program has more u-variables than exhaustive enumeration accepts."""


@dataclass(frozen=True)
class SolveLimits:
    max_nodes: int = MAX_NODES
    max_seconds: float = MAX_SECONDS
    lexicographic: bool = True      #equal-valued incumbents are replaced by lexicographically greater ones

    def __post_init__(self):
        if self.max_nodes <= 0 or self.max_seconds <= 0:
            raise ValueError(f"solver limits must be positive, got {self.max_nodes} nodes / {self.max_seconds} s")


@dataclass
class SolveResult:
    status: str
    assignment: Optional[tuple] = None          #u values in (house, step) order
    objective_value: Optional[int] = None
    nodes_explored: int = 0
    best_bound: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "status": self.status,
            "assignment": None if self.assignment is None else list(self.assignment),
            "objective_value": self.objective_value,
            "nodes_explored": self.nodes_explored,
            "best_bound": self.best_bound,
        }


class _Stop(Exception):
    pass


def _floor_bound(z: float) -> int:
    return math.floor(z + BOUND_SLACK + BOUND_SLACK_REL * abs(z))


class _BranchAndBound:
    """
    Purpose:
    - Depth-first search; branch variable is the first u-variable (house, step order) that is fractional,
      fix-to-1 child before fix-to-0 child, one LP engine shared by all nodes.
    - A node's bound is the smaller of its floored relaxation value and the enumerated knapsack bound; the
      knapsack bound is checked first, so many children are dropped without touching the LP.
    """

    def __init__(self, program: BinaryProgram, limits: SolveLimits):
        self.program = program
        self.limits = limits
        self.order = program.u_indices
        self.fixed = {}
        self.incumbent = None           #(value, u tuple)
        self.nodes = 0
        self.deadline = None
        self.lp = None
        self.knapsacks = KnapsackRows(program)

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.limits.max_nodes or time.monotonic() > self.deadline:
            raise _Stop()

    def _lexmax(self) -> tuple:
        return tuple(self.fixed.get(k, 1) for k in self.order)

    def _pruned(self, bound: int) -> bool:
        if self.incumbent is None:
            return False
        value, u = self.incumbent
        if bound < value:
            return True
        if bound > value:
            return False
        return not self.limits.lexicographic or self._lexmax() <= u

    def _offer(self, value: int, u: tuple):
        if self.incumbent is None or value > self.incumbent[0]:
            self.incumbent = (value, u)
        elif self.limits.lexicographic and value == self.incumbent[0] and u > self.incumbent[1]:
            self.incumbent = (value, u)

    def _branch_var(self, x: np.ndarray) -> Optional[int]:
        """First fractional u-variable; None when all u are integral."""
        for k in self.order:
            if abs(x[k] - round(x[k])) > INTEGRALITY_TOL:
                return k
        return None

    def _first_unfixed(self, u: tuple, want: Optional[int] = None) -> Optional[int]:
        for k, value in zip(self.order, u):
            if k not in self.fixed and (want is None or value == want):
                return k
        return None

    def _node(self, cap: int):
        bound = min(_floor_bound(self.lp.bound), cap)
        if self._pruned(bound):
            return
        x = self.lp.values
        var = self._branch_var(x)
        if var is None:
            u = tuple(int(round(x[k])) for k in self.order)
            full = self.program.complete(u)
            if self.program.violations(full):
                var = self._first_unfixed(u)
            else:
                value = self.program.objective_value(full)
                self._offer(value, u)
                if bound > value:
                    var = self._first_unfixed(u)
                elif self.limits.lexicographic:
                    var = self._first_unfixed(u, want=0)
            if var is None:
                return

        for value in (1, 0):
            self._tick()
            self.fixed[var] = value
            child_cap = self.knapsacks.bound(self.fixed)
            if child_cap is not None and not self._pruned(child_cap):
                state = self.lp.snapshot()
                if self.lp.fix(var, value) and self.lp.optimize() != UNBOUNDED:
                    self._node(child_cap)
                self.lp.restore(state)
            del self.fixed[var]

    def _limit_hit(self, root_bound: Optional[float]) -> SolveResult:
        logger.warning(f"solver limit hit after {self.nodes} nodes")
        value, u = self.incumbent if self.incumbent else (None, None)
        return SolveResult(LIMIT_EXCEEDED, u, value, self.nodes, root_bound)

    def run(self) -> SolveResult:
        self.deadline = time.monotonic() + self.limits.max_seconds
        self.nodes = 1
        cap = self.knapsacks.bound({})
        if cap is None:
            return SolveResult(INFEASIBLE_STATUS, nodes_explored=self.nodes)

        try:
            self.lp = BoundedSimplex(self.program, extra=tuple(self.knapsacks.strengthening),
                                     deadline=self.deadline)
            status = self.lp.start()
        except TimeLimitReached:
            return self._limit_hit(None)
        if status == INFEASIBLE:
            return SolveResult(INFEASIBLE_STATUS, nodes_explored=self.nodes)
        if status == UNBOUNDED:
            raise ValueError("relaxation is unbounded; objective or bounds are malformed")
        root_bound = min(self.lp.bound, float(cap))

        try:
            self._node(cap)
        except (_Stop, TimeLimitReached):
            return self._limit_hit(root_bound)

        logger.debug(f"branch-and-bound: {self.nodes} nodes, {self.lp.pivots} pivots")
        if self.incumbent is None:
            return SolveResult(INFEASIBLE_STATUS, nodes_explored=self.nodes, best_bound=root_bound)
        value, u = self.incumbent
        return SolveResult(OPTIMAL, u, value, self.nodes, float(value))


def solve(p: BinaryProgram, lim: Optional[SolveLimits] = None) -> SolveResult:
    """
    Purpose:
    - Exact maximum of p over binary points, deterministic down to the returned assignment and node count.
    Args:
    - p (BinaryProgram): Program with integer coefficients.
    - lim (SolveLimits, optional): Node / time limits and the tie-break mode.
    Returns:
    - SolveResult: Optimal, Infeasible, or LimitExceeded with the best incumbent found so far (if any).
    """
    return _BranchAndBound(p, lim or SolveLimits()).run()


def _startstop_sources(p: BinaryProgram, order: tuple, role: str) -> np.ndarray:
    """
    One row per v (or w) variable: its index, the bit holding u_t and the bit holding u_t-1.
    Bit -1 is the constant-zero column; both point there in the first step.
    """
    bit_of = {(p.var_labels[k].house, p.var_labels[k].step): b for b, k in enumerate(order)}
    rows = []
    for k, label in enumerate(p.var_labels):
        if label.role != role:
            continue
        if label.step == 0:
            rows.append((k, -1, -1))
        else:
            rows.append((k, bit_of.get((label.house, label.step), -1),
                         bit_of.get((label.house, label.step - 1), -1)))
    return np.array(rows, dtype=np.int64).reshape(-1, 3)


def brute_force(p: BinaryProgram) -> SolveResult:
    """
    Purpose:
    - Enumerates every u assignment from all-ones downwards, so the first maximum met is the lexicographically
      greatest one (house, step order, 1 > 0).
    - v and w are derived from u, every constraint checked in int64.
    Raises:
    - InstanceTooLarge: more than ORACLE_MAX_VARS u-variables.
    """
    order = p.u_indices
    k = len(order)
    if k > ORACLE_MAX_VARS:
        raise InstanceTooLarge(f"{k} u-variables, exhaustive enumeration accepts at most {ORACLE_MAX_VARS}")

    A = np.zeros((len(p.constraints), p.num_vars), dtype=np.int64)
    for r, con in enumerate(p.constraints):
        for var, coef in con.terms:
            A[r, var] = coef
    rhs = np.array([con.rhs for con in p.constraints], dtype=np.int64)
    is_le = np.array([con.relation == "<=" for con in p.constraints], dtype=bool)
    c = np.array(p.objective, dtype=np.int64)
    starts = _startstop_sources(p, order, "v")
    stops = _startstop_sources(p, order, "w")
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    order_idx = np.array(order, dtype=np.int64)

    best = None
    total = 1 << k
    for top in range(total, 0, -ORACLE_CHUNK):
        codes = np.arange(top - 1, max(top - ORACLE_CHUNK, 0) - 1, -1, dtype=np.int64)
        bits = (codes[:, None] >> shifts) & 1
        padded = np.hstack([bits, np.zeros((len(codes), 1), dtype=np.int64)])

        X = np.zeros((len(codes), p.num_vars), dtype=np.int64)
        X[:, order_idx] = bits
        X[:, starts[:, 0]] = np.maximum(padded[:, starts[:, 1]] - padded[:, starts[:, 2]], 0)
        X[:, stops[:, 0]] = np.maximum(padded[:, stops[:, 2]] - padded[:, stops[:, 1]], 0)

        #survivors shrink constraint by constraint; `alive` keeps their enumeration order
        alive = np.arange(len(codes))
        for r in range(len(rhs)):
            lhs = X @ A[r]
            keep = (lhs <= rhs[r]) if is_le[r] else (lhs == rhs[r])
            X, alive = X[keep], alive[keep]
            if not len(alive):
                break
        if not len(alive):
            continue

        values = X @ c
        pick = int(np.argmax(values))
        if best is None or values[pick] > best[0]:
            best = (int(values[pick]), tuple(int(b) for b in bits[alive[pick]]))

    if best is None:
        return SolveResult(INFEASIBLE_STATUS, nodes_explored=total)
    return SolveResult(OPTIMAL, best[1], best[0], total, float(best[0]))
