#solve/simplex.py

"""
Purpose:
- Bounded-variable primal simplex over a tableau: largest reduced cost enters, Bland's rule takes over after a
  run of zero-length pivots, the leaving row is always the tied row with the smallest basis index.
- Single-variable rows become bounds, zero-residual equalities get a structural basic column up front,
  so phase 1 only has to repair rows the starting point really violates.
- Warm-started re-solves for branch-and-bound: fix a variable, re-optimize, relax bounds back.
Works with:
- solve/helpers.py
- model/program.py
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np
from loguru import logger

from config import (CRASH_PIVOT_REL, DEADLINE_CHECK_EVERY, DEGENERATE_RUN, DRIFT_CHECK_EVERY, DRIFT_TOL,
                    FEASIBILITY_TOL, INTEGRALITY_TOL, OPTIMALITY_TOL, PIVOT_TOL, ZERO_TOL)
from model.program import BinaryProgram

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Relative width inside which two ratio-test steps count as tied
RATIO_TIE = 1e-12


class TimeLimitReached(Exception):
    """The deadline passed while the simplex was iterating."""


@dataclass
class LPResult:
    status: str                         #optimal, infeasible or unbounded
    bound: Optional[float]              #relaxation optimum; +inf when unbounded
    point: Optional[np.ndarray]         #structural values at the optimum


class BoundedSimplex:
    """
    Purpose:
    - Holds T = B^-1 [A | b] for the relaxation of a BinaryProgram, structural variables boxed in [lo, hi].
    - Columns: structural, then one slack per '<=' row, then one artificial per row the starting point violates
      or that is an equality. Rows are scaled to a largest coefficient of 1; rows with a negative starting
      residual are sign-flipped. Artificials pinned at zero are dropped from the tableau.
    - The current point always satisfies the current bounds once start() returned optimal; fix() and restore()
      keep it that way, which is what lets every node re-solve from its parent's basis.
    """

    def __init__(self, program: BinaryProgram, fixings: Optional[dict] = None, extra: tuple = (),
                 deadline: Optional[float] = None):
        n = program.num_vars
        self.num_structural = n
        self.deadline = deadline        #time.monotonic() value; None means no limit
        self.contradiction = None       #set when no point can satisfy the rows and bounds

        lo = np.zeros(n)
        hi = np.ones(n)
        for var, value in (fixings or {}).items():
            lo[var] = hi[var] = value

        kept = []
        for con in tuple(program.constraints) + tuple(extra):
            if len(con.terms) > 1:
                kept.append(con)
            elif not con.terms:
                if not con.holds(()) and self.contradiction is None:
                    self.contradiction = f"empty {con.describe()} cannot hold"
            else:
                (var, coef), = con.terms
                limit = con.rhs / coef
                if con.relation == "=" or coef > 0:
                    hi[var] = min(hi[var], limit)
                if con.relation == "=" or coef < 0:
                    lo[var] = max(lo[var], limit)
        crossed = np.flatnonzero(lo > hi + FEASIBILITY_TOL)
        if len(crossed) and self.contradiction is None:
            self.contradiction = f"bounds of variable {int(crossed[0])} cross"
        hi = np.maximum(hi, lo)
        m = len(kept)

        A = np.zeros((m, n))
        b = np.zeros(m)
        for r, con in enumerate(kept):
            for var, coef in con.terms:
                A[r, var] = coef
            b[r] = con.rhs
        if m:
            scale = np.abs(A).max(axis=1)
            A /= scale[:, None]
            b /= scale
        is_le = np.array([con.relation == "<=" for con in kept], dtype=bool)

        resid = b - A @ lo
        sign = np.where(resid < 0, -1.0, 1.0)
        needs_art = ~is_le | (resid < 0)

        slack_rows = np.flatnonzero(is_le)
        art_rows = np.flatnonzero(needs_art)
        n_slack, n_art = len(slack_rows), len(art_rows)
        total = n + n_slack + n_art

        M = np.zeros((m, total))
        M[:, :n] = A
        M[slack_rows, n + np.arange(n_slack)] = 1.0
        M *= sign[:, None]
        M[art_rows, n + n_slack + np.arange(n_art)] = 1.0
        self._M = M
        self._b = sign * b
        self._rhs_scale = 1.0 + (np.abs(b).max() if m else 0.0)

        slack_of_row = np.full(m, -1)
        slack_of_row[slack_rows] = n + np.arange(n_slack)
        art_of_row = np.full(m, -1)
        art_of_row[art_rows] = n + n_slack + np.arange(n_art)

        self.basis = np.where(needs_art, art_of_row, slack_of_row)
        self.is_basic = np.zeros(total, dtype=bool)
        self.is_basic[self.basis] = True
        self.artificials = n + n_slack + np.arange(n_art)

        self.lo = np.concatenate([lo, np.zeros(n_slack + n_art)])
        self.hi = np.concatenate([hi, np.full(n_slack + n_art, np.inf)])
        self.x = np.concatenate([lo, np.zeros(n_slack + n_art)])
        self.x[self.basis] = np.abs(resid)

        self.T = np.hstack([M, self._b[:, None]])
        self.objective = np.zeros(total)
        self.objective[:n] = program.objective
        self._cost = np.zeros(total)
        self._d = np.zeros(total)
        self.pivots = 0

        self._crash(np.flatnonzero(~is_le & (np.abs(resid) <= FEASIBILITY_TOL)))

    # -- state ------------------------------------------------------------

    @property
    def values(self) -> np.ndarray:
        return self.x[:self.num_structural].copy()

    @property
    def bound(self) -> float:
        n = self.num_structural
        return float(self.objective[:n] @ self.x[:n])

    def snapshot(self) -> tuple:
        n = self.num_structural
        return self.lo[:n].copy(), self.hi[:n].copy()

    def restore(self, state: tuple):
        """Relaxes structural bounds back to a saved state; the current point stays feasible."""
        n = self.num_structural
        self.lo[:n], self.hi[:n] = state

    # -- linear algebra ---------------------------------------------------

    def _crash(self, rows: np.ndarray):
        """Replaces the zero-valued artificial of each listed equality row by a free structural column."""
        n = self.num_structural
        free = self.hi[:n] > self.lo[:n]
        zero_cost = self.objective[:n] == 0
        for r in rows:
            entries = np.abs(self.T[r, :n])
            top = entries.max(initial=0.0)
            if top <= PIVOT_TOL:
                continue
            usable = (entries >= CRASH_PIVOT_REL * top) & free & ~self.is_basic[:n]
            candidates = np.flatnonzero(usable & zero_cost)
            if not len(candidates):
                candidates = np.flatnonzero(usable)
            if not len(candidates):
                continue
            art = self.basis[r]
            self._pivot(int(r), int(candidates[0]))
            self.hi[art] = 0.0
            self.x[art] = 0.0
        self._drop_pinned_artificials()
        self._sync_basics()

    def _drop_pinned_artificials(self):
        art = self.artificials
        pinned = art[~self.is_basic[art] & (self.hi[art] == 0.0)]
        if not len(pinned):
            return
        total = len(self.x)
        keep_mask = np.ones(total, dtype=bool)
        keep_mask[pinned] = False
        keep = np.flatnonzero(keep_mask)
        remap = np.full(total, -1)
        remap[keep] = np.arange(len(keep))

        self.T = self.T[:, np.append(keep, total)]
        self._M = self._M[:, keep]
        self.lo, self.hi, self.x = self.lo[keep], self.hi[keep], self.x[keep]
        self.objective, self._cost, self._d = self.objective[keep], self._cost[keep], self._d[keep]
        self.is_basic = self.is_basic[keep]
        self.basis = remap[self.basis]
        self.artificials = remap[art[keep_mask[art]]]

    def _sync_basics(self):
        if not len(self.basis):
            return
        total = len(self.x)
        nonbasic = np.flatnonzero(~self.is_basic)
        self.x[self.basis] = self.T[:, total] - self.T[:, nonbasic] @ self.x[nonbasic]

    def _reduced_costs(self, cost: np.ndarray):
        self._cost = cost
        total = len(cost)
        self._d = cost.copy()
        cb = cost[self.basis]
        rows = np.flatnonzero(cb)
        if len(rows):
            self._d -= cb[rows] @ self.T[rows, :total]
        self._d[self.basis] = 0.0

    def _drifted(self) -> bool:
        if not len(self.basis):
            return False
        return np.abs(self._M @ self.x - self._b).max() > DRIFT_TOL

    def _refactor(self):
        try:
            T = np.linalg.solve(self._M[:, self.basis], np.hstack([self._M, self._b[:, None]]))
        except np.linalg.LinAlgError:
            logger.debug("basis matrix singular at refactor, keeping updated tableau")
            return
        T[np.abs(T) < ZERO_TOL] = 0.0
        self.T = T
        self._sync_basics()
        self._reduced_costs(self._cost)

    def _pivot(self, row: int, col: int):
        T = self.T
        prow = T[row] / T[row, col]
        prow[np.abs(prow) < ZERO_TOL] = 0.0
        cols = np.flatnonzero(prow)
        others = np.flatnonzero(T[:, col])
        others = others[others != row]
        if len(others):
            block = np.ix_(others, cols)
            updated = T[block] - np.outer(T[others, col], prow[cols])
            updated[np.abs(updated) < ZERO_TOL] = 0.0
            T[block] = updated
        T[row] = prow
        T[:, col] = 0.0
        T[row, col] = 1.0

        total = len(self.x)
        dq = self._d[col]
        if dq:
            touched = cols[cols < total]
            self._d[touched] -= dq * prow[touched]
        self._d[col] = 0.0

        leaving = self.basis[row]
        self.is_basic[leaving] = False
        self.is_basic[col] = True
        self.basis[row] = col
        self.pivots += 1

    # -- iterations -------------------------------------------------------

    def _entering(self, tol: float, bland: bool):
        """Improving nonbasic column, largest |reduced cost| or smallest index; +1 to increase, -1 to decrease."""
        d, x = self._d, self.x
        movable = ~self.is_basic & (self.hi > self.lo)
        up = movable & (d > tol) & (x <= self.lo)
        down = movable & (d < -tol) & (x >= self.hi)
        candidates = np.flatnonzero(up | down)
        if not len(candidates):
            return None, 0
        col = int(candidates[0] if bland else candidates[np.argmax(np.abs(d[candidates]))])
        return col, (1 if up[col] else -1)

    def _iterate(self, cost: np.ndarray) -> str:
        self._reduced_costs(cost)
        tol = OPTIMALITY_TOL * (1.0 + np.abs(cost).max(initial=0.0))
        limit = 50 * (len(self.x) + len(self.basis)) + 1000
        degenerate = 0

        for it in range(limit):
            if self.deadline is not None and it % DEADLINE_CHECK_EVERY == 0 and time.monotonic() > self.deadline:
                raise TimeLimitReached(f"deadline passed after {self.pivots} pivots")
            col, direction = self._entering(tol, bland=degenerate >= DEGENERATE_RUN)
            if col is None:
                return OPTIMAL

            alpha = self.T[:, col]
            a = direction * alpha
            xb = self.x[self.basis]
            ratios = np.full(len(a), np.inf)
            dec = a > PIVOT_TOL
            inc = a < -PIVOT_TOL
            ratios[dec] = (xb[dec] - self.lo[self.basis][dec]) / a[dec]
            ratios[inc] = (self.hi[self.basis][inc] - xb[inc]) / -a[inc]
            np.maximum(ratios, 0.0, out=ratios)

            flip = self.hi[col] - self.lo[col]
            step = min(ratios.min(initial=np.inf), flip)
            if step == np.inf:
                return UNBOUNDED
            degenerate = degenerate + 1 if step <= RATIO_TIE else 0

            self.x[self.basis] -= step * a
            if flip <= step * (1.0 + RATIO_TIE):
                #bound flip, no basis change
                self.x[col] = self.hi[col] if direction > 0 else self.lo[col]
                continue

            tied = np.flatnonzero(ratios <= step * (1.0 + RATIO_TIE) + RATIO_TIE)
            row = int(tied[np.argmin(self.basis[tied])])
            leaving = self.basis[row]
            self.x[col] += direction * step
            self.x[leaving] = self.lo[leaving] if a[row] > 0 else self.hi[leaving]
            self._pivot(row, col)
            if self.pivots % DRIFT_CHECK_EVERY == 0 and self._drifted():
                logger.debug(f"row residual drift after {self.pivots} pivots, rebuilding tableau")
                self._refactor()

        raise RuntimeError(f"simplex made no progress after {limit} iterations")

    # -- public -----------------------------------------------------------

    def start(self) -> str:
        """
        Cold solve: phase 1 on the artificials, then the program objective.
        Raises:
        - TimeLimitReached: the deadline passed mid-solve.
        """
        if self.contradiction is not None:
            logger.debug(f"relaxation infeasible before pivoting: {self.contradiction}")
            return INFEASIBLE
        if len(self.artificials):
            cost = np.zeros(len(self.x))
            cost[self.artificials] = -1.0
            self._iterate(cost)
            if self.x[self.artificials].sum() > FEASIBILITY_TOL * self._rhs_scale:
                return INFEASIBLE
            self.hi[self.artificials] = 0.0
            nonbasic_art = self.artificials[~self.is_basic[self.artificials]]
            self.x[nonbasic_art] = 0.0
            self._drop_pinned_artificials()
        return self.optimize()

    def optimize(self) -> str:
        return self._iterate(self.objective)

    def fix(self, var: int, value: int) -> bool:
        """
        Purpose:
        - Pins structural variable var to value (0 or 1).
        - Pushes var toward value with an auxiliary objective first; if it cannot get there the node is empty.
        Returns:
        - bool: False when no feasible point with var = value exists under the current bounds.
        """
        if self.lo[var] == self.hi[var]:
            return self.lo[var] == value
        if abs(self.x[var] - value) > INTEGRALITY_TOL:
            cost = np.zeros(len(self.x))
            cost[var] = 1.0 if value else -1.0
            self._iterate(cost)
            if abs(self.x[var] - value) > INTEGRALITY_TOL:
                return False
        self.lo[var] = self.hi[var] = value
        if not self.is_basic[var]:
            self.x[var] = value
        return True


def lp_relax(program: BinaryProgram, fixings: Optional[dict] = None) -> LPResult:
    """
    Purpose:
    - Optimum of the relaxation with free variables in [0, 1] and the given variables fixed.
    Args:
    - program (BinaryProgram): Program to relax.
    - fixings (dict, optional): {variable index: 0 or 1}.
    Returns:
    - LPResult: bound and structural point, or the infeasible / unbounded marker.
    """
    lp = BoundedSimplex(program, fixings)
    status = lp.start()
    if status == INFEASIBLE:
        return LPResult(INFEASIBLE, None, None)
    if status == UNBOUNDED:
        return LPResult(UNBOUNDED, float("inf"), None)
    return LPResult(OPTIMAL, lp.bound, lp.values)
