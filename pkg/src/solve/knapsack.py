#solve/knapsack.py

"""
Purpose:
- Exact enumeration of small '<=' rows whose coefficients are all positive (in a house schedule these are the
  per-step power rows).
- Every binary point restricted to such a row is one of its feasible subsets, which gives two things:
  valid extra rows for the root relaxation, and an integral bound for a node summed over disjoint rows.
Works with:
- solve/helpers.py
- model/program.py
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional

import numpy as np

from config import KNAPSACK_CACHE, KNAPSACK_MAX_TERMS
from model.program import BinaryProgram, Constraint

_FREE = 2


@dataclass
class _Row:
    vars: tuple
    bits: np.ndarray            #feasible subsets, columns aligned with vars
    values: np.ndarray          #objective of each feasible subset
    gain: int                   #trivial bound of the row's variables minus its best subset
    memo: dict = field(default_factory=dict)

    def best(self, key: tuple) -> Optional[int]:
        """Best subset value consistent with key (0, 1 or _FREE per variable); None when no subset is."""
        if key in self.memo:
            return self.memo[key]
        mask = np.ones(len(self.bits), dtype=bool)
        for pos, state in enumerate(key):
            if state != _FREE:
                mask &= self.bits[:, pos] == state
        found = int(self.values[mask].max()) if mask.any() else None
        if len(self.memo) >= KNAPSACK_CACHE:
            self.memo.clear()
        self.memo[key] = found
        return found


def _divided(terms: list, rhs: int) -> tuple:
    """Divides a '<=' row by the gcd of its coefficients, rounding the right-hand side down."""
    g = reduce(math.gcd, (abs(c) for _, c in terms))
    return tuple((v, c // g) for v, c in terms), rhs // g


class KnapsackRows:
    """
    Purpose:
    - Enumerates every qualifying row once, at construction.
    - strengthening: for each row whose best subset is below the trivial bound, objective . x_row <= best,
      and the row itself with its right-hand side lowered to the largest subset sum it admits.
    - bound(fixed): sum over a disjoint family of rows of the best subset consistent with the fixings, plus the
      trivial bound of objective variables outside the family. None means some row has no subset left.
    """

    def __init__(self, program: BinaryProgram, max_terms: int = KNAPSACK_MAX_TERMS):
        c = np.array(program.objective, dtype=np.int64)
        self.objective = [int(v) for v in program.objective]
        self.infeasible = False
        candidates, extra, seen = [], [], set()

        for con in program.constraints:
            if con.relation != "<=" or not 1 < len(con.terms) <= max_terms:
                continue
            coefs = np.array([coef for _, coef in con.terms], dtype=np.int64)
            if (coefs <= 0).any():
                continue
            idx = np.array([var for var, _ in con.terms], dtype=np.int64)
            k = len(idx)
            bits = (np.arange(1 << k, dtype=np.int64)[:, None] >> np.arange(k - 1, -1, -1)) & 1
            bits = bits[bits @ coefs <= con.rhs]
            if not len(bits):
                self.infeasible = True
                continue

            values = bits @ c[idx]
            gain = int(np.maximum(c[idx], 0).sum() - values.max())
            if gain > 0:
                candidates.append(_Row(tuple(int(v) for v in idx), bits, values, gain))
                terms = [(int(v), int(c[v])) for v in idx if c[v]]
                extra.append(_divided(terms, int(values.max())))
            widest = int((bits @ coefs).max())
            if widest < con.rhs:
                extra.append(_divided(list(con.terms), widest))

        self.strengthening = []
        for terms, rhs in extra:
            if (terms, rhs) not in seen:
                seen.add((terms, rhs))
                self.strengthening.append(Constraint(terms, "<=", rhs, family="knapsack"))

        self.rows, covered = [], set()
        for row in sorted(candidates, key=lambda r: -r.gain):
            if covered.isdisjoint(row.vars):
                self.rows.append(row)
                covered.update(row.vars)
        self.outside = [k for k, coef in enumerate(self.objective) if coef and k not in covered]

    def bound(self, fixed: dict) -> Optional[int]:
        if self.infeasible:
            return None
        total = 0
        for row in self.rows:
            best = row.best(tuple(fixed.get(v, _FREE) for v in row.vars))
            if best is None:
                return None
            total += best
        for k in self.outside:
            state = fixed.get(k)
            if state is None:
                total += max(self.objective[k], 0)
            elif state == 1:
                total += self.objective[k]
        return total
