# model/program.py

"""
Purpose:
- Generic 0-1 linear maximisation container shared by the model and solve stages.
- Exact integer evaluation of constraints and objective.
- Text dump / parse round trip, one constraint per line, for diffing and for feeding the solver in isolation.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

RELATIONS = ("<=", "=")
ROLES = ("u", "v", "w")

# Readable names used in violation messages
FAMILY_NAMES = {
    "daily-connection": "minimum daily connection",
}


def _as_int(value, what: str) -> int:
    as_int = int(value)
    if as_int != value:
        raise ValueError(f"{what} must be an integer, got {value!r}")
    return as_int


@dataclass(frozen=True)
class VarLabel:
    role: str       #u, v or w
    house: int      #0-based
    step: int       #0-based


@dataclass(frozen=True)
class Constraint:
    terms: tuple            #((var index, coefficient), ...) ascending by index, no zero coefficients
    relation: str           #"<=" or "="
    rhs: int
    family: str = ""
    house: Optional[int] = None
    step: Optional[int] = None

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {self.relation!r}")
        merged = {}
        for var, coef in self.terms:
            merged[int(var)] = merged.get(int(var), 0) + _as_int(coef, "coefficient")
        object.__setattr__(self, "terms", tuple((v, c) for v, c in sorted(merged.items()) if c != 0))
        object.__setattr__(self, "rhs", _as_int(self.rhs, "right-hand side"))

    def lhs(self, x: Sequence[int]) -> int:
        return sum(coef * int(x[var]) for var, coef in self.terms)

    def holds(self, x: Sequence[int]) -> bool:
        value = self.lhs(x)
        return value <= self.rhs if self.relation == "<=" else value == self.rhs

    def describe(self) -> str:
        parts = [FAMILY_NAMES.get(self.family, self.family or "constraint")]
        if self.house is not None:
            parts.append(f"house {self.house + 1}")
        if self.step is not None:
            parts.append(f"step {self.step + 1}")
        return ", ".join(parts)


@dataclass(frozen=True)
class BinaryProgram:
    """
    Purpose:
    - maximize objective . x subject to integer linear constraints, x binary.
    - var_labels[k] says which (role, house, step) variable k stands for.
    """
    num_vars: int
    objective: tuple
    constraints: tuple
    var_labels: tuple
    sense: str = field(default="max", init=False)

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(_as_int(c, "objective coefficient") for c in self.objective))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "var_labels", tuple(self.var_labels))
        if len(self.objective) != self.num_vars or len(self.var_labels) != self.num_vars:
            raise ValueError("objective and var_labels must have one entry per variable")
        if len(set(self.var_labels)) != self.num_vars:
            raise ValueError("every variable needs its own (role, house, step) label")
        for label in self.var_labels:
            if label.role not in ROLES:
                raise ValueError(f"unknown variable role {label.role!r}")
        for con in self.constraints:
            if any(not 0 <= var < self.num_vars for var, _ in con.terms):
                raise ValueError(f"constraint {con.describe()} references an unknown variable")

    @property
    def u_indices(self) -> tuple:
        """u-variables in (house, step) order; this is the branching and tie-break order."""
        us = [k for k, label in enumerate(self.var_labels) if label.role == "u"]
        return tuple(sorted(us, key=lambda k: (self.var_labels[k].house, self.var_labels[k].step)))

    def objective_value(self, x: Sequence[int]) -> int:
        return sum(c * int(x[k]) for k, c in enumerate(self.objective) if c)

    def violations(self, x: Sequence[int]) -> list:
        return [con for con in self.constraints if not con.holds(x)]

    def complete(self, u_values: Sequence[int]) -> list:
        """
        Purpose:
        - Expands a u assignment (aligned with u_indices) into a full variable vector.
        - v and w take their start-up / shut-down values: v = max(u_t - u_t-1, 0), w = max(u_t-1 - u_t, 0),
          and 0 in the first step.
        """
        x = [0] * self.num_vars
        u_at = {}
        for k, value in zip(self.u_indices, u_values):
            x[k] = int(value)
            label = self.var_labels[k]
            u_at[(label.house, label.step)] = int(value)
        for k, label in enumerate(self.var_labels):
            if label.role == "u" or label.step == 0:
                continue
            now = u_at.get((label.house, label.step), 0)
            before = u_at.get((label.house, label.step - 1), 0)
            x[k] = max(now - before, 0) if label.role == "v" else max(before - now, 0)
        return x

    def dump(self) -> str:
        lines = ["# binary program", f"vars {self.num_vars}"]
        for k, label in enumerate(self.var_labels):
            lines.append(f"var {k} {label.role} {label.house + 1} {label.step + 1}")
        lines.append("max " + _format_terms(enumerate(self.objective)))
        for con in self.constraints:
            house = "-" if con.house is None else con.house + 1
            step = "-" if con.step is None else con.step + 1
            family = con.family or "constraint"
            lines.append(f"{family} {house} {step}: {_format_terms(con.terms)} {con.relation} {con.rhs}")
        return "\n".join(lines) + "\n"


def _format_terms(terms) -> str:
    body = " ".join(f"{coef:+d}*x{var}" for var, coef in terms if coef)
    return body or "0"


_TERM = re.compile(r"([+-]\d+)\*x(\d+)")


def _parse_terms(text: str, line_no: int) -> list:
    text = text.strip()
    if text == "0":
        return []
    tokens = text.split()
    terms = []
    for token in tokens:
        match = _TERM.fullmatch(token)
        if not match:
            raise ValueError(f"line {line_no}: bad term {token!r}")
        terms.append((int(match.group(2)), int(match.group(1))))
    return terms


def parse_program(text: str) -> BinaryProgram:
    """Inverse of BinaryProgram.dump."""
    num_vars = None
    labels = {}
    objective = None
    constraints = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        head = line.split()[0]
        if head == "vars":
            num_vars = int(line.split()[1])
        elif head == "var":
            _, k, role, house, step = line.split()
            labels[int(k)] = VarLabel(role, int(house) - 1, int(step) - 1)
        elif head == "max":
            if num_vars is None:
                raise ValueError(f"line {line_no}: 'max' before 'vars'")
            coefs = [0] * num_vars
            for var, coef in _parse_terms(line[3:], line_no):
                coefs[var] += coef
            objective = coefs
        else:
            meta, _, body = line.partition(":")
            try:
                family, house, step = meta.split()
            except ValueError:
                raise ValueError(f"line {line_no}: expected '<family> <house> <step>: ...'")
            relation = "<=" if " <= " in body else "=" if " = " in body else None
            if relation is None:
                raise ValueError(f"line {line_no}: no relation found")
            lhs, _, rhs = body.rpartition(f" {relation} ")
            constraints.append(Constraint(
                terms=tuple(_parse_terms(lhs, line_no)),
                relation=relation,
                rhs=int(rhs),
                family=family,
                house=None if house == "-" else int(house) - 1,
                step=None if step == "-" else int(step) - 1,
            ))

    if num_vars is None or objective is None:
        raise ValueError("program dump needs a 'vars' line and a 'max' line")
    if sorted(labels) != list(range(num_vars)):
        raise ValueError("program dump must label every variable exactly once")
    return BinaryProgram(num_vars, tuple(objective), tuple(constraints),
                         tuple(labels[k] for k in range(num_vars)))
