# model/helpers.py

"""
Purpose:
- Builds the binary program for one day under one operating strategy.
- Derives start-up / shut-down matrices and checks switching matrices against every constraint exactly.
Works with:
- model/program.py
- solve/helpers.py
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional

import numpy as np

from config import MIN_DOWN_STEPS, MIN_UP_STEPS, WEIGHT_SCALE
from ingest.helpers import DayInstance, validate_day
from model.program import BinaryProgram, Constraint, VarLabel


class ModelError(ValueError):
    """Strategy and instance do not fit together."""


class StrategyKind(Enum):
    A = "A"
    B = "B"
    C = "C"
    A_PLUS = "A+"
    B_PLUS = "B+"
    C_PLUS = "C+"
    SELF = "SELF"

    @classmethod
    def parse(cls, label: str) -> "StrategyKind":
        text = label.strip().upper()
        for kind in cls:
            if text in (kind.value, kind.name):
                return kind
        raise ValueError(f"unknown strategy '{label}', expected one of {[k.value for k in cls]}")

    @property
    def daily_connection(self) -> bool:
        return self in (StrategyKind.A, StrategyKind.A_PLUS)

    @property
    def weighted(self) -> bool:
        return self in (StrategyKind.A_PLUS, StrategyKind.B_PLUS, StrategyKind.C_PLUS)

    @property
    def energy_objective(self) -> bool:
        return self in (StrategyKind.C, StrategyKind.C_PLUS, StrategyKind.SELF)


@dataclass(frozen=True)
class StrategySpec:
    kind: StrategyKind
    min_up: int = MIN_UP_STEPS
    min_down: int = MIN_DOWN_STEPS
    weight_scale: int = WEIGHT_SCALE
    literal_signs: bool = False     #up/down rows with the alternative sign pattern, only from step m on

    def __post_init__(self):
        if self.min_up < 1 or self.min_down < 1:
            raise ModelError(f"min_up and min_down must be >= 1, got {self.min_up}/{self.min_down}")
        if self.weight_scale < 1:
            raise ModelError(f"weight_scale must be >= 1, got {self.weight_scale}")

    @property
    def label(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class StartStopMatrices:
    V: np.ndarray
    W: np.ndarray


@dataclass(frozen=True)
class Schedule:
    U: np.ndarray
    V: np.ndarray
    W: np.ndarray
    Y: np.ndarray
    objective_value: int
    strategy: StrategySpec


def fairness_weights(d: DayInstance, scale: int) -> np.ndarray:
    """
    Purpose:
    - Per-house weight = round_half_even(scale * daily PV / daily load), computed exactly.
    - A house with zero daily load gets weight 0.
    """
    if scale < 1:
        raise ModelError(f"scale must be >= 1, got {scale}")
    weights = []
    for load, gen in zip(d.L.sum(axis=1).tolist(), d.G.sum(axis=1).tolist()):
        weights.append(0 if load == 0 else round(Fraction(scale * gen, load)))
    return np.array(weights, dtype=np.int64)


def _check_fit(d: DayInstance, s: StrategySpec):
    violations = validate_day(d)
    if violations:
        raise ModelError(f"instance is not solvable: {'; '.join(violations)}")
    if s.min_up > d.n_steps or s.min_down > d.n_steps:
        raise ModelError(f"min_up {s.min_up} / min_down {s.min_down} exceed T = {d.n_steps}")


def _objective(d: DayInstance, s: StrategySpec, weights: Optional[np.ndarray]) -> np.ndarray:
    n, steps = d.L.shape
    if s.kind.weighted:
        w = fairness_weights(d, s.weight_scale) if weights is None else np.asarray(weights, dtype=np.int64)
        if w.shape != (n,):
            raise ModelError(f"expected {n} weights, got shape {w.shape}")
        per_house = np.repeat(w[:, None], steps, axis=1)
    else:
        per_house = np.full((n, steps), s.weight_scale, dtype=np.int64)

    if s.kind in (StrategyKind.C, StrategyKind.C_PLUS):
        base = d.L if s.kind is StrategyKind.C else per_house * d.L
    else:
        base = per_house
    return base.astype(np.int64)


def build_program(d: DayInstance, s: StrategySpec, weights: Optional[np.ndarray] = None) -> BinaryProgram:
    """
    Purpose:
    - Encodes one day under strategy s as a 0-1 program over u (on/off), v (start-up), w (shut-down).
    - Supplied load Y = U o L is substituted out; it is rebuilt after solving.
    Args:
    - d (DayInstance): Solvable instance (validate_day empty).
    - s (StrategySpec): Any kind except SELF.
    - weights (np.ndarray, optional): Per-house fairness weights for the weighted kinds; defaults to fairness_weights.
    Returns:
    - BinaryProgram: variables laid out as u, then v, then w, each house-major.
    """
    if s.kind is StrategyKind.SELF:
        raise ModelError("SELF is solved house by house, use self_consumption_programs")
    _check_fit(d, s)

    n, steps = d.L.shape
    block = n * steps

    def u(i, t): return i * steps + t
    def v(i, t): return block + i * steps + t
    def w(i, t): return 2 * block + i * steps + t

    labels = [VarLabel(role, i, t) for role in ("u", "v", "w") for i in range(n) for t in range(steps)]
    constraints = []

    for i in range(n):
        for t in range(steps):
            up_window = range(max(0, t - s.min_up + 1), t + 1)
            down_window = range(max(0, t - s.min_down + 1), t + 1)
            if not s.literal_signs:
                constraints.append(Constraint(
                    tuple((v(i, h), 1) for h in up_window) + ((u(i, t), -1),), "<=", 0, "min-up", i, t))
                constraints.append(Constraint(
                    tuple((w(i, h), 1) for h in down_window) + ((u(i, t), 1),), "<=", 1, "min-down", i, t))
            else:
                if t + 1 >= s.min_up:
                    constraints.append(Constraint(
                        ((u(i, t), 1),) + tuple((v(i, h), -1) for h in up_window), "<=", 0, "min-up", i, t))
                if t + 1 >= s.min_down:
                    constraints.append(Constraint(
                        ((u(i, t), -1),) + tuple((w(i, h), -1) for h in down_window), "<=", -1, "min-down", i, t))

        constraints.append(Constraint(((v(i, 0), 1),), "=", 0, "initial-start", i, 0))
        constraints.append(Constraint(((w(i, 0), 1),), "=", 0, "initial-stop", i, 0))
        for t in range(1, steps):
            constraints.append(Constraint(
                ((v(i, t), 1), (w(i, t), -1), (u(i, t), -1), (u(i, t - 1), 1)), "=", 0, "link", i, t))
            constraints.append(Constraint(((v(i, t), 1), (w(i, t), 1)), "<=", 1, "exclusive", i, t))

    for t in range(steps):
        constraints.append(Constraint(
            tuple((u(i, t), int(d.L[i, t])) for i in range(n)), "<=", int(d.G[:, t].sum()), "power", None, t))

    if s.kind.daily_connection:
        for i in range(n):
            constraints.append(Constraint(
                tuple((u(i, t), -1) for t in range(steps)), "<=", -1, "daily-connection", i, None))

    objective = [0] * (3 * block)
    objective[:block] = _objective(d, s, weights).ravel().tolist()
    return BinaryProgram(3 * block, tuple(objective), tuple(constraints), tuple(labels))


def self_consumption_programs(d: DayInstance, s: StrategySpec) -> list:
    """One strategy-C program per house, each seeing only that house's load and PV."""
    single = dataclasses.replace(s, kind=StrategyKind.C)
    _check_fit(d, single)
    return [build_program(d.restrict(k), single) for k in range(d.n_houses)]


def derive_startstop(U: np.ndarray) -> StartStopMatrices:
    U = np.asarray(U, dtype=np.int64)
    if U.ndim != 2 or not np.isin(U, (0, 1)).all():
        raise ModelError("U must be a binary N x T matrix")
    step = np.zeros_like(U)
    step[:, 1:] = U[:, 1:] - U[:, :-1]
    return StartStopMatrices(V=np.maximum(step, 0), W=np.maximum(-step, 0))


def check_feasible(U: np.ndarray, d: DayInstance, s: StrategySpec) -> list:
    """
    Purpose:
    - Evaluates every constraint build_program would emit at (U, derive_startstop(U)) in exact integers.
    - For SELF the per-house programs are checked, with house numbers of the full instance.
    Returns:
    - list[str]: One "family, house i, step t" entry per violated constraint; empty iff feasible.
    """
    U = np.asarray(U, dtype=np.int64)
    if U.shape != d.L.shape:
        raise ModelError(f"U shape {U.shape} does not match instance shape {d.L.shape}")

    if s.kind is StrategyKind.SELF:
        messages = []
        for k, program in enumerate(self_consumption_programs(d, s)):
            x = program.complete(U[k].tolist())
            for con in program.violations(x):
                messages.append(dataclasses.replace(con, house=k).describe())
        return messages

    program = build_program(d, s)
    x = program.complete(U.ravel().tolist())
    return [con.describe() for con in program.violations(x)]


def make_schedule(d: DayInstance, s: StrategySpec, U: np.ndarray, objective_value: int) -> Schedule:
    U = np.asarray(U, dtype=np.int64).reshape(d.L.shape)
    startstop = derive_startstop(U)
    return Schedule(U=U, V=startstop.V, W=startstop.W, Y=U * d.L,
                    objective_value=int(objective_value), strategy=s)
