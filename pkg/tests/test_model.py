#test_model.py

"""
Purpose:
- Tests for program construction, start-up / shut-down derivation and exact feasibility checks.
"""

import numpy as np
import pytest

from conftest import make_day
from model.helpers import (ModelError, StrategyKind, StrategySpec, build_program, check_feasible,
                           derive_startstop, fairness_weights, make_schedule, self_consumption_programs)
from model.program import BinaryProgram, Constraint, VarLabel, parse_program


def families(program) -> dict:
    counts = {}
    for con in program.constraints:
        counts[con.family] = counts.get(con.family, 0) + 1
    return counts


def test_fairness_weights():
    d = make_day([[1000, 1000], [500, 500], [300, 0], [1000, 0]],
                 [[1000, 1000], [250, 250], [0, 0], [0, 0]])
    assert fairness_weights(d, 10 ** 6).tolist() == [10 ** 6, 500000, 0, 0]


def test_fairness_weights_zero_load_and_half_even():
    d = make_day([[0, 0], [2, 0]], [[7, 7], [1, 0]])
    assert fairness_weights(d, 1).tolist() == [0, 0]      #0.5 rounds to even
    assert fairness_weights(make_day([[2]], [[3]]), 1).tolist() == [2]


def test_single_house_kind_c_program():
    d = make_day([[1000, 1000]], [[1000, 1000]])
    program = build_program(d, StrategySpec(StrategyKind.C, min_up=1, min_down=1))
    assert program.num_vars == 6
    power = [c for c in program.constraints if c.family == "power"]
    assert [(c.terms, c.relation, c.rhs) for c in power] == [(((0, 1000),), "<=", 1000), (((1, 1000),), "<=", 1000)]
    assert program.objective == (1000, 1000, 0, 0, 0, 0)
    assert program.objective_value(program.complete([1, 1])) == 2000
    assert program.violations(program.complete([1, 1])) == []


def test_kind_a_adds_daily_connection():
    d = make_day([[1000, 1000]], [[1000, 1000]])
    c = build_program(d, StrategySpec(StrategyKind.C, min_up=1, min_down=1))
    a = build_program(d, StrategySpec(StrategyKind.A, min_up=1, min_down=1))
    assert len(a.constraints) == len(c.constraints) + 1
    extra = a.constraints[-1]
    assert extra.family == "daily-connection"
    assert (extra.terms, extra.relation, extra.rhs) == (((0, -1), (1, -1)), "<=", -1)


def test_share_program_shape(share_day, share_spec):
    program = build_program(share_day, share_spec(StrategyKind.B))
    assert program.num_vars == 24
    counts = families(program)
    assert counts["power"] == 4
    assert counts["min-up"] == counts["min-down"] == 8
    assert counts["link"] == counts["exclusive"] == 6
    assert set(program.objective[:8]) == {10 ** 6}
    assert set(program.objective[8:]) == {0}
    assert [program.var_labels[k] for k in program.u_indices[:2]] == [VarLabel("u", 0, 0), VarLabel("u", 0, 1)]


def test_objective_kinds(share_day, share_spec):
    scale = 10 ** 6
    assert build_program(share_day, share_spec(StrategyKind.C)).objective[:8] == (1000,) * 4 + (2000,) * 4
    assert build_program(share_day, share_spec(StrategyKind.A_PLUS)).objective[:8] == (scale,) * 4 + (scale // 2,) * 4
    assert build_program(share_day, share_spec(StrategyKind.C_PLUS)).objective[:8] == (1000 * scale,) * 8
    uniform = build_program(share_day, share_spec(StrategyKind.B_PLUS), weights=np.array([1, 1]))
    assert uniform.objective[:8] == (1,) * 8


def test_objective_matches_direct_sums_at_random_schedules():
    rng = np.random.default_rng(41)
    scale = 10 ** 6
    for _ in range(60):
        n, t = int(rng.integers(1, 4)), int(rng.integers(1, 6))
        d = make_day(rng.integers(0, 4001, size=(n, t)), rng.integers(0, 4001, size=(n, t)))
        weights = fairness_weights(d, scale)[:, None]
        U = rng.integers(0, 2, size=(n, t))
        expected = {
            StrategyKind.A: scale * U.sum(),
            StrategyKind.B: scale * U.sum(),
            StrategyKind.C: (d.L * U).sum(),
            StrategyKind.A_PLUS: (weights * U).sum(),
            StrategyKind.B_PLUS: (weights * U).sum(),
            StrategyKind.C_PLUS: (weights * d.L * U).sum(),
        }
        for kind, value in expected.items():
            program = build_program(d, StrategySpec(kind, min_up=1, min_down=1))
            x = program.complete(U.ravel().tolist())
            assert program.objective_value(x) == int(value), kind


def test_build_program_rejects_bad_input(share_day):
    with pytest.raises(ModelError):
        build_program(share_day, StrategySpec(StrategyKind.SELF))
    with pytest.raises(ModelError):
        build_program(share_day, StrategySpec(StrategyKind.C, min_up=5))
    with pytest.raises(ModelError):
        StrategySpec(StrategyKind.C, min_down=0)
    with pytest.raises(ModelError):
        build_program(share_day, StrategySpec(StrategyKind.A_PLUS, min_up=1), weights=np.array([1, 2, 3]))


def test_self_consumption_programs(share_day, share_spec):
    programs = self_consumption_programs(share_day, share_spec(StrategyKind.SELF))
    assert len(programs) == 2
    for k, program in enumerate(programs):
        power = [c for c in program.constraints if c.family == "power"]
        assert len(power) == 4
        assert all(c.terms[0][1] == share_day.L[k, c.step] and c.rhs == share_day.G[k, c.step] for c in power)


def test_self_consumption_without_pv_only_allows_off():
    program = self_consumption_programs(make_day([[500, 500]], [[0, 0]]), StrategySpec(StrategyKind.SELF, 1, 1))[0]
    feasible = [u for u in ([0, 0], [0, 1], [1, 0], [1, 1]) if not program.violations(program.complete(u))]
    assert feasible == [[0, 0]]


@pytest.mark.parametrize("row, v, w", [
    ([0, 1, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]),
    ([1, 1, 1, 1], [0, 0, 0, 0], [0, 0, 0, 0]),
    ([1, 0, 1], [0, 0, 1], [0, 1, 0]),
])
def test_derive_startstop(row, v, w):
    result = derive_startstop(np.array([row]))
    assert result.V.tolist() == [v]
    assert result.W.tolist() == [w]


def test_derive_startstop_random_property():
    rng = np.random.default_rng(7)
    for _ in range(50):
        U = rng.integers(0, 2, size=(3, 6))
        s = derive_startstop(U)
        assert (s.V[:, 0] == 0).all() and (s.W[:, 0] == 0).all()
        assert ((s.V - s.W)[:, 1:] == np.diff(U, axis=1)).all()
        assert (s.V + s.W <= 1).all()


def test_check_feasible_examples():
    d = make_day([[1000] * 4], [[1000] * 4])
    assert check_feasible(np.zeros((1, 4)), d, StrategySpec(StrategyKind.C)) == []
    assert check_feasible(np.zeros((1, 4)), d, StrategySpec(StrategyKind.A)) == ["minimum daily connection, house 1"]
    assert check_feasible(np.array([[0, 1, 1, 0]]), d, StrategySpec(StrategyKind.C, min_up=3)) == [
        "min-up, house 1, step 4"]


def test_check_feasible_self_uses_full_house_numbers(share_day, share_spec):
    violations = check_feasible(np.array([[1, 1, 1, 1], [1, 0, 0, 0]]), share_day, share_spec(StrategyKind.SELF))
    assert violations == ["power, house 2, step 1"]


def test_check_feasible_runs_have_minimum_length():
    rng = np.random.default_rng(11)
    d = make_day(np.ones((2, 6), dtype=int), np.full((2, 6), 5))
    spec = StrategySpec(StrategyKind.C, min_up=3, min_down=2)
    for _ in range(200):
        U = rng.integers(0, 2, size=(2, 6))
        if check_feasible(U, d, spec):
            continue
        for row in U.tolist():
            padded = "".join(map(str, row))
            for start in range(1, 6):
                if row[start] == 1 and row[start - 1] == 0:
                    assert padded[start:start + 3].count("1") == min(3, 6 - start)
                if row[start] == 0 and row[start - 1] == 1:
                    assert padded[start:start + 2].count("0") == min(2, 6 - start)


def test_make_schedule(share_day, share_spec):
    U = np.array([[0, 0, 0, 0], [1, 1, 1, 1]])
    schedule = make_schedule(share_day, share_spec(StrategyKind.C), U, 8000)
    assert schedule.Y.tolist() == [[0] * 4, [2000] * 4]
    assert schedule.V.sum() == 0 and schedule.W.sum() == 0


def test_program_dump_parses_back(share_day, share_spec):
    program = build_program(share_day, share_spec(StrategyKind.A))
    text = program.dump()
    assert "daily-connection 1 -: -1*x0 -1*x1 -1*x2 -1*x3 <= -1" in text
    assert parse_program(text) == program


def test_constraint_merges_terms_and_rejects_fractions():
    con = Constraint(((2, 1), (0, 3), (2, -1)), "<=", 4, "power", None, 0)
    assert con.terms == ((0, 3),)
    assert con.describe() == "power, step 1"
    with pytest.raises(ValueError):
        Constraint(((0, 0.5),), "<=", 1)
    with pytest.raises(ValueError):
        BinaryProgram(1, (1,), (), (VarLabel("z", 0, 0),))
