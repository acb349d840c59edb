#test_run.py

"""
Purpose:
- Tests for run configuration, the end-to-end RunWorker on the bundled sample and the command-line exit codes.
"""

import datetime as dt
import json
import os
import pickle

import numpy as np
import pandas as pd
import pytest

from conftest import make_day
from config import OUTPUT_FILES
from metrics.helpers import SOLVED, day_result
from model.helpers import StrategyKind, StrategySpec, build_program, check_feasible
from run.helpers import ConfigError, ConsistencyError, DataError, emit_plot_data, load_config
from run.user_interface import EXIT_INPUT, EXIT_OK, main
from run.workers import RunWorker, solve_task

COMPARED = ("schedule", "daily", "period", "histogram", "fig4", "fig5", "fig6", "sample_totals", "sample_steps")


@pytest.fixture
def sample_config(sample_dir) -> str:
    return os.path.join(sample_dir, "share_2x4.ini")


@pytest.fixture
def sample_run(sample_config, tmp_path):
    cfg = load_config(sample_config, {"out": str(tmp_path / "run")})
    return cfg, RunWorker(cfg).run()


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path, dtype=str, keep_default_na=False)


def test_load_config_resolves_relative_paths(sample_config, sample_dir):
    cfg = load_config(sample_config)
    assert cfg.data_path == os.path.join(sample_dir, "share_2x4.csv")
    assert cfg.out_dir == os.path.join(sample_dir, "out")
    assert cfg.strategies == ("A", "B", "C", "A+", "B+", "C+", "SELF")
    assert cfg.house_ids == ("1", "2")
    assert (cfg.min_up, cfg.min_down, cfg.steps_per_day) == (2, 1, 4)
    assert cfg.sample_dates == (dt.date(2024, 7, 5),)
    assert cfg.oracle_check


def test_load_config_overrides(sample_config):
    cfg = load_config(sample_config, {"min_up": "1", "strategies": "c, A", "jobs": None})
    assert cfg.min_up == 1
    assert cfg.strategies == ("A", "C")
    assert cfg.jobs == 1


def test_load_config_from_overrides_only():
    cfg = load_config(None, {"data": "x.csv", "start": "2010-07-01", "end": "2010-07-31"})
    assert cfg.start == dt.date(2010, 7, 1)
    assert len(cfg.house_ids) == 10
    assert cfg.min_up == cfg.min_down == 3


@pytest.mark.parametrize("text", [
    "data = a.csv\nstart = 2010-07-01\nend = 2010-07-01\nbogus = 1\n",
    "start = 2010-07-01\nend = 2010-07-01\n",
    "data = a.csv\nstart = 2010-07-02\nend = 2010-07-01\n",
    "data = a.csv\nstart = 2010-07-01\nend = 2010-07-01\nstrategies = D\n",
    "data = a.csv\nstart = 2010-07-01\nend = 2010-07-01\nmin_up = 0\n",
    "data = a.csv\nstart = 2010-07-01\nend = 2010-07-01\noracle_check = maybe\n",
])
def test_load_config_rejects(tmp_path, text):
    path = tmp_path / "bad.ini"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "none.ini"))


def test_consistency_error_keeps_dump_across_pickle():
    error = pickle.loads(pickle.dumps(ConsistencyError("bad schedule", dump="program text")))
    assert str(error) == "bad schedule"
    assert error.dump == "program text"


def test_solve_task_share_examples(share_day, share_spec):
    limits = load_config(None, {"data": "x", "start": "2024-07-05", "end": "2024-07-05"}).limits
    c = solve_task(share_day, share_spec(StrategyKind.C), limits, oracle_check=True)
    assert c.status == SOLVED and c.oracle_checked
    assert c.U.tolist() == [[0] * 4, [1] * 4]
    assert c.objective == 8000

    own = solve_task(share_day, share_spec(StrategyKind.SELF), limits, oracle_check=True)
    assert own.U.tolist() == [[1] * 4, [0] * 4]
    assert own.objective == 4000


def test_solve_task_infeasible_day():
    d = make_day([[1000] * 4], [[0] * 4])
    outcome = solve_task(d, StrategySpec(StrategyKind.A, 1, 1), load_config(
        None, {"data": "x", "start": "2024-07-05", "end": "2024-07-05"}).limits)
    assert outcome.status == "Infeasible"
    assert outcome.U is None


def test_run_sample_writes_every_file(sample_run):
    cfg, report = sample_run
    assert len(report.results) == 7
    assert all(o.status == SOLVED for o in report.outcomes)
    assert all(o.oracle_checked for o in report.outcomes)
    for key in COMPARED + ("summary",):
        assert os.path.isfile(os.path.join(cfg.out_dir, OUTPUT_FILES[key])), key


def test_run_sample_schedule_rechecks(sample_run, share_day):
    cfg, _ = sample_run
    schedule = pd.read_csv(os.path.join(cfg.out_dir, OUTPUT_FILES["schedule"]), dtype={"house_id": str})
    assert list(schedule.columns) == ["house_id", "date", "strategy", "s1", "s2", "s3", "s4"]
    for strategy, rows in schedule.groupby("strategy"):
        rows = rows.set_index("house_id").loc[["1", "2"]]
        U = rows[["s1", "s2", "s3", "s4"]].to_numpy(dtype=np.int64)
        assert check_feasible(U, share_day, cfg.strategy_spec(strategy)) == [], strategy


def test_run_sample_summary_and_plot_data(sample_run):
    cfg, report = sample_run
    with open(os.path.join(cfg.out_dir, OUTPUT_FILES["summary"]), encoding="utf-8") as handle:
        summary = json.load(handle)
    assert summary["day_results"] == len(report.results) == 7
    assert list(summary["strategies"]) == ["A", "B", "C", "A+", "B+", "C+", "SELF"]
    assert summary["oracle_checked"] == 7
    assert summary["skipped_dates"] == []
    assert summary["strategies"]["C"]["annual"]["load_met_pct"] == pytest.approx(200 / 3)

    fig4 = read_csv(os.path.join(cfg.out_dir, OUTPUT_FILES["fig4"]))
    assert fig4["house_id"].tolist() == ["1", "2"]
    assert fig4["C"].tolist() == ["0.00", "100.00"]
    assert fig4["SELF"].tolist() == ["100.00", "0.00"]


def test_run_is_byte_identical(sample_config, tmp_path):
    dirs = []
    for name in ("first", "second"):
        cfg = load_config(sample_config, {"out": str(tmp_path / name)})
        RunWorker(cfg).run()
        dirs.append(cfg.out_dir)
    for key in COMPARED:
        with open(os.path.join(dirs[0], OUTPUT_FILES[key]), "rb") as a, \
                open(os.path.join(dirs[1], OUTPUT_FILES[key]), "rb") as b:
            assert a.read() == b.read(), key


def test_run_with_worker_pool_matches_sequential(sample_config, tmp_path):
    sequential = RunWorker(load_config(sample_config, {"out": str(tmp_path / "seq")})).run()
    pooled = RunWorker(load_config(sample_config, {"out": str(tmp_path / "pool"), "jobs": 2})).run()
    assert [(o.strategy, o.status, o.objective) for o in pooled.outcomes] == \
           [(o.strategy, o.status, o.objective) for o in sequential.outcomes]


def test_run_without_matching_days(sample_config, tmp_path):
    cfg = load_config(sample_config, {"start": "2024-08-01", "end": "2024-08-02", "out": str(tmp_path)})
    with pytest.raises(DataError):
        RunWorker(cfg).run()


def test_emit_plot_data_constant_year(tmp_path):
    results = []
    for month in range(1, 13):
        d = make_day([[1000, 1000], [500, 500]], [[1000, 0], [500, 0]], day=dt.date(2023, month, 15))
        results.append(day_result(d, "C", np.array([[1, 0], [1, 0]]), SOLVED))
    paths = emit_plot_data(results, str(tmp_path))

    fig5 = read_csv(paths["fig5"])
    assert len(fig5) == 12
    assert set(fig5["C"]) == {"50.00"}
    assert set(fig5["mean_daily_load_kwh"]) == {"3.000"}
    assert set(fig5["mean_daily_gen_kwh"]) == {"1.500"}
    fig6 = read_csv(paths["fig6"])
    assert fig6["C"].tolist() == ["50.00", "50.00"]


def test_main_run_and_exit_codes(sample_config, tmp_path, capsys):
    assert main(["run", "--config", sample_config, "--strategy", "C", "--out", str(tmp_path / "cli")]) == EXIT_OK
    assert "ok: 1 day result(s)" in capsys.readouterr().out
    assert main(["run", "--config", str(tmp_path / "none.ini")]) == EXIT_INPUT
    assert main(["run", "--config", sample_config, "--data", str(tmp_path / "none.csv"),
                 "--out", str(tmp_path / "x")]) == EXIT_INPUT


def test_main_solve_program_dump(share_day, share_spec, tmp_path, capsys):
    path = tmp_path / "program.txt"
    path.write_text(build_program(share_day, share_spec(StrategyKind.A)).dump(), encoding="utf-8")

    assert main(["solve", "--program", str(path)]) == EXIT_OK
    solved = json.loads(capsys.readouterr().out)
    assert main(["solve", "--program", str(path), "--oracle"]) == EXIT_OK
    oracle = json.loads(capsys.readouterr().out)

    assert solved["status"] == oracle["status"] == "Optimal"
    assert solved["objective_value"] == oracle["objective_value"] == 4 * 10 ** 6
    assert solved["assignment"] == oracle["assignment"]
