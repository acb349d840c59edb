#test_ingest.py

"""
Purpose:
- Tests for reading, slicing and validating household load / PV data.
"""

import datetime as dt
import io
import os
from decimal import Decimal

import numpy as np
import pytest

from conftest import make_day
from ingest.helpers import (DayInstance, IngestError, parse_ausgrid_csv, parse_canonical_csv, select_cohort,
                            validate_day, write_canonical_csv)
from ingest.workers import IngestWorker

HEADER = "house_id,date,interval,load_kwh,pv_kwh\n"


def canonical(rows, steps=None) -> io.StringIO:
    return io.StringIO(HEADER + "".join(f"{r}\n" for r in rows))


def full_day(house, date, load="0.000", pv="0.000", steps=4):
    return [f"{house},{date},{t},{load},{pv}" for t in range(1, steps + 1)]


def test_single_record_half_hourly():
    rows = ["h1,2010-07-01,1,0.520,0.000"] + [f"h1,2010-07-01,{t},0.000,0.000" for t in range(2, 49)]
    ds = parse_canonical_csv(canonical(rows))
    assert len(ds) == 1
    record = ds.records[("h1", dt.date(2010, 7, 1))]
    assert record.load[0] == 520
    assert record.load[1:].sum() == 0
    assert record.gen.sum() == 0


def test_header_only_is_empty():
    ds = parse_canonical_csv(io.StringIO(HEADER))
    assert len(ds) == 0
    assert ds.span is None


def test_too_many_decimals_names_row():
    rows = full_day("h1", "2010-07-01", steps=4)
    rows[2] = "h1,2010-07-01,3,0.5204,0.000"
    with pytest.raises(IngestError) as error:
        parse_canonical_csv(canonical(rows), steps_per_day=4)
    assert error.value.row == 4
    assert "decimals" in str(error.value)


@pytest.mark.parametrize("value", ["18446744073709552.000", "99999999999999999999.000", "1000000000000000"])
def test_huge_values_hit_overflow_bound(value):
    rows = full_day("h1", "2010-07-01", steps=4)
    rows[1] = f"h1,2010-07-01,2,{value},0.000"
    with pytest.raises(IngestError) as error:
        parse_canonical_csv(canonical(rows), steps_per_day=4)
    assert error.value.row == 3
    assert "overflow bound" in str(error.value)


def test_fifteen_whole_digits_convert_exactly():
    rows = full_day("h1", "2010-07-01", steps=4)
    rows[0] = "h1,2010-07-01,1,999999999999999.999,0000000000000000001.5"
    record = parse_canonical_csv(canonical(rows), steps_per_day=4).records[("h1", dt.date(2010, 7, 1))]
    assert record.load[0] == 999999999999999999
    assert record.gen[0] == 1500


def test_blank_line_names_its_row():
    rows = full_day("h1", "2010-07-01", steps=4)
    rows.insert(2, "")
    with pytest.raises(IngestError) as error:
        parse_canonical_csv(canonical(rows), steps_per_day=4)
    assert error.value.row == 4
    assert "blank line" in str(error.value)


def test_trailing_blank_lines_are_ignored():
    text = HEADER + "".join(f"{r}\n" for r in full_day("h1", "2010-07-01", "0.250")) + "\n\n"
    ds = parse_canonical_csv(io.StringIO(text), steps_per_day=4)
    assert ds.records[("h1", dt.date(2010, 7, 1))].load.tolist() == [250] * 4


@pytest.mark.parametrize("row, message", [
    ("h1,2010-07-01,2,-0.100,0.000", "negative"),
    ("h1,2010-07-01,9,0.100,0.000", "out of range"),
    ("h1,2010-07-01,1,0.100,0.000", "duplicate"),
    ("h1,2010-13-01,2,0.100,0.000", "malformed date"),
    ("h1,2010-07-01,2,abc,0.000", "malformed load_kwh"),
])
def test_bad_rows_are_rejected(row, message):
    rows = ["h1,2010-07-01,1,0.100,0.000", row]
    with pytest.raises(IngestError) as error:
        parse_canonical_csv(canonical(rows), steps_per_day=4)
    assert message in str(error.value)
    assert error.value.row == 3


def test_wrong_header():
    with pytest.raises(IngestError) as error:
        parse_canonical_csv(io.StringIO("house,date,interval,load,pv\n"))
    assert error.value.row == 1


def test_incomplete_day_is_rejected_not_raised():
    rows = full_day("h1", "2010-07-01", "1.000") + full_day("h2", "2010-07-01", "1.000")[:3]
    ds = parse_canonical_csv(canonical(rows), steps_per_day=4)
    assert list(ds.records) == [("h1", dt.date(2010, 7, 1))]
    assert ds.rejected == (("h2", dt.date(2010, 7, 1)),)


def test_crlf_accepted():
    text = (HEADER + "".join(f"{r}\n" for r in full_day("h1", "2010-07-01", "0.250"))).replace("\n", "\r\n")
    ds = parse_canonical_csv(io.StringIO(text), steps_per_day=4)
    assert ds.records[("h1", dt.date(2010, 7, 1))].load.tolist() == [250] * 4


def test_total_load_matches_text_accumulation(sample_dir):
    path = os.path.join(sample_dir, "share_2x4.csv")
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()[1:]
    expected = sum(Decimal(line.split(",")[3]) for line in lines) * 1000

    with open(path, encoding="utf-8") as handle:
        ds = parse_canonical_csv(handle, steps_per_day=4)
    assert sum(int(r.load.sum()) for r in ds.records.values()) == expected


def test_write_then_parse_gives_same_dataset():
    rows = full_day("b", "2010-07-02", "0.001", "1.234") + full_day("a", "2010-07-01", "12.5", "0")
    ds = parse_canonical_csv(canonical(rows), steps_per_day=4)

    out = io.StringIO()
    write_canonical_csv(ds, out)
    text = out.getvalue()
    assert text.splitlines()[1].startswith("a,2010-07-01,1,12.500,0.000")

    again = parse_canonical_csv(io.StringIO(text), steps_per_day=4)
    assert again.records == ds.records


def test_select_cohort_orders_houses_and_skips_gaps():
    rows = (full_day("h2", "2010-07-01", "2.000") + full_day("h1", "2010-07-01", "1.000")
            + full_day("h1", "2010-07-02", "1.000"))
    ds = parse_canonical_csv(canonical(rows), steps_per_day=4)

    instances, skipped = select_cohort(ds, ["h2", "h1"], dt.date(2010, 7, 1), dt.date(2010, 7, 2))
    assert [d.day for d in instances] == [dt.date(2010, 7, 1)]
    assert skipped == [dt.date(2010, 7, 2)]
    assert instances[0].house_ids == ("h1", "h2")
    assert instances[0].L[:, 0].tolist() == [1000, 2000]


def test_select_cohort_single_house():
    ds = parse_canonical_csv(canonical(full_day("h1", "2010-07-01", "1.000")), steps_per_day=4)
    instances, skipped = select_cohort(ds, ["h1"], dt.date(2010, 7, 1), dt.date(2010, 7, 1))
    assert len(instances) == 1 and instances[0].n_houses == 1
    assert skipped == []


def test_select_cohort_absent_house():
    ds = parse_canonical_csv(canonical(full_day("h1", "2010-07-01", "1.000")), steps_per_day=4)
    instances, skipped = select_cohort(ds, ["zz"], dt.date(2010, 7, 1), dt.date(2010, 7, 3))
    assert instances == []
    assert len(skipped) == 3


@pytest.mark.parametrize("ids, start, end", [
    ([], dt.date(2010, 7, 1), dt.date(2010, 7, 1)),
    (["h1", "h1"], dt.date(2010, 7, 1), dt.date(2010, 7, 1)),
    (["h1"], dt.date(2010, 7, 2), dt.date(2010, 7, 1)),
])
def test_select_cohort_preconditions(ids, start, end):
    with pytest.raises(ValueError):
        select_cohort(parse_canonical_csv(io.StringIO(HEADER)), ids, start, end)


def test_validate_day():
    assert validate_day(make_day(np.ones((10, 48)), np.ones((10, 48)))) == []
    assert "zero time steps" in validate_day(DayInstance(("a",), np.zeros((1, 0)), np.zeros((1, 0))))
    huge = make_day([[2 ** 41]], [[0]])
    assert any(v.startswith("overflow bound") for v in validate_day(huge))
    assert any("negative" in v for v in validate_day(make_day([[-1]], [[0]])))


def test_ausgrid_layout():
    steps = [f"{h}:{m:02d}" for h, m in ((0, 30), (1, 0), (1, 30), (2, 0))]
    text = "Solar home electricity data\n" + ",".join(
        ["Customer", "Generator Capacity", "Postcode", "Consumption Category", "date"] + steps) + "\n"
    text += "2,1.62,2076,GC,1/07/2010,0.500,0.500,0.500,0.500\n"
    text += "2,1.62,2076,CL,1/07/2010,0.250,0,0,0\n"
    text += "2,1.62,2076,GG,1/07/2010,0,0.100,0.200,0\n"
    text += "13,1.5,2076,GC,1/07/2010,1,1,1,1\n"      #no GG row: dropped
    ds = parse_ausgrid_csv(io.StringIO(text), steps_per_day=4)

    assert list(ds.records) == [("2", dt.date(2010, 7, 1))]
    record = ds.records[("2", dt.date(2010, 7, 1))]
    assert record.load.tolist() == [750, 500, 500, 500]
    assert record.gen.tolist() == [0, 100, 200, 0]


def test_ingest_worker_reads_sample(sample_dir):
    messages = []
    result = IngestWorker(os.path.join(sample_dir, "share_2x4.csv"), ["2", "1"], dt.date(2024, 7, 5),
                          dt.date(2024, 7, 6), steps_per_day=4, status_callback=messages.append).run()
    assert len(result.instances) == 1
    assert result.skipped == [dt.date(2024, 7, 6)]
    assert result.instances[0].L.tolist() == [[1000] * 4, [2000] * 4]
    assert messages and messages[0].startswith("Reading")


def test_ingest_worker_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        IngestWorker(str(tmp_path / "none.csv"), ["1"], dt.date(2024, 7, 5), dt.date(2024, 7, 5)).run()
