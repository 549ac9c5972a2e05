"""Tests for the command-line harness, sweep CSV and region reports."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from netcournot import (
    Objective,
    SearchConfig,
    TwoNodeParams,
    two_node_instance,
    verify_gne,
)
from netcournot.cli import (
    SweepSpec,
    main,
    read_sweep_csv,
    region_report,
    run_sweep,
    write_sweep_csv,
)

INSTANCES = Path(__file__).resolve().parent.parent / "instances"
LEMMA1 = str(INSTANCES / "lemma1.json")
TWO_NODE_10 = str(INSTANCES / "two_node_10.json")
UNIT = TwoNodeParams(a=1.0, b1=1.0, b2=0.65, c=1.0)


class TestSolveCommand:
    def test_residual_converges_with_zero_transfer(self, capsys):
        code = main(["solve", "--objective", "res", TWO_NODE_10])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["status"] == "converged"
        assert abs(doc["point"]["r"][0]) <= 1e-8

    def test_social_converges_with_negative_transfer(self, capsys):
        code = main(["solve", "--objective", "soc", TWO_NODE_10])
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["point"]["r"][0] < 0

    def test_consumer_on_lemma_instance_cycles(self, capsys):
        code = main(["solve", "--objective", "con", LEMMA1])
        doc = json.loads(capsys.readouterr().out)
        assert code == 2
        assert doc["status"] == "cycle"
        assert doc["analytic"]["regime"] is True
        assert doc["analytic"]["exists"] is False
        assert "evidence" in doc["note"]

    def test_out_file_written(self, tmp_path, capsys):
        out = tmp_path / "result.json"
        code = main(["solve", "--objective", "res", TWO_NODE_10, "--out", str(out)])
        capsys.readouterr()
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["status"] == "converged"

    def test_explicit_init_flags(self, capsys):
        code = main(
            ["solve", "--objective", "res", TWO_NODE_10,
             "--init-q", "1.0,1.0", "--init-r", "0.5,-0.5"]
        )
        capsys.readouterr()
        assert code == 0

    def test_seeded_init_is_reproducible(self, capsys):
        main(["solve", "--objective", "soc", TWO_NODE_10, "--seed", "7"])
        first = capsys.readouterr().out
        main(["solve", "--objective", "soc", TWO_NODE_10, "--seed", "7"])
        second = capsys.readouterr().out
        assert first == second

    def test_missing_instance_is_input_error(self, capsys):
        code = main(["solve", "--objective", "res", "/nonexistent/file.json"])
        capsys.readouterr()
        assert code == 1

    def test_malformed_json_is_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(["solve", "--objective", "res", str(bad)])
        capsys.readouterr()
        assert code == 1


class TestVerifyCommand:
    def test_round_trip_from_solve_output(self, tmp_path, capsys):
        out = tmp_path / "result.json"
        main(["solve", "--objective", "res", TWO_NODE_10, "--out", str(out)])
        capsys.readouterr()
        code = main(
            ["verify", "--objective", "res", TWO_NODE_10, "--point", str(out)]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 0
        assert doc["ok"] is True

    def test_explicit_vectors_fail_for_non_equilibrium(self, capsys):
        code = main(
            ["verify", "--objective", "res", TWO_NODE_10, "--q", "1.0,1.0", "--r", "0,0"]
        )
        doc = json.loads(capsys.readouterr().out)
        assert code == 2
        assert doc["ok"] is False


@pytest.fixture(scope="module")
def unit_records():
    spec = SweepSpec(start=0.0, stop=0.6, steps=61)
    return run_sweep(UNIT, spec)


class TestSweep:
    def test_residual_rows_constant(self, unit_records):
        rows = [r for r in unit_records if r.objective == "res"]
        assert all(r.status == "exists" for r in rows)
        assert all(abs(r.r) <= 1e-9 for r in rows)
        q1_values = {round(r.q1, 12) for r in rows}
        assert len(q1_values) == 1

    def test_consumer_rows_have_contiguous_gap(self, unit_records):
        # boundary rows flagged no-gne on both sides belong to the gap
        def in_gap(rec):
            return rec.status == "no-gne" or rec.status == "boundary:no-gne|no-gne"

        rows = [r for r in unit_records if r.objective == "con"]
        missing = [r.f12 for r in rows if in_gap(r)]
        assert missing
        gaps = np.diff(missing)
        assert np.all(gaps <= 0.6 / 60 + 1e-12)
        # and it sits strictly inside the swept range
        assert min(missing) > 0.0 and max(missing) < 0.6

    def test_exists_rows_verify(self, unit_records):
        from netcournot import from_instance
        from dataclasses import replace as _replace

        checked = 0
        for rec in unit_records:
            if rec.status != "exists" or rec.f12 == 0.0:
                continue
            p = _replace(UNIT, f=rec.f12)
            net, params = two_node_instance(p)
            q = np.array([rec.q1, rec.q2])
            r = np.array([rec.r, -rec.r])
            assert verify_gne(net, params, Objective(rec.objective), q, r, tol=1e-5)
            checked += 1
        assert checked > 100

    def test_welfare_identities_on_records(self, unit_records):
        for rec in unit_records:
            if rec.status != "exists":
                continue
            ms = rec.merch_surplus
            w_res_from_soc = rec.w_soc - rec.profit1 - rec.profit2
            w_res_from_con = rec.w_con + ms
            assert abs(w_res_from_soc - w_res_from_con) <= 1e-9 * max(
                1.0, abs(w_res_from_soc)
            )

    def test_csv_round_trip_bit_exact(self, unit_records, tmp_path):
        path = tmp_path / "sweep.csv"
        write_sweep_csv(path, unit_records, meta="unit sweep")
        parsed = read_sweep_csv(path)
        assert len(parsed) == len(unit_records)
        for a, b in zip(unit_records, parsed):
            assert a == b

    def test_gap_matches_region_partition(self, unit_records):
        report = region_report(UNIT, 0.0, 0.6)
        no_gne = [iv for iv in report["intervals"] if iv["label"] == "no-gne"]
        assert len(no_gne) == 1
        lo, hi = no_gne[0]["lo"], no_gne[0]["hi"]
        for rec in unit_records:
            if rec.objective != "con" or rec.status.startswith("boundary"):
                continue
            inside = lo < rec.f12 < hi
            assert inside == (rec.status == "no-gne")

    def test_sweep_command_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        code = main(
            ["sweep", str(INSTANCES / "two_node_unit.json"), "--steps", "12",
             "--from", "0.0", "--to", "0.5", "--out", str(out),
             "--objectives", "con"]
        )
        capsys.readouterr()
        assert code == 0
        records = read_sweep_csv(out)
        assert len(records) == 12
        first_line = out.read_text().splitlines()[0]
        assert first_line.startswith("#") and "0, 1.5*a/(b2+2c)" in first_line

    def test_boundary_point_reports_both_sides(self):
        th = 1.0 / (0.65 + 2.0)  # uncongested threshold of the unit market
        spec = SweepSpec(start=th - 0.01, stop=th + 0.01, steps=3,
                         objectives=(Objective.CONSUMER_SURPLUS,))
        # middle grid point lands exactly on the threshold
        records = run_sweep(UNIT, spec)
        mid = records[1]
        assert mid.status.startswith("boundary:")
        assert "exists" in mid.status

    def test_rejects_non_two_node(self, capsys):
        code = main(
            ["sweep", str(INSTANCES / "triangle.json"), "--out", "/tmp/x.csv"]
        )
        err = capsys.readouterr().err
        assert code == 1
        assert "two-node" in err


class TestRegion:
    def test_lemma_parameters_partition(self, capsys):
        code = main(
            ["region", "--a", "10", "--b1", "1.2", "--b2", "1", "--c", "1",
             "--from", "0", "--to", "9"]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "no-gne" in out
        report = region_report(TwoNodeParams(10.0, 1.2, 1.0, 1.0), 0.0, 9.0)
        th = report["thresholds"]
        assert th["uncongested"] == pytest.approx(10.0 / 3.0)
        assert th["node1_demand_root"] == pytest.approx(10.0 / 1.2)
        assert th["small_cap"] == pytest.approx(10.0 / 5.6)
        assert th["f0"] == pytest.approx(40.0 / 14.48)
        assert th["f1"] == pytest.approx(2.0 / 5.08)
        no_gne = [iv for iv in report["intervals"] if iv["label"] == "no-gne"]
        assert len(no_gne) == 1
        # the window runs from f1 (condition 4 stops) to f0 (condition 2 starts)
        assert no_gne[0]["lo"] == pytest.approx(2.0 / 5.08)
        assert no_gne[0]["hi"] == pytest.approx(40.0 / 14.48)
        # the stated nonexistence capacity falls inside the window
        assert no_gne[0]["lo"] < 2.0 < no_gne[0]["hi"]

    def test_range_above_uncongested_is_single_interval(self):
        report = region_report(TwoNodeParams(10.0, 1.2, 1.0, 1.0), 4.0, 9.0)
        assert len(report["intervals"]) == 1
        assert report["intervals"][0]["label"] == "exists (condition 1)"

    def test_region_from_instance_with_out(self, tmp_path, capsys):
        out = tmp_path / "region.json"
        code = main(["region", LEMMA1, "--out", str(out)])
        capsys.readouterr()
        assert code == 0
        report = json.loads(out.read_text())
        assert "intervals" in report and "thresholds" in report

    def test_slope_gap_limit_behavior(self):
        # numeric limit check: as b1 -> b2 the window (f1, f0) expands
        # toward (0, uncongested): f1 -> 0 and f0 -> a/(b2+2c)
        def window(report):
            ivs = [iv for iv in report["intervals"] if iv["label"] == "no-gne"]
            assert len(ivs) == 1
            return ivs[0]

        wide = window(region_report(TwoNodeParams(10.0, 1.2, 1.0, 1.0), 0.0, 9.0))
        narrow = window(region_report(TwoNodeParams(10.0, 1.001, 1.0, 1.0), 0.0, 9.0))
        assert narrow["lo"] < wide["lo"]
        assert narrow["hi"] > wide["hi"]
        assert narrow["lo"] == pytest.approx(0.0, abs=0.01)
        assert narrow["hi"] == pytest.approx(10.0 / 3.0, abs=0.01)
