import json
from dataclasses import replace

import pandas as pd
import pytest

from relativistic_zk.config import SimulationSettings
from relativistic_zk.field.randomness import seed_from_text
from relativistic_zk.harness.benchmark import BENCH_COLUMNS, per_round_cheat_rate, run_loopback, summary_table, sweep
from relativistic_zk.reports.report_manager import ReportError, ReportManager, bucket_times, session_frame
from relativistic_zk.transport.session import run_simulated_session


@pytest.fixture
def honest_report(small_config, small_yes):
    instance, witness = small_yes
    return run_simulated_session(small_config, instance, witness).reports["v1"]


def test_session_frame_columns(honest_report):
    frame = session_frame(honest_report)
    assert list(frame.columns[:5]) == ["round", "tau1_ns", "theta1_ns", "tau2_ns", "theta2_ns"]
    assert frame["verdict_reason"].eq("OK").all()
    assert len(frame) == 30


def test_store_and_load_session(tmp_path, honest_report):
    manager = ReportManager(tmp_path)
    path = manager.store_session(honest_report)
    assert path.name == "session_v1.json"
    for name in ("session_v1.csv", "session_v1_phase1_hist.csv", "session_v1_phase2_hist.csv"):
        assert (tmp_path / name).exists()
    envelope = ReportManager.load_session(path)
    assert envelope["accepted"] is True and envelope["F_observed"] == 0
    rows = envelope["rows"]
    assert int(rows["tau1_ns"].iloc[0]) == honest_report.rounds[0].tau1
    hist = pd.read_csv(tmp_path / "session_v1_phase1_hist.csv")
    assert hist.to_dict("records") == [{"bucket_start_us": 0, "count": 30}]


def test_verify_report_is_consistent(tmp_path, honest_report, small_yes):
    manager = ReportManager(tmp_path)
    path = manager.store_session(honest_report)
    result = manager.verify_report(path)
    assert result["consistent"] and result["accepted"]
    rechecked = manager.verify_report(path, instance=small_yes[0])
    assert rechecked["consistent"] and not rechecked["verdict_mismatches"]


def test_verify_report_spots_an_edited_verdict(tmp_path, honest_report):
    manager = ReportManager(tmp_path)
    path = manager.store_session(honest_report)
    envelope = json.loads(path.read_text())
    envelope["accepted"] = False
    path.write_text(json.dumps(envelope))
    result = manager.verify_report(path)
    assert not result["consistent"]
    assert result["accepted"] and not result["saved_accepted"]


def test_verify_report_spots_edited_timing(tmp_path, honest_report):
    manager = ReportManager(tmp_path)
    path = manager.store_session(honest_report)
    envelope = json.loads(path.read_text())
    frame = ReportManager.load_session(path)["rows"]
    frame.loc[2, "theta1_ns"] = frame.loc[2, "tau1_ns"] + 1_900_000
    envelope["csv"] = frame.to_csv(index=False)
    path.write_text(json.dumps(envelope))
    result = manager.verify_report(path)
    assert result["timing_mismatches"] == [3]
    assert result["F_observed"] == 1
    assert not result["consistent"]


def test_load_rejects_other_files(tmp_path):
    bogus = tmp_path / "bogus.json"
    bogus.write_text("{}")
    with pytest.raises(ReportError):
        ReportManager.load_session(bogus)
    with pytest.raises(ReportError):
        ReportManager.load_session(tmp_path / "missing.json")


def test_bucket_times():
    frame = bucket_times([5, 12, 19, 25, None], 10)
    assert frame.to_dict("records") == [
        {"bucket_start_us": 0, "count": 1},
        {"bucket_start_us": 10, "count": 2},
        {"bucket_start_us": 20, "count": 1},
    ]


def test_phase_histogram_of_late_round(small_config, small_yes):
    instance, witness = small_yes
    config = replace(small_config, simulation=SimulationSettings(delay_overrides={2: 950_000}))
    report = run_simulated_session(config, instance, witness).report
    assert report.phase_histogram(1, 100) == {0: 29, 1900: 1}


def test_store_table_and_plot(tmp_path):
    manager = ReportManager(tmp_path)
    frame = bucket_times([3, 14, 15, 92], 10)
    assert manager.store_table(frame, "t.csv").exists()
    assert manager.plot_histogram(frame, "phase 1", "t.png", budget_us=1834).exists()


def test_loopback_single_round():
    result = run_loopback(16, 1, seed=seed_from_text("bench"))
    assert list(result.frame.columns) == BENCH_COLUMNS
    assert len(result.frame) == 1
    assert bool(result.frame["accepted"].iloc[0])
    assert result.frame["phase1_us"].iloc[0] > 0


def test_loopback_sweep_summary():
    results = sweep([16, 24], 5, seed=seed_from_text("sweep"))
    table = summary_table(results)
    assert table["n"].tolist() == [16, 24]
    assert table["accept_rate"].eq(1.0).all()
    with pytest.raises(ValueError):
        run_loopback(16, 0)


def test_cheat_rate_is_near_two_thirds(small_no, small_no_params):
    rate = per_round_cheat_rate(small_no, small_no_params, 900, seed_from_text("cheat-rate"))
    assert abs(rate - 2 / 3) < 0.06


def test_fixed_fail_cheat_rate(small_no, small_no_params):
    rate = per_round_cheat_rate(small_no, small_no_params, 300, seed_from_text("fixed"), fail_challenge=3)
    assert abs(rate - 2 / 3) < 0.1


@pytest.mark.slow
def test_cheat_rate_over_ten_thousand_rounds(small_no, small_no_params):
    rate = per_round_cheat_rate(small_no, small_no_params, 10_000, seed_from_text("cheat-rate-long"))
    assert abs(rate - 2 / 3) < 0.015
