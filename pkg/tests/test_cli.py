import csv
import io
import json

import pytest

from rrsim import suites
from rrsim.cli import main


@pytest.fixture(autouse=True)
def reset_seeding():
    yield
    suites.configure_seeding(0, 1, None)


def test_calc_csv(capsys):
    assert main(["calc", "--n", "100", "1000", "--insertions", "10", "--lookups", "100"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert len(rows) == 8
    rr = [r for r in rows if r["scheme"] == "rr" and r["n"] == "1000"][0]
    assert float(rr["hotspot"]) == pytest.approx(10 / 10 + 100 / 30, rel=1e-5)


def test_calc_to_file(tmp_path):
    assert main(["calc", "--n", "400", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "calc.csv").read_text().startswith("scheme,n,total,hotspot")


def test_run_writes_outputs(tmp_path, capsys):
    code = main(["run", "--set", "duration=30", "--set", "workload.lookups=20", "--seed", "3",
                 "--out-dir", str(tmp_path), "--trace"])
    assert code == 0
    summary = json.loads((tmp_path / "run_summary.json").read_text())
    assert summary["seed"] == 3 and summary["success"] == 1.0
    assert "duration = 30.0" in (tmp_path / "scenario.txt").read_text()
    assert (tmp_path / "event_trace.csv").read_text().startswith("time,seq")
    assert json.loads(capsys.readouterr().out)["protocol"] == "rr"


def test_run_scenario_file(tmp_path):
    path = tmp_path / "s.txt"
    path.write_text("protocol.name = ght_star\nduration = 30\nworkload.lookups = 10\n")
    assert main(["run", str(path), "--mode", "high_level", "--out-dir", str(tmp_path / "o")]) == 0
    assert json.loads((tmp_path / "o" / "run_summary.json").read_text())["protocol"] == "ght_star"


def test_run_invalid_scenario_exit_2(capsys):
    assert main(["run", "--set", "workload.lookup_rate=-2"]) == 2
    assert "lookup_rate" in capsys.readouterr().err


def test_suite_exit_code_tracks_checks(tmp_path, monkeypatch):
    assert main(["suite", "gaps", "--seeds", "1", "--out-dir", str(tmp_path)]) == 0
    assert (tmp_path / "gaps_summary.txt").read_text().startswith("suite gaps: PASS")

    def failing(**kw):
        return suites.SuiteResult("gaps", checks=[suites.Check("x", False)])

    monkeypatch.setattr(suites, "suite_gaps", failing)
    assert main(["suite", "gaps"]) == 1


def test_bad_subcommand():
    with pytest.raises(SystemExit):
        main(["fly"])
