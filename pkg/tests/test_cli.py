from __future__ import annotations

import numpy as np
import pytest

from dynpot.cli import main
from dynpot.engine import SUMMARY_HEADER
from dynpot.harness import CORRELATION_HEADER, SWEEP_HEADER, SweepPoint, write_sweep_csv

QUARTER = ["--scenario", "two_corridor_quarter"]


def test_run_null_s_add_has_zero_load(capsys):
    assert main(["run", *QUARTER, "--sadd", "1", "--ksdyn", "1.0", "--seed", "7", "--agents", "120"]) == 0
    header, line = capsys.readouterr().out.splitlines()
    assert header == SUMMARY_HEADER
    fields = dict(zip(header.split(","), line.split(",")))
    assert fields["seed"] == "7" and fields["load"] == "0" and fields["completed"] == "true"


def test_run_accepts_map_file_name(tmp_path, capsys):
    assert main(["run", "--scenario", "two_corridor_quarter.map", "--agents", "20", "--tmax", "3"]) == 0
    assert capsys.readouterr().out.splitlines()[1].endswith(",false")


def test_run_writes_records_and_fields(tmp_path, capsys):
    out = tmp_path / "agents.csv"
    args = ["run", *QUARTER, "--agents", "30", "--sadd", "5", "--ksdyn", "1", "--out", str(out),
            "--dump-fields", "--dump-every", "20", "--dump-dir", str(tmp_path / "f")]
    assert main(args) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "agent_id,injected_at,arrived_at,passed_measurement" and len(rows) == 31
    names = sorted(p.name for p in (tmp_path / "f").iterdir())
    assert "field_static_0.pgm" in names and "field_dynamic_20.pgm" in names


def test_sweep_two_by_two_then_correlate(tmp_path, capsys):
    sweep = tmp_path / "sweep.csv"
    args = ["sweep", *QUARTER, "--sadd", "2,5", "--ksdyn", "1,2", "--runs", "2", "--agents", "30",
            "--out", str(sweep)]
    assert main(args) == 0
    lines = sweep.read_text().splitlines()
    assert lines[0] == ",".join(SWEEP_HEADER) and len(lines) == 5
    corr = tmp_path / "corr.csv"
    assert main(["correlate", str(sweep), "--neighborhood", "moore", "--out", str(corr)]) == 0
    out = corr.read_text().splitlines()
    assert out[0] == ",".join(CORRELATION_HEADER) and len(out) == 5


def test_correlate_perfect_anticorrelation(tmp_path, capsys):
    egress = np.arange(12.0).reshape(3, 4) ** 1.5
    points = [SweepPoint(float(i + 1), float(j), 1, mean_egress_mean=egress[i, j], load_mean=-egress[i, j])
              for i in range(3) for j in range(4)]
    path = tmp_path / "synthetic.csv"
    write_sweep_csv(points, path)
    assert main(["correlate", str(path)]) == 0
    rows = capsys.readouterr().out.splitlines()[1:]
    assert len(rows) == 12
    for row in rows:
        s, k, corr, nb, defined = row.split(",")
        assert nb == "vn" and defined == "true" and float(corr) == pytest.approx(-1.0, abs=1e-12)


def test_scenario_subcommand(tmp_path, capsys):
    out = tmp_path / "half.map"
    assert main(["scenario", "--build", "0.25", "--out", str(out)]) == 0
    assert "origin: 580" in capsys.readouterr().out
    assert main(["scenario", str(out), "--cell-size", "0.5"]) == 0
    assert "cell size 0.5 m" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv, status, message",
    [
        (["run", "--bogus"], 2, "unrecognized arguments"),
        (["frobnicate"], 2, "invalid choice"),
        (["run", "--scenario", "/no/such.map"], 1, "cannot read scenario file"),
        (["run", *QUARTER, "--sadd", "0.5"], 1, "--sadd must be >= 1"),
        (["run", *QUARTER, "--ksdyn", "-1"], 1, "--ksdyn must be >= 0"),
        (["run", *QUARTER, "--agents", "0"], 2, "must be >= 1"),
        (["run", *QUARTER, "--sadd", "abc"], 2, "not a number"),
        (["sweep", *QUARTER, "--sadd", "5,2"], 1, "strictly increasing"),
        (["correlate", "/no/such.csv"], 1, "cannot read sweep file"),
        (["scenario"], 1, "give a map file"),
    ],
)
def test_errors_have_distinct_messages(argv, status, message, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == status
    assert message in capsys.readouterr().err
