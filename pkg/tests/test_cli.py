import csv
import io
import json

import pytest

from multiport_herald.cli import main
from multiport_herald.report import fmt, sweep_plan


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_fmt_is_fixed_precision():
    assert fmt(4 / 81) == "0.0493827160494"
    assert fmt(0.046875) == "0.046875"
    assert fmt(True) == "true" and fmt(None) == ""


def test_simulate_bell_d3(tmp_path):
    cfg = write(tmp_path, "bell.ini", "[scheme]\nkind = QuditBell3SMS\nd = 3\nseed = 0\n")
    assert main(["simulate", "--config", cfg]) == 0
    rows = list(csv.DictReader(open(tmp_path / "bell.summary.csv")))
    assert rows[0]["simulated_p"].startswith("0.049382716")
    assert rows[0]["closed_form_exact"] == "4/81"
    data = json.loads((tmp_path / "bell.result.json").read_text())
    assert data["schema_version"] == 1
    assert data["verification"]["passed"]
    assert len(data["outcomes"]) == data["verification"]["n_outcomes"]


def test_simulate_ghz_d2_with_explicit_outputs(tmp_path):
    cfg = write(tmp_path, "g.ini", "kind = QuditGHZ4SMS\nd = 2\n[output]\n"
                f"json = {tmp_path}/out/g.json\ncsv = {tmp_path}/out/g.csv\n")
    assert main(["simulate", "--config", cfg]) == 0
    row = next(csv.DictReader(open(tmp_path / "out" / "g.csv")))
    assert row["simulated_p"] == "0.046875"


@pytest.mark.parametrize("text, code", [
    ("kind = QuditBell3SMS\nd = 0\n", 3),
    ("kind = QuditBell3SMS\nd = 9\n", 3),
    ("kind = QuditBell3SMS\nd = three\n", 2),
    ("kind = Unknown\n", 2),
    ("d = 3\n", 2),
    ("[scheme\nkind = x", 2),
])
def test_simulate_error_codes(tmp_path, capsys, text, code):
    cfg = write(tmp_path, "bad.ini", text)
    assert main(["simulate", "--config", cfg]) == code
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["exit_code"] == code and err["message"]


def test_simulate_missing_file(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.ini")]) == 2


def test_simulate_invariant_failure(tmp_path, monkeypatch, capsys):
    from multiport_herald import cli
    real = cli.build_and_run

    def skewed(spec, **kw):
        r = real(spec, **kw)
        r.total_probability += 1e-3
        return r

    monkeypatch.setattr(cli, "build_and_run", skewed)
    cfg = write(tmp_path, "b.ini", "kind = QuditBell3SMS\nd = 2\n")
    assert main(["simulate", "--config", cfg]) == 4
    assert "InvariantFailure" in capsys.readouterr().err


def test_sweep_rows_and_byte_stability(tmp_path):
    args = ["sweep", "--kind", "bell", "--d-min", "2", "--d-max", "3", "--jobs", "1"]
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = list(csv.DictReader(io.StringIO(out1.read_text())))
    sum_sub = [r for r in rows if r["variant"] == "sum_sub"]
    assert [(r["d"], r["closed_form_exact"]) for r in sum_sub] == [("3", "2/3")]
    assert all(r["passed"] == "true" for r in rows)
    assert [int(r["d"]) for r in rows] == sorted(int(r["d"]) for r in rows)


def test_sweep_ghz_plain_d3(capsys):
    assert main(["sweep", "--kind", "ghz", "--d-min", "3", "--d-max", "3",
                 "--variants", "plain", "--jobs", "1"]) == 0
    row = next(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert row["closed_form_exact"] == "27/4096" and row["curve"] == "p_dGHZ"


def test_sweep_one_shot_is_primed(capsys):
    assert main(["sweep", "--kind", "bell", "--d-min", "2", "--d-max", "2",
                 "--variants", "sub,plain", "--one-shot", "--jobs", "1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert rows[0]["curve"] == "p'_dBell-" and rows[0]["closed_form_exact"] == "100/729"
    assert rows[1]["curve"] == "p_dBell" and rows[1]["one_shot"] == "false"


def test_sweep_parallel_matches_serial():
    tasks = sweep_plan("ghz", 2, 3)
    from multiport_herald.report import run_sweep, sweep_csv
    assert sweep_csv(run_sweep(tasks, 2)) == sweep_csv(run_sweep(tasks, 1))


@pytest.mark.parametrize("args", [
    ["--kind", "ghz", "--d-min", "2", "--d-max", "5"],
    ["--kind", "bell", "--d-min", "2", "--d-max", "7"],
    ["--kind", "bell", "--d-min", "1", "--d-max", "3"],
    ["--kind", "bell", "--d-min", "2", "--d-max", "3", "--variants", "bogus"],
])
def test_sweep_out_of_range(capsys, args):
    assert main(["sweep"] + args) == 3
    assert "exit_code" in capsys.readouterr().err


def test_sweep_error_names_bound(capsys):
    main(["sweep", "--kind", "ghz", "--d-min", "2", "--d-max", "5"])
    assert "d <= 4" in capsys.readouterr().err


@pytest.mark.parametrize("fmt_", ["csv", "json"])
def test_emit_plot_data_ghz(tmp_path, fmt_):
    out = tmp_path / f"fig9.{fmt_}"
    assert main(["emit-plot-data", "--figure", "9", "--format", fmt_, "--jobs", "1",
                 "--out", str(out)]) == 0
    text = out.read_text()
    if fmt_ == "json":
        data = json.loads(text)
        assert data["schema_version"] == 1 and set(data["curves"]) == {"p_dGHZ", "p'_dGHZ-"}
        assert [p["d"] for p in data["curves"]["p_dGHZ"]] == [2, 3, 4]
    else:
        assert text.splitlines()[0] == "figure,curve,d,simulated,closed_form"


def test_emit_plot_data_bell_curves(capsys):
    assert main(["emit-plot-data", "--figure", "6", "--jobs", "1"]) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    curves = {r["curve"] for r in rows}
    assert curves == {"p_dBell", "p_dBell2", "p_dBell-", "p_dBellbar-", "p_dSumBell-"}
    assert max(int(r["d"]) for r in rows) == 6


def test_verify_selected_criteria(capsys):
    assert main(["verify", "--only", "1,2,11,12"]) == 0
    lines = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert [l["criterion"] for l in lines[:-1]] == [1, 2, 11, 12]
    assert lines[-1]["summary"]["passed"]


def test_verify_perturbed_dft_fails_unitarity(capsys):
    assert main(["verify", "--only", "12", "--perturb-dft", "1e-3"]) != 0
    first = json.loads(capsys.readouterr().out.splitlines()[0])
    assert not first["passed"] and "unitarity" in first["detail"]


def test_verify_oracle_disagreement_fails(capsys):
    assert main(["verify", "--only", "11", "--inject-oracle-error", "1e-6"]) != 0
    first = json.loads(capsys.readouterr().out.splitlines()[0])
    assert first["criterion"] == 11 and not first["passed"]
