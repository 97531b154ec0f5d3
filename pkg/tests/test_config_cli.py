"""Config parsing, serialization round-trips, CLI subcommands, exit codes."""

import json
import os

import pytest

from warpcsf import (
    ParseError,
    UnknownCheck,
    UnknownFamily,
    UnknownPreset,
    cli,
    config_hash,
    parse_config,
    parse_config_text,
    scenario_path,
    serialize,
    shipped_scenarios,
)

SMOKE = """
[warp]
family = constant
r0 = 1.0
domain_upper = 0.0

[initial_curve]
preset = circle
z0 = -3.0
n = 64

[solver]
t_end = 0.2
sample_dt = 0.05

[checks]
names = graph_preserved

[outputs]
snapshot_every = 2
"""


# --- parsing ----------------------------------------------------------------


def test_shipped_scenarios_all_parse():
    names = shipped_scenarios()
    assert "thm1_c1" in names and len(names) == 9
    for name in names:
        cfg = parse_config(scenario_path(name))
        assert cfg.curve.n >= 8


def test_unknown_family_gets_suggestion():
    text = SMOKE.replace("family = constant", "family = reciproal")
    with pytest.raises(UnknownFamily) as exc:
        parse_config_text(text)
    assert "reciprocal" in str(exc.value)


def test_unknown_preset_and_check():
    with pytest.raises(UnknownPreset):
        parse_config_text(SMOKE.replace("preset = circle", "preset = cirlce"))
    with pytest.raises(UnknownCheck):
        parse_config_text(SMOKE.replace("names = graph_preserved", "names = graph_presrved"))


def test_empty_file_is_parse_error():
    with pytest.raises(ParseError):
        parse_config_text("")


def test_all_errors_collected():
    text = SMOKE.replace("family = constant", "family = nope").replace(
        "preset = circle", "preset = nope"
    )
    with pytest.raises(ParseError) as exc:
        parse_config_text(text)
    msg = str(exc.value)
    assert "family" in msg and "preset" in msg


def test_unknown_section_rejected():
    with pytest.raises(ParseError):
        parse_config_text(SMOKE + "\n[extra]\nkey = 1\n")


def test_orphan_check_section_rejected():
    with pytest.raises(ParseError):
        parse_config_text(SMOKE + "\n[check:lemma32]\nc0 = 0.0\n")


def test_comparison_check_needs_bounds():
    text = SMOKE.replace("names = graph_preserved", "names = comparison")
    with pytest.raises(ParseError):
        parse_config_text(text)


# --- round trips ------------------------------------------------------------


def test_round_trip_all_shipped():
    for name in shipped_scenarios():
        cfg = parse_config(scenario_path(name))
        again = parse_config_text(serialize(cfg))
        assert again == cfg
        assert config_hash(again) == config_hash(cfg)


def test_with_value_round_trip():
    cfg = parse_config_text(SMOKE)
    c2 = cfg.with_value("initial_curve.n", 96)
    assert c2.curve.n == 96
    assert cfg.curve.n == 64
    c3 = cfg.with_value("solver.t_end", 0.4)
    assert c3.solver.t_end == 0.4
    c4 = parse_config(scenario_path("thm25_graph")).with_value("check:lemma32.c0", 0.3)
    assert c4.lemma32_c0 == 0.3


def test_hash_differs_across_values():
    cfg = parse_config_text(SMOKE)
    assert config_hash(cfg) != config_hash(cfg.with_value("initial_curve.n", 96))


# --- CLI --------------------------------------------------------------------


def write_cfg(tmp_path, text, name="case.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_cmd_run_green_smoke(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMOKE)
    out = str(tmp_path / "out")
    assert cli.main(["run", cfg, "--out", out]) == 0
    captured = capsys.readouterr().out
    assert "PASS graph_preserved" in captured
    for artifact in ("summary.json", "diagnostics.csv", "events.jsonl", "scenario.cfg"):
        assert os.path.exists(os.path.join(out, artifact))
    summary = json.load(open(os.path.join(out, "summary.json")))
    assert summary["passed"] is True
    assert summary["terminalEvent"]["kind"] == "finished"
    assert summary["checks"]["graph_preserved"]["passed"] is True
    snaps = os.listdir(os.path.join(out, "snapshots"))
    assert "sample_00000.csv" in snaps
    first = open(os.path.join(out, "snapshots", "sample_00000.csv")).readline().strip()
    assert first == "i,theta,z,ds,a,b,theta_fn,kappa"


def test_cmd_run_exit_one_on_failed_check(tmp_path):
    text = SMOKE.replace(
        "names = graph_preserved",
        "names = z_drop\n\n[check:z_drop]\ndrop = 5.0",
    )
    cfg = write_cfg(tmp_path, text)
    assert cli.main(["run", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 1


def test_cmd_run_exit_one_on_terminal_event(tmp_path):
    text = SMOKE.replace("[solver]", "[solver]\nz_floor = -2.0")
    cfg = write_cfg(tmp_path, text)
    assert cli.main(["run", cfg, "--out", str(tmp_path / "o"), "--quiet"]) == 1
    summary = json.load(open(tmp_path / "o" / "summary.json"))
    assert summary["terminalEvent"]["kind"] == "z_floor"


def test_cmd_run_exit_two_on_bad_input(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.cfg")]) == 2
    bad = write_cfg(tmp_path, SMOKE.replace("family = constant", "family = nope"))
    assert cli.main(["run", bad, "--out", str(tmp_path / "o")]) == 2


def test_cmd_check_warp(tmp_path, capsys):
    cfg = write_cfg(tmp_path, SMOKE)
    assert cli.main(["check-warp", cfg, "--out", str(tmp_path / "o")]) == 0
    report = json.load(open(tmp_path / "o" / "conditions.json"))
    assert report["c0"] is False  # constant warp is not strictly increasing
    out = capsys.readouterr().out
    assert "c0" in out


def test_cmd_sweep_rows_and_empty(tmp_path):
    cfg = write_cfg(tmp_path, SMOKE)
    out = str(tmp_path / "sweep")
    rc = cli.main(
        ["sweep", cfg, "--axis", "initial_curve.n", "--values", "64,96", "--out", out, "--quiet"]
    )
    assert rc == 0
    rows = open(os.path.join(out, "sweep.csv")).read().strip().splitlines()
    assert len(rows) == 3  # header + 2 rows
    assert rows[0].startswith("axis,value")
    assert os.path.isdir(os.path.join(out, "row_00_64"))
    # empty list: header only, still exit 0
    out2 = str(tmp_path / "sweep2")
    rc = cli.main(["sweep", cfg, "--axis", "initial_curve.n", "--values", "", "--out", out2, "--quiet"])
    assert rc == 0
    rows = open(os.path.join(out2, "sweep.csv")).read().strip().splitlines()
    assert len(rows) == 1


def test_cmd_sweep_isolates_bad_rows(tmp_path):
    cfg = write_cfg(tmp_path, SMOKE)
    out = str(tmp_path / "sweep")
    rc = cli.main(
        ["sweep", cfg, "--axis", "initial_curve.n", "--values", "64,4", "--out", out, "--quiet"]
    )
    assert rc == 1  # one row raised on invalid n
    rows = open(os.path.join(out, "sweep.csv")).read().strip().splitlines()
    assert len(rows) == 3
    assert "true" in rows[1]
    assert rows[2].split(",")[-1] != ""  # error column populated


def test_cmd_compare_circle(tmp_path, capsys):
    text = SMOKE.replace("family = constant\nr0 = 1.0\ndomain_upper = 0.0", "family = reciprocal").replace(
        "z0 = -3.0", "z0 = -2.0"
    ).replace(
        "names = graph_preserved",
        "names = comparison\n\n[check:comparison]\nz_lower = -2.5\nz_upper = -1.5",
    )
    cfg = write_cfg(tmp_path, text)
    out = str(tmp_path / "cmp")
    assert cli.main(["compare", cfg, "--out", out]) == 0
    lines = open(os.path.join(out, "compare.csv")).read().strip().splitlines()
    assert lines[0] == "t,baselineLower,zMin,zMax,baselineUpper,ordered,circleDeviation"
    assert all(",true," in ln for ln in lines[1:])
    # circle initial data tracks the reduced ODE closely
    worst = max(float(ln.split(",")[-1]) for ln in lines[1:])
    assert worst < 1e-3


def test_cmd_compare_needs_bounds(tmp_path):
    cfg = write_cfg(tmp_path, SMOKE)
    assert cli.main(["compare", cfg, "--out", str(tmp_path / "o")]) == 2


def test_out_dir_env_root(tmp_path, monkeypatch):
    monkeypatch.setenv("WARPCSF_OUT", str(tmp_path / "root"))
    cfg = write_cfg(tmp_path, SMOKE, name="envcase.cfg")
    assert cli.main(["run", cfg, "--quiet"]) == 0
    assert os.path.isdir(tmp_path / "root" / "runs" / "envcase")


def test_run_artifacts_are_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, SMOKE)
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    assert cli.main(["run", cfg, "--out", a, "--quiet"]) == 0
    assert cli.main(["run", cfg, "--out", b, "--quiet"]) == 0
    for sub in ("summary.json", "diagnostics.csv", "events.jsonl", "scenario.cfg"):
        assert open(os.path.join(a, sub), "rb").read() == open(os.path.join(b, sub), "rb").read()
