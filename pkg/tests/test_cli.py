import json

from tcpbp.cli import EXIT_INVALID, EXIT_IO, main
from tcpbp.topology import preset, save_scenario


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    out = capsys.readouterr().out
    assert "diamond" in out and "grid" in out


def test_preset_dump_is_loadable_json(capsys):
    assert main(["presets", "tree"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert len(data["flows"]) == 2


def test_validate_ok(capsys):
    assert main(["validate", "--preset", "diamond"]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_validate_reports_problems(tmp_path, capsys):
    path = tmp_path / "bad.json"
    save_scenario(preset("diamond").replace(horizon_slots=0, buffer_size_per_node=0), path)
    assert main(["validate", "--scenario", str(path)]) == EXIT_INVALID
    err = capsys.readouterr().err
    assert err.count("invalid:") >= 2


def test_run_writes_files(tmp_path, capsys):
    out = tmp_path / "res"
    code = main(["run", "--preset", "onehop_downlink", "--horizon", "500", "--seed", "3",
                 "--policy", "tcp-aware", "--out", str(out), "--format", "jsonl"])
    assert code == 0
    assert (out / "series.jsonl").exists() and (out / "summary.jsonl").exists()
    assert "jain=" in capsys.readouterr().out


def test_run_static_baseline_with_lossy_link(capsys):
    assert main(["run", "--preset", "diamond", "--horizon", "300", "--baseline", "static",
                 "--lossy-links", "0:0.3", "--k", "fixed:5"]) == 0


def test_run_invalid_horizon():
    assert main(["run", "--preset", "diamond", "--horizon", "0"]) == EXIT_INVALID


def test_bad_k_policy():
    assert main(["run", "--preset", "diamond", "--horizon", "10", "--k", "maybe"]) == EXIT_INVALID


def test_missing_scenario_file(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "none.json")]) == EXIT_IO


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "f"
    blocker.write_text("x")
    code = main(["run", "--preset", "diamond", "--horizon", "50", "--out", str(blocker / "o")])
    assert code == EXIT_IO


def test_sweep_to_stdout(capsys):
    code = main(["sweep", "--preset", "diamond", "--horizon", "300", "--axis", "corrupt_prob",
                 "--values", "0,0.5", "--seeds", "1", "--lossy-links", "0"])
    assert code == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and lines[0].startswith("axis,")


def test_sweep_over_K_to_file(tmp_path):
    code = main(["sweep", "--preset", "onehop_downlink", "--horizon", "300", "--axis", "K",
                 "--values", "fixed:0,buffer-share", "--seeds", "2", "--out", str(tmp_path)])
    assert code == 0
    assert len((tmp_path / "sweep.csv").read_text().splitlines()) == 3
