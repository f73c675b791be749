import json

import pytest

from gp_lab.cli import build_parser, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_classify_output(capsys):
    code, out, _ = run_cli(capsys, "classify", "--problem", "majority", "--n", "1",
                           "--tree", "x1 !x1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "r=1 c+=1 c-=0"
    assert lines[1] == "1 x1 C+"
    assert lines[2] == "2 !x1 R"


def test_classify_rejects_bad_tree(capsys):
    code, _, err = run_cli(capsys, "classify", "--problem", "order", "--n", "1",
                           "--tree", "z9")
    assert code == 1
    assert "z9" in err and "Traceback" not in err


def test_bounds_output(capsys):
    code, out, _ = run_cli(capsys, "bounds", "--m", "10")
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("b1 = 1.223732")
    assert lines[1].startswith("b2_coefficient = 9.361319")


def test_run_explicit_optimal(tmp_path, capsys):
    cfg = {
        "problem": "order",
        "bloat_control": False,
        "k_dist": "constant-one",
        "n": 1,
        "init": {"kind": "explicit", "leaves": "x1"},
        "seed": 7,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    code, out, _ = run_cli(capsys, "run", "--config", str(path))
    assert code == 0
    doc = json.loads(out)
    assert doc["iterations_to_opt"] == 0
    assert doc["final_fitness"] == 1


def test_run_trace_and_seed_override(tmp_path, capsys):
    cfg = {
        "problem": "majority",
        "bloat_control": False,
        "k_dist": "one-plus-poisson",
        "n": 2,
        "init": {"kind": "all_neg", "count": 3, "var": 1},
        "seed": 7,
        "trace": "full",
        "max_iterations": 5000,
    }
    path = tmp_path / "run.json"
    path.write_text(json.dumps(cfg))
    trace_path = tmp_path / "trace.csv"
    code, out, _ = run_cli(capsys, "run", "--config", str(path),
                           "--trace", str(trace_path), "--seed", "123")
    assert code == 0
    assert json.loads(out)["seed"] == 123
    assert trace_path.read_text().splitlines()[0] == "iteration,fitness,size,k,accepted"


def test_run_config_unknown_key(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"problem": "order", "bloat": True}))
    code, _, err = run_cli(capsys, "run", "--config", str(path))
    assert code == 1
    assert "'bloat'" in err


def test_run_config_missing_key(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"problem": "order"}))
    code, _, err = run_cli(capsys, "run", "--config", str(path))
    assert code == 1
    assert "bloat_control" in err


def test_run_config_bad_json(tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text("{nope")
    code, _, err = run_cli(capsys, "run", "--config", str(path))
    assert code == 1
    assert "not valid JSON" in err


def test_run_config_missing_file(capsys):
    code, _, err = run_cli(capsys, "run", "--config", "/nonexistent/x.json")
    assert code == 1
    assert "not found" in err


def test_sweep_and_plot(tmp_path, capsys):
    cfg = {
        "problem": "majority",
        "bloat_control": False,
        "k_dist": "constant-one",
        "init_kind": "all_neg",
        "n_grid": [1, 2],
        "t_init_grid": [2, 4],
        "reps": 3,
        "master_seed": 11,
    }
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "out"
    code, out, _ = run_cli(capsys, "sweep", "--config", str(path), "--out", str(out_dir))
    assert code == 0
    assert (out_dir / "runs.csv").exists()
    assert (out_dir / "summary.csv").exists()
    plot_dir = tmp_path / "plots"
    code, out, _ = run_cli(capsys, "plot", "--in", str(out_dir), "--out", str(plot_dir))
    assert code == 0
    assert (plot_dir / "iterations_vs_t_init.svg").exists()


def test_sweep_unknown_key(tmp_path, capsys):
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps({"problem": "order", "grid": {}}))
    code, _, err = run_cli(capsys, "sweep", "--config", str(path), "--out", str(tmp_path))
    assert code == 1
    assert "'grid'" in err


def test_drift_check_exit_codes(capsys):
    code, out, _ = run_cli(capsys, "drift-check", "--theorem", "4", "--trials", "20")
    assert code == 0
    assert "consistent" in out


def test_help_lists_all_subcommands_and_flags(capsys):
    parser = build_parser()
    text = parser.format_help()
    for cmd in ("run", "sweep", "classify", "bounds", "drift-check", "plot"):
        assert cmd in text
    for sub, flags in {
        "run": ["--config", "--trace", "--seed"],
        "sweep": ["--config", "--out", "--seed"],
        "classify": ["--problem", "--n", "--tree"],
        "bounds": ["--m"],
        "drift-check": ["--theorem", "--fixture", "--trials", "--seed"],
        "plot": ["--in", "--out"],
    }.items():
        with pytest.raises(SystemExit):
            parser.parse_args([sub, "--help"])
        sub_text = capsys.readouterr().out
        for flag in flags:
            assert flag in sub_text, (sub, flag)


def test_drift_check_violated_maps_to_exit_2(capsys, monkeypatch):
    import gp_lab.cli as cli
    from gp_lab.drift_lab import BoundReport

    def fake(theorem, fixture=None, trials=None, seed=0):
        return [BoundReport("2", "synthetic", 1.0, 5.0, 0.1, 100, "upper", "violated")]

    monkeypatch.setattr(cli, "drift_check", fake)
    code = cli.main(["drift-check", "--theorem", "2"])
    out = capsys.readouterr().out
    assert code == 2
    assert "violated" in out
