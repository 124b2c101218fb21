"""End-to-end command-line flows through main()."""

import json

import numpy as np
import pytest

from tuckreg import cli, tensor as tn


def run(args, capsys):
    code = cli.main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_fit_eval_flow(tmp_path, capsys):
    model = str(tmp_path / "model")
    data = str(tmp_path / "data")
    fit = str(tmp_path / "fit")

    code, _, _ = run([
        "gen", "model", "--dims", "6,6,6", "--rank", "1,1,1", "--sparsity", "2,2,2",
        "--seed", "3", "--out", model,
    ], capsys)
    assert code == 0

    code, _, _ = run([
        "gen", "data", "--model", model, "--m", "60", "--seed", "4", "--out", data,
    ], capsys)
    assert code == 0

    code, out, _ = run([
        "fit", "--data", data, "--method", "tpgd", "--rank", "1,1,1", "--sparsity", "2,2,2",
        "--max-iters", "80", "--tol", "1e-12", "--out", fit,
    ], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["stop_reason"] in ("tol", "max_iters")

    # CLI error metric agrees with direct computation
    from tuckreg import model as mdl
    truth = mdl.load_bundle(model)[0].compose()
    tn.write_tnsr(tmp_path / "truth.tnsr", truth)
    code, out, _ = run([
        "eval", "error", "--truth", str(tmp_path / "truth.tnsr"),
        "--estimate", f"{fit}/estimate.tnsr",
    ], capsys)
    assert code == 0
    assert float(out) <= 1e-3


def test_sweep_command_writes_csv(tmp_path, capsys):
    out_csv = tmp_path / "sweep.csv"
    code, out, _ = run([
        "sweep", "--dims", "6,6,6", "--rank", "1,1,1", "--sparsity", "2,2,2",
        "--m-grid", "40", "--trials", "2", "--seed", "5",
        "--solver-overrides", '{"tpgd": {"max_iters": 30, "tol": 1e-9}}',
        "--out", str(out_csv),
    ], capsys)
    assert code == 0
    lines = out_csv.read_text().strip().split("\n")
    assert lines[0].startswith("method,m,sigma,trial,seed,normalized_error")
    assert len(lines) == 3
    assert "median=" in out


def test_config_file_expansion(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "dims": [5, 5, 5], "rank": [1, 1, 1], "sparsity": [2, 2, 2],
        "tau": 2.0,
    }))
    code, out, _ = run(["bound", "--config", str(cfg), "--tau", "1.0"], capsys)
    assert code == 0
    doc = json.loads(out)
    # explicit flag wins over the config file value
    assert doc["log_cover_core"] == pytest.approx(1 * np.log(3 * 1.0 / 0.5))


def test_bound_csv_output(capsys):
    code, out, _ = run([
        "bound", "--dims", "5,5,5", "--rank", "1,1,1", "--sparsity", "2,2,2", "--csv",
    ], capsys)
    assert code == 0
    assert len(out.strip().split(",")) == 3


def test_eval_classify(tmp_path, capsys):
    np.savetxt(tmp_path / "p.txt", [0.9, 0.1, 0.8, 0.2])
    np.savetxt(tmp_path / "l.txt", [1, 0, 1, 0])
    code, out, _ = run([
        "eval", "classify", "--predictions", str(tmp_path / "p.txt"),
        "--labels", str(tmp_path / "l.txt"),
    ], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["harmonic_mean"] == pytest.approx(1.0)


def test_rip_probe_command(capsys):
    code, out, _ = run([
        "rip-probe", "--dims", "5,5,5", "--m", "400", "--seed", "2",
        "--rank", "1,1,1", "--sparsity", "2,2,2", "--trials", "10",
    ], capsys)
    assert code == 0
    doc = json.loads(out)
    assert 0 <= doc["delta_hat"] < 1 and doc["trials"] == 10


def test_runtime_error_exit_code(capsys):
    code, _, err = run(["fit", "--data", "/nonexistent", "--out", "/tmp/x"], capsys)
    assert code == 1
    assert "error:" in err


def test_argument_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["fit"])
    capsys.readouterr()
    assert exc.value.code == 2
