import subprocess
import sys

import pytest

from simgood.cli import main, parse_grid


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_grid():
    assert parse_grid("1e-3:1e-1") == pytest.approx((1e-3, 1e-2, 1e-1))
    assert parse_grid("0.5,2") == (0.5, 2.0)


def test_full_pipeline(tmp_path, capsys):
    p = tmp_path
    assert run(["gen-rings", "--n-train", 120, "--n-test", 60, "--seed", 3,
                "--train-out", p / "tr.txt", "--test-out", p / "te.txt"], capsys)[0] == 0
    assert run(["kpca", p / "tr.txt", "--model-out", p / "k.txt", "--train-out", p / "ptr.txt",
                "--transform", p / "te.txt", p / "pte.txt"], capsys)[0] == 0
    code, out, _ = run(["train-sllc", p / "ptr.txt", "--beta", 1e-2, "--gamma", 1e-2, "--out", p / "s.txt"], capsys)
    assert code == 0 and "objective" in out
    assert run(["train-classifier", p / "ptr.txt", "--similarity", p / "s.txt", "--lambda", 1,
                "--out", p / "c.txt"], capsys)[0] == 0
    code, out, _ = run(["evaluate", p / "pte.txt", "--classifier", p / "c.txt"], capsys)
    assert code == 0
    acc, sparsity = out.splitlines()[1].split("\t")
    assert float(acc) == 100.0 and int(sparsity) <= 2
    code, out, _ = run(["evaluate", p / "pte.txt", "--knn", 3, "--train", p / "ptr.txt",
                        "--similarity", p / "s.txt"], capsys)
    assert code == 0 and float(out.splitlines()[1].split("\t")[0]) == 100.0
    code, out, _ = run(["bound", "--similarity", p / "s.txt", "--train", p / "ptr.txt"], capsys)
    assert code == 0 and "kappa" in out
    # reusing the saved basis reproduces the projection byte for byte
    assert run(["kpca", p / "tr.txt", "--model", p / "k.txt", "--transform", p / "te.txt", p / "again.txt"],
               capsys)[0] == 0
    assert (p / "again.txt").read_bytes() == (p / "pte.txt").read_bytes()


def test_bound_numbers(capsys):
    code, out, _ = run(["bound", "--epsilon", 0, "--n-train", 10000, "--beta", 1, "--gamma", 1], capsys)
    assert code == 0
    values = dict(line.split("\t") for line in out.splitlines())
    assert float(values["kappa"]) == 3.0
    assert float(values["bound"]) == pytest.approx(0.0859711, abs=1e-6)


def test_experiment_tsv(capsys):
    code, out, _ = run(["experiment", "--runs", 1, "--rings-train", 100, "--rings-test", 40,
                        "--beta-grid", "1e-2", "--gamma-grid", "1e-2", "--lambda-grid", "1,10",
                        "--method", "sllc-linear", "--method", "identity-knn"], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split("\t") == ["method", "accuracy", "sparsity", "beta", "gamma", "lambda", "time_s"]
    assert [ln.split("\t")[0] for ln in lines[1:]] == ["sllc-linear", "identity-knn"]


def test_exit_codes(tmp_path, capsys):
    assert run(["bound", "--beta", 1], capsys)[0] == 1
    assert run(["bound", "--epsilon", 0.1, "--n-train", 10, "--beta", -1, "--gamma", 1], capsys)[0] == 1
    assert run(["evaluate", tmp_path / "missing.txt", "--classifier", "x"], capsys)[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("+1 1:oops\n")
    code, _, err = run(["train-sllc", bad, "--beta", 1, "--gamma", 1, "--out", tmp_path / "s.txt"], capsys)
    assert code == 2 and "line 1" in err
    model = tmp_path / "m.txt"
    model.write_text("SIMGOOD 99 kpca\n")
    data = tmp_path / "d.txt"
    data.write_text("+1 1:1\n-1 1:2\n")
    assert run(["kpca", data, "--model", model], capsys)[0] == 2
    with pytest.raises(SystemExit) as info:
        main(["train-sllc"])
    assert info.value.code == 1


def test_numerical_failure_exit_code(tmp_path, capsys):
    data = tmp_path / "d.txt"
    data.write_text("+1 1:0.5 2:0.1\n-1 1:-0.4 2:0.3\n+1 1:0.2 2:-0.5\n-1 1:0.1 2:0.2\n")
    code, _, err = run(["train-sllc", data, "--beta", 1e-7, "--gamma", 1e-7, "--solver", "full",
                        "--max-iters", 1, "--out", tmp_path / "s.txt"], capsys)
    assert code == 3 and "numerical" in err


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "simgood.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.strip() == "0.1.0"
