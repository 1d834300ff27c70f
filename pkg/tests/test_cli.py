import numpy as np
import pytest

from selinfer.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_toy_single(capsys):
    code, out, _ = run(["toy", "--p1", "0.05", "--p2", "0.9", "--lambda", "0.7", "--alpha", "0.3",
                        "--variant", "cond-sel-fdr"], capsys)
    assert code == 0 and out.strip() == "R={1}"


def test_toy_grid(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert run(["toy", "--grid", "100", "--out", str(out)], capsys)[0] == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "p1,p2,variant,rejects"
    assert len(lines) == 1 + 100 * 100 * 6


def test_toy_bad_variant(capsys):
    with pytest.raises(SystemExit) as e:
        main(["toy", "--p1", "0.1", "--p2", "0.2", "--variant", "bogus"])
    assert e.value.code == 2
    assert "usage" in capsys.readouterr().err


def test_toy_bad_parameter(capsys):
    code, _, err = run(["toy", "--p1", "0.1", "--p2", "0.2", "--lambda", "0.5",
                        "--variant", "selective-improved-fdr"], capsys)
    assert code == 2 and "lambda >= 2 * alpha" in err


def test_unknown_flag_and_help(capsys):
    with pytest.raises(SystemExit) as e:
        main(["calibrate", "--alpha", "0.05", "--delta", "0.5", "--nope"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["--help"])
    assert e.value.code == 0


def test_calibrate(capsys):
    code, out, _ = run(["calibrate", "--alpha", "0.05", "--delta", "0"], capsys)
    assert code == 0 and out.strip() == "0.050000"
    code, out, _ = run(["calibrate", "--alpha", "0.3", "--delta", "0.2"], capsys)
    assert 0.3 < float(out) < 1


def test_winner_and_datasplit(capsys):
    code, out, _ = run(["winner", "--p", "0.0009,0.2,0.02,0.5", "--procedure", "B"], capsys)
    assert code == 0 and "R={1,3}" in out
    code, out, _ = run(["datasplit", "--p1", "0.1,0.9,0.2,0.4", "--p2", "0.001,0.5,0.02,0.013",
                        "--lambda", "0.5"], capsys)
    assert code == 0 and "R_conditional={1,4}" in out and "R_unconditional={1,3,4}" in out
    code, _, _ = run(["datasplit", "--p1", "0.1", "--p2", "0.1,0.2"], capsys)
    assert code == 2


def test_sim_writes_csv_and_summary(tmp_path, capsys):
    out = tmp_path / "w.csv"
    code, stdout, _ = run(["sim", "--suite", "winner", "--reps", "300", "--seed", "5", "--out", str(out)], capsys)
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 44
    assert "mc_se" in stdout


def test_sim_seed_from_environment(tmp_path, capsys, monkeypatch):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("SELINFER_SEED", "99")
    run(["sim", "--suite", "directional", "--reps", "500", "--out", str(a)], capsys)
    run(["sim", "--suite", "directional", "--reps", "500", "--seed", "99", "--out", str(b)], capsys)
    assert a.read_bytes() == b.read_bytes()


def test_sim_assertion_failure_exit_code(tmp_path, capsys, monkeypatch):
    from selinfer import simlab

    real = simlab.run_suite

    def broken(cfg):
        res = real(cfg)
        res.violations.append((0, 7, "forced"))
        return res

    monkeypatch.setattr(simlab, "run_suite", broken)
    code, _, err = run(["sim", "--suite", "toy", "--reps", "50", "--out", str(tmp_path / "t.csv")], capsys)
    assert code == 3 and "replicate 7" in err


def test_sim_bad_param(capsys):
    code, _, _ = run(["sim", "--suite", "toy", "--reps", "10", "--param", "bogus=1"], capsys)
    assert code == 2


def _dataset(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = X @ [2.0, 0.0, -1.0] + rng.normal(size=40)
    lines = ["a,b,c,y"] + [",".join(repr(float(v)) for v in (*x, t)) for x, t in zip(X, y)]
    p = tmp_path / "d.csv"
    p.write_text("\n".join(lines) + "\n")
    return p


def test_lasso_single_and_path(tmp_path, capsys):
    data = _dataset(tmp_path)
    out = tmp_path / "o.csv"
    code, stdout, _ = run(["lasso", "--data", str(data), "--response", "y", "--lambda", "1.0",
                           "--out", str(out)], capsys)
    assert code == 0 and "selected" in stdout
    lines = out.read_text().splitlines()
    assert lines[0] == "variable,lambda,selected,beta_hat,p_value,ci_lo,ci_hi" and len(lines) == 4
    code, _, _ = run(["lasso", "--data", str(data), "--response", "y", "--path", "0.01", "10", "50",
                      "--out", str(out)], capsys)
    assert code == 0
    assert len(out.read_text().splitlines()) == 1 + 3 * 50


def test_lasso_data_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,y\n1,2\nx,3\n4,5\n")
    code, _, err = run(["lasso", "--data", str(bad), "--response", "y", "--lambda", "1"], capsys)
    assert code == 4 and "column 'a'" in err
    code, _, _ = run(["lasso", "--data", str(tmp_path / "none.csv"), "--response", "y", "--lambda", "1"], capsys)
    assert code == 4
