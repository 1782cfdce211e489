import json
import subprocess
import sys
import time

import pytest

from rfic.cli import main, parse_args


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def usage_error(capsys, *argv):
    with pytest.raises(SystemExit) as e:
        main(list(argv))
    return e.value.code, capsys.readouterr().err


def test_kappa_hat_rademacher(capsys):
    code, out, _ = run(capsys, "constants", "kappa-hat", "--law", "rademacher:1", "--n", "100000",
                       "--seed", "7")
    assert code == 0
    assert out.splitlines()[0].startswith("kappa_hat = 1.000 ± 0.000")


def test_bad_law_exit_2(capsys):
    code, err = usage_error(capsys, "free-energy", "--law", "gaussian:-1", "--J", "6")
    assert code == 2
    assert "--law" in err and "sigma must be > 0" in err


@pytest.mark.parametrize("argv,flag", [
    (["free-energy", "--law", "gaussian:1", "--J", "0"], "--J"),
    (["free-energy", "--law", "gaussian:1", "--J", "1", "--N", "1234.5"], "--N"),
    (["free-energy", "--law", "gaussian:1", "--J", "1", "--N", "10"], "--N"),
    (["free-energy", "--law", "gaussian:1"], "--J"),
    (["sweep", "--law", "gaussian:1", "--J", "3"], "--J"),
    (["sweep", "--law", "gaussian:1", "--J", "5,3"], "--J"),
    (["max-energy", "--law", "gaussian:1", "--J", "2", "--K", "10"], "--K"),
    (["constants", "kappa-hat", "--law", "laplace:1", "--n", "1"], "--n"),
    (["constants"], "kappa-hat"),
])
def test_usage_errors_name_flag(capsys, argv, flag):
    code, err = usage_error(capsys, *argv)
    assert code == 2 and flag in err


def test_scientific_counts():
    cfg = parse_args(["free-energy", "--law", "gaussian:1", "--J", "6", "--N", "1e7",
                      "--replicas", "32", "--seed", "42"])
    assert cfg.N == 10 ** 7 and cfg.replicas == 32 and cfg.seed == 42


def test_free_energy_example(capsys):
    code, out, err = run(capsys, "free-energy", "--law", "gaussian:1", "--J", "6", "--N", "1e7",
                         "--replicas", "32", "--seed", "42", "--format", "json")
    assert code == 0 and "transfer" in err
    row = json.loads(out)["rows"][0]
    assert row["quantity"] == "F" and row["n_samples"] == 32
    assert 0.7 < 12 * row["mean"] < 1.0


def test_format_changes_encoding_only(capsys):
    base = ["max-energy", "--law", "laplace:1", "--J", "1.5", "--N", "5e4", "--replicas", "3",
            "--K", "150", "--seed", "9"]
    _, js, _ = run(capsys, *base, "--format", "json")
    _, cs, _ = run(capsys, *base, "--format", "csv")
    rows = json.loads(js)["rows"]
    lines = cs.strip().split("\r\n")
    assert lines[0] == "quantity,mean,stderr,n_samples,seed,J,N"
    for r, line in zip(rows, lines[1:]):
        f = line.split(",")
        assert f[0] == r["quantity"] and float(f[1]) == r["mean"] and float(f[2]) == r["stderr"]


def test_seed_reruns_are_bit_exact(capsys):
    argv = ["constants", "kappa-hat", "--law", "gaussian:1", "--n", "20000", "--seed", "3",
            "--format", "json"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv, "--threads", "3")
    assert a == b


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"law": "laplace:1", "J": 2, "N": "2e4", "replicas": 2, "seed": 4,
                               "format": "json"}))
    _, a, _ = run(capsys, "free-energy", "--config", str(cfg))
    _, b, _ = run(capsys, "free-energy", "--config", str(cfg), "--J", "3")
    assert json.loads(a)["rows"][0]["J"] == 2.0
    assert json.loads(b)["rows"][0]["J"] == 3.0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"law": "laplace:1", "gamma": 3}))
    code, err = usage_error(capsys, "free-energy", "--config", str(bad))
    assert code == 2 and "unknown key 'gamma'" in err
    code, err = usage_error(capsys, "free-energy", "--config", str(tmp_path / "missing.json"))
    assert code == 2


def test_extrema_stats_example(capsys):
    code, out, _ = run(capsys, "extrema-stats", "--law", "gaussian:1", "--gamma", "8", "--K", "2000")
    assert code == 0
    lines = out.split("\r\n")
    assert lines[0] == "k,direction,height,length"
    data = [x for x in lines[1:] if x and not x.startswith("#")]
    assert len(data) == 4000
    assert all(float(x.split(",")[2]) >= 8.0 for x in data)
    assert sum(x.startswith("# ") for x in lines) == 3


def test_kappa_tilde_and_lindley(capsys):
    code, out, _ = run(capsys, "constants", "kappa-tilde", "--law", "gaussian:1", "--gamma", "6",
                       "--n-envs", "200", "--format", "csv")
    assert code == 0 and out.count("kappa_tilde_") == 2
    code, out, _ = run(capsys, "lindley-cdf", "--law", "gaussian:1", "--n", "5000", "--points", "6",
                       "--format", "json")
    d = json.loads(out)
    assert code == 0 and d["F"][0] > 0 and len(d["x"]) == 6 and d["fit"]["window"] == [10.0, 25.0]


def test_runtime_failure_exit_1(capsys):
    code, _, err = run(capsys, "constants", "kappa-hat", "--law", "uniform:1", "--n", "3")
    assert code in (0, 1)
    code, _, err = run(capsys, "free-energy", "--law", "gaussian:1", "--J", "1", "--N", "2e3",
                       "--replicas", "1", "--out", "/nonexistent-dir/x.txt")
    assert code == 1 and "error" in err


def test_sweep_writes_report(capsys, tmp_path):
    code, out, _ = run(capsys, "sweep", "--law", "logistic_sech", "--J", "3,5,6", "--N", "2e4",
                       "--replicas", "2", "--n-ladder", "500", "--n-envs", "30", "--K", "100",
                       "--seed", "1", "--format", "json", "--out", str(tmp_path))
    assert code == 0
    assert any(line.startswith(("PASS  kappa:", "FAIL  kappa:")) for line in out.splitlines())
    files = sorted(p.name for p in tmp_path.iterdir())
    assert len(files) == 2 and files[0].startswith("logistic_sech_")


def test_selftest_under_a_minute():
    t0 = time.time()
    p = subprocess.run([sys.executable, "-m", "rfic.cli", "selftest", "--seed", "1"],
                       capture_output=True, text=True)
    dt = time.time() - t0
    assert p.returncode == 0, p.stderr
    assert "selftest PASS" in p.stdout
    assert dt < 60
