import json
import math
import os

import pytest

from rfic.harness import (CSV_COLUMNS, SCHEMA, Budget, ExpansionReport, emit, from_json,
                          run_sweep, sweep_hash, to_csv, to_json, to_plotdata)

TINY = Budget(N=20_000, replicas=3, n_ladder=2000, n_envs=50, K=100)


@pytest.fixture(scope="module")
def tiny_report():
    return run_sweep("gaussian:1", [1.0, 1.5], TINY, master_seed=5)


def test_report_shape(tiny_report):
    r = tiny_report
    assert r.law == "gaussian:1" and len(r.rows) == 2
    assert r.kappa_tilde_gamma == 3.0
    assert r.kappa.mean == pytest.approx(r.kappa_hat.mean - r.kappa_tilde.mean)
    row = r.rows[0]
    assert row.kappa_eff_F == pytest.approx(1.0 / row.F_hat.mean - 2.0)
    assert row.diff_scaled == pytest.approx((row.F_hat.mean - row.M_hat_dp.mean) * 4.0, rel=1e-6)
    assert any(w for w in r.warnings)  # tiny budgets must be flagged


def test_verdict_lines(tiny_report):
    names = [v[0] for v in tiny_report.verdicts()]
    assert any(n.startswith("kappa:") for n in names)
    assert sum(n.startswith("M coherence") for n in names) == 2
    text = tiny_report.summary()
    assert "kappa_hat" in text and ("PASS" in text or "FAIL" in text)


def test_json_round_trip_is_exact(tiny_report):
    text = to_json(tiny_report)
    back = from_json(text)
    assert back == tiny_report
    assert to_json(back) == text
    assert json.loads(text)["schema"] == SCHEMA


def test_schema_check():
    with pytest.raises(ValueError):
        ExpansionReport.from_dict({"schema": "other"})


def test_csv_layout(tiny_report):
    lines = to_csv(tiny_report).split("\r\n")
    assert lines[0] == f"#schema={SCHEMA}"
    assert lines[1].split(",") == CSV_COLUMNS
    assert len([x for x in lines[2:] if x]) == 2
    plot = to_plotdata(tiny_report)
    assert plot.startswith(f"#schema={SCHEMA}/plotdata")
    assert plot.count("two_J_F,") == 2


def test_emit_names(tiny_report, tmp_path):
    p = emit(tiny_report, "json", str(tmp_path))
    assert os.path.basename(p) == f"gaussian-1_{sweep_hash(tiny_report)}.json"
    assert from_json(open(p).read()) == tiny_report
    q = emit(tiny_report, "csv", str(tmp_path))
    assert q.endswith(".csv")
    with pytest.raises(ValueError):
        emit(tiny_report, "xml", str(tmp_path))


def test_emit_unwritable(tiny_report, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="cannot write"):
        emit(tiny_report, "json", str(blocker / "sub"))


def test_sweep_deterministic_and_thread_free(tiny_report):
    again = run_sweep("gaussian:1", [1.0, 1.5], TINY, master_seed=5, threads=2)
    assert to_json(again) == to_json(tiny_report)


def test_hash_depends_on_inputs(tiny_report):
    other = run_sweep("gaussian:1", [1.0, 1.5], TINY, master_seed=6)
    assert sweep_hash(other) != sweep_hash(tiny_report)


def test_sweep_rejects_bad_lists():
    with pytest.raises(ValueError):
        run_sweep("gaussian:1", [], TINY)
    with pytest.raises(ValueError):
        run_sweep("gaussian:1", [2.0, 1.0], TINY)
    with pytest.raises(ValueError):
        run_sweep("gaussian:1", [0.0, 1.0], TINY)


def test_zero_kappa_when_doubled_field_is_logistic():
    """With 2h of density 1/(2 cosh(x/2))^2 (logistic scale 1/2 for h),
    theta^2/F - 2J vanishes within error bars."""
    from rfic.disorder import DisorderLaw, SeededStream
    from rfic.transfer import free_energy_estimate
    law = DisorderLaw("logistic_sech", 0.5)
    th = law.variance()
    for J in (3.0, 6.0):
        F = free_energy_estimate(law, J, 10 ** 7, 4, SeededStream(5))
        resid = th / F.mean - 2 * J
        se = th * F.stderr / F.mean ** 2
        assert abs(resid) <= max(3 * se, 0.05)


def test_kappa_eff_stabilises(gaussian_joint):
    """theta^2/F - 2J moves by less than its error bars between J=5 and J=8."""
    vals = {}
    for J in (5.0, 8.0):
        F = gaussian_joint[J].estimates()[0]
        vals[J] = (1.0 / F.mean - 2 * J, F.stderr / F.mean ** 2)
    d = abs(vals[5.0][0] - vals[8.0][0])
    se = math.hypot(vals[5.0][1], vals[8.0][1])
    print(f"kappa_eff_F: J=5 {vals[5.0][0]:.4f} J=8 {vals[8.0][0]:.4f} |d|={d:.4f} se={se:.4f}")
    assert d <= 3 * se


def test_first_order_at_J8(gaussian_joint):
    F = gaussian_joint[8.0].estimates()[0]
    assert abs(16 * F.mean - 1.0) <= 0.1


def test_max_energy_first_order_at_J6(gaussian_joint):
    M = gaussian_joint[6.0].estimates()[1]
    assert 0.7 < 12 * M.mean < 1.0
