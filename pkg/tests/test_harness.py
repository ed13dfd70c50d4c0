import math

import numpy as np
import pytest

import slowfast as sf
from slowfast import config as cfg
from slowfast import harness
from slowfast.errors import ConfigurationError
from util import write_config

SMALL_CONVERGE = """
[basis]
n_modes = 4

[coefficients]
preset = "linear-ou"

[coefficients.parameters]
sigma1 = 0.3
sigma2 = 0.2
c1 = 0.2
c2 = 0.1
alpha = 1.0

[noise.channel1]
q = 1.0
[noise.channel2]
amplitude = 1.0
q = 1.0

[simulation]
epsilons = [0.5, 0.1]
t_end = 0.25
dt_slow = 0.025

[experiment]
n_replicas = 16
seed = 777

[averaging]
t_avg = 3.0
t_burn = 6.0
"""


def _report(**over):
    base = dict(epsilons=[0.5, 0.1, 0.02],
                e_sup_diff=[0.09, 0.04, 0.02],
                stderrs=[0.005, 0.003, 0.001],
                p_exceed=[0.4, 0.0, 0.0],
                p_stderrs=[0.05, 0.0, 0.0],
                eta=0.1, n_replicas=100,
                wall_times=[float("nan")] * 3)
    base.update(over)
    return harness.ConvergenceReport(**base)


def test_emit_report_csv_round_trips_at_full_precision(tmp_path):
    rep = _report(e_sup_diff=[1 / 3, 1 / 7, 1 / 11])
    path = tmp_path / "report.csv"
    harness.emit_report(rep, "csv", str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == harness.REPORT_HEADER
    assert len(lines) == 4
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        assert float(cells[0]) == rep.epsilons[i]
        assert float(cells[1]) == rep.e_sup_diff[i]
        assert float(cells[3]) == rep.p_exceed[i]
        assert math.isnan(float(cells[5]))


def test_emit_report_empty_grid_header_only(tmp_path):
    rep = _report(epsilons=[], e_sup_diff=[], stderrs=[], p_exceed=[],
                  p_stderrs=[], wall_times=[])
    path = tmp_path / "empty.csv"
    harness.emit_report(rep, "csv", str(path))
    assert path.read_text() == harness.REPORT_HEADER + "\n"
    svg = tmp_path / "empty.svg"
    harness.emit_report(rep, "svg-plot", str(svg))
    assert "<polyline" not in svg.read_text()


def test_emit_report_svg_single_polyline(tmp_path):
    path = tmp_path / "plot.svg"
    harness.emit_report(_report(), "svg-plot", str(path))
    text = path.read_text()
    assert text.count("<polyline") == 1
    assert text.startswith("<svg")


def test_emit_report_rejects_unknown_format_and_unwritable_path(tmp_path):
    with pytest.raises(ConfigurationError):
        harness.emit_report(_report(), "pdf", str(tmp_path / "x"))
    with pytest.raises(ConfigurationError):
        harness.emit_report(_report(), "csv",
                            str(tmp_path / "missing" / "x.csv"))


def test_emit_report_png_figure(tmp_path):
    path = tmp_path / "fig.png"
    harness.emit_report_figure(_report(), str(path))
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_trajectory_csv_schema(tmp_path):
    rec = sf.TrajectoryRecord(
        times=np.array([0.0, 0.1]),
        u_path=np.array([[1.0, 0.0], [0.5, 0.25]]),
        v_path=np.array([[0.0, 0.0], [0.1, -0.1]]),
        sup_norm_u=1.0, sup_norm_v=0.2)
    path = tmp_path / "traj.csv"
    harness.write_trajectory_csv(rec, str(path))
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,||u||,||v||,u_1,u_2,v_1,v_2"
    cells = lines[2].split(",")
    assert float(cells[0]) == 0.1
    assert float(cells[1]) == pytest.approx(np.hypot(0.5, 0.25))
    assert float(cells[3]) == 0.5


def test_convergence_experiment_degenerate_coupling(tmp_path):
    # b1 independent of v makes the averaged drift exact and the coupling
    # pathwise: sup differences vanish to rounding
    text = SMALL_CONVERGE.replace(
        "[simulation]",
        "[simulation]").replace(
        "c1 = 0.2", "c1 = 0.2\nb1_v_gain = 0.0\nb1_u_gain = 0.3")
    rc = cfg.parse_config(write_config(tmp_path, text))
    rep = harness.convergence_experiment(rc)
    assert max(rep.e_sup_diff) <= 1e-12
    assert rep.p_exceed == [0.0, 0.0]
    assert rep.diagnostics["used"] == {"0.5": 16, "0.1": 16}
    assert rep.diagnostics["failed"] == {"0.5": 0, "0.1": 0}


def test_convergence_experiment_deterministic_and_thread_invariant(tmp_path):
    rc = cfg.parse_config(write_config(tmp_path, SMALL_CONVERGE))
    rep1 = harness.convergence_experiment(rc, threads=1)
    rep2 = harness.convergence_experiment(rc, threads=1)
    assert rep1.e_sup_diff == rep2.e_sup_diff
    assert rep1.p_exceed == rep2.p_exceed
    rep3 = harness.convergence_experiment(rc, threads=2)
    assert rep1.e_sup_diff == rep3.e_sup_diff
    assert rep1.stderrs == rep3.stderrs


def test_convergence_stderr_scales_with_replicas(tmp_path):
    rc = cfg.parse_config(write_config(tmp_path, SMALL_CONVERGE))
    vals = {}
    for m in (16, 64):
        rc_m = cfg.RunConfig(values={**rc.values, "experiment.n_replicas": m},
                             preset_params=dict(rc.preset_params))
        rep = harness.convergence_experiment(rc_m)
        vals[m] = rep.stderrs[0]
    ratio = vals[16] / vals[64]
    assert 2.0 * 0.8 <= ratio <= 2.0 * 1.2


def test_verify_a2_selection(tmp_path):
    rc = cfg.parse_config(write_config(tmp_path, SMALL_CONVERGE))
    results = harness.verify_lemmas(rc, selection=("a2",))
    assert [r.name for r in results] == ["a2-channel1", "a2-channel2"]
    assert all(r.passed for r in results)
    assert results[0].statistic == pytest.approx(0.5)


def test_verify_rejects_unknown_selection(tmp_path):
    rc = cfg.parse_config(write_config(tmp_path, SMALL_CONVERGE))
    with pytest.raises(ConfigurationError):
        harness.verify_lemmas(rc, selection=("bogus",))


def test_verify_martingale_and_wiener(tmp_path):
    text = SMALL_CONVERGE + "\n[verify]\nn_samples = 20000\n"
    rc = cfg.parse_config(write_config(tmp_path, text))
    results = harness.verify_lemmas(rc, selection=("martingale", "wiener-cov"))
    assert all(r.passed for r in results)


def test_verify_mixing_regression(tmp_path):
    text = SMALL_CONVERGE.replace("alpha = 1.0", "alpha = 3.0")
    rc = cfg.parse_config(write_config(tmp_path, text))
    results = harness.verify_lemmas(rc, selection=("mixing",))
    res = results[0]
    assert res.passed
    assert res.statistic <= -1.5
    assert res.details["r_squared"] >= 0.95


def test_verify_table_formatting(tmp_path):
    rc = cfg.parse_config(write_config(tmp_path, SMALL_CONVERGE))
    results = harness.verify_lemmas(rc, selection=("a2",))
    table = harness.format_verify_table(results)
    assert "a2-channel1" in table and "pass" in table
    out = tmp_path / "verify.csv"
    harness.write_verify_csv(results, str(out))
    assert out.read_text().splitlines()[0] == "check,statistic,threshold,pass"


def test_verify_holder_monotone(tmp_path):
    text = SMALL_CONVERGE + "\n[verify]\nn_replicas = 32\n"
    rc = cfg.parse_config(write_config(tmp_path, text))
    results = harness.verify_lemmas(rc, selection=("holder",))
    res = results[0]
    assert res.passed
    table = res.details["table"]
    assert table["0"] == 0.0
