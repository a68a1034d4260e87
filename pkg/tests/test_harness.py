from __future__ import annotations

import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mplab.ensembles import EntryDistribution
from mplab.errors import DomainError, InsufficientData
from mplab.harness import (
    CSV_COLUMNS,
    ExperimentConfig,
    SweepResult,
    TrialRecord,
    emit,
    fit_power_law,
    fit_rate,
    load_config,
    medians_by_n,
    rate_path,
    run_sweep,
    run_trial,
    write_csv,
)


def synthetic(ns, f, trials=3):
    return [
        TrialRecord(n=n, p=2 * n, y=0.5, trial=t, seed=0, dist="gaussian", kolmogorov_plain=f(n))
        for n in ns for t in range(trials)
    ]


# ---- configuration -----------------------------------------------------------

def test_config_normalizes():
    cfg = ExperimentConfig(n_list=(256, 64, 128, 64), measure=("deloc", "distance"))
    assert cfg.n_list == (64, 128, 256)
    assert cfg.measure == ("distance", "deloc")
    d = cfg.to_dict()
    assert d["dist"] == "gaussian"
    json.dumps(d)


@pytest.mark.parametrize("kw", [
    {"n_list": ()}, {"trials": 0}, {"format": "xml"}, {"y": 1.5}, {"y": 0.0},
    {"workers": 0}, {"measure": ("distance", "bogus")},
])
def test_config_rejects(kw):
    with pytest.raises(DomainError):
        ExperimentConfig(**kw)


def test_load_config(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text("# comment\ny = 0.25\nn-list = 32,64  # inline\n\ntrials=2\n")
    assert load_config(path) == {"y": "0.25", "n_list": "32,64", "trials": "2"}
    path.write_text("y 0.25\n")
    with pytest.raises(DomainError):
        load_config(path)


# ---- trials ------------------------------------------------------------------

def test_run_trial_deterministic():
    cfg = ExperimentConfig(y=0.5, n_list=(32,), measure=("distance", "smoothing", "deloc"))
    a, b = run_trial(cfg, 32, 1), run_trial(cfg, 32, 1)
    assert a == b
    assert a.status == "ok"
    assert a.p == 64 and a.y == 0.5
    assert run_trial(cfg, 32, 2).seed != a.seed


def test_run_trial_square_distance_range():
    cfg = ExperimentConfig(y=1.0, n_list=(64,))
    rec = run_trial(cfg, 64, 0)
    assert 0 < rec.kolmogorov_plain <= 1
    assert rec.factor2_residual <= 1e-12


def test_run_trial_diagnostics():
    cfg = ExperimentConfig(y=0.5, n_list=(64,), measure=("diagnostics",))
    rec = run_trial(cfg, 64, 0)
    assert rec.status == "ok"
    assert rec.diagnostics_pass
    assert rec.gn_residual <= 1e-8
    assert rec.eps3_ratio <= 1
    assert rec.kolmogorov_plain is None


def test_run_trial_records_errors():
    # n = 8 is too small for an admissible smoothing window
    cfg = ExperimentConfig(y=0.5, n_list=(8,), measure=("smoothing",))
    rec = run_trial(cfg, 8, 0)
    assert rec.status == "error"
    assert rec.error.startswith("EpsilonTooLarge")


def test_p_rounding():
    rec = run_trial(ExperimentConfig(y=0.3, n_list=(10,)), 10, 0)
    assert rec.p == 33
    assert rec.y == 10 / 33


def test_spectrum_capture():
    spectrum = []
    cfg = ExperimentConfig(y=0.5, n_list=(16,))
    run_trial(cfg, 16, 0, spectrum)
    assert len(spectrum) == 16
    assert spectrum == sorted(spectrum)


# ---- rate fitting ------------------------------------------------------------

def test_fit_exact_power_law():
    ns = [128, 256, 512, 1024]
    fit = fit_rate(synthetic(ns, lambda n: 1 / n))
    assert abs(fit.slope + 1) <= 1e-10
    assert abs(fit.intercept) <= 1e-9
    assert fit.r2 == pytest.approx(1.0)
    assert len(fit.points) == 4


def test_fit_log_corrected_rate():
    ns = [128, 256, 512, 1024]
    fit = fit_rate(synthetic(ns, lambda n: math.log(n) ** 2 / n))
    # closed form: slope = -1 + 2 cov(log log n, log n) / var(log n)
    x = np.log(ns)
    lx = np.log(x)
    want = -1 + 2 * np.sum((lx - lx.mean()) * (x - x.mean())) / np.sum((x - x.mean()) ** 2)
    assert abs(fit.slope - want) <= 1e-12
    assert fit.slope == pytest.approx(-0.65727, abs=1e-5)
    # the local slope -1 + 2/ln n stays above -0.72 on this range
    assert -1 < fit.slope < -0.6
    assert 0.99 <= fit.r2 <= 1


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(0.01, 100))
def test_fit_recovers_any_power(a, c):
    ns = [64, 128, 256, 512, 1024]
    fit = fit_power_law(ns, [c * n**a for n in ns])
    assert abs(fit.slope - a) <= 1e-9
    assert abs(fit.intercept - math.log(c)) <= 1e-8


def test_medians_skip_errors():
    recs = synthetic([64, 128], lambda n: 1 / n)
    recs.append(TrialRecord(n=64, p=128, y=0.5, trial=9, seed=0, dist="g", status="error", error="x"))
    recs.append(TrialRecord(n=64, p=128, y=0.5, trial=10, seed=0, dist="g", kolmogorov_plain=5.0))
    recs.append(TrialRecord(n=64, p=128, y=0.5, trial=11, seed=0, dist="g", kolmogorov_plain=5.0))
    med = medians_by_n(recs)
    assert med[128] == 1 / 128
    assert med[64] == np.median([1 / 64] * 3 + [5.0, 5.0])


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        fit_rate(synthetic([128], lambda n: 1 / n))
    with pytest.raises(InsufficientData):
        fit_rate([])
    with pytest.raises(InsufficientData):
        fit_power_law([128, 128], [0.1, 0.2])
    with pytest.raises(InsufficientData):
        run_sweep(ExperimentConfig(n_list=(32,)))


# ---- sweeps and output -------------------------------------------------------

SMALL = dict(y=0.5, n_list=(16, 32), trials=3, seed0=11, measure=("distance", "deloc"))


def test_sweep_serial_equals_parallel():
    a = run_sweep(ExperimentConfig(**SMALL))
    b = run_sweep(ExperimentConfig(**SMALL, workers=2))
    assert a.records == b.records
    assert a.fit == b.fit
    assert [(r.n, r.trial) for r in a.records] == [(n, t) for n in (16, 32) for t in range(3)]


def test_sweep_csv_deterministic(tmp_path):
    paths = []
    for k in range(2):
        res = run_sweep(ExperimentConfig(**SMALL))
        path = tmp_path / f"run{k}.csv"
        emit(res, "csv", path)
        paths.append(path)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert rate_path(paths[0]).read_bytes() == rate_path(paths[1]).read_bytes()


def test_csv_shape(tmp_path):
    res = run_sweep(ExperimentConfig(**SMALL))
    path = tmp_path / "out.csv"
    emit(res, "csv", path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 1 + 6
    assert {len(r) for r in rows} == {len(CSV_COLUMNS)}
    k = CSV_COLUMNS.index("kolmogorov_plain")
    assert float(rows[1][k]) == res.records[0].kolmogorov_plain
    assert rows[1][CSV_COLUMNS.index("smoothing_bound")] == ""
    rate = rate_path(path).read_text().splitlines()
    assert rate[0] == "n\tmedian_delta"
    assert [int(line.split("\t")[0]) for line in rate[1:]] == [16, 32]


def test_empty_sweep_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit(SweepResult(ExperimentConfig(), []), "csv", path)
    assert path.read_text() == ",".join(CSV_COLUMNS) + "\n"
    assert rate_path(path).read_text() == "n\tmedian_delta\n"


def test_json_round_trip(tmp_path):
    res = run_sweep(ExperimentConfig(**SMALL))
    path = tmp_path / "out.json"
    emit(res, "json", path)
    back = json.loads(path.read_text())
    assert back == json.loads(json.dumps(res.to_dict()))
    assert len(back["records"]) == 6
    assert back["fit"]["slope"] == res.fit.slope
    assert back["config"]["n_list"] == [16, 32]


def test_emit_errors(tmp_path):
    res = SweepResult(ExperimentConfig(), [])
    with pytest.raises(DomainError):
        emit(res, "xml", tmp_path / "x")
    with pytest.raises(OSError):
        emit(res, "csv", tmp_path / "missing" / "x.csv")


def test_write_csv_booleans_and_none(tmp_path):
    rec = TrialRecord(n=4, p=8, y=0.5, trial=0, seed=1, dist="gaussian", pass_coord=True, kolmogorov_plain=0.1)
    path = tmp_path / "r.csv"
    write_csv([rec], path)
    row = dict(zip(CSV_COLUMNS, path.read_text().splitlines()[1].split(",")))
    assert row["pass_coord"] == "True"
    assert row["kolmogorov_plain"] == "0.1"
    assert row["pass_partial"] == ""


def test_rademacher_sweep_runs():
    cfg = ExperimentConfig(y=0.5, n_list=(16, 32), trials=2, dist=EntryDistribution("rademacher"))
    res = run_sweep(cfg)
    assert all(r.status == "ok" and r.dist == "rademacher" for r in res.records)
