import math

import numpy as np
import pytest

import _mkv as mkv


def test_schedule_and_time_grid():
    sched = mkv.StepSchedule.power_law(0.5, 0.7)
    assert sched.gamma(1) == pytest.approx(0.5)
    grid = mkv.TimeGrid(mkv.StepSchedule.power_law(1.0, 1.0))
    assert grid.tau(3) == pytest.approx(1.0 + 0.5 + 1.0 / 3.0)
    assert grid.k_of_t(1.9) == 4
    assert grid.k_of_t(0.0) == 0
    with pytest.raises(Exception):
        mkv.StepSchedule.power_law(0.5, 1.5)


def test_rng_is_counter_based():
    rng = mkv.RngStream(12345)
    a = rng.normal(0, 7, 100, 2)
    assert rng.normal(0, 7, 100, 2) == a
    assert rng.normal(1, 7, 100, 2) != a
    u = rng.uniform(0, 0, 0, 0)
    assert 0.0 < u < 1.0


def test_drift_and_simulation():
    model = mkv.quadratic_model(1.0, 1.0, 1.0, 1)
    drift = mkv.drift_granular(model, [-1.0], np.array([[-1.0], [1.0]]))
    assert drift[0] == pytest.approx(2.0)

    sim = mkv.simulate(model, mkv.StepSchedule.power_law(0.5, 0.7), n=128, seed=3,
                       horizon_tau=10.0, init_kind="point", init_center=[2.0])
    X = np.asarray(sim["positions"])
    assert not sim["failed"]
    assert X.shape[1:] == (128, 1)
    assert abs(sim["series_m2"][-1] - 0.5) < 0.25

    rerun = mkv.simulate(model, mkv.StepSchedule.power_law(0.5, 0.7), n=128, seed=3,
                         horizon_tau=10.0, init_kind="point", init_center=[2.0], threads=4)
    assert np.array_equal(X, np.asarray(rerun["positions"]))


def test_wasserstein_routes():
    a = np.array([[0.0], [1.0]])
    b = np.array([[0.0], [2.0]])
    res = mkv.wasserstein(a, b, 2)
    assert res["distance"] == pytest.approx(math.sqrt(0.5))
    assert res["method"] == "quantile_1d"
    assert mkv.wasserstein_bruteforce(a, b, 2) == pytest.approx(res["distance"])

    pts = np.random.default_rng(0).normal(size=(5, 2))
    res2 = mkv.wasserstein(pts, pts + 0.0, 2)
    assert res2["method"] == "assignment"
    assert res2["distance"] == pytest.approx(0.0, abs=1e-12)


def test_stationary_pipeline():
    model = mkv.quadratic_model(1.0, 1.0, 1.0, 1)
    ref = mkv.gaussian_reference(1.0, 1.0, 1.0)
    assert ref["target_variance"] == pytest.approx(0.5)
    assert ref["variance"][0] == pytest.approx(0.5, abs=1e-4)

    fp = mkv.fixed_point_solve(model, -6.0, 6.0, 0.02, init_mean=[0.0], init_variance=1.0)
    assert fp["converged"]
    assert fp["variance"][0] == pytest.approx(0.5, abs=2e-3)
    assert fp["stationarity_residual"] < 0.02

    dw = mkv.double_well_model(0.5, math.sqrt(0.2), 1)
    branches = mkv.enumerate_branches(dw, -3.0, 3.0, 0.02, [-1.0, 0.0, 1.0],
                                      init_variance=0.1)
    assert len(branches) == 3


def test_energy_and_density():
    model = mkv.quadratic_model(1.0, 0.0, 1.0, 1)
    ref = mkv.gaussian_reference(1.0, 0.0, 1.0)
    H = mkv.helmholtz(model, ref["density"])
    assert H["entropy"] == pytest.approx(-0.5 * math.log(2 * math.pi * math.e), abs=1e-3)
    assert H["confinement"] == pytest.approx(0.5, abs=1e-3)
    assert H["total"] == H["entropy"] + H["confinement"] + H["interaction"]

    samples = np.random.default_rng(1).normal(size=(20000, 1))
    est = mkv.estimate_density(samples)
    dens = np.asarray(est["density"])
    assert dens.sum() * 0.01 == pytest.approx(1.0, abs=1e-9)

    m11 = mkv.quadratic_model(1.0, 1.0, 1.0, 1)
    good = mkv.gaussian_reference(1.0, 1.0, 1.0)
    assert mkv.stationarity_residual(m11, good["density"]) < 1e-3


def test_config_parsing():
    ok = mkv.parse_config("run.steps = 5\nmodel.kind = quadratic\n")
    assert ok["ok"]
    bad = mkv.parse_config("schedule.exponent = 1.5\nrun.steps = 1\nmodel.lamda = 2\n")
    assert not bad["ok"]
    assert any("model.lambda" in e for e in bad["errors"])
