import numpy as np
import pytest
from scipy import stats

from npcure import BootstrapConfig, ExperimentPlan
from npcure.sim_engine import (
    draw_cohort,
    gen_sample,
    mc_bootstrap_bandwidth_study,
    mc_incidence_mse,
    mc_latency_mise,
    replication_sample,
)
from npcure.truth_oracle import model1, model2, true_latency

M1, M2 = model1(), model2()


def test_covariate_marginal_ks():
    passed = 0
    for seed in range(100):
        x = draw_cohort(M1, 10**4, seed)["x"]
        passed += stats.kstest(x, stats.uniform(-20, 40).cdf).pvalue > 0.01
    assert passed >= 95


@pytest.mark.parametrize("m", [M1, M2], ids=["model1", "model2"])
def test_conditional_latency_ks(m):
    # covariates where uncured subjects are not too rare, ~300 uncured per run
    grid = np.linspace(-20, 20, 801)
    grid = grid[m.p(grid) >= 0.05]
    passed = 0
    for seed, x0 in enumerate(grid[np.linspace(0, grid.size - 1, 100).astype(int)]):
        d = draw_cohort(m, int(np.ceil(300 / m.p(x0))), seed, x=x0)
        y = d["y"][~d["cured"]]
        passed += stats.kstest(y, lambda t: 1 - true_latency(m, x0, t)).pvalue > 0.01
    assert passed >= 95


@pytest.mark.parametrize("m", [M1, M2], ids=["model1", "model2"])
def test_cured_are_censored_at_c(m):
    d = draw_cohort(m, 5000, 3)
    cured = d["cured"]
    assert np.all(d["t"][cured] == d["c"][cured])
    assert np.all(d["delta"][cured] == 0)
    assert np.all(np.isinf(d["y"][cured]))
    assert np.all(np.isfinite(d["t"]))
    s = gen_sample(m, 5000, 3)
    np.testing.assert_array_equal(s.t, d["t"])


def test_fixed_covariates_and_errors():
    d = draw_cohort(M1, 10, 0, x=np.arange(10.0))
    np.testing.assert_array_equal(d["x"], np.arange(10.0))
    with pytest.raises(ValueError):
        draw_cohort(M1, 0, 0)


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan(replications=0)
    with pytest.raises(ValueError):
        ExperimentPlan(h_grid=())
    with pytest.raises(ValueError):
        ExperimentPlan(b_grid=(1.0, -2.0))
    with pytest.raises(ValueError):
        ExperimentPlan(estimator="cv")


def small_plan(**kw):
    base = dict(sample_sizes=(50,), replications=6, x_grid=(-10.0, 0.0, 10.0),
                h_grid=(0.5, 3.0, 8.0), b_grid=(10.0, 20.0), time_points=64, seed=9)
    base.update(kw)
    return ExperimentPlan(**base)


def test_oracle_estimator_gives_zero_error():
    plan = small_plan(estimator="oracle", replications=1)
    assert np.all(mc_incidence_mse(plan).mse[:, 3] == 0)
    assert np.all(mc_latency_mise(plan).mise[:, 3] == 0)


def test_report_cells():
    plan = small_plan(h_grid=(0.05, 3.0, 8.0))
    rep = mc_incidence_mse(plan)
    assert rep.mse.shape == (9, 6)
    assert np.all(rep.mse[:, 4] + rep.mse[:, 5] == plan.replications)
    # h = 0.05 leaves some x without neighbours in some replications
    assert rep.mse[rep.mse[:, 2] == 0.05, 5].sum() > 0
    assert np.all(rep.mse[np.isfinite(rep.mse[:, 3]), 3] >= 0)
    mise = mc_latency_mise(plan).mise
    assert np.all(mise[np.isfinite(mise[:, 3]), 3] >= 0)
    assert set(rep.oracle_bandwidths(50)) == {-10.0, 0.0, 10.0}


def test_replications_share_samples():
    plan = small_plan()
    a = replication_sample(plan, 50, 2)
    assert a == replication_sample(small_plan(h_grid=(1.0, 2.0)), 50, 2)
    assert not a == replication_sample(plan, 50, 3)


def test_determinism_across_workers():
    plan = small_plan()
    cfg = BootstrapConfig(stage1_resamples=10, stage2_resamples=20, master_seed=1)
    ref = mc_incidence_mse(plan).mse
    ref_b = mc_bootstrap_bandwidth_study(plan, cfg).bootstrap
    for w in (2, 4):
        p = small_plan(workers=w)
        np.testing.assert_array_equal(mc_incidence_mse(p).mse, ref)
        np.testing.assert_array_equal(mc_bootstrap_bandwidth_study(p, cfg).bootstrap, ref_b)
    q = ref_b[:, 2:5]
    assert np.all(q[:, 0] <= q[:, 1]) and np.all(q[:, 1] <= q[:, 2])


@pytest.mark.slow
def test_latency_prefers_large_bandwidth_on_the_left():
    plan = ExperimentPlan(sample_sizes=(100,), replications=200, x_grid=(-10.0,),
                          b_grid=(10.0, 15.01), seed=5)
    mise = mc_latency_mise(plan).mise
    assert mise[1, 3] < mise[0, 3]
