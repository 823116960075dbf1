import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from npcure import (
    BandwidthGrid,
    BootstrapConfig,
    DegenerateCovariate,
    GridTooSmall,
    PilotRule,
    SurvivalSample,
    bootstrap_mse,
    bootstrap_resample,
    incidence,
    nw_weights,
    pilot_global,
    pilot_local,
    select_bandwidth,
    smooth_bandwidths,
)
from npcure.bandwidth_select import StageResult, _resample_arrays, _resampled_cure
from npcure.kernel_weights import Kernel
from npcure.sim_engine import gen_sample
from npcure.truth_oracle import model1


def uniform_design(n, seed=0):
    rng = np.random.default_rng(seed)
    return SurvivalSample(x=rng.uniform(-20, 20, n), t=rng.exponential(1, n), delta=rng.integers(0, 2, n))


# -- pilots --------------------------------------------------------------------


def test_pilot_global_reference_values():
    s = uniform_design(100)
    assert pilot_global(s) == pytest.approx(s.covariate_range / 10, rel=1e-14)
    assert 3.5 < pilot_global(s) < 4.1
    # the reference values for n=50 and 200 assume a range close to 40
    rng = 40.0
    for n, g in ((50, 4.32), (200, 3.70)):
        x = np.linspace(-20, 20, n)
        s = SurvivalSample(x=x, t=np.ones(n), delta=np.ones(n, int))
        assert pilot_global(s) == pytest.approx(g, abs=0.005)
        assert rng == s.covariate_range


def test_pilot_global_scaling_law():
    rng = np.random.default_rng(2)
    for n in (10, 37, 100, 512):
        x = rng.uniform(-3, 3, n)
        x2 = np.r_[x, np.full(n, x.mean())]
        s1 = SurvivalSample(x=x, t=np.ones(n), delta=np.zeros(n, int))
        s2 = SurvivalSample(x=x2, t=np.ones(2 * n), delta=np.zeros(2 * n, int))
        assert pilot_global(s2) / pilot_global(s1) == pytest.approx(2 ** (-1 / 9), abs=1e-12)
        expect = s1.covariate_range / 10 ** (7 / 9) * n ** (-1 / 9)
        assert pilot_global(s1) == pytest.approx(expect, abs=1e-12)


def test_pilot_global_degenerate():
    with pytest.raises(DegenerateCovariate):
        pilot_global(SurvivalSample(x=[1, 1, 1], t=[1, 2, 3], delta=[1, 1, 1]))


def knn_oracle(x, x0, k):
    right = np.sort(x[x > x0] - x0)
    left = np.sort(x0 - x[x < x0])
    dr = right[k - 1] if right.size >= k else None
    dl = left[k - 1] if left.size >= k else None
    dr = dl if dr is None else dr
    dl = dr if dl is None else dl
    return dr, dl


def test_pilot_local_mean_distance():
    s = uniform_design(100, seed=4)
    for x0 in (-15.0, 0.0, 3.3, 12.0):
        dr, dl = knn_oracle(s.x, x0, 25)
        assert pilot_local(s, x0, 25) == pytest.approx((dr + dl) / 2, abs=1e-12)
    assert pilot_local(s, 0.0) == pilot_local(s, 0.0, 25)


def test_pilot_local_equispaced_and_edges():
    n = 41
    x = np.linspace(-20, 20, n)
    s = SurvivalSample(x=x, t=np.ones(n), delta=np.ones(n, int))
    assert pilot_local(s, 0.0, 5) == pytest.approx(5.0 * (100 / n) ** (1 / 9), abs=1e-12)
    # left of all data: the missing side borrows the right distance
    assert pilot_local(s, -25.0, 3) == pytest.approx((5 + 2) * (100 / n) ** (1 / 9), abs=1e-12)
    with pytest.raises(DegenerateCovariate):
        pilot_local(s, 0.0, 30)


# -- smoothing ------------------------------------------------------------------


def three_branch(h):
    """Literal transcription of the edge-corrected moving average."""
    m = len(h) - 1
    out = []
    for l in range(m + 1):
        if l < 5:
            out.append(math.fsum(h[j] for j in range(0, l + 6)) / (l + 6))
        elif l <= m - 5:
            out.append(math.fsum(h[j] for j in range(l - 5, l + 6)) / 11)
        else:
            out.append(math.fsum(h[j] for j in range(l - 5, m + 1)) / (m - l + 6))
    return np.array(out)


def test_smoothing_golden():
    rng = np.random.default_rng(0)
    h = rng.uniform(1, 20, 21)
    np.testing.assert_array_equal(smooth_bandwidths(h), three_branch(h))
    assert smooth_bandwidths(h)[0] == math.fsum(h[:6]) / 6


@given(st.lists(st.floats(0.1, 100), min_size=11, max_size=60), st.floats(0.0, 50))
def test_smoothing_properties(hs, c):
    hs = np.asarray(hs)
    out = smooth_bandwidths(hs)
    np.testing.assert_array_equal(out, three_branch(hs))
    np.testing.assert_allclose(smooth_bandwidths(hs + c), out + c, rtol=1e-12)
    np.testing.assert_allclose(smooth_bandwidths(np.full(hs.size, 3.7)), 3.7, rtol=1e-15)


def test_smoothing_errors():
    with pytest.raises(GridTooSmall):
        smooth_bandwidths(np.ones(10))
    with pytest.raises(ValueError):
        smooth_bandwidths(np.r_[np.ones(11), -1.0])


# -- resampling -------------------------------------------------------------------


def test_grid_validation():
    with pytest.raises(ValueError):
        BandwidthGrid([1.0, 0.5])
    g = BandwidthGrid.log(0.2, 50, 21)
    assert g.ratio == pytest.approx((50 / 0.2) ** (1 / 20))
    with pytest.raises(ValueError):
        BootstrapConfig(stage1_grid_size=1)
    with pytest.raises(ValueError):
        PilotRule("plugin")


def test_resample_keeps_covariates_and_is_deterministic():
    s = uniform_design(30)
    r1 = bootstrap_resample(s, 5.0, seed=3)
    r2 = bootstrap_resample(s, 5.0, seed=3)
    np.testing.assert_array_equal(r1.x, s.x)
    assert r1 == r2
    pairs = set(zip(s.t.tolist(), s.delta.tolist()))
    assert set(zip(r1.t.tolist(), r1.delta.tolist())) <= pairs


def test_resample_atom_frequencies():
    s = uniform_design(8, seed=9)
    g, B = 15.0, 10**5
    T, _ = _resample_arrays(s, g, np.random.default_rng(1), B)
    for i in range(s.n):
        w = nw_weights(s.x, s.x[i], g).weights
        counts = np.array([np.sum(T[:, i] == t) for t in s.t])
        se = np.sqrt(B * w * (1 - w))
        assert np.all(np.abs(counts - B * w) <= 3 * se + 1e-9)


def test_zero_mse_for_identical_resample():
    # isolated covariates: every conditional law is a point mass
    s = SurvivalSample(x=[0, 10, 20, 30], t=[1, 2, 3, 4], delta=[1, 0, 1, 0])
    assert bootstrap_resample(s, 1.0, seed=0) == s
    assert bootstrap_mse(s, 10.0, 1.0, 1.0, B=1, seed=0) == 0.0


def test_mse_monte_carlo_convergence():
    s = gen_sample(model1(), 100, seed=5)
    g, x, h = pilot_global(s), 0.0, 6.0
    T, D = _resample_arrays(s, g, np.random.default_rng(0), 10**4)
    cure = _resampled_cure(s.x, T, D, x, np.array([h]), Kernel.EPANECHNIKOV)[0]
    sq = (cure - incidence(s, x, g)) ** 2
    ref, sd = sq.mean(), sq.std()
    for B in (250, 500, 1000):
        est = bootstrap_mse(s, x, h, g, B, seed=B)
        assert est >= 0
        assert abs(est - ref) <= 4 * sd / math.sqrt(B)


def test_mse_vector_matches_scalar():
    s = gen_sample(model1(), 60, seed=1)
    hs = np.array([2.0, 5.0, 10.0])
    vec = bootstrap_mse(s, 0.0, hs, 4.0, 50, seed=2)
    for h, v in zip(hs, vec):
        assert bootstrap_mse(s, 0.0, h, 4.0, 50, seed=2) == v


# -- selector ---------------------------------------------------------------------


@pytest.fixture(scope="module")
def search():
    s = gen_sample(model1(), 100, seed=12)
    cfg = BootstrapConfig(stage1_resamples=40, stage2_resamples=100, master_seed=3)
    return s, cfg, select_bandwidth(s, 0.0, cfg, key=(0,))


def test_selector_structure(search):
    s, cfg, res = search
    sizes = [len(stage.grid) for stage in res.searches]
    assert sizes == [21, 21, 5, 5]
    assert [stage.resamples for stage in res.searches] == [40, 40, 100, 100]
    final = res.searches[-1]
    assert res.selected in final.grid
    assert res.selected == final.best
    assert res.at_boundary == (final.argmin in (0, len(final.grid) - 1))
    for prev, nxt in zip(res.searches[:-1], res.searches[1:]):
        r = prev.grid[1] / prev.grid[0]
        assert nxt.grid[0] == pytest.approx(prev.best / r, rel=1e-12)
        assert nxt.grid[-1] == pytest.approx(prev.best * r, rel=1e-12)
    for stage in res.searches:
        finite = stage.mse[np.isfinite(stage.mse)]
        assert np.all(finite >= 0)
        assert stage.n_infeasible == np.sum(~np.isfinite(stage.mse))
    assert res.pilot == pytest.approx(pilot_global(s))
    assert res.common_random_numbers


def test_selector_determinism(search):
    s, cfg, res = search
    again = select_bandwidth(s, 0.0, cfg, key=(0,))
    assert again.selected == res.selected
    for a, b in zip(again.searches, res.searches):
        np.testing.assert_array_equal(a.mse, b.mse)
    other = select_bandwidth(s, 0.0, cfg.with_seed(4), key=(0,))
    assert not np.array_equal(other.searches[0].mse, res.searches[0].mse)


def test_one_stage_and_data_defaults():
    s = gen_sample(model1(), 80, seed=2)
    cfg = BootstrapConfig.for_data(stage1_resamples=30)
    res = select_bandwidth(s, 0.0, cfg)
    assert len(res.searches) == 2
    assert res.searches[0].grid[-1] == pytest.approx(s.covariate_range)
    assert res.pilot == pytest.approx(pilot_local(s, 0.0))


def test_argmin_prefers_larger_bandwidth_on_ties():
    stage = StageResult(np.array([1.0, 2.0, 3.0, 4.0]), np.array([np.inf, 0.0, 0.0, 0.1]), 1, 1)
    assert stage.best == 3.0
