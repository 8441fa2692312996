import math

import numpy as np
import pytest
from scipy import stats

from vhetnet import association as assoc, interference as intf, montecarlo as mc, nearest
from vhetnet.channel import los_probability
from vhetnet.coverage import serving_threshold
from vhetnet.geometry import UserFrame
from vhetnet.params import ALL_KINDS, BsKind, expected_tbs_count

L, N, T = BsKind.L, BsKind.N, BsKind.T


def test_estimate_with_ci():
    e = mc.EstimateWithCI.from_counts(30, 100)
    assert e.half_width_95 == pytest.approx(1.96 * math.sqrt(0.3 * 0.7 / 100))
    one = mc.EstimateWithCI.from_counts(1, 1)
    assert one.mean == 1.0 and one.half_width_95 == 0.0
    with pytest.raises(ValueError):
        mc.EstimateWithCI.from_counts(0, 0)


def test_empty_processes(params):
    rng = np.random.default_rng(0)
    assert mc.sample_tbs(params.replace(lambda_T=0.0), rng).shape == (0, 2)
    pts, los = mc.sample_abs(UserFrame(9, 8), params.replace(lambda_A=0.0), rng)
    assert pts.shape == (0, 2) and los.size == 0
    p0 = params.replace(lambda_A=0.0, lambda_T=0.0)
    assert mc.simulate_once(UserFrame(9, 8), p0, rng) == (False, None)


def test_tbs_count_mean_and_dispersion(params):
    counts, _, _ = mc._tbs_polar(params, mc.rng_for_block(1, 0), 10_000)
    lam = expected_tbs_count(params)
    assert abs(counts.mean() - lam) < 3 * math.sqrt(lam / counts.size)
    assert abs(counts.mean() - 793) < 3 * math.sqrt(793 / counts.size) + 0.5
    # index of dispersion: (n-1) s^2 / mean is chi^2 with n-1 dof under Poisson
    d = (counts.size - 1) * counts.var(ddof=1) / counts.mean()
    assert stats.chi2(counts.size - 1).sf(d) > 0.001
    assert stats.chi2(counts.size - 1).cdf(d) > 0.001


def test_tbs_radial_law(params):
    _, r, _ = mc._tbs_polar(params, mc.rng_for_block(2, 0), 1300)
    assert r.size > 10**6
    ks = stats.kstest(r, stats.rayleigh(scale=params.sigma_T).cdf).statistic
    assert ks < 0.01


def test_thinning_sampler_same_law(params):
    rng = np.random.default_rng(4)
    inv = np.concatenate([np.hypot(*mc.sample_tbs(params, rng).T) for _ in range(100)])
    thin = np.concatenate([np.hypot(*mc.sample_tbs_thinning(params, rng).T) for _ in range(100)])
    assert stats.ks_2samp(inv, thin).pvalue > 0.001
    assert abs(thin.size / 100 - expected_tbs_count(params)) < 4 * math.sqrt(793 / 100)


def test_abs_count_and_uniform_area(params):
    counts, r, _ = mc._abs_polar(params, mc.rng_for_block(3, 0), 10_000, 60.0)
    mean = 0.15 * math.pi * (3600 - 64)
    assert mean == pytest.approx(1666.30, abs=0.01)
    assert abs(counts.mean() - mean) < 3 * math.sqrt(mean / counts.size)
    assert r.min() >= params.r_e and r.max() <= 60.0
    # area-uniform: r^2 uniform on [r_e^2, r_max^2]
    u = (r[:200_000] ** 2 - 64) / (3600 - 64)
    assert stats.kstest(u, "uniform").statistic < 0.01


def test_r_max_must_exceed_exclusion(params):
    with pytest.raises(ValueError):
        mc.sample_abs(UserFrame(5, 8), params, np.random.default_rng(0), r_max=8.0)


def test_los_marks_follow_s_curve(params):
    p = params.replace(r_e=0.0, lambda_A=30.0)
    frame = UserFrame(0.0, 0.0)
    rng = np.random.default_rng(9)
    hits = total = 0
    for _ in range(5000):
        pts, los = mc.sample_abs(frame, p, rng, r_max=1.2)
        z = np.hypot(pts[:, 0], pts[:, 1])
        sel = (z >= 1.0) & (z < 1.1)
        hits += int(los[sel].sum())
        total += int(sel.sum())
    pl = los_probability(1.05, p)
    # P_L varies slightly across the bin; allow for that on top of 3 sigma
    spread = abs(los_probability(1.0, p) - los_probability(1.1, p)) / 2
    assert abs(hits / total - pl) < 3 * math.sqrt(pl * (1 - pl) / total) + 0.1 * spread


def test_single_tbs_sinr(km_params):
    real = mc.Realization(np.array([[11.0, 0.0]]), np.empty((0, 2)), np.empty(0, bool),
                          np.array([1.0]), np.empty(0))
    st = mc.evaluate_realization(real, UserFrame(10.0, 8.0), km_params)
    assert st.serving[0] == mc.KIND_CODE[T]
    assert st.sinr[0] == pytest.approx(6.918 / 1e-12)
    assert st.covered[0]


def _brute(frame, params, real):
    """Loop-based association and SINR for one snapshot."""
    cands = []
    for (x, y), g in zip(real.tbs_points, real.tbs_gain):
        z = math.hypot(x - frame.r_u, y)
        cands.append((params.xi_T * (z / params.pathloss_ref) ** -params.alpha_T, 0, g, z))
    for (x, y), los, g in zip(real.abs_points, real.abs_los, real.abs_gain):
        k = L if los else N
        z = math.hypot(x - frame.r_u, y)
        d = math.hypot(z, params.h)
        cands.append((params.xi(k) * (d / params.pathloss_ref) ** -params.alpha(k),
                      mc.KIND_CODE[k], g, z))
    if not cands:
        return mc.NO_SERVER, False
    best = max(cands, key=lambda c: (c[0], c[1] == 0))
    total = sum(c[0] * c[2] for c in cands)
    sig = best[0] * best[2]
    return best[1], sig / (params.sigma_n2 + total - sig) > params.tau


@pytest.mark.parametrize("r_u", [0.0, 7.0, 12.0, 30.0])
def test_vectorized_evaluation_matches_loop(params, r_u):
    frame = UserFrame.from_params(r_u, params)
    rng = np.random.default_rng(int(r_u) + 100)
    for _ in range(40):
        real = mc.sample_realization(frame, params, rng)
        st = mc.evaluate_realization(real, frame, params)
        code, cov = _brute(frame, params, real)
        assert st.serving[0] == code
        assert bool(st.covered[0]) == cov
        assert st.violations == 0


def test_seed_determinism_and_block_independence(params):
    frame = UserFrame(12.0, 8.0)
    a = mc.estimate(frame, params, 1200, seed=42, workers=1)
    b = mc.estimate(frame, params, 1200, seed=42, workers=1)
    c = mc.estimate(frame, params, 1200, seed=43, workers=1)
    assert a == b
    assert a != c


def test_workers_do_not_change_results(params):
    frame = UserFrame(12.0, 8.0)
    one = mc.estimate(frame, params, 4000, seed=7, workers=1)
    eight = mc.estimate(frame, params, 4000, seed=7, workers=8)
    assert one == eight


def test_worker_env(monkeypatch):
    monkeypatch.setenv(mc.WORKERS_ENV, "3")
    assert mc.worker_count() == 3
    assert mc.worker_count(0) == 1


def test_nearest_samples_against_analytic(params):
    frame = UserFrame(10.0, 8.0)
    n = 20_000
    samples = mc.nearest_distance_samples(frame, params, n, seed=8)
    band = math.sqrt(math.log(2 / 0.01) / (2 * n))
    for kind in ALL_KINDS:
        s = np.sort(samples[kind])
        zs = np.linspace(0.01, 30, 300)
        emp = np.searchsorted(s, zs, side="right") / n
        ana = np.array([nearest.cdf(kind, z, frame, params) for z in zs])
        assert np.max(np.abs(emp - ana)) < band


def test_conditional_ring_sampler_respects_disk(params):
    frame = UserFrame(10.0, 8.0)
    rng = np.random.default_rng(1)
    ids, z = mc.sample_class_ring(L, 1.0, 20.0, frame, params, rng, 200)
    assert np.all((z > 1.0) & (z < 20.0))
    assert np.all(np.diff(ids) >= 0)



def test_ring_beyond_window_is_empty(params):
    # an NLoS server far out pushes the LoS floor past the 60 km window
    frame = UserFrame(5.0, 8.0)
    floor = assoc.interferer_floor(N, L, 3.5, params)
    assert floor > 60.0
    rng = np.random.default_rng(2)
    for kind in ALL_KINDS:
        ids, z = mc.sample_class_ring(kind, floor, 60.0, frame, params, rng, 50)
        assert ids.size == 0 and z.size == 0
    mean, se = mc.laplace_mc([1e3], L, N, 3.5, frame, params, 100, seed=1, z_max=60.0)
    assert mean[0] == 1.0 and se[0] == 0.0
    ex = intf.laplace_exponent(1e3, L, N, 3.5, frame, params, z_max=60.0).value
    assert ex == pytest.approx(0.0, abs=1e-15)


def test_laplace_mc_resolves_transforms_near_one(params):
    # exp(-sI) rounds to 1 here; the estimate must still see the spread
    frame = UserFrame(2.0, 8.0)
    small = 1e-6 * serving_threshold(T, 0.5, params)
    mean, se = mc.laplace_mc([small, 2 * small], N, T, 0.5, frame, params, 2000, seed=5)
    assert np.all(se > 0)
    # linear regime: the spread of exp(-sI) is proportional to s
    assert se[1] / se[0] == pytest.approx(2.0, rel=1e-5)

def test_exclusion_threshold_matches_table(params):
    for b in ALL_KINDS:
        for c in ALL_KINDS:
            for z in (0.05, 1.0, 6.0):
                d = assoc.link_distance(b, z, params)
                thr = mc._exclusion_threshold(np.array([mc.KIND_CODE[b]]), mc.KIND_CODE[c],
                                              np.array([d]), params)[0]
                assert thr == pytest.approx(assoc.min_interferer_distance(b, c, z, params),
                                            rel=1e-12)
