import math

import numpy as np
import pytest

from vhetnet import association as assoc, coverage as cov, montecarlo as mc
from vhetnet.geometry import UserFrame
from vhetnet.params import ALL_KINDS, BsKind

L, N, T = BsKind.L, BsKind.N, BsKind.T
FAR = UserFrame(20.0, 8.0)


def test_threshold_definition(km_params):
    nu = cov.serving_threshold(T, 2.0, km_params)
    assert nu == pytest.approx(km_params.tau * 2.0 ** 3.5 / km_params.xi_T)
    nu_l = cov.serving_threshold(L, 1.0, km_params)
    assert nu_l == pytest.approx(2 * km_params.tau * 1.01 ** 1.5 / km_params.xi_L)


@pytest.mark.parametrize("kind", ALL_KINDS)
def test_tiny_threshold_gives_certain_coverage(params, kind):
    p = params.replace(tau=1e-14)
    for z in (0.5, 3.0):
        assert cov.conditional_coverage_approx(kind, z, FAR, p) == pytest.approx(1.0, abs=1e-9)
        assert cov.conditional_coverage_exact(kind, z, FAR, p) == pytest.approx(1.0, abs=1e-9)


def test_noise_only_closed_form(params):
    p = params.replace(lambda_A=0.0, lambda_T=0.0)
    for z in (0.5, 2.0, 6.0):
        d = z * 1000.0
        expect = math.exp(-p.tau * d ** p.alpha_T * p.sigma_n2 / p.xi_T)
        assert cov.conditional_coverage_approx(T, z, FAR, p) == pytest.approx(expect, rel=1e-12)


@pytest.mark.parametrize("kind", [T, N])
def test_unit_shape_exact_equals_approx(params, kind):
    for z in (0.3, 1.0, 4.0):
        a = cov.conditional_coverage_approx(kind, z, FAR, params)
        e = cov.conditional_coverage_exact(kind, z, FAR, params)
        lo = cov.conditional_coverage_approx(kind, z, FAR, params, eps=1.0)
        assert a == e == lo


@pytest.mark.parametrize("frame", [FAR, UserFrame(12.0, 8.0), UserFrame(4.0, 8.0)], ids=str)
def test_sandwich_for_shape_two(params, frame):
    for z in (0.2, 1.0, 3.0, 5.0, 8.0, 10.0):
        lo = cov.conditional_coverage_approx(L, z, frame, params, eps=1.0)
        ex = cov.conditional_coverage_exact(L, z, frame, params)
        hi = cov.conditional_coverage_approx(L, z, frame, params)
        assert lo <= ex + 1e-8
        assert ex <= hi + 1e-8


def test_high_order_needs_opt_in(params):
    p = params.replace(m_L=3)
    with pytest.raises(cov.UnsupportedOrderError, match="allow_high_order"):
        cov.conditional_coverage_exact(L, 1.0, FAR, p)
    v = cov.conditional_coverage_exact(L, 1.0, FAR, p, allow_high_order=True)
    lo = cov.conditional_coverage_approx(L, 1.0, FAR, p, eps=1.0)
    hi = cov.conditional_coverage_approx(L, 1.0, FAR, p)
    assert lo - 1e-6 <= v <= hi + 1e-6


def test_range_guard_retries_then_raises():
    assert cov._checked(1.0 + 1e-12, "x", lambda: 2.0) == 1.0
    assert cov._checked(-0.5, "x", lambda: 0.25) == 0.25
    with pytest.raises(cov.CoverageRangeError):
        cov._checked(-0.5, "x", lambda: -0.4)


def test_unknown_method(params):
    with pytest.raises(ValueError):
        cov.coverage(FAR, params, method="magic")


def test_decomposition(params):
    frame = UserFrame(12.0, 8.0)
    res = cov.coverage(frame, params)
    assert res.p_total == pytest.approx(sum(res.per_kind.values()), abs=1e-12)
    assert all(v >= 0 for v in res.per_kind.values())
    a = assoc.association_probabilities(frame, params)
    for kind in ALL_KINDS:
        share = a.T_direct if kind is T else a[kind]
        assert res.per_kind[kind] <= share + 1e-9
        assert res.diagnostics["truncation_radius"][kind] > 0


def test_monotone_in_threshold(params):
    frame = UserFrame(12.0, 8.0)
    vals = [cov.coverage(frame, params.replace(tau=10 ** (db / 10))).p_total
            for db in (-10, -5, 0, 5)]
    assert all(0 <= v <= 1 for v in vals)
    assert np.all(np.diff(vals) <= 1e-9)


def test_tiny_threshold_total(params):
    res = cov.coverage(UserFrame(12.0, 8.0), params.replace(tau=1e-14))
    assert res.p_total == pytest.approx(1.0, abs=1e-6)


def test_no_abs_equals_tbs_only_term(params):
    p = params.replace(lambda_A=0.0)
    res = cov.coverage(UserFrame(6.0, 8.0), p)
    assert res.per_kind[L] == 0.0 and res.per_kind[N] == 0.0
    assert res.p_total == res.per_kind[T]


@pytest.mark.slow
@pytest.mark.parametrize("z", [1.0, 5.0])
def test_conditional_against_mc(params, z):
    # the simulation keeps interferers within 60 km of the user; the analytic
    # side is evaluated over the same window
    est = mc.conditional_coverage_mc(L, z, FAR, params, 100_000, seed=5, z_max=60.0)
    exact = cov.conditional_coverage_exact(L, z, FAR, params, z_max=60.0)
    approx = cov.conditional_coverage_approx(L, z, FAR, params, z_max=60.0)
    assert abs(exact - est.mean) <= max(0.01, 3 * est.std_error)
    assert abs(exact - est.mean) <= 3 * est.std_error + 1e-4
    assert abs(approx - est.mean) <= 0.02
