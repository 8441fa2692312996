import math

import numpy as np
import pytest
from scipy import stats

from vhetnet.channel import los_probability, mark_probability, received_power, sample_fading
from vhetnet.params import BsKind


def test_los_limits(params):
    # near-vertical link: 1 - 4.88 exp(-0.429 (90 - 4.88))
    expect = 1.0 / (1.0 + 4.88 * math.exp(-0.429 * (90 - 4.88)))
    assert los_probability(0.0, params) == expect
    assert 1.0 - los_probability(0.0, params) < 1e-15
    assert los_probability(0.1, params) == pytest.approx(0.99999984, abs=1e-8)
    far = 1.0 / (1.0 + 4.88 * math.exp(4.88 * 0.429))
    assert far == pytest.approx(0.02464, abs=1e-5)
    assert los_probability(1e9, params) == pytest.approx(far, rel=1e-6)


def test_los_monotone_and_complement(params):
    z = np.linspace(0.0, 100.0, 5001)
    p = los_probability(z, params)
    assert np.all(np.diff(p) <= 0)
    assert np.all(np.diff(p[1:200]) < 0)
    q = mark_probability(BsKind.N, z, params)
    assert np.array_equal(p + q, p + (1.0 - p))
    assert np.all((p > 0) & (p <= 1))


def test_scalar_and_vector_agree(params):
    z = np.array([0.0, 0.3, 1.05, 7.0])
    assert np.allclose(los_probability(z, params), [los_probability(float(x), params) for x in z],
                       rtol=1e-14)


def test_received_power_km_reference(km_params):
    assert received_power(BsKind.T, 1.0, 1.0, km_params) == pytest.approx(6.918)
    assert received_power(BsKind.L, 1.0, 1.0, km_params) == pytest.approx(1.54886, abs=1e-5)
    assert received_power(BsKind.N, 0.0, 2.0, km_params) == 0.0


def test_received_power_metre_reference(params):
    # 1 km is 1000 reference lengths
    assert received_power(BsKind.T, 1.0, 1.0, params) == pytest.approx(6.918 * 1000 ** -3.5)


def test_received_power_zero_distance(params):
    with pytest.raises(ValueError):
        received_power(BsKind.T, 1.0, 0.0, params)


def test_fading_moments(params):
    rng = np.random.default_rng(7)
    g1 = sample_fading(BsKind.N, params, rng, 10**6)
    assert abs(g1.mean() - 1.0) < 0.003
    g2 = sample_fading(BsKind.L, params, rng, 10**6)
    assert abs(g2.var() - 0.5) < 0.005
    assert abs(g2.mean() - 1.0) < 0.003


@pytest.mark.parametrize("kind", [BsKind.L, BsKind.N, BsKind.T])
def test_fading_goodness_of_fit(params, kind):
    m = params.m(kind)
    g = sample_fading(kind, params, np.random.default_rng(3), 10**5)
    d = stats.kstest(g, stats.gamma(m, scale=1.0 / m).cdf).statistic
    assert d < 0.01


def test_fading_deterministic(params):
    a = sample_fading(BsKind.L, params, np.random.default_rng(11), 50)
    b = sample_fading(BsKind.L, params, np.random.default_rng(11), 50)
    assert np.array_equal(a, b)
    assert isinstance(sample_fading(BsKind.L, params, np.random.default_rng(1)), float)
