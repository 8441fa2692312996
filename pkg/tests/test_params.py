import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from vhetnet.params import (
    DEFAULTS, FIELD_NAMES, NOMINAL_LAMBDA_T, BsKind, ParameterError, calibrate_lambda_T,
    default_params, epsilon_2, expected_tbs_count, gaussian_tbs_profile, load_params,
    parse_config, parse_value, tbs_ring_density, validate,
)


def test_table_values_validate(params):
    assert params.xi_T == pytest.approx(6.918, rel=1e-12)
    for q in "LNT":
        eta = getattr(params, f"eta_{q}")
        p = params.p_M if q != "T" else params.p_T
        assert params.xi(BsKind(q)) == eta * p


def test_xi_L_value(params):
    assert params.xi_L == pytest.approx(1.54886, abs=1e-5)


@pytest.mark.parametrize("alpha", [2.0, 1.5, float("nan")])
def test_alpha_must_exceed_two(alpha):
    with pytest.raises(ParameterError, match="path-loss exponent must exceed 2"):
        default_params(alpha_T=alpha)


@pytest.mark.parametrize("field,value", [
    ("eta_L", 0.0), ("p_T", -1.0), ("sigma_T2", 0.0), ("h", 0.0), ("tau", 0.0),
    ("sigma_n2", 0.0), ("lambda_A", -0.1), ("r_e", -1.0),
])
def test_sign_constraints_name_the_field(field, value):
    with pytest.raises(ParameterError, match=field):
        default_params(**{field: value})


@pytest.mark.parametrize("m", [0, 1.5, -2])
def test_nakagami_shape_must_be_positive_integer(m):
    with pytest.raises(ParameterError, match="m_L"):
        default_params(m_L=m)


def test_zero_densities_are_the_empty_limits():
    p = default_params(lambda_A=0.0, lambda_T=0.0)
    assert p.lambda_A == 0 and p.lambda_T == 0


def test_missing_and_unknown_keys():
    raw = dict(DEFAULTS)
    del raw["h"]
    with pytest.raises(ParameterError, match="missing.*h"):
        validate(raw)
    with pytest.raises(ParameterError, match="unknown.*bogus"):
        validate({**DEFAULTS, "bogus": 1})


def test_params_are_frozen(params):
    with pytest.raises(Exception):
        params.h = 1.0


def test_epsilon_2():
    assert epsilon_2(1) == 1.0
    assert epsilon_2(2) == pytest.approx(0.70711, abs=1e-5)
    assert epsilon_2(3) == pytest.approx(6 ** (-1 / 3))


def test_parse_value_db():
    assert parse_value("-5 dB") == pytest.approx(10 ** -0.5)
    assert parse_value("3dB") == pytest.approx(1.9952623)
    assert parse_value("0.25") == 0.25


def test_config_file_round_trip(tmp_path):
    cfg = tmp_path / "net.cfg"
    cfg.write_text("# town scenario\nr_e = 4   # km\ntau = -5 dB\n\nlambda_A=0.2\n")
    p = load_params(cfg, {"h": "0.2"})
    assert p.r_e == 4 and p.lambda_A == 0.2 and p.h == 0.2
    assert p.tau == pytest.approx(10 ** -0.5)
    assert p.alpha_T == DEFAULTS["alpha_T"]


def test_config_errors_report_line():
    with pytest.raises(ParameterError, match="line 2"):
        parse_config("h = 0.1\nnot a pair\n")
    with pytest.raises(ParameterError, match="unknown parameter 'zeta'"):
        parse_config("zeta = 1")
    with pytest.raises(ParameterError, match="bad value"):
        parse_config("h = abc")


def test_table_lambda_accepted_via_config():
    p = load_params(None, {"lambda_T": str(NOMINAL_LAMBDA_T)})
    assert p.lambda_T == 8e4


def test_field_names_cover_defaults():
    assert set(FIELD_NAMES) == set(DEFAULTS)


# -- TBS profile -----------------------------------------------------------------

def test_profile_values(params):
    assert gaussian_tbs_profile(0.0, params) == pytest.approx(0.126157, abs=1e-6)
    ratio = gaussian_tbs_profile(1.0, params) / gaussian_tbs_profile(0.0, params)
    assert ratio == pytest.approx(0.951229, abs=1e-6)
    assert gaussian_tbs_profile(200.0, params) == 0.0


def test_profile_non_increasing(params):
    g = gaussian_tbs_profile(np.linspace(0, 50, 2001), params)
    assert np.all(np.diff(g) <= 0)


def test_profile_rejects_negative_radius(params):
    with pytest.raises(ValueError):
        gaussian_tbs_profile(-1.0, params)


def test_density_window(params):
    assert params.lambda_T * gaussian_tbs_profile(2.0, params) == pytest.approx(10.33, abs=0.01)
    assert params.lambda_T * gaussian_tbs_profile(10.0, params) == pytest.approx(0.085, abs=0.001)


def test_calibration(params):
    assert calibrate_lambda_T(12.6, params) == pytest.approx(99.88, abs=0.01)


def test_calibration_infeasible_names_both_constraints(params):
    wide = params.replace(sigma_T2=200.0)
    with pytest.raises(ParameterError) as exc:
        calibrate_lambda_T(1.0, wide)
    msg = str(exc.value)
    assert "G_T(2 km) >= 8" in msg and "G_T(10 km) <= 0.1" in msg


def test_expected_count_against_quadrature(params):
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * params.lambda_T
                            * gaussian_tbs_profile(r, params), 0, math.inf)
    assert expected_tbs_count(params) == pytest.approx(val, rel=1e-10)
    assert expected_tbs_count(params) == pytest.approx(792.67, abs=0.01)


@settings(max_examples=40, deadline=None)
@given(z=st.floats(0.01, 40.0), r_u=st.floats(0.0, 40.0), s2=st.floats(1.0, 50.0))
def test_ring_density_matches_angular_quadrature(z, r_u, s2):
    p = default_params(sigma_T2=s2)
    # the integrand is even in beta and can be a narrow spike at 0
    half, _ = integrate.quad(
        lambda b: gaussian_tbs_profile(math.sqrt(max(0.0, r_u * r_u + z * z
                                                     - 2 * z * r_u * math.cos(b))), p),
        0.0, math.pi, epsabs=0.0, epsrel=1e-12, limit=400)
    brute = 2.0 * half
    assert tbs_ring_density(z, r_u, p) == pytest.approx(brute, rel=1e-8, abs=1e-300)
