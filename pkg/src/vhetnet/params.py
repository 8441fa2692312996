"""Model parameters, unit conventions and the radial TBS profile.

Units: horizontal distances and the ABS altitude are in km, densities in
points per km (``lambda_T``) or per km^2 (``lambda_A``), powers in watts.
Path loss is evaluated on ``dist / pathloss_ref`` where ``pathloss_ref`` is
the reference distance in km (default 1 m, i.e. ``1e-3``).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from pathlib import Path
from typing import Mapping

import numpy as np
from scipy import special


class BsKind(str, Enum):
    """Transmitter class: LoS ABS, NLoS ABS or terrestrial BS."""

    T = "T"
    L = "L"
    N = "N"

    def __str__(self) -> str:
        return self.value


AERIAL = (BsKind.L, BsKind.N)
ALL_KINDS = (BsKind.L, BsKind.N, BsKind.T)


class ParameterError(ValueError):
    """Raised when a parameter set violates a model invariant."""


_POSITIVE = (
    "eta_L", "eta_N", "eta_T", "p_M", "p_T", "lambda_A", "lambda_T",
    "sigma_T2", "h", "tau", "sigma_n2", "pathloss_ref",
)


@dataclass(frozen=True)
class NetworkParams:
    eta_L: float
    eta_N: float
    eta_T: float
    alpha_L: float
    alpha_N: float
    alpha_T: float
    m_L: int
    m_N: int
    m_T: int
    p_M: float
    p_T: float
    lambda_A: float
    lambda_T: float
    sigma_T2: float
    h: float
    r_e: float
    tau: float
    sigma_n2: float
    s_a: float
    s_b: float
    pathloss_ref: float = 1e-3
    xi_L: float = field(init=False, repr=False)
    xi_N: float = field(init=False, repr=False)
    xi_T: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("m_L", "m_N", "m_T"):
            value = getattr(self, name)
            if isinstance(value, bool) or float(value) != int(value) or int(value) < 1:
                raise ParameterError(
                    f"{name} = {value}: Nakagami shape must be an integer >= 1")
            object.__setattr__(self, name, int(value))
        for q in "LNT":
            alpha = getattr(self, f"alpha_{q}")
            if not alpha > 2:
                raise ParameterError(
                    f"alpha_{q} = {alpha}: path-loss exponent must exceed 2")
        for name in _POSITIVE:
            value = getattr(self, name)
            # lambda_A = 0 and lambda_T = 0 are the "no ABS" / "no TBS" limits
            if name in ("lambda_A", "lambda_T"):
                ok = value >= 0
            else:
                ok = value > 0
            if not (ok and math.isfinite(value)):
                raise ParameterError(f"{name} = {value}: must be positive")
        if not (self.r_e >= 0 and math.isfinite(self.r_e)):
            raise ParameterError(f"r_e = {self.r_e}: must be non-negative")
        object.__setattr__(self, "xi_L", self.eta_L * self.p_M)
        object.__setattr__(self, "xi_N", self.eta_N * self.p_M)
        object.__setattr__(self, "xi_T", self.eta_T * self.p_T)

    @property
    def sigma_T(self) -> float:
        return math.sqrt(self.sigma_T2)

    def xi(self, kind: BsKind) -> float:
        return getattr(self, f"xi_{BsKind(kind).value}")

    def alpha(self, kind: BsKind) -> float:
        return getattr(self, f"alpha_{BsKind(kind).value}")

    def m(self, kind: BsKind) -> int:
        return getattr(self, f"m_{BsKind(kind).value}")

    def replace(self, **changes) -> "NetworkParams":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.init}


FIELD_NAMES = tuple(f.name for f in fields(NetworkParams) if f.init)

# Reference network: lambda_T calibrated to the urban/rural density window,
# 8 km exclusion radius.
DEFAULTS = {
    "eta_L": 0.9772,
    "eta_N": 0.007943,
    "eta_T": 0.6918,
    "alpha_L": 3.0,
    "alpha_N": 4.0,
    "alpha_T": 3.5,
    "m_L": 2,
    "m_N": 1,
    "m_T": 1,
    "p_M": 1.585,
    "p_T": 10.0,
    "lambda_A": 0.15,
    "lambda_T": 100.0,
    "sigma_T2": 10.0,
    "h": 0.1,
    "r_e": 8.0,
    "tau": 0.3162,
    "sigma_n2": 1e-12,
    "s_a": 4.88,
    "s_b": 0.429,
    "pathloss_ref": 1e-3,
}

# Literal reference TBS density (TBSs/km^2); accepted, not the default.
NOMINAL_LAMBDA_T = 8e4


def validate(raw: Mapping[str, object]) -> NetworkParams:
    """Build a :class:`NetworkParams` from a mapping of field values.

    Every field must be present (``pathloss_ref`` may be omitted); unknown
    keys are rejected. Values must already be linear.
    """
    unknown = sorted(set(raw) - set(FIELD_NAMES))
    if unknown:
        raise ParameterError(f"unknown parameter(s): {', '.join(unknown)}")
    missing = [k for k in FIELD_NAMES if k not in raw and k != "pathloss_ref"]
    if missing:
        raise ParameterError(f"missing parameter(s): {', '.join(missing)}")
    values = {}
    for key, value in raw.items():
        try:
            values[key] = float(value)
        except (TypeError, ValueError):
            raise ParameterError(f"{key} = {value!r}: not a number") from None
    return NetworkParams(**values)


def default_params(**overrides) -> NetworkParams:
    return validate({**DEFAULTS, **overrides})


# -- config files -------------------------------------------------------------

_DB = re.compile(r"^\s*([-+0-9.eE]+)\s*dB\s*$")


def parse_value(text: str) -> float:
    """Parse a config value; a trailing ``dB`` converts to linear scale."""
    m = _DB.match(text)
    if m:
        return 10.0 ** (float(m.group(1)) / 10.0)
    return float(text)


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in FIELD_NAMES:
            raise ParameterError(f"line {lineno}: unknown parameter {key!r}")
        try:
            out[key] = parse_value(value)
        except ValueError:
            raise ParameterError(f"line {lineno}: bad value {value!r} for {key}") from None
    return out


def load_params(path: str | Path | None = None,
                overrides: Mapping[str, str] | None = None) -> NetworkParams:
    """Defaults, then the config file, then ``key=value`` overrides."""
    raw = dict(DEFAULTS)
    if path is not None:
        raw.update(parse_config(Path(path).read_text()))
    for key, value in (overrides or {}).items():
        if key not in FIELD_NAMES:
            raise ParameterError(f"unknown parameter {key!r}")
        try:
            raw[key] = parse_value(str(value))
        except ValueError:
            raise ParameterError(f"bad value {value!r} for {key}") from None
    return validate(raw)


# -- TBS radial profile ---------------------------------------------------------

def gaussian_tbs_profile(r, params: NetworkParams):
    """Radial Gaussian profile G_T(r) in 1/km; works on scalars and arrays."""
    s2 = params.sigma_T2
    c = 1.0 / math.sqrt(2.0 * math.pi * s2)
    if np.ndim(r) == 0:
        if r < 0:
            raise ValueError(f"r = {r}: radius must be non-negative")
        return c * math.exp(-r * r / (2.0 * s2))
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("radius must be non-negative")
    return c * np.exp(-r * r / (2.0 * s2))


def tbs_ring_density(z: float, r_u: float, params: NetworkParams) -> float:
    """Angular integral of G_T over the circle of radius ``z`` around the user.

    For the Gaussian profile the integral over beta in [-pi, pi] is
    ``sqrt(2 pi)/sigma * exp(-(r_u - z)^2 / (2 sigma^2)) * i0e(z r_u / sigma^2)``.
    """
    s2 = params.sigma_T2
    d = r_u - z
    return (math.sqrt(2.0 * math.pi / s2) * math.exp(-d * d / (2.0 * s2))
            * special.i0e(z * r_u / s2))


def expected_tbs_count(params: NetworkParams) -> float:
    """Mean TBS count: integral of 2 pi r lambda_T G_T(r) over the plane."""
    return params.lambda_T * params.sigma_T * math.sqrt(2.0 * math.pi)


def calibrate_lambda_T(target_center_density: float, params: NetworkParams,
                       urban=(2.0, 8.0), rural=(10.0, 0.1)) -> float:
    """lambda_T giving ``target_center_density`` TBSs/km^2 at the town center.

    The result must keep at least ``urban[1]`` TBSs/km^2 at ``urban[0]`` km and
    at most ``rural[1]`` at ``rural[0]`` km.
    """
    g0 = gaussian_tbs_profile(0.0, params)
    g_urban = gaussian_tbs_profile(urban[0], params)
    g_rural = gaussian_tbs_profile(rural[0], params)
    lo = urban[1] / g_urban
    hi = rural[1] / g_rural
    if lo > hi:
        raise ParameterError(
            f"no lambda_T satisfies both lambda_T*G_T({urban[0]:g} km) >= {urban[1]:g}/km^2 "
            f"(needs >= {lo:.4g}) and lambda_T*G_T({rural[0]:g} km) <= {rural[1]:g}/km^2 "
            f"(needs <= {hi:.4g}) for sigma_T2 = {params.sigma_T2:g}")
    lam = target_center_density / g0
    if not lo <= lam <= hi:
        raise ParameterError(
            f"target {target_center_density:g}/km^2 gives lambda_T = {lam:.4g}, outside "
            f"[{lo:.4g}, {hi:.4g}] set by lambda_T*G_T({urban[0]:g} km) >= {urban[1]:g}/km^2 "
            f"and lambda_T*G_T({rural[0]:g} km) <= {rural[1]:g}/km^2")
    return lam


def epsilon_2(m: int) -> float:
    """Gamma-CDF bound constant (m!)^(-1/m)."""
    return math.factorial(m) ** (-1.0 / m)
