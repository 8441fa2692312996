"""Distribution of the horizontal distance to the nearest TBS / LoS ABS / NLoS ABS.

All three are void probabilities of Poisson processes seen from the user:
``F(z) = 1 - exp(-V(z))`` with ``V`` the mean number of points of that class
within horizontal distance ``z``.

* TBSs: ``V_T(z) = lambda_T * int_0^z z' * ring(z') dz'`` where ``ring`` is the
  angular integral of the radial profile over the circle of radius ``z'``.
* ABSs of mark M: ``V_M(z) = lambda_A * int_0^z P_M(z') z' (2 pi - phi(z')) dz'``
  where ``phi`` is the angle of that circle falling inside the exclusion
  disk. Per region this is the same quantity as the beta-first integrals in
  :func:`cdf_M_region_form`, which is kept as an independent check.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

from . import geometry as geo
from .channel import mark_probability
from .geometry import RegionId, UserFrame
from .numerics import QuadResult, gaussian_tail_radius, integrate_1d, integrate_2d_polar
from .params import BsKind, NetworkParams, gaussian_tbs_profile, tbs_ring_density

TWO_PI = 2.0 * math.pi
VOID_ABS_TOL = 1e-11
VOID_REL_TOL = 1e-10


class _Cumulative:
    """``x -> int_0^x f`` with cached partial sums at a fixed set of knots.

    Knots are the given breakpoints plus a regular grid; ``f`` must be smooth
    between knots. Past ``cap`` the integral is taken as constant.
    """

    def __init__(self, f: Callable[[float], float], breakpoints=(), step: float = 1.0,
                 cap: float = math.inf):
        self.f = f
        self.cap = cap
        self.step = step
        self._breaks = sorted(b for b in set(breakpoints) if 0 < b < cap)
        self._knots = [0.0]
        self._cum = [0.0]
        self.abs_error = 0.0

    def _next_knot(self, x: float) -> float:
        nxt = (math.floor(x / self.step + 1e-12) + 1) * self.step
        k = bisect.bisect_right(self._breaks, x + 1e-12)
        if k < len(self._breaks):
            nxt = min(nxt, self._breaks[k])
        return min(nxt, self.cap)

    def _extend(self, z: float):
        while self._knots[-1] < z and self._knots[-1] < self.cap:
            a = self._knots[-1]
            b = self._next_knot(a)
            r = integrate_1d(self.f, a, b, VOID_ABS_TOL, VOID_REL_TOL)
            self._knots.append(b)
            self._cum.append(self._cum[-1] + r.value)
            self.abs_error += r.abs_error

    def __call__(self, z: float) -> float:
        if z <= 0:
            return 0.0
        z = min(z, self.cap)
        self._extend(z)
        k = bisect.bisect_right(self._knots, z) - 1
        a = self._knots[k]
        if a == z:
            return self._cum[k]
        return self._cum[k] + integrate_1d(self.f, a, z, VOID_ABS_TOL, VOID_REL_TOL).value


def los_knee(params: NetworkParams) -> float:
    """Horizontal distance where the s-curve is steepest (P_L near 1/2)."""
    theta = params.s_a + math.log(params.s_a) / params.s_b
    return params.h / math.tan(math.radians(min(theta, 89.0)))


@lru_cache(maxsize=256)
def _tbs_void(frame: UserFrame, params: NetworkParams) -> _Cumulative:
    r_u, lam = frame.r_u, params.lambda_T

    def f(x):
        return lam * x * tbs_ring_density(x, r_u, params)

    cap = gaussian_tail_radius(r_u, params.sigma_T)
    return _Cumulative(f, breakpoints=(r_u,), step=params.sigma_T, cap=cap)


@lru_cache(maxsize=512)
def _aerial_void(kind: BsKind, frame: UserFrame, params: NetworkParams) -> _Cumulative:
    lam = params.lambda_A

    def f(x):
        return lam * mark_probability(kind, x, params) * x * (TWO_PI - geo.inside_angle(x, frame))

    bps = geo.region_boundaries(frame) + (los_knee(params),)
    return _Cumulative(f, breakpoints=bps, step=2.0)


def tbs_void_exponent(z: float, frame: UserFrame, params: NetworkParams) -> float:
    """Mean number of TBSs within horizontal distance ``z`` of the user."""
    if z < 0:
        raise ValueError(f"z = {z}: must be non-negative")
    if params.lambda_T == 0:
        return 0.0
    return _tbs_void(frame, params)(z)


def aerial_void_exponent(z: float, kind: BsKind, frame: UserFrame,
                         params: NetworkParams) -> float:
    """Mean number of mark-``kind`` ABSs within horizontal distance ``z``."""
    if z < 0:
        raise ValueError(f"z = {z}: must be non-negative")
    if params.lambda_A == 0 or geo.classify_region(z, frame) is RegionId.V:
        return 0.0
    return _aerial_void(BsKind(kind), frame, params)(z)


def void_exponent(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams) -> float:
    if kind is BsKind.T:
        return tbs_void_exponent(z, frame, params)
    return aerial_void_exponent(z, kind, frame, params)


def sf(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams) -> float:
    """P(no BS of class ``kind`` within horizontal distance ``z``)."""
    return math.exp(-void_exponent(kind, z, frame, params))


def void_density(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams) -> float:
    """d/dz of the void exponent."""
    if z <= 0:
        return 0.0
    if kind is BsKind.T:
        return params.lambda_T * z * tbs_ring_density(z, frame.r_u, params)
    return (params.lambda_A * mark_probability(kind, z, params) * z
            * (TWO_PI - geo.inside_angle(z, frame)))


def cdf_T(z: float, frame: UserFrame, params: NetworkParams) -> float:
    return -math.expm1(-tbs_void_exponent(z, frame, params))


def pdf_T(z: float, frame: UserFrame, params: NetworkParams) -> float:
    if z <= 0:
        return 0.0
    return void_density(BsKind.T, z, frame, params) * sf(BsKind.T, z, frame, params)


def cdf_M(z: float, kind: BsKind, frame: UserFrame, params: NetworkParams) -> float:
    return -math.expm1(-aerial_void_exponent(z, kind, frame, params))


def pdf_M(z: float, kind: BsKind, frame: UserFrame, params: NetworkParams) -> float:
    """Derivative of :func:`cdf_M`; zero in region V."""
    if z <= 0 or geo.classify_region(z, frame) is RegionId.V:
        return 0.0
    return void_density(kind, z, frame, params) * sf(kind, z, frame, params)


def cdf(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams) -> float:
    return -math.expm1(-void_exponent(kind, z, frame, params))


def pdf(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams) -> float:
    if kind is BsKind.T:
        return pdf_T(z, frame, params)
    return pdf_M(z, kind, frame, params)


def kinks(kind: BsKind, frame: UserFrame, params: NetworkParams) -> tuple[float, ...]:
    """Points where the density of the nearest distance is not smooth."""
    if kind is BsKind.T:
        return (frame.r_u,) if frame.r_u > 0 else ()
    return geo.region_boundaries(frame) + (los_knee(params),)


@dataclass(frozen=True)
class DistanceDistribution:
    """Nearest-distance law of one BS class for a given user."""

    kind: BsKind
    frame: UserFrame
    params: NetworkParams

    def cdf(self, z: float) -> float:
        return cdf(self.kind, z, self.frame, self.params)

    def pdf(self, z: float) -> float:
        return pdf(self.kind, z, self.frame, self.params)

    def sf(self, z: float) -> float:
        return sf(self.kind, z, self.frame, self.params)

    def support_start(self) -> float:
        if self.kind is BsKind.T or self.frame.outer:
            return 0.0
        return max(0.0, self.frame.r_e - self.frame.r_u)


# -- literal forms, used as independent checks -------------------------------------

@lru_cache(maxsize=64)
def _kappa_cum(kind: BsKind, params: NetworkParams) -> _Cumulative:
    def f(x):
        return mark_probability(kind, x, params) * x

    return _Cumulative(f, breakpoints=(los_knee(params),), step=2.0)


def kappa(a: float, b: float, kind: BsKind, params: NetworkParams) -> float:
    """int_a^b P_M(z) z dz in km^2."""
    if a > b:
        raise ValueError(f"kappa limits reversed: a = {a} > b = {b}")
    if a < 0:
        raise ValueError(f"a = {a}: must be non-negative")
    if a == b:
        return 0.0
    k = _kappa_cum(BsKind(kind), params)
    return k(b) - k(a)


def cdf_M_region_form(z: float, kind: BsKind, frame: UserFrame,
                      params: NetworkParams) -> float:
    """Region-by-region CDF with the hole removed by beta-first integrals."""
    region = geo.classify_region(z, frame)
    if region is RegionId.V:
        return 0.0
    lam = params.lambda_A

    def K(a, b):
        return kappa(a, b, kind, params)

    def bint(g, lo, hi):
        if hi <= lo:
            return 0.0
        return integrate_1d(g, lo, hi, 1e-11, 1e-10).value

    full = TWO_PI * K(0.0, z)
    if region in (RegionId.I,) or frame.r_e == 0:
        hole = 0.0
    elif region is RegionId.II:
        bi = geo.beta_i(z, frame)
        hole = 2.0 * bint(lambda b: K(geo.z_m(b, frame), z), 0.0, bi)
    elif region is RegionId.III:
        bi = geo.beta_i(z, frame)
        bs = geo.beta_star(frame)
        hole = (2.0 * bint(lambda b: K(geo.z_m(b, frame), z), 0.0, bi)
                + 2.0 * bint(lambda b: K(geo.z_m(b, frame), geo.z_X(b, frame)), bi, bs))
    elif region is RegionId.IV:
        bs = geo.beta_star(frame)
        hole = 2.0 * bint(lambda b: K(geo.z_m(b, frame), geo.z_X(b, frame)), 0.0, bs)
    elif region is RegionId.VI:
        bi = geo.beta_i(z, frame) if frame.r_u > 0 else 0.0
        # integrand of the second term is symmetric about beta = pi
        hole = (2.0 * bi * K(0.0, z)
                + 2.0 * bint(lambda b: K(0.0, geo.z_X(b, frame)), bi, math.pi))
    else:  # VII
        hole = 2.0 * bint(lambda b: K(0.0, geo.z_X(b, frame)), 0.0, math.pi)
    return -math.expm1(-lam * (full - hole))


def cdf_T_double_integral(z: float, frame: UserFrame, params: NetworkParams) -> QuadResult:
    """Void exponent of the TBS process as a nested (z', beta) integral of G_T.

    Returns the exponent; the CDF is ``1 - exp(-value)``.
    """
    r_u = frame.r_u

    def g(beta, zp):
        r = math.sqrt(max(0.0, r_u * r_u + zp * zp - 2.0 * zp * r_u * math.cos(beta)))
        return gaussian_tbs_profile(r, params) * zp

    res = integrate_2d_polar(g, -math.pi, math.pi, 0.0, z, abs_tol=1e-11, rel_tol=1e-10,
                             points=(r_u,))
    return QuadResult(params.lambda_T * res.value, params.lambda_T * res.abs_error,
                      res.evaluations)
