"""Conditional Laplace transforms of the interference seen by a served user.

Given the serving class B at horizontal distance z, interferers of class C
are the points of that class beyond the floor ``z_B^C(z)``. By the PGFL of a
Poisson process with i.i.d. Gamma(m, 1/m) fading,

    -log L_C(s) = int_{z_B^C}^inf w_C(x) (1 - (1 + s xi_C d(x)^-alpha_C / m_C)^-m_C) dx

with ``w_T(x) = lambda_T x ring(x)`` and ``w_M(x) = lambda_A P_M(x) x (2 pi - phi(x))``.
:func:`laplace_M_region_form` keeps the per-region hole corrections as an
independent route.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from . import geometry as geo
from .association import interferer_floor
from .channel import mark_probability
from .geometry import RegionId, UserFrame
from .nearest import los_knee
from .numerics import QuadResult, gaussian_tail_radius, integrate_1d, integrate_2d_polar
from .params import AERIAL, ALL_KINDS, BsKind, NetworkParams, gaussian_tbs_profile, tbs_ring_density

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
LAPLACE_ABS_TOL = 1e-11
LAPLACE_REL_TOL = 1e-9
CONSISTENCY_TOL = 1e-9


class LaplaceConsistencyError(ArithmeticError):
    """A hole correction exceeded the full-plane exponent."""


def _fading_term(t: float, m: int) -> float:
    """1 - (1 + t/m)^-m, accurate for small t."""
    return -math.expm1(-m * math.log1p(t / m))


def _fading_term_ds(t: float, m: int) -> float:
    """d/dt of :func:`_fading_term`, times t (so callers divide by s)."""
    return t * math.exp(-(m + 1) * math.log1p(t / m))


def _mean_rx(kind: BsKind, d: float, params: NetworkParams) -> float:
    return params.xi(kind) * (d / params.pathloss_ref) ** -params.alpha(kind)


def _tbs_kernel(s, frame, params, ds=False):
    m, lam, r_u = params.m_T, params.lambda_T, frame.r_u
    term = _fading_term_ds if ds else _fading_term

    def f(x):
        if x <= 0:
            return 0.0
        return lam * x * tbs_ring_density(x, r_u, params) * term(s * _mean_rx(BsKind.T, x, params), m)

    return f


def _aerial_kernel(s, kind, frame, params, ds=False, with_hole=True):
    m, lam, h2 = params.m(kind), params.lambda_A, params.h * params.h
    term = _fading_term_ds if ds else _fading_term

    def f(x):
        w = x * mark_probability(kind, x, params)
        if with_hole:
            w *= TWO_PI - geo.inside_angle(x, frame)
        return lam * w * term(s * _mean_rx(kind, math.sqrt(x * x + h2), params), m)

    return f


def tbs_cutoff(frame: UserFrame, params: NetworkParams) -> float:
    """Radius past which the TBS ring density is below 1e-12 of its Gaussian peak."""
    return gaussian_tail_radius(frame.r_u, params.sigma_T)


def laplace_exponent_T(s: float, serving: BsKind, z: float, frame: UserFrame,
                       params: NetworkParams, ds: bool = False,
                       tol_scale: float = 1.0, z_max: float = math.inf) -> QuadResult:
    """-log L_T(s); with ``ds`` the s-derivative of the exponent times s.

    ``z_max`` restricts interferers to horizontal distance below it.
    """
    if s < 0:
        raise ValueError(f"s = {s}: must be non-negative")
    lo = interferer_floor(serving, BsKind.T, z, params)
    cut = min(tbs_cutoff(frame, params), z_max)
    if s == 0 or params.lambda_T == 0 or lo >= cut:
        return QuadResult(0.0, 0.0, 0, cut)
    res = integrate_1d(_tbs_kernel(s, frame, params, ds), lo, cut, LAPLACE_ABS_TOL * tol_scale,
                       LAPLACE_REL_TOL * tol_scale, points=(frame.r_u,))
    return QuadResult(res.value, res.abs_error, res.evaluations, cut)


def laplace_exponent_M(s: float, kind: BsKind, serving: BsKind, z: float, frame: UserFrame,
                       params: NetworkParams, ds: bool = False,
                       tol_scale: float = 1.0, z_max: float = math.inf) -> QuadResult:
    """-log L_M(s) for aerial interferers of mark ``kind``.

    The range beyond the last region boundary is integrated on the mapped
    infinite interval: the kernel decays like a power law, so an envelope cut
    at 1e-12 of the peak would lie thousands of km out.
    """
    if s < 0:
        raise ValueError(f"s = {s}: must be non-negative")
    kind = BsKind(kind)
    if kind not in AERIAL:
        raise ValueError(f"kind = {kind}: expected an aerial class")
    if s == 0 or params.lambda_A == 0:
        return QuadResult(0.0, 0.0, 0)
    lo = interferer_floor(serving, kind, z, params)
    if lo >= z_max:
        return QuadResult(0.0, 0.0, 0)
    pts = geo.region_boundaries(frame) + (los_knee(params), 2.0 * max(lo, params.h))
    res = integrate_1d(_aerial_kernel(s, kind, frame, params, ds), lo, z_max,
                       LAPLACE_ABS_TOL * tol_scale, LAPLACE_REL_TOL * tol_scale, points=pts)
    if res.value < -CONSISTENCY_TOL:
        raise LaplaceConsistencyError(f"negative interference exponent {res.value:.3g}")
    return res


def laplace_T(s: float, serving: BsKind, z: float, frame: UserFrame,
              params: NetworkParams) -> float:
    """E[exp(-s I_T)] given the serving class and horizontal distance."""
    return math.exp(-laplace_exponent_T(s, serving, z, frame, params).value)


def laplace_M(s: float, kind: BsKind, serving: BsKind, z: float, frame: UserFrame,
              params: NetworkParams) -> float:
    """E[exp(-s I_M)] for aerial interferers of mark ``kind``."""
    return math.exp(-laplace_exponent_M(s, kind, serving, z, frame, params).value)


def laplace_exponent(s: float, kind: BsKind, serving: BsKind, z: float, frame: UserFrame,
                     params: NetworkParams, ds: bool = False,
                     tol_scale: float = 1.0, z_max: float = math.inf) -> QuadResult:
    if BsKind(kind) is BsKind.T:
        return laplace_exponent_T(s, serving, z, frame, params, ds, tol_scale, z_max)
    return laplace_exponent_M(s, kind, serving, z, frame, params, ds, tol_scale, z_max)


def laplace_total(s: float, serving: BsKind, z: float, frame: UserFrame,
                  params: NetworkParams) -> float:
    """E[exp(-s (sigma_n^2 + I))] with I summed over all three classes."""
    return LaplaceEvaluator(BsKind(serving), z, frame, params)(s)


@dataclass(frozen=True)
class LaplaceEvaluator:
    """s -> L_J(s) for a fixed serving class and distance.

    ``z_max`` drops interferers beyond that horizontal distance from the
    user (to mirror a finite simulation window).
    """

    serving: BsKind
    z: float
    frame: UserFrame
    params: NetworkParams
    tol_scale: float = 1.0
    z_max: float = math.inf

    def exponent(self, s: float) -> tuple[float, float]:
        """(-log L_J(s), accumulated quadrature error)."""
        total = s * self.params.sigma_n2
        err = 0.0
        for c in ALL_KINDS:
            r = laplace_exponent(s, c, self.serving, self.z, self.frame, self.params,
                                 tol_scale=self.tol_scale, z_max=self.z_max)
            total += r.value
            err += r.abs_error
        return total, err

    def __call__(self, s: float) -> float:
        return math.exp(-self.exponent(s)[0])

    def derivative(self, s: float) -> float:
        """d/ds L_J(s) from the analytic derivative of the exponent."""
        if s == 0:
            raise ValueError("analytic derivative is evaluated at s > 0 only")
        d = self.params.sigma_n2
        for c in ALL_KINDS:
            d += laplace_exponent(s, c, self.serving, self.z, self.frame, self.params,
                                  ds=True, tol_scale=self.tol_scale, z_max=self.z_max).value / s
        return -d * self(s)


# -- literal forms, used as independent checks -------------------------------------

def laplace_M_region_form(s: float, kind: BsKind, serving: BsKind, z: float,
                          frame: UserFrame, params: NetworkParams) -> float:
    """Full-annulus transform times the per-region hole corrections.

    The hole content is integrated beta-first over the part of the exclusion
    disk beyond the interferer floor.
    """
    kind = BsKind(kind)
    if s == 0 or params.lambda_A == 0:
        return 1.0
    lo = interferer_floor(serving, kind, z, params)
    ring = _aerial_kernel(s, kind, frame, params, with_hole=False)
    full = TWO_PI * integrate_1d(ring, lo, math.inf, LAPLACE_ABS_TOL, LAPLACE_REL_TOL,
                                 points=(los_knee(params), 2.0 * max(lo, params.h))).value
    if frame.r_e == 0:
        return math.exp(-full)

    def seg(a, b):
        if b <= a:
            return 0.0
        return integrate_1d(ring, a, b, LAPLACE_ABS_TOL, LAPLACE_REL_TOL).value

    def bint(g, b0, b1):
        if b1 <= b0:
            return 0.0
        return 2.0 * integrate_1d(g, b0, b1, LAPLACE_ABS_TOL, LAPLACE_REL_TOL).value

    def z_x(b):
        return geo.z_X(b, frame)

    def z_m(b):
        return geo.z_m(b, frame)

    region = geo.classify_region(lo, frame)
    if region is RegionId.I:
        hole = bint(lambda b: seg(z_m(b), z_x(b)), 0.0, geo.beta_star(frame))
    elif region is RegionId.II:
        bi = geo.beta_i(lo, frame)
        hole = (bint(lambda b: seg(lo, z_x(b)), 0.0, bi)
                + bint(lambda b: seg(z_m(b), z_x(b)), bi, geo.beta_star(frame)))
    elif region in (RegionId.III, RegionId.VI):
        hole = bint(lambda b: seg(lo, z_x(b)), 0.0, geo.beta_i(lo, frame))
    elif region is RegionId.V:
        hole = bint(lambda b: seg(lo, z_x(b)), 0.0, math.pi)
    else:  # IV, VII: the floor circle clears the disk
        hole = 0.0
    net = full - hole
    if net < -CONSISTENCY_TOL:
        raise LaplaceConsistencyError(
            f"hole correction {hole:.6g} exceeds full-plane exponent {full:.6g} in region "
            f"{region.value}")
    return math.exp(-net)


def laplace_T_double_integral(s: float, serving: BsKind, z: float, frame: UserFrame,
                              params: NetworkParams) -> float:
    """TBS transform from the nested (z', beta) integral of the radial profile."""
    if s == 0 or params.lambda_T == 0:
        return 1.0
    lo = interferer_floor(serving, BsKind.T, z, params)
    cut = tbs_cutoff(frame, params)
    if lo >= cut:
        return 1.0
    r_u, m = frame.r_u, params.m_T

    def g(beta, zp):
        if zp <= 0:
            return 0.0
        r = math.sqrt(max(0.0, r_u * r_u + zp * zp - 2.0 * zp * r_u * math.cos(beta)))
        return (gaussian_tbs_profile(r, params) * zp
                * _fading_term(s * _mean_rx(BsKind.T, zp, params), m))

    res = integrate_2d_polar(g, -math.pi, math.pi, lo, cut, LAPLACE_ABS_TOL, LAPLACE_REL_TOL,
                             points=(r_u,))
    return math.exp(-params.lambda_T * res.value)
