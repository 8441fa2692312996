"""Minimum interferer distances and max-average-power association probabilities.

A BS of class B at Euclidean distance D serves the user iff no BS of another
class C is closer than ``d_B^C(D)``, the distance at which a C-transmitter
would deliver the same average power. For aerial C the distance can never be
below the altitude ``h``, hence the floor.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from scipy import optimize

from . import nearest
from .geometry import UserFrame
from .numerics import QuadResult, integrate_1d
from .params import AERIAL, ALL_KINDS, BsKind, NetworkParams

log = logging.getLogger(__name__)

# Survival past the outer limit is below exp(-TAIL_EXPONENT).
TAIL_EXPONENT = 40.0
ASSOC_ABS_TOL = 1e-10
ASSOC_REL_TOL = 1e-8
SIMPLEX_TOL = 1e-4


@dataclass(frozen=True)
class TaggedBs:
    """Serving BS seen from the user: horizontal and Euclidean distance."""

    kind: BsKind
    z: float
    d: float

    @classmethod
    def at(cls, kind: BsKind, z: float, params: NetworkParams) -> "TaggedBs":
        return cls(BsKind(kind), z, link_distance(kind, z, params))


def link_distance(kind: BsKind, z, params: NetworkParams):
    """Euclidean distance of a class-``kind`` BS at horizontal distance ``z``."""
    if kind is BsKind.T:
        return z
    return math.hypot(z, params.h)


def horizontal_projection(kind: BsKind, d: float, params: NetworkParams) -> float:
    """Horizontal distance of a class-``kind`` point at Euclidean distance ``d``."""
    if kind is BsKind.T:
        return d
    return math.sqrt(max(0.0, d * d - params.h * params.h))


def _equal_power_distance(src: BsKind, dst: BsKind, d_src: float, params: NetworkParams) -> float:
    """Distance at which a ``dst`` transmitter matches ``src`` at ``d_src``."""
    ref = params.pathloss_ref
    ratio = params.xi(dst) / params.xi(src)
    return ref * ratio ** (1.0 / params.alpha(dst)) * (d_src / ref) ** (
        params.alpha(src) / params.alpha(dst))


def min_interferer_distance(serving: BsKind, interferer: BsKind, z: float,
                            params: NetworkParams) -> float:
    """Euclidean d_B^C(z): closest a C-interferer can be to a B-served user.

    ``z`` is the horizontal distance of the serving BS.
    """
    if z < 0:
        raise ValueError(f"z = {z}: must be non-negative")
    serving, interferer = BsKind(serving), BsKind(interferer)
    d_serv = link_distance(serving, z, params)
    if serving is interferer:
        return d_serv
    if d_serv == 0:
        d = 0.0
    else:
        d = _equal_power_distance(serving, interferer, d_serv, params)
    if interferer in AERIAL:
        d = max(params.h, d)
    return d


def interferer_floor(serving: BsKind, interferer: BsKind, z: float,
                     params: NetworkParams) -> float:
    """Horizontal projection z_B^C(z) of :func:`min_interferer_distance`."""
    return horizontal_projection(interferer,
                                 min_interferer_distance(serving, interferer, z, params), params)


def serving_distance_for(serving: BsKind, interferer: BsKind, y: float,
                         params: NetworkParams) -> float | None:
    """Serving horizontal distance whose interferer floor z_B^C equals ``y``.

    Returns ``None`` when no serving distance maps there (floored range).
    """
    d_int = link_distance(interferer, y, params)
    if d_int <= 0:
        return 0.0
    d_serv = _equal_power_distance(interferer, serving, d_int, params)
    if serving is BsKind.T:
        return d_serv
    if d_serv <= params.h:
        return None
    return math.sqrt(d_serv * d_serv - params.h * params.h)


def _floor_activation(serving: BsKind, interferer: BsKind, params: NetworkParams):
    """Serving horizontal distance below which the altitude floor binds."""
    if interferer not in AERIAL:
        return None
    d_serv = _equal_power_distance(interferer, serving, params.h, params)
    if serving is BsKind.T:
        return d_serv
    if d_serv <= params.h:
        return None
    return math.sqrt(d_serv * d_serv - params.h * params.h)


def conditional_assoc(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams) -> float:
    """a_B(z): P(B at horizontal distance z beats every other class).

    Each factor is the void probability of the other class inside its
    horizontal exclusion floor; the other classes are independent of the
    serving one.
    """
    kind = BsKind(kind)
    out = 1.0
    for other in ALL_KINDS:
        if other is kind:
            continue
        y = interferer_floor(kind, other, z, params)
        out *= nearest.sf(other, y, frame, params)
    return out


def assoc_kinks(kind: BsKind, frame: UserFrame, params: NetworkParams) -> list[float]:
    """Serving distances where ``f_B(z) a_B(z)`` is not smooth."""
    kind = BsKind(kind)
    pts = set(nearest.kinks(kind, frame, params))
    for other in ALL_KINDS:
        if other is kind:
            continue
        z = _floor_activation(kind, other, params)
        if z is not None:
            pts.add(z)
        for y in nearest.kinks(other, frame, params):
            z = serving_distance_for(kind, other, y, params)
            if z is not None:
                pts.add(z)
    return sorted(p for p in pts if p > 0 and math.isfinite(p))


def outer_limit(kind: BsKind, frame: UserFrame, params: NetworkParams,
                exponent: float = TAIL_EXPONENT) -> float:
    """Horizontal distance beyond which class ``kind`` is nearly surely present.

    Where the void exponent saturates below ``exponent`` (sparse TBS layer)
    the saturation radius is returned instead.
    """
    kind = BsKind(kind)
    if kind is BsKind.T:
        from .numerics import gaussian_tail_radius
        cap = gaussian_tail_radius(frame.r_u, params.sigma_T)
        if nearest.void_exponent(kind, cap, frame, params) < exponent:
            return cap
        hi = cap
    else:
        hi = max(1.0, frame.r_u + frame.r_e)
        while nearest.void_exponent(kind, hi, frame, params) < exponent:
            hi *= 2.0
            if hi > 1e6:
                raise ValueError(f"void exponent of class {kind} does not grow")
    lo = 0.0
    return optimize.brentq(lambda z: nearest.void_exponent(kind, z, frame, params) - exponent,
                           lo, hi, xtol=1e-10)


def _support(kind: BsKind, frame: UserFrame) -> float:
    if kind is BsKind.T or frame.outer:
        return 0.0
    return max(0.0, frame.r_e - frame.r_u)


def association_integral(kind: BsKind, frame: UserFrame, params: NetworkParams,
                         weight=None, abs_tol: float = ASSOC_ABS_TOL,
                         rel_tol: float = ASSOC_REL_TOL) -> QuadResult:
    """int f_B(z) a_B(z) w(z) dz over the support of the nearest-B law."""
    kind = BsKind(kind)
    lam = params.lambda_T if kind is BsKind.T else params.lambda_A
    if lam == 0:
        return QuadResult(0.0, 0.0, 0)
    lo = _support(kind, frame)
    hi = outer_limit(kind, frame, params)
    if hi <= lo:
        return QuadResult(0.0, 0.0, 0)

    def f(z):
        v = nearest.pdf(kind, z, frame, params)
        if v == 0.0:
            return 0.0
        v *= conditional_assoc(kind, z, frame, params)
        if weight is not None and v != 0.0:
            v *= weight(z)
        return v

    res = integrate_1d(f, lo, hi, abs_tol, rel_tol,
                       points=assoc_kinks(kind, frame, params))
    return QuadResult(res.value, res.abs_error, res.evaluations, hi)


@dataclass(frozen=True)
class AssociationResult:
    L: float
    N: float
    T: float
    T_direct: float
    abs_error: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.L, self.N, self.T)

    def __getitem__(self, kind) -> float:
        return getattr(self, BsKind(kind).value)


def association_probabilities(frame: UserFrame, params: NetworkParams) -> AssociationResult:
    """(A_L, A_N, A_T) with A_T from the complement; the direct A_T is a check."""
    rl = association_integral(BsKind.L, frame, params)
    rn = association_integral(BsKind.N, frame, params)
    rt = association_integral(BsKind.T, frame, params)
    a_t = 1.0 - rl.value - rn.value
    if abs(a_t - rt.value) > SIMPLEX_TOL:
        log.warning("association simplex off by %.3g at r_u = %g (direct A_T = %.6g, "
                    "complement %.6g)", abs(a_t - rt.value), frame.r_u, rt.value, a_t)
    return AssociationResult(rl.value, rn.value, a_t, rt.value,
                             rl.abs_error + rn.abs_error + rt.abs_error)
