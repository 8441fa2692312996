"""Coverage probability P(SINR > tau) for the typical user.

The conditional coverage given the serving class B at horizontal distance z
is a finite sum of Laplace-transform derivatives (Nakagami-m serving link).
The approximate form replaces the Gamma CDF by Alzer's bound, so it only
needs the transform itself at ``m_B`` points.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from . import association as assoc
from .geometry import UserFrame
from .interference import LaplaceEvaluator
from .numerics import derivative
from .params import ALL_KINDS, BsKind, NetworkParams, epsilon_2

log = logging.getLogger(__name__)

APPROXIMATE = "approximate"
EXACT = "exact"
METHODS = (APPROXIMATE, EXACT)
RANGE_TOL = 1e-9
TIGHT_SCALE = 1e-3


class CoverageRangeError(ArithmeticError):
    """A conditional coverage value left [0, 1] beyond quadrature noise."""


class UnsupportedOrderError(NotImplementedError):
    """Exact coverage needs derivatives of order >= 2 without the opt-in flag."""


def serving_threshold(kind: BsKind, z: float, params: NetworkParams) -> float:
    """m_B tau d^alpha_B / xi_B: the s at which the transform is evaluated."""
    kind = BsKind(kind)
    d = assoc.link_distance(kind, z, params)
    if d <= 0:
        raise ValueError(f"serving distance is zero for class {kind}")
    scaled = (d / params.pathloss_ref) ** params.alpha(kind)
    return params.m(kind) * params.tau * scaled / params.xi(kind)


def _checked(value: float, what: str, retry) -> float:
    if -RANGE_TOL <= value <= 1.0 + RANGE_TOL:
        return min(1.0, max(0.0, value))
    log.info("%s = %.3g outside [0, 1]; re-evaluating at tighter tolerance", what, value)
    value = retry()
    if -RANGE_TOL <= value <= 1.0 + RANGE_TOL:
        return min(1.0, max(0.0, value))
    raise CoverageRangeError(f"{what} = {value!r} outside [0, 1]")


def conditional_coverage_approx(kind: BsKind, z: float, frame: UserFrame,
                                params: NetworkParams, eps: float | None = None,
                                z_max: float = math.inf) -> float:
    """sum_k C(m,k) (-1)^(k+1) L_J(k eps nu) with eps = (m!)^(-1/m) by default.

    ``eps = 1`` gives the companion (lower) variant of the bound. ``z_max``
    limits interferers to that horizontal distance.
    """
    kind = BsKind(kind)
    m = params.m(kind)
    if eps is None:
        eps = epsilon_2(m)
    nu = serving_threshold(kind, z, params)

    def run(tight=False):
        ev = LaplaceEvaluator(kind, z, frame, params, TIGHT_SCALE if tight else 1.0, z_max)
        return sum(math.comb(m, k) * (-1) ** (k + 1) * ev(k * eps * nu) for k in range(1, m + 1))

    return _checked(run(), f"approximate coverage ({kind}, z = {z:g})", lambda: run(True))


def _nth_derivative(f, x: float, n: int, h: float) -> float:
    if n == 0:
        return f(x)
    if n == 1:
        return derivative(f, x, h)[0]
    return derivative(lambda y: _nth_derivative(f, y, n - 1, h), x, h)[0]


def conditional_coverage_exact(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams,
                               allow_high_order: bool = False,
                               z_max: float = math.inf) -> float:
    """sum_{k<m} (-mu)^k / k! L_J^(k)(mu) at mu = m tau d^alpha / xi.

    Derivatives come from Richardson-extrapolated central differences.
    Orders >= 2 (m >= 3) need ``allow_high_order``.
    """
    kind = BsKind(kind)
    m = params.m(kind)
    if m > 2 and not allow_high_order:
        raise UnsupportedOrderError(
            f"exact coverage for m_{kind} = {m} needs derivatives of order {m - 1}; "
            "pass allow_high_order=True (CLI: --allow-high-order)")
    mu = serving_threshold(kind, z, params)

    def run(tight=False):
        ev = LaplaceEvaluator(kind, z, frame, params, TIGHT_SCALE if tight else 1.0, z_max)
        total = ev(mu)
        for k in range(1, m):
            total += (-mu) ** k / math.factorial(k) * _nth_derivative(ev, mu, k, 0.2 * mu)
        return total

    return _checked(run(), f"exact coverage ({kind}, z = {z:g})", lambda: run(True))


def conditional_coverage(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams,
                         method: str = APPROXIMATE, eps: float | None = None,
                         allow_high_order: bool = False) -> float:
    if method == APPROXIMATE:
        return conditional_coverage_approx(kind, z, frame, params, eps)
    if method == EXACT:
        return conditional_coverage_exact(kind, z, frame, params, allow_high_order)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


@dataclass(frozen=True)
class CoverageResult:
    p_total: float
    per_kind: dict
    method: str
    abs_error: float
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.p_total


def coverage(frame: UserFrame, params: NetworkParams, method: str = APPROXIMATE,
             eps: float | None = None, allow_high_order: bool = False,
             abs_tol: float = 1e-8, rel_tol: float = 1e-7) -> CoverageResult:
    """sum over B of int f_B(z) a_B(z) P_c,B(z) dz."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    per_kind = {}
    err = 0.0
    diag = {"truncation_radius": {}, "evaluations": {}}
    for kind in ALL_KINDS:
        res = assoc.association_integral(
            kind, frame, params, abs_tol=abs_tol, rel_tol=rel_tol,
            weight=lambda z, kind=kind: conditional_coverage(
                kind, z, frame, params, method, eps, allow_high_order))
        per_kind[kind] = res.value
        err += res.abs_error
        diag["truncation_radius"][kind] = res.truncation_radius
        diag["evaluations"][kind] = res.evaluations
    total = sum(per_kind.values())
    if not -RANGE_TOL <= total <= 1.0 + abs_tol + RANGE_TOL:
        raise CoverageRangeError(f"coverage {total!r} outside [0, 1]")
    return CoverageResult(min(1.0, max(0.0, total)), per_kind, method, err, diag)
