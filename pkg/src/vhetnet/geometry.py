"""Exclusion-disk geometry in the user-centred polar frame.

Angles ``beta`` are measured at the user from the direction of the town
centre, so a point at ``(beta, z)`` lies at horizontal distance
``sqrt(r_u^2 + z^2 - 2 z r_u cos(beta))`` from the centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

_CLAMP_TOL = 1e-12


class GeometryError(ValueError):
    """Argument outside the domain of a boundary function."""


class RegionId(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"
    VI = "VI"
    VII = "VII"


OUTER_REGIONS = (RegionId.I, RegionId.II, RegionId.III, RegionId.IV)
INNER_REGIONS = (RegionId.V, RegionId.VI, RegionId.VII)


@dataclass(frozen=True)
class UserFrame:
    r_u: float
    r_e: float

    def __post_init__(self):
        if not (self.r_u >= 0 and self.r_e >= 0):
            raise GeometryError(f"r_u = {self.r_u}, r_e = {self.r_e}: must be non-negative")

    @classmethod
    def from_params(cls, r_u: float, params) -> "UserFrame":
        return cls(float(r_u), float(params.r_e))

    @property
    def outer(self) -> bool:
        """User outside the exclusion disk (ties go to the inner case)."""
        return self.r_u > self.r_e and self.r_e > 0


def _acos(c: float) -> float:
    if c > 1.0 + _CLAMP_TOL or c < -1.0 - _CLAMP_TOL:
        raise GeometryError(f"arccos argument {c} outside [-1, 1]")
    return math.acos(min(1.0, max(-1.0, c)))


def beta_star(frame: UserFrame) -> float:
    """Half-angle under which the user sees the exclusion disk."""
    if not frame.outer:
        raise GeometryError("beta* is only defined for r_u > r_e > 0")
    return math.asin(min(1.0, frame.r_e / frame.r_u))


def _chord_disc(beta: float, frame: UserFrame) -> float:
    s = frame.r_u * math.sin(beta)
    disc = frame.r_e * frame.r_e - s * s
    if disc < 0:
        if disc < -_CLAMP_TOL * max(1.0, frame.r_e * frame.r_e):
            raise GeometryError(f"|beta| = {abs(beta)} exceeds beta* = {beta_star(frame)}")
        disc = 0.0
    return math.sqrt(disc)


def z_X(beta: float, frame: UserFrame) -> float:
    """Far intersection of the ray at angle ``beta`` with the disk boundary."""
    if frame.outer and abs(beta) > beta_star(frame) + _CLAMP_TOL:
        raise GeometryError(f"|beta| = {abs(beta)} exceeds beta* = {beta_star(frame)}")
    return max(0.0, frame.r_u * math.cos(beta) + _chord_disc(beta, frame))


def z_m(beta: float, frame: UserFrame) -> float:
    """Near intersection of the ray with the disk; 0 when the user is inside."""
    if not frame.outer:
        return 0.0
    if abs(beta) > beta_star(frame) + _CLAMP_TOL:
        raise GeometryError(f"|beta| = {abs(beta)} exceeds beta* = {beta_star(frame)}")
    return max(0.0, frame.r_u * math.cos(beta) - _chord_disc(beta, frame))


def tangent_length(frame: UserFrame) -> float:
    """z_X(beta*) = sqrt(r_u^2 - r_e^2)."""
    return math.sqrt(max(0.0, frame.r_u ** 2 - frame.r_e ** 2))


def _check_intersection(z: float, frame: UserFrame):
    lo = abs(frame.r_u - frame.r_e)
    hi = frame.r_u + frame.r_e
    tol = _CLAMP_TOL * max(1.0, hi)
    if not (z > 0 and frame.r_u > 0 and lo - tol <= z <= hi + tol):
        raise GeometryError(f"circle of radius {z} does not cross the disk boundary "
                            f"(needs {lo} <= z <= {hi})")


def beta_i(z: float, frame: UserFrame) -> float:
    """Angle at which the circle of radius ``z`` meets the disk boundary."""
    _check_intersection(z, frame)
    r_u, r_e = frame.r_u, frame.r_e
    return _acos((z * z + r_u * r_u - r_e * r_e) / (2.0 * z * r_u))


def dbeta_i_dz(z: float, frame: UserFrame) -> float:
    _check_intersection(z, frame)
    r_u, r_e = frame.r_u, frame.r_e
    q = z * z + r_u * r_u - r_e * r_e
    disc = 4.0 * z * z * r_u * r_u - q * q
    if disc <= 0:
        raise GeometryError(f"d(beta_i)/dz is singular at z = {z}")
    return (r_u * r_u - z * z - r_e * r_e) / (z * math.sqrt(disc))


def inside_angle(z: float, frame: UserFrame) -> float:
    """Angular measure of the circle of radius ``z`` lying inside the disk.

    Equals ``2 beta_i(z)`` where the circle crosses the boundary, ``2 pi``
    when it is entirely inside and 0 when entirely outside.
    """
    r_u, r_e = frame.r_u, frame.r_e
    if r_e == 0:
        return 0.0
    if z + r_u <= r_e:
        return 2.0 * math.pi
    if z >= r_u + r_e or z <= r_u - r_e:
        return 0.0
    # here |r_u - r_e| < z < r_u + r_e, so 2 z r_u cannot underflow to 0
    c = (z * z + r_u * r_u - r_e * r_e) / (2.0 * z * r_u)
    return 2.0 * math.acos(min(1.0, max(-1.0, c)))


def region_boundaries(frame: UserFrame) -> tuple[float, ...]:
    """Finite, positive region boundaries in increasing order."""
    if frame.r_e == 0:
        return ()
    if frame.outer:
        b = (frame.r_u - frame.r_e, tangent_length(frame), frame.r_u + frame.r_e)
    else:
        b = (frame.r_e - frame.r_u, frame.r_e + frame.r_u)
    return tuple(x for x in b if x > 0)


def classify_region(z: float, frame: UserFrame) -> RegionId:
    """Region hosting the circle of radius ``z``; intervals are left-open, right-closed."""
    if z < 0:
        raise GeometryError(f"z = {z}: must be non-negative")
    r_u, r_e = frame.r_u, frame.r_e
    if r_e == 0:
        return RegionId.VII
    if frame.outer:
        if z <= r_u - r_e:
            return RegionId.I
        if z <= tangent_length(frame):
            return RegionId.II
        if z <= r_u + r_e:
            return RegionId.III
        return RegionId.IV
    if z <= r_e - r_u:
        return RegionId.V
    if z <= r_e + r_u:
        return RegionId.VI
    return RegionId.VII
