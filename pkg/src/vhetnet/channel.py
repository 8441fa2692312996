"""LoS probability, path loss and Nakagami-m fading."""

from __future__ import annotations

import math

import numpy as np

from .params import BsKind, NetworkParams

LinkKind = BsKind

_RAD2DEG = 180.0 / math.pi


def los_probability(z, params: NetworkParams):
    """s-curve LoS probability at horizontal distance ``z`` (km).

    The elevation angle is ``atan(h / z)`` in degrees; ``z = 0`` is 90 degrees.
    """
    a, b, h = params.s_a, params.s_b, params.h
    if np.ndim(z) == 0:
        theta = _RAD2DEG * math.atan2(h, z)
        return 1.0 / (1.0 + a * math.exp(-b * (theta - a)))
    theta = _RAD2DEG * np.arctan2(h, np.asarray(z, dtype=float))
    return 1.0 / (1.0 + a * np.exp(-b * (theta - a)))


def mark_probability(kind: BsKind, z, params: NetworkParams):
    """Probability that an ABS at horizontal distance ``z`` has mark ``kind``."""
    p = los_probability(z, params)
    return p if kind is BsKind.L else 1.0 - p


def path_gain(kind: BsKind, dist, params: NetworkParams):
    """``(dist / pathloss_ref) ** -alpha`` for a link of class ``kind``."""
    alpha = params.alpha(kind)
    if np.ndim(dist) == 0:
        if not dist > 0:
            raise ValueError(f"dist = {dist}: link distance must be positive")
        return (dist / params.pathloss_ref) ** -alpha
    dist = np.asarray(dist, dtype=float)
    if np.any(dist <= 0):
        raise ValueError("link distance must be positive")
    return (dist / params.pathloss_ref) ** -alpha


def received_power(kind: BsKind, gain, dist, params: NetworkParams):
    """Received power in watts: xi_Q * g * (dist / ref)^-alpha_Q.

    ``dist`` is Euclidean (at least ``h`` for ABS links).
    """
    return params.xi(kind) * gain * path_gain(kind, dist, params)


def sample_fading(kind: BsKind, params: NetworkParams, rng: np.random.Generator, size=None):
    """Gamma(m, 1/m) power gains as a mean of ``m`` unit exponentials."""
    m = params.m(kind)
    if size is None:
        return float(rng.standard_exponential(m).sum() / m)
    shape = (size,) if np.ndim(size) == 0 else tuple(size)
    if m == 1:
        return rng.standard_exponential(shape)
    return rng.standard_exponential(shape + (m,)).sum(axis=-1) / m
