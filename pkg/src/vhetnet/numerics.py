"""Quadrature, tail truncation, inverse-CDF tabulation and derivatives."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, interpolate

log = logging.getLogger(__name__)

ABS_TOL = 1e-9
REL_TOL = 1e-7
MAX_EVAL = 1_000_000
ENVELOPE_REL = 1e-12

# QUADPACK's qags uses 21 points per subinterval, qagi 15
_POINTS_PER_INTERVAL = 21


class QuadratureError(RuntimeError):
    """Tolerance not reached within the evaluation budget."""

    def __init__(self, message: str, best: "QuadResult"):
        super().__init__(f"{message} (best estimate {best.value:.12g}, "
                         f"error estimate {best.abs_error:.3g})")
        self.best = best


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error: float
    evaluations: int
    truncation_radius: float | None = None

    def __float__(self) -> float:
        return self.value


def _quad(f, a, b, abs_tol, rel_tol, points, max_eval):
    limit = max(50, max_eval // _POINTS_PER_INTERVAL)
    kw = {}
    if points is not None and math.isfinite(b):
        pts = sorted(p for p in points if a < p < b)
        if pts:
            kw["points"] = pts
    value, err, info, *rest = integrate.quad(
        f, a, b, epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1, **kw)
    ier = 0
    if rest:
        # quad only appends (message,) or (message, explain) on failure
        ier = 1
    return value, err, int(info["neval"]), ier, (rest[0] if rest else "")


def integrate_1d(f: Callable[[float], float], a: float, b: float,
                 abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL,
                 points: Sequence[float] | None = None,
                 envelope: Callable[[float], float] | None = None,
                 max_eval: int = MAX_EVAL) -> QuadResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    ``b`` may be ``inf``. With an ``envelope`` the infinite range is cut where
    the envelope drops below ``1e-12`` of its peak (see :func:`envelope_radius`);
    without one, the tail beyond the last breakpoint is integrated on the
    mapped infinite interval.
    """
    if b < a:
        raise ValueError(f"integration limits reversed: [{a}, {b}]")
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    radius = None
    if math.isinf(b) and envelope is not None:
        radius = envelope_radius(envelope, a)
        b = radius
        log.debug("tail truncated at %.6g", radius)
    pieces = []
    if math.isinf(b):
        split = max([a] + [p for p in (points or ()) if math.isfinite(p)])
        if split > a:
            pieces.append((a, split, points))
        pieces.append((split, math.inf, None))
    else:
        pieces.append((a, b, points))
    value = err = 0.0
    neval = 0
    failure = ""
    for lo, hi, pts in pieces:
        v, e, n, ier, msg = _quad(f, lo, hi, abs_tol, rel_tol, pts, max_eval - neval)
        value += v
        err += e
        neval += n
        if ier and e > max(abs_tol, rel_tol * abs(v)):
            failure = msg.strip().splitlines()[0] if msg else "quadrature failed"
    result = QuadResult(value, err, neval, radius)
    if failure:
        raise QuadratureError(failure, result)
    return result


def envelope_radius(envelope: Callable[[float], float], start: float,
                    rel: float = ENVELOPE_REL, peak: float | None = None) -> float:
    """Smallest radius beyond ``start`` where ``envelope`` < ``rel * peak``.

    ``envelope`` must be non-increasing past its peak. The peak is located on
    a doubling grid when not given. Tightening ``rel`` never shrinks the
    returned radius.
    """
    step = max(1.0, abs(start))
    if peak is None:
        grid = start + step * np.concatenate(([0.0], 2.0 ** np.arange(-6, 12)))
        peak = max(envelope(float(x)) for x in grid)
    if peak <= 0:
        return start
    threshold = rel * peak
    hi = start + step
    while envelope(hi) >= threshold:
        hi = start + 2.0 * (hi - start)
        if hi - start > 1e12:
            raise QuadratureError("envelope does not decay", QuadResult(math.nan, math.inf, 0))
    lo = start
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if envelope(mid) >= threshold:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9 * max(1.0, hi):
            break
    return hi


def gaussian_tail_radius(center: float, sigma: float, rel: float = ENVELOPE_REL) -> float:
    """Radius past which exp(-(r - center)^2 / (2 sigma^2)) < rel."""
    return center + sigma * math.sqrt(2.0 * math.log(1.0 / rel))


def integrate_2d_polar(g: Callable[[float, float], float],
                       beta_lo: float | Callable[[float], float],
                       beta_hi: float | Callable[[float], float],
                       z_lo: float, z_hi: float,
                       abs_tol: float = ABS_TOL, rel_tol: float = REL_TOL,
                       points: Sequence[float] | None = None,
                       max_eval: int = MAX_EVAL) -> QuadResult:
    """Nested integral of ``g(beta, z)``: inner over beta, outer over z.

    The beta limits may be functions of ``z``.
    """
    lo_f = beta_lo if callable(beta_lo) else (lambda z, c=beta_lo: c)
    hi_f = beta_hi if callable(beta_hi) else (lambda z, c=beta_hi: c)
    inner_err = 0.0
    inner_eval = 0

    def outer(z):
        nonlocal inner_err, inner_eval
        b0, b1 = lo_f(z), hi_f(z)
        if b1 <= b0:
            return 0.0
        r = integrate_1d(lambda b: g(b, z), b0, b1, abs_tol * 1e-2, rel_tol * 1e-2,
                         max_eval=max_eval)
        inner_err = max(inner_err, r.abs_error)
        inner_eval += r.evaluations
        return r.value

    r = integrate_1d(outer, z_lo, z_hi, abs_tol, rel_tol, points=points, max_eval=max_eval)
    width = (z_hi - z_lo) if math.isfinite(z_hi) else 0.0
    return QuadResult(r.value, r.abs_error + inner_err * width, r.evaluations + inner_eval,
                      r.truncation_radius)


# -- inverse-CDF tabulation -----------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _cell_integrals(pdf, x0, x1):
    """Gauss-Legendre integrals of ``pdf`` over cells [x0[i], x1[i]]."""
    half = 0.5 * (x1 - x0)
    mid = 0.5 * (x1 + x0)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    vals = np.asarray(pdf(nodes), dtype=float)
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ValueError("pdf must be finite and non-negative")
    return half * (vals @ _GL_WEIGHTS)


class InverseCDF:
    """Monotone interpolant of the quantile function of a tabulated pdf."""

    def __init__(self, x, u, cdf_at):
        self._interp = interpolate.PchipInterpolator(u, x, extrapolate=False)
        self._x = x
        self._u = u
        self._cdf_at = cdf_at
        self.max_error = math.nan
        # guide table: cell index at the left edge of each of G equal u-bins
        self._guide_n = 4 * u.size
        edges = np.arange(self._guide_n) / self._guide_n
        self._guide = np.clip(np.searchsorted(u, edges, side="right") - 1, 0, u.size - 2)

    def _locate(self, u):
        """Index k with u[k] <= u < u[k+1], via the guide table."""
        brk = self._interp.x
        last = brk.size - 2
        k = self._guide[np.minimum((u * self._guide_n).astype(np.int64), self._guide_n - 1)]
        for _ in range(3):
            step = (k < last) & (brk[np.minimum(k + 1, last + 1)] <= u)
            if not step.any():
                return k
            k = k + step
        # bins crowded with knots (far tail): fall back to bisection there
        todo = np.flatnonzero((k < last) & (brk[np.minimum(k + 1, last + 1)] <= u))
        k[todo] = np.clip(np.searchsorted(brk, u[todo], side="right") - 1, 0, last)
        return k

    def __call__(self, u):
        # direct piecewise-cubic evaluation; PPoly.__call__ is slow on large arrays
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        brk, c = self._interp.x, self._interp.c
        k = self._locate(u)
        t = u - brk[k]
        out = ((c[0, k] * t + c[1, k]) * t + c[2, k]) * t + c[3, k]
        return out if out.ndim else float(out)

    def cdf(self, x):
        return self._cdf_at(np.asarray(x, dtype=float))


def tabulated_inverse_cdf(pdf: Callable[[np.ndarray], np.ndarray], lo: float, hi: float,
                          tol: float = 1e-8, cells: int = 256,
                          max_cells: int = 1 << 20) -> InverseCDF:
    """Quantile function of ``pdf`` (vectorized, unnormalized) on ``[lo, hi]``.

    The grid is doubled until ``|F(Q(u)) - u| < tol`` at every cell midpoint
    in probability, where ``F`` is recomputed by quadrature.
    """
    if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
        raise ValueError(f"bad domain [{lo}, {hi}]")
    while True:
        x = np.linspace(lo, hi, cells + 1)
        mass = _cell_integrals(pdf, x[:-1], x[1:])
        total = mass.sum()
        if not (total > 0 and math.isfinite(total)):
            raise ValueError("pdf is not normalizable on the domain")
        u = np.concatenate(([0.0], np.cumsum(mass))) / total
        u[-1] = 1.0
        keep = np.concatenate(([True], np.diff(u) > 0))
        xs, us = x[keep], u[keep]

        def cdf_at(q, xs=xs, us=us, total=total):
            q = np.clip(q, lo, hi)
            k = np.clip(np.searchsorted(xs, q, side="right") - 1, 0, len(xs) - 1)
            flat = np.atleast_1d(q)
            kk = np.atleast_1d(k)
            part = _cell_integrals(pdf, xs[kk], flat) / total
            return (us[kk] + part).reshape(np.shape(q))

        inv = InverseCDF(xs, us, cdf_at)
        probe = 0.5 * (us[:-1] + us[1:])
        err = float(np.max(np.abs(cdf_at(inv(probe)) - probe)))
        inv.max_error = err
        if err < tol:
            return inv
        if cells >= max_cells:
            raise ValueError(f"inverse CDF tolerance {tol:g} not reached (error {err:.3g})")
        cells *= 2


# -- derivatives ------------------------------------------------------------------

def derivative(f: Callable[[float], float], x: float, h: float,
               rel_tol: float = 1e-6, max_steps: int = 10) -> tuple[float, float]:
    """Central-difference derivative with Richardson extrapolation (Ridders).

    Returns ``(value, error_estimate)``. ``h`` is the initial step; it is
    shrunk by 1.4 per level.
    """
    con, con2 = 1.4, 1.96
    table = np.zeros((max_steps, max_steps))
    table[0, 0] = (f(x + h) - f(x - h)) / (2.0 * h)
    best, err = table[0, 0], math.inf
    for i in range(1, max_steps):
        h /= con
        table[0, i] = (f(x + h) - f(x - h)) / (2.0 * h)
        fac = con2
        for j in range(1, i + 1):
            table[j, i] = (table[j - 1, i] * fac - table[j - 1, i - 1]) / (fac - 1.0)
            fac *= con2
            e = max(abs(table[j, i] - table[j - 1, i]), abs(table[j, i] - table[j - 1, i - 1]))
            if e <= err:
                err, best = e, table[j, i]
        if abs(table[i, i] - table[i - 1, i - 1]) >= 2.0 * err:
            break
        if err <= rel_tol * abs(best):
            break
    return float(best), float(err)


def central_difference(f: Callable[[float], float], x: float, h: float) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)
