"""Monte Carlo oracle: sample network snapshots and measure coverage directly.

Realizations are simulated in fixed-size blocks. Block ``b`` draws from a
Philox stream keyed by ``(seed, b)``, so the output depends only on the seed
and ``n``, never on how blocks are spread over worker processes.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .association import interferer_floor, link_distance
from .channel import los_probability
from .geometry import UserFrame
from .numerics import InverseCDF, gaussian_tail_radius, tabulated_inverse_cdf
from .params import ALL_KINDS, BsKind, NetworkParams, expected_tbs_count, gaussian_tbs_profile

log = logging.getLogger(__name__)

BLOCK_SIZE = 500
DEFAULT_R_MAX = 60.0
WORKERS_ENV = "VHETNET_WORKERS"
KIND_CODE = {BsKind.T: 0, BsKind.L: 1, BsKind.N: 2}
CODE_KIND = {v: k for k, v in KIND_CODE.items()}
NO_SERVER = -1
# relative slack when checking the exclusion distances against float rounding
_EXCLUSION_SLACK = 1e-9


def rng_for_block(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def default_r_max(r_u: float) -> float:
    return max(DEFAULT_R_MAX, r_u + 30.0)


def worker_count(workers: int | None = None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1") or 1)
    return max(1, int(workers))


@dataclass(frozen=True)
class EstimateWithCI:
    mean: float
    half_width_95: float
    n_samples: int

    @classmethod
    def from_counts(cls, hits: int, n: int) -> "EstimateWithCI":
        if n < 1:
            raise ValueError("n must be at least 1")
        p = hits / n
        return cls(p, 1.96 * math.sqrt(p * (1.0 - p) / n), n)

    @property
    def std_error(self) -> float:
        return self.half_width_95 / 1.96

    def contains(self, value: float, sigmas: float = 1.96) -> bool:
        return abs(value - self.mean) <= sigmas * self.std_error


# -- samplers ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def radial_sampler(sigma_T2: float) -> InverseCDF:
    """Inverse CDF of the TBS radius law, proportional to r exp(-r^2 / (2 sigma^2))."""
    sigma = math.sqrt(sigma_T2)
    hi = gaussian_tail_radius(0.0, sigma, 1e-16)
    return tabulated_inverse_cdf(lambda r: r * np.exp(-r * r / (2.0 * sigma_T2)), 0.0, hi, tol=1e-8)


def _tbs_polar(params: NetworkParams, rng: np.random.Generator, size: int):
    """Counts per realization, then radii and angles of all TBSs."""
    lam = expected_tbs_count(params)
    counts = rng.poisson(lam, size) if lam > 0 else np.zeros(size, dtype=np.int64)
    total = int(counts.sum())
    radii = radial_sampler(params.sigma_T2)(rng.random(total)) if total else np.empty(0)
    theta = rng.uniform(-math.pi, math.pi, total)
    return counts, np.asarray(radii, dtype=float).reshape(-1), theta


def sample_tbs(params: NetworkParams, rng: np.random.Generator) -> np.ndarray:
    """One realization of the TBS process as an (n, 2) array in km."""
    _, r, t = _tbs_polar(params, rng, 1)
    return np.column_stack((r * np.cos(t), r * np.sin(t)))


def sample_tbs_thinning(params: NetworkParams, rng: np.random.Generator,
                        radius: float | None = None) -> np.ndarray:
    """Same law as :func:`sample_tbs` by thinning a dominating homogeneous process."""
    if radius is None:
        radius = gaussian_tail_radius(0.0, params.sigma_T, 1e-16)
    peak = params.lambda_T * gaussian_tbs_profile(0.0, params)
    n = rng.poisson(peak * math.pi * radius * radius)
    r = radius * np.sqrt(rng.random(n))
    t = rng.uniform(-math.pi, math.pi, n)
    keep = rng.random(n) < gaussian_tbs_profile(r, params) / gaussian_tbs_profile(0.0, params)
    return np.column_stack((r[keep] * np.cos(t[keep]), r[keep] * np.sin(t[keep])))


def _abs_polar(params: NetworkParams, rng: np.random.Generator, size: int, r_max: float):
    area = math.pi * (r_max * r_max - params.r_e * params.r_e)
    counts = rng.poisson(params.lambda_A * area, size) if params.lambda_A > 0 \
        else np.zeros(size, dtype=np.int64)
    total = int(counts.sum())
    r = np.sqrt(params.r_e ** 2 + rng.random(total) * (r_max * r_max - params.r_e ** 2))
    theta = rng.uniform(-math.pi, math.pi, total)
    return counts, r, theta


def _user_distance(r, theta, r_u):
    return np.sqrt(np.maximum(0.0, r * r + r_u * r_u - 2.0 * r * r_u * np.cos(theta)))


def sample_abs(frame: UserFrame, params: NetworkParams, rng: np.random.Generator,
               r_max: float = DEFAULT_R_MAX) -> tuple[np.ndarray, np.ndarray]:
    """ABSs on the annulus r_e < |y| < r_max with LoS marks seen from the user.

    Returns the (n, 2) horizontal positions and a boolean LoS mask.
    """
    if not r_max > params.r_e:
        raise ValueError(f"r_max = {r_max} must exceed r_e = {params.r_e}")
    _, r, t = _abs_polar(params, rng, 1, r_max)
    z = _user_distance(r, t, frame.r_u)
    los = rng.random(r.size) < los_probability(z, params)
    return np.column_stack((r * np.cos(t), r * np.sin(t))), los


@dataclass(frozen=True)
class Realization:
    """One network snapshot around a user at (r_u, 0)."""

    tbs_points: np.ndarray
    abs_points: np.ndarray
    abs_los: np.ndarray
    tbs_gain: np.ndarray
    abs_gain: np.ndarray
    stream: tuple = ()


def sample_realization(frame: UserFrame, params: NetworkParams, rng: np.random.Generator,
                       r_max: float | None = None) -> Realization:
    r_max = default_r_max(frame.r_u) if r_max is None else r_max
    tbs = sample_tbs(params, rng)
    pts, los = sample_abs(frame, params, rng, r_max)
    g_tbs = _gamma_gain(params.m_T, rng, tbs.shape[0])
    g_abs = _mark_gains(los, params, rng)
    return Realization(tbs, pts, los, g_tbs, g_abs)


# -- evaluation -------------------------------------------------------------------------

@dataclass
class BlockStats:
    """Per-realization outcomes of one block."""

    serving: np.ndarray      # kind code, or NO_SERVER
    serving_z: np.ndarray    # horizontal distance of the server (nan if none)
    covered: np.ndarray
    sinr: np.ndarray
    violations: int = 0
    nearest: dict = field(default_factory=dict)


def _starts(ids):
    return np.flatnonzero(np.r_[True, ids[1:] != ids[:-1]]) if ids.size else ids


def _group_max(values, ids, size):
    """Per-group max and index of its first occurrence; ``ids`` sorted."""
    best = np.full(size, -np.inf)
    where = np.full(size, -1, dtype=np.int64)
    if values.size == 0:
        return best, where
    st = _starts(ids)
    best[ids[st]] = np.maximum.reduceat(values, st)
    hit = np.flatnonzero(values == best[ids])
    gid, first = np.unique(ids[hit], return_index=True)
    where[gid] = hit[first]
    return best, where


def _group_min(values, ids, size):
    out = np.full(size, np.inf)
    if values.size:
        st = _starts(ids)
        out[ids[st]] = np.minimum.reduceat(values, st)
    return out


def _kind_arrays(params):
    kinds = (BsKind.T, BsKind.L, BsKind.N)
    xi = np.array([params.xi(k) for k in kinds])
    alpha = np.array([params.alpha(k) for k in kinds])
    return xi, alpha


def _exclusion_threshold(b_codes, c_code, d_serv, params):
    """Vectorized minimum interferer distance d_B^C for serving distance ``d_serv``."""
    xi, alpha = _kind_arrays(params)
    ref = params.pathloss_ref
    a_b, a_c = alpha[b_codes], alpha[c_code]
    d = ref * (xi[c_code] / xi[b_codes]) ** (1.0 / a_c) * (d_serv / ref) ** (a_b / a_c)
    return np.maximum(params.h, d) if c_code > 0 else d


def evaluate_points(size: int, params: NetworkParams, t_ids, t_z, t_gain, a_ids, a_z, a_los,
                    a_gain, record_nearest: bool = False) -> BlockStats:
    """Association, SINR and coverage for ``size`` snapshots.

    TBS and ABS points come as separate flat arrays, each sorted by
    realization id. Ties in mean power go to the TBS.
    """
    xi, alpha = _kind_arrays(params)
    ref2 = params.pathloss_ref ** 2
    h2 = params.h * params.h
    avg_t = xi[0] * (t_z * t_z / ref2) ** (-0.5 * alpha[0])
    d2_a = a_z * a_z + h2
    code_a = np.where(a_los, 1, 2)
    avg_a = xi[code_a] * (d2_a / ref2) ** (-0.5 * alpha[code_a])
    inst_t = avg_t * t_gain
    inst_a = avg_a * a_gain
    best_t, srv_t = _group_max(avg_t, t_ids, size)
    best_a, srv_a = _group_max(avg_a, a_ids, size)
    total = (np.bincount(t_ids, weights=inst_t, minlength=size)
             + np.bincount(a_ids, weights=inst_a, minlength=size))

    use_t = (srv_t >= 0) & (best_t >= best_a)
    use_a = (srv_a >= 0) & ~use_t
    serving = np.full(size, NO_SERVER, dtype=np.int64)
    serving[use_t] = 0
    serving[use_a] = code_a[srv_a[use_a]]
    s_pow = np.zeros(size)
    s_pow[use_t] = inst_t[srv_t[use_t]]
    s_pow[use_a] = inst_a[srv_a[use_a]]
    serving_z = np.full(size, np.nan)
    serving_z[use_t] = t_z[srv_t[use_t]]
    serving_z[use_a] = a_z[srv_a[use_a]]
    sinr = s_pow / (params.sigma_n2 + np.maximum(0.0, total - s_pow))
    covered = (serving != NO_SERVER) & (sinr > params.tau)

    # Every other point must sit beyond the minimum interferer distance of
    # its class; checking the nearest point of each class suffices.
    nearest = {BsKind.T: _group_min(t_z, t_ids, size),
               BsKind.L: _group_min(a_z[a_los], a_ids[a_los], size),
               BsKind.N: _group_min(a_z[~a_los], a_ids[~a_los], size)}
    has = serving != NO_SERVER
    d_serv = np.where(serving == 0, serving_z, np.sqrt(serving_z ** 2 + h2))[has]
    violations = 0
    for kind, zc in nearest.items():
        code = KIND_CODE[kind]
        dc = zc[has] if code == 0 else np.sqrt(zc[has] ** 2 + h2)
        thr = _exclusion_threshold(serving[has], code, d_serv, params)
        bad = (dc < thr * (1.0 - _EXCLUSION_SLACK)) & (serving[has] != code)
        violations += int(np.count_nonzero(bad))
    return BlockStats(serving, serving_z, covered, sinr, violations,
                      nearest if record_nearest else {})


def evaluate_realization(real: Realization, frame: UserFrame, params: NetworkParams) -> BlockStats:
    """Outcome of a single snapshot (arrays of length 1)."""
    r_u = frame.r_u
    t = np.asarray(real.tbs_points, dtype=float).reshape(-1, 2)
    a = np.asarray(real.abs_points, dtype=float).reshape(-1, 2)
    zt = np.hypot(t[:, 0] - r_u, t[:, 1])
    za = np.hypot(a[:, 0] - r_u, a[:, 1])
    return evaluate_points(1, params, np.zeros(zt.size, dtype=np.int64), zt,
                           np.asarray(real.tbs_gain, dtype=float),
                           np.zeros(za.size, dtype=np.int64), za,
                           np.asarray(real.abs_los, dtype=bool),
                           np.asarray(real.abs_gain, dtype=float))


def simulate_once(frame: UserFrame, params: NetworkParams, rng: np.random.Generator,
                  r_max: float | None = None) -> tuple[bool, BsKind | None]:
    """(covered, serving class) for one fresh snapshot."""
    out = evaluate_realization(sample_realization(frame, params, rng, r_max), frame, params)
    code = int(out.serving[0])
    if code == NO_SERVER:
        log.debug("realization without any BS")
        return False, None
    return bool(out.covered[0]), CODE_KIND[code]


def _gamma_gain(m: int, rng: np.random.Generator, n: int) -> np.ndarray:
    if m == 1:
        return rng.standard_exponential(n)
    return rng.standard_gamma(m, n) / m


def _mark_gains(los: np.ndarray, params: NetworkParams, rng: np.random.Generator) -> np.ndarray:
    g = np.empty(los.size)
    n_los = int(np.count_nonzero(los))
    g[los] = _gamma_gain(params.m_L, rng, n_los)
    g[~los] = _gamma_gain(params.m_N, rng, los.size - n_los)
    return g


def simulate_block(frame: UserFrame, params: NetworkParams, rng: np.random.Generator, size: int,
                   r_max: float | None = None, record_nearest: bool = False) -> BlockStats:
    """``size`` independent snapshots, vectorized."""
    r_max = default_r_max(frame.r_u) if r_max is None else r_max
    r_u = frame.r_u
    n_t, r_t, th_t = _tbs_polar(params, rng, size)
    n_a, r_a, th_a = _abs_polar(params, rng, size, r_max)
    z_t = _user_distance(r_t, th_t, r_u)
    z_a = _user_distance(r_a, th_a, r_u)
    los = rng.random(z_a.size) < los_probability(z_a, params)
    g_t = _gamma_gain(params.m_T, rng, z_t.size)
    g_a = _mark_gains(los, params, rng)
    ids = np.arange(size)
    return evaluate_points(size, params, np.repeat(ids, n_t), z_t, g_t, np.repeat(ids, n_a),
                           z_a, los, g_a, record_nearest)


# -- estimators -------------------------------------------------------------------------

def _blocks(n: int, block: int = BLOCK_SIZE):
    return [(b, min(block, n - b * block)) for b in range((n + block - 1) // block)]


def _run_block(args):
    frame, params, seed, b, size, r_max = args
    st = simulate_block(frame, params, rng_for_block(seed, b), size, r_max)
    counts = np.bincount(st.serving + 1, minlength=4)  # NO_SERVER, T, L, N
    return (int(st.covered.sum()), tuple(int(c) for c in counts), st.violations)


@dataclass(frozen=True)
class MonteCarloEstimate:
    coverage: EstimateWithCI
    association: dict
    n: int
    no_server: int
    violations: int


def estimate(frame: UserFrame, params: NetworkParams, n: int, seed: int,
             workers: int | None = None, r_max: float | None = None) -> MonteCarloEstimate:
    """Coverage and serving-class frequencies over ``n`` snapshots."""
    if n < 1:
        raise ValueError("n must be at least 1")
    jobs = [(frame, params, seed, b, size, r_max) for b, size in _blocks(n)]
    workers = worker_count(workers)
    if workers == 1 or len(jobs) == 1:
        results = [_run_block(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_block, jobs))
    covered = sum(r[0] for r in results)
    counts = np.sum([r[1] for r in results], axis=0)
    violations = sum(r[2] for r in results)
    if counts[0]:
        log.info("%d of %d realizations had no BS", counts[0], n)
    assoc = {kind: EstimateWithCI.from_counts(int(counts[KIND_CODE[kind] + 1]), n)
             for kind in ALL_KINDS}
    return MonteCarloEstimate(EstimateWithCI.from_counts(covered, n), assoc, n, int(counts[0]),
                              violations)


def nearest_distance_samples(frame: UserFrame, params: NetworkParams, n: int, seed: int,
                             r_max: float | None = None) -> dict:
    """Horizontal distance to the nearest BS of each class (inf if none)."""
    out = {k: [] for k in ALL_KINDS}
    for b, size in _blocks(n):
        st = simulate_block(frame, params, rng_for_block(seed, b), size, r_max,
                            record_nearest=True)
        for k in ALL_KINDS:
            out[k].append(st.nearest[k])
    return {k: np.concatenate(v) for k, v in out.items()}


# -- conditional oracles ----------------------------------------------------------------

def sample_class_ring(kind: BsKind, lo: float, hi: float, frame: UserFrame,
                      params: NetworkParams, rng: np.random.Generator, size: int):
    """Points of class ``kind`` at horizontal distance in (lo, hi) from the user.

    Returns (ids, z) for ``size`` independent realizations, sorted by id.
    """
    kind = BsKind(kind)
    if kind is BsKind.T:
        counts, r, t = _tbs_polar(params, rng, size)
        ids = np.repeat(np.arange(size), counts)
        z = _user_distance(r, t, frame.r_u)
        keep = (z > lo) & (z < hi)
        return ids[keep], z[keep]
    if hi <= lo:
        # floor beyond the window: the ring is empty
        return np.zeros(0, dtype=np.intp), np.zeros(0)
    area = math.pi * (hi * hi - lo * lo)
    counts = rng.poisson(params.lambda_A * area, size)
    total = int(counts.sum())
    ids = np.repeat(np.arange(size), counts)
    z = np.sqrt(lo * lo + rng.random(total) * (hi * hi - lo * lo))
    phi = rng.uniform(-math.pi, math.pi, total)
    # distance from the centre of a point at (z, phi) around the user
    r2 = frame.r_u ** 2 + z * z + 2.0 * frame.r_u * z * np.cos(phi)
    mark = rng.random(total) < los_probability(z, params)
    keep = (r2 >= params.r_e ** 2) & (mark if kind is BsKind.L else ~mark)
    return ids[keep], z[keep]


def _interference(kind, ids, z, params, rng, size):
    kind = BsKind(kind)
    d = z if kind is BsKind.T else np.sqrt(z * z + params.h * params.h)
    power = params.xi(kind) * (d / params.pathloss_ref) ** -params.alpha(kind)
    g = _gamma_gain(params.m(kind), rng, z.size)
    return np.bincount(ids, weights=power * g, minlength=size)


def laplace_mc(s_values, kind: BsKind, serving: BsKind, z: float, frame: UserFrame,
               params: NetworkParams, n: int, seed: int, z_max: float = 60.0):
    """Sample mean and standard error of exp(-s I_kind) for each s.

    Interferers of ``kind`` lie beyond the serving floor and within ``z_max``
    of the user.
    """
    kind = BsKind(kind)
    lo = interferer_floor(serving, kind, z, params)
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    mean_y, m2, seen = np.zeros(s.size), np.zeros(s.size), 0
    for b, size in _blocks(n):
        rng = rng_for_block(seed, b)
        ids, zz = sample_class_ring(kind, lo, z_max, frame, params, rng, size)
        i = _interference(kind, ids, zz, params, rng, size)
        # 1 - exp(-sI) keeps full precision when the transform is close to 1;
        # centred block sums merged pairwise avoid cancellation at either end
        y = -np.expm1(-np.outer(i, s))
        bm = y.mean(axis=0)
        bm2 = ((y - bm) ** 2).sum(axis=0)
        delta = bm - mean_y
        total = seen + size
        mean_y = mean_y + delta * size / total
        m2 = m2 + bm2 + delta * delta * seen * size / total
        seen = total
    var = m2 / max(1, n - 1)
    return 1.0 - mean_y, np.sqrt(var / n)


def conditional_assoc_mc(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams,
                         n: int, seed: int) -> EstimateWithCI:
    """P(no other-class BS inside its floor) for a class-``kind`` server at ``z``."""
    kind = BsKind(kind)
    ok = np.ones(n, dtype=bool)
    for b, size in _blocks(n):
        rng = rng_for_block(seed, b)
        sl = slice(b * BLOCK_SIZE, b * BLOCK_SIZE + size)
        for other in ALL_KINDS:
            if other is kind:
                continue
            y = interferer_floor(kind, other, z, params)
            ids, _ = sample_class_ring(other, 0.0, y, frame, params, rng, size)
            hit = np.zeros(size, dtype=bool)
            hit[ids] = True
            ok[sl] &= ~hit
    return EstimateWithCI.from_counts(int(ok.sum()), n)


def conditional_coverage_mc(kind: BsKind, z: float, frame: UserFrame, params: NetworkParams,
                            n: int, seed: int, z_max: float = 60.0) -> EstimateWithCI:
    """P(SINR > tau) given a class-``kind`` server at horizontal distance ``z``."""
    kind = BsKind(kind)
    d = link_distance(kind, z, params)
    m = params.m(kind)
    hits = 0
    for b, size in _blocks(n):
        rng = rng_for_block(seed, b)
        total = np.zeros(size)
        for other in ALL_KINDS:
            lo = interferer_floor(kind, other, z, params)
            ids, zz = sample_class_ring(other, lo, z_max, frame, params, rng, size)
            total += _interference(other, ids, zz, params, rng, size)
        g = rng.standard_gamma(m, size) / m
        signal = params.xi(kind) * (d / params.pathloss_ref) ** -params.alpha(kind) * g
        hits += int(np.count_nonzero(signal / (params.sigma_n2 + total) > params.tau))
    return EstimateWithCI.from_counts(hits, n)
