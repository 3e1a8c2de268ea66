"""Exact stochastic backend: event-driven sampling of the jump process.

Each trajectory is an exact realization of the continuous-time chain: at
occupancy N the total event rate is Lambda(N) = R + gamma*N + sum_ch
beta*C(N, rho); waiting times are Exponential(Lambda) and the event is
chosen with probability proportional to its rate. No timestep, no
truncation, no discretization bias.

Reproducibility contract: trajectory i draws all of its randomness from a
counter-based Philox stream keyed by (root_seed, i). Within a lane the
consumption order is fixed: one uniform for the initial occupancy (only
when the initial law is a distribution), then two uniforms per event step
(waiting time first, event choice second), drawn through a per-lane buffer
of PHILOX_BUFFER values. Trajectories are processed in lock-step chunks of
CHUNK lanes; chunk boundaries and thread count never influence any draw,
so identical (params, p0, t_samples, n_traj, seed) give bit-identical
samples at any parallelism.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .master import StateDistribution

PHILOX_BUFFER = 1024
CHUNK = 4096
BOOTSTRAP_STREAM_INDEX = 2**64 - 1  # lane index reserved for the bootstrap resampler
BOOTSTRAP_RESAMPLES = 1000


@dataclass(frozen=True)
class EnsembleMoments:
    """Across-trajectory moment estimates at one sample time.

    Standard errors: se_mean is the usual sqrt(s^2/n); se_variance comes
    from the fourth central moment; se_fano propagates both through the
    ratio F = s^2/mean by the delta method including their covariance
    (the third central moment), since F is a ratio estimator and naive
    errors on it are biased.
    """

    time: float
    mean: float
    variance: float
    fano: float
    se_mean: float
    se_variance: float
    se_fano: float
    n_traj: int


@dataclass(frozen=True)
class TrajectoryEnsemble:
    seed: int
    t_samples: np.ndarray
    samples: np.ndarray  # (n_traj, n_times) occupancies
    est_moments: tuple

    @property
    def n_traj(self):
        return self.samples.shape[0]


def _lane_rng(seed, lane):
    return np.random.Generator(np.random.Philox(key=np.array([seed, lane], dtype=np.uint64)))


def _channel_rates(N, order, rate_const):
    # beta * C(N, order) via falling factorial; exact in float64 for the
    # occupancies this process visits (N^order << 2^53)
    out = np.ones_like(N, dtype=float)
    for i in range(order):
        out *= np.maximum(N - i, 0)
    return rate_const / math.factorial(order) * out


def _run_chunk(params, p0_cdf, p0_delta, ts, seed, lane_lo, lane_hi, out):
    nl = lane_hi - lane_lo
    nt = ts.size
    gens = [_lane_rng(seed, lane) for lane in range(lane_lo, lane_hi)]
    buf = np.empty((nl, PHILOX_BUFFER))
    cur = np.full(nl, PHILOX_BUFFER, dtype=np.int64)

    def draw(idx):
        for i in idx[cur[idx] >= PHILOX_BUFFER]:
            buf[i] = gens[i].random(PHILOX_BUFFER)
            cur[i] = 0
        u = buf[idx, cur[idx]]
        cur[idx] += 1
        return u

    R = params.loading_rate
    g = params.one_body_rate
    chans = [(ch.order, ch.removed, ch.rate_const) for ch in params.channels if ch.rate_const > 0]

    if p0_cdf is not None:
        u0 = draw(np.arange(nl))
        N = np.searchsorted(p0_cdf, u0, side="right").astype(np.int64)
    else:
        N = np.full(nl, p0_delta, dtype=np.int64)
    t = np.zeros(nl)
    si = np.zeros(nl, dtype=np.int64)
    ts_ext = np.append(ts, np.inf)
    active = np.ones(nl, dtype=bool)

    while True:
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        lam = np.full(idx.size, R, dtype=float)
        lam += g * N[idx]
        for order, _, rate_const in chans:
            lam += _channel_rates(N[idx], order, rate_const)
        u1 = draw(idx)
        u2 = draw(idx)
        with np.errstate(divide="ignore"):
            dt = np.where(lam > 0, -np.log1p(-u1) / np.where(lam > 0, lam, 1.0), np.inf)
        t_new = t[idx] + dt

        # the state on [t, t_new) is N; record every sample time passed
        while True:
            rec = np.flatnonzero(ts_ext[si[idx]] < t_new)
            if rec.size == 0:
                break
            lanes = idx[rec]
            out[lanes, si[lanes]] = N[lanes]
            si[lanes] += 1

        # apply the chosen event where one occurs
        jumping = np.flatnonzero(np.isfinite(dt))
        if jumping.size:
            jl = idx[jumping]
            x = u2[jumping] * lam[jumping]
            dN = np.zeros(jl.size, dtype=np.int64)
            acc = np.full(jl.size, R)
            dN[x < acc] = 1
            undecided = x >= acc
            nxt = acc + g * N[jl]
            dN[undecided & (x < nxt)] = -1
            undecided &= x >= nxt
            acc = nxt
            for order, removed, rate_const in chans:
                nxt = acc + _channel_rates(N[jl], order, rate_const)
                dN[undecided & (x < nxt)] = -removed
                undecided &= x >= nxt
                acc = nxt
            N[jl] += dN
            t[jl] = t_new[jumping]
        active[idx] = si[idx] < nt
        # frozen lanes (lam = 0) have recorded every remaining sample above


def _delta_method_se(x):
    n = x.size
    mean = float(x.mean())
    d = x - mean
    m2 = float((d * d).mean())
    m3 = float((d ** 3).mean())
    m4 = float((d ** 4).mean())
    s2 = m2 * n / (n - 1) if n > 1 else 0.0
    se_mean = math.sqrt(s2 / n) if n > 1 else math.nan
    var_s2 = max(m4 - m2 * m2, 0.0) / n
    se_var = math.sqrt(var_s2)
    if mean > 0 and n > 1:
        cov = m3 / n
        var_f = (var_s2 / mean**2 + (s2**2 / mean**4) * (s2 / n)
                 - 2.0 * (s2 / mean**3) * cov)
        fano = s2 / mean
        se_fano = math.sqrt(max(var_f, 0.0))
    else:
        fano = math.nan
        se_fano = math.nan
    return mean, s2, fano, se_mean, se_var, se_fano


def sample(params, p0, t_samples, n_traj, seed, threads=1):
    """Sample n_traj independent trajectories, recording occupancy at each
    requested time. p0 is either an integer (start exactly there) or a
    probability vector over initial occupancies.

    Returns a TrajectoryEnsemble with per-time moment estimates and
    standard errors. Bit-reproducible for fixed inputs at any `threads`.
    """
    if int(n_traj) < 1:
        raise ValidationError(f"n_traj must be >= 1, got {n_traj}")
    n_traj = int(n_traj)
    if int(threads) < 1:
        raise ValidationError("threads must be >= 1")
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError("seed must fit in 64 bits")
    ts = np.asarray(t_samples, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(ts < 0) or np.any(np.diff(ts) <= 0):
        raise ValidationError("t_samples must be a non-empty ascending vector of times >= 0")

    if isinstance(p0, StateDistribution):
        p0 = p0.probs
    if np.isscalar(p0) or (hasattr(p0, "ndim") and getattr(p0, "ndim") == 0):
        if int(p0) != p0 or p0 < 0:
            raise ValidationError("integer p0 must be a non-negative occupancy")
        p0_cdf, p0_delta = None, int(p0)
    else:
        law = np.asarray(p0, dtype=float)
        if law.ndim != 1 or law.size == 0 or law.min() < -1e-12 or abs(law.sum() - 1.0) > 1e-9:
            raise ValidationError("p0 law must be a normalized probability vector")
        law = np.clip(law, 0.0, None)
        p0_cdf, p0_delta = np.cumsum(law / law.sum()), None

    samples = np.empty((n_traj, ts.size), dtype=np.int64)
    chunks = [(lo, min(lo + CHUNK, n_traj)) for lo in range(0, n_traj, CHUNK)]

    def work(bounds):
        lo, hi = bounds
        _run_chunk(params, p0_cdf, p0_delta, ts, seed, lo, hi, samples[lo:hi])

    if threads == 1 or len(chunks) == 1:
        for b in chunks:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=int(threads)) as ex:
            list(ex.map(work, chunks))

    est = []
    for j, tj in enumerate(ts):
        mean, s2, fano, se_m, se_v, se_f = _delta_method_se(samples[:, j].astype(float))
        est.append(EnsembleMoments(time=float(tj), mean=mean, variance=s2, fano=fano,
                                   se_mean=se_m, se_variance=se_v, se_fano=se_f,
                                   n_traj=n_traj))
    return TrajectoryEnsemble(seed=seed, t_samples=ts, samples=samples, est_moments=tuple(est))


def histogram(ens, t):
    """Empirical occupancy distribution at sample time t (must be one of
    the ensemble's sample times)."""
    hits = np.flatnonzero(ens.t_samples == float(t))
    if hits.size == 0:
        raise ValidationError(f"t={t!r} is not one of the ensemble's sample times")
    col = ens.samples[:, hits[0]]
    counts = np.bincount(col)
    return StateDistribution(probs=counts / counts.sum(), time=float(t))


def bootstrap_se_fano(ens, t, n_resamples=BOOTSTRAP_RESAMPLES):
    """Bootstrap standard error of the Fano factor at sample time t,
    drawn from the reserved (seed, 2^64-1) stream so it never collides
    with a trajectory stream."""
    hits = np.flatnonzero(ens.t_samples == float(t))
    if hits.size == 0:
        raise ValidationError(f"t={t!r} is not one of the ensemble's sample times")
    x = ens.samples[:, hits[0]].astype(float)
    n = x.size
    rng = _lane_rng(ens.seed, BOOTSTRAP_STREAM_INDEX)
    fanos = np.empty(n_resamples)
    for b in range(n_resamples):
        xs = x[rng.integers(0, n, n)]
        m = xs.mean()
        fanos[b] = xs.var(ddof=1) / m if m > 0 else np.nan
    ok = fanos[np.isfinite(fanos)]
    return float(ok.std(ddof=1)) if ok.size > 1 else math.nan
