"""Experiment harness: sweep the loading rate across a grid, run the
requested backends at every point, and collect one comparison table.

Rows are computed independently (optionally in parallel) and returned in
grid order; a failing backend at one point is recorded in its row's error
field and never aborts the sweep.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigvals
from scipy.special import ndtr

from . import mc
from .errors import TrapstatsError, ValidationError
from .generator import build_generator, default_n_max
from .master import StateDistribution, moments, steady_state, _relaxation_time
from .model import ModelParams, mean_field_outflow
from .vankampen import vk_steady

BACKENDS = ("master", "mc", "vankampen")
DEFAULT_GRID_POINTS = 40
DEFAULT_MEAN_RANGE = (0.05, 40.0)
GAP_EIG_SIZE_LIMIT = 1024   # dense spectral gap only below this matrix size
SNAPSHOT_RELAX_MULTIPLE = 25.0
GAUSSIAN_CHECK_MIN_MEAN = 10.0


@dataclass(frozen=True)
class SweepSpec:
    """Base parameters plus the swept loading-rate grid."""

    base: ModelParams
    grid: np.ndarray
    backends: tuple = ("master",)
    n_traj: int = 10**5
    seed: int = 0
    n_max: int = None
    threads: int = 1

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size == 0 or np.any(g < 0) or np.any(np.diff(g) <= 0):
            raise ValidationError("grid must be non-empty, strictly increasing, and >= 0")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "backends", tuple(self.backends))
        for b in self.backends:
            if b not in BACKENDS:
                raise ValidationError(f"unknown backend {b!r}; choose from {BACKENDS}")
        if not self.backends:
            raise ValidationError("at least one backend required")


@dataclass(frozen=True)
class SweepRow:
    loading_rate: float
    backend: str
    mean: float = math.nan
    variance: float = math.nan
    fano: float = math.nan
    stderr_fano: float = math.nan
    error: str = None


def default_grid(base, n_points=DEFAULT_GRID_POINTS, mean_lo=DEFAULT_MEAN_RANGE[0],
                 mean_hi=DEFAULT_MEAN_RANGE[1]):
    """Log-spaced loading rates whose mean-field steady occupancies span
    [mean_lo, mean_hi]."""
    r_lo = mean_field_outflow(base, mean_lo)
    r_hi = mean_field_outflow(base, mean_hi)
    if not (0 < r_lo < r_hi):
        raise ValidationError("base parameters give no usable loading-rate bracket")
    return np.geomspace(r_lo, r_hi, int(n_points))


def spectral_gap(gen):
    """Smallest decay rate of the generator (negative of the largest
    nonzero eigenvalue real part). Dense computation; sized for truncated
    generators, not arbitrary matrices."""
    A = gen.rates.toarray()
    scale = float(np.abs(gen.rates.diagonal()).max())
    ev = eigvals(A)
    decaying = ev.real[ev.real < -1e-10 * scale]
    if decaying.size == 0:
        raise ValidationError("generator has no decaying mode")
    return float(-decaying.max())


def _mc_snapshot_time(gen):
    # long enough past the slowest relaxation that snapshot bias is
    # negligible against Monte Carlo standard errors
    if gen.size <= GAP_EIG_SIZE_LIMIT:
        return SNAPSHOT_RELAX_MULTIPLE / spectral_gap(gen)
    t_r = _relaxation_time(gen.params)
    if t_r is None and gen.params.one_body_rate > 0:
        t_r = 1.0 / gen.params.one_body_rate
    if t_r is None:
        raise ValidationError("cannot size a steady snapshot time; call mc.sample directly")
    return 2.0 * SNAPSHOT_RELAX_MULTIPLE * t_r


def _point_rows(spec, index):
    R = float(spec.grid[index])
    rows = []
    params = replace(spec.base, loading_rate=R)
    gen = None
    for backend in spec.backends:
        try:
            if backend == "master":
                gen = gen or build_generator(params, spec.n_max or default_n_max(params))
                mom = moments(steady_state(gen))
                rows.append(SweepRow(R, backend, mom.mean, mom.variance, mom.fano))
            elif backend == "mc":
                gen = gen or build_generator(params, spec.n_max or default_n_max(params))
                t_snap = _mc_snapshot_time(gen)
                ens = mc.sample(params, 0, [t_snap], spec.n_traj, spec.seed + index)
                est = ens.est_moments[0]
                rows.append(SweepRow(R, backend, est.mean, est.variance, est.fano,
                                     stderr_fano=est.se_fano))
            else:
                ch = params.channels
                if R <= 0 or len(ch) != 1 or ch[0].order != 2:
                    raise ValidationError("expansion needs loading and a single two-body channel")
                fano = vk_steady(ch[0].order, loading=True, removed=ch[0].removed)
                mean = math.sqrt(R / ch[0].rate_const)
                rows.append(SweepRow(R, backend, mean, fano * mean, fano))
        except TrapstatsError as exc:
            rows.append(SweepRow(R, backend, error=str(exc)))
    return rows


def run_sweep(spec):
    """One SweepRow per grid point per backend, ordered by grid index then
    by the backend order given in the spec."""
    indices = range(spec.grid.size)
    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=int(spec.threads)) as ex:
            per_point = list(ex.map(lambda i: _point_rows(spec, i), indices))
    else:
        per_point = [_point_rows(spec, i) for i in indices]
    return [row for rows in per_point for row in rows]


def gaussian_check(dist):
    """Total-variation distance between dist and the discretized Gaussian
    of identical mean and variance (continuous normal mass rounded to the
    nearest integer, renormalized over the truncated support).

    Requires mean >= 10; the comparison is meaningless for near-empty
    distributions.
    """
    p = dist.probs if isinstance(dist, StateDistribution) else np.asarray(dist, dtype=float)
    mom = moments(p)
    if mom.mean < GAUSSIAN_CHECK_MIN_MEAN:
        raise ValidationError(f"gaussian_check requires mean >= 10, got {mom.mean:.3g}")
    k = np.arange(p.size, dtype=float)
    sd = math.sqrt(mom.variance)
    q = ndtr((k + 0.5 - mom.mean) / sd) - ndtr((k - 0.5 - mom.mean) / sd)
    q = q / q.sum()
    return 0.5 * float(np.abs(p - q).sum())
