"""Deterministic backend: integrate dp/dt = A p and solve A p = 0 directly.

Probability distributions are validated on the way out: total mass must
stay within 1e-9 of one and no entry may undershoot -1e-12. Entries in
(-1e-12, 0) are rounding debris; they are clamped to zero and the vector
renormalized on output only, never inside the integrator state.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from .errors import NonUniqueSteadyStateError, NumericalError, StiffnessError, ValidationError
from .generator import Generator
from .model import ModelParams

CONSERVATION_TOL = 1e-9
NEGATIVE_TOL = -1e-12
STEADY_RESIDUAL_FACTOR = 1e-10   # residual bound: 1e-10 * max outflow rate
STEADY_DECLARE_FACTOR = 1e-10    # evolve declares steady when ||Ap||_1 < 1e-10 * R
RELAX_SWITCH_MULTIPLE = 50.0     # beyond 50 relaxation times, sample the direct solve
REL_TOL_RANGE = (1e-12, 1e-3)


@dataclass(frozen=True)
class StateDistribution:
    """Probability vector p_0..p_{n_max} with a timestamp.

    time is in seconds, or dimensionless if time_unit == "tau"; None marks
    a steady state (no associated time).
    """

    probs: np.ndarray
    time: float = None
    time_unit: str = "s"

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ValidationError("probs must be a non-empty 1-d vector")
        if float(p.min(initial=0.0)) < NEGATIVE_TOL:
            raise NumericalError(
                f"probability {p.min():.3e} undershoots the -1e-12 rounding tolerance")
        total = float(p.sum())
        if abs(total - 1.0) > CONSERVATION_TOL:
            raise NumericalError(f"probability mass {total!r} drifted beyond 1e-9 from 1")
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def n_max(self):
        return self.probs.size - 1


@dataclass(frozen=True)
class Moments:
    """mean <N>, variance, and Fano factor F = variance/mean.

    fano is NaN when the mean is zero (undefined, deliberately not 0).
    """

    mean: float
    variance: float
    fano: float


def moments(dist):
    """Exact weighted sums over the truncated support."""
    p = dist.probs if isinstance(dist, StateDistribution) else np.asarray(dist, dtype=float)
    k = np.arange(p.size, dtype=float)
    mean = float(k @ p)
    var = float((k * k) @ p) - mean * mean
    var = max(var, 0.0)  # guard tiny negative round-off for delta-like p
    fano = var / mean if mean > 0 else math.nan
    return Moments(mean=mean, variance=var, fano=fano)


def moment_rhs(params, m):
    """d<N>/dt for the single pair-loss model:
    R - gamma*<N> - beta'*<N>(<N>-1) - beta'*Var(N).

    Only valid for exactly one channel with order=2, removed=2; the
    corresponding closure does not hold for other channel shapes.
    """
    if len(params.channels) != 1:
        raise ValidationError("moment_rhs requires exactly one loss channel")
    ch = params.channels[0]
    if ch.order != 2 or ch.removed != 2:
        raise ValidationError("moment_rhs requires the (order=2, removed=2) channel")
    b = ch.rate_const
    return (params.loading_rate - params.one_body_rate * m.mean
            - b * m.mean * (m.mean - 1.0) - b * m.variance)


def _terminal_class_count(A):
    # strongly-connected components of the off-diagonal flow graph; the
    # steady state is unique iff exactly one component has no outflow.
    n = A.shape[0]
    off = A.tocoo()
    mask = (off.row != off.col) & (off.data > 0)
    adj = sparse.coo_matrix((np.ones(mask.sum()), (off.col[mask], off.row[mask])), shape=(n, n))
    ncomp, labels = csgraph.connected_components(adj.tocsr(), directed=True, connection="strong")
    has_exit = np.zeros(ncomp, dtype=bool)
    for j, i in zip(off.col[mask], off.row[mask]):
        if labels[j] != labels[i]:
            has_exit[labels[j]] = True
    return int((~has_exit).sum())


def steady_state(gen):
    """Normalized null vector of the generator: A p = 0, sum p = 1, p >= 0.

    Solved directly by replacing one balance row with the normalization
    row (all ones) and back-substituting e_0, rather than by long time
    integration. Raises NonUniqueSteadyStateError when the chain has more
    than one recurrent class, and NumericalError if the residual
    ||A p||_inf exceeds 1e-10 times the largest outflow rate.
    """
    if not isinstance(gen, Generator):
        raise ValidationError("gen must be a Generator")
    A = gen.rates
    if _terminal_class_count(A) != 1:
        raise NonUniqueSteadyStateError(
            "generator has multiple recurrent classes; steady state is not unique")
    M = A.tolil(copy=True)
    M[0, :] = np.ones(gen.size)
    rhs = np.zeros(gen.size)
    rhs[0] = 1.0
    p = splu(M.tocsc()).solve(rhs)
    max_rate = float(np.abs(A.diagonal()).max())
    residual = float(np.abs(A @ p).max())
    if residual > STEADY_RESIDUAL_FACTOR * max_rate:
        raise NumericalError(
            f"steady-state residual {residual:.3e} exceeds {STEADY_RESIDUAL_FACTOR:.0e} * max rate {max_rate:.3e}")
    return StateDistribution(probs=p, time=None)


def _relaxation_time(params):
    # tau scale of the nondimensionalized pair-loss equation
    R = params.loading_rate
    for ch in params.channels:
        if ch.order == 2 and ch.rate_const > 0 and R > 0:
            return 1.0 / math.sqrt(R * ch.rate_const)
    return None


def evolve(gen, p0, t_end, rel_tol=1e-8, t_samples=None, n_samples=201):
    """Integrate dp/dt = A p from p0 and return StateDistributions at the
    requested sample times (default: n_samples uniform on [0, t_end]).

    Adaptive explicit Runge-Kutta (RK45) with local relative error rel_tol
    (allowed range [1e-12, 1e-3]) and absolute floor 1e-14. Two escape
    hatches for long horizons: integration stops early once the chain is
    declared steady (||A p||_1 < 1e-10 * R) and later samples repeat the
    declared state; and when t_end exceeds 50 relaxation times
    (1/sqrt(R*beta') where defined) the samples beyond that point come from
    the direct steady_state solve instead of integration.

    Raises StiffnessError if the step size underflows (the offending time
    is attached), and never returns a partially invalid distribution.
    """
    if not REL_TOL_RANGE[0] <= rel_tol <= REL_TOL_RANGE[1]:
        raise ValidationError(f"rel_tol must lie in [{REL_TOL_RANGE[0]:g}, {REL_TOL_RANGE[1]:g}]")
    if t_end <= 0:
        raise ValidationError("t_end must be positive")
    y0 = p0.probs.copy() if isinstance(p0, StateDistribution) else np.asarray(p0, dtype=float).copy()
    if y0.size != gen.size:
        raise ValidationError(f"p0 has {y0.size} entries, generator expects {gen.size}")
    StateDistribution(probs=y0, time=0.0)  # validates mass and negativity
    y0 = np.clip(y0, 0.0, None)
    y0 /= y0.sum()

    if t_samples is None:
        ts = np.linspace(0.0, float(t_end), int(n_samples))
    else:
        ts = np.asarray(t_samples, dtype=float)
        if ts.ndim != 1 or ts.size == 0 or np.any(np.diff(ts) <= 0):
            raise ValidationError("t_samples must be a non-empty ascending vector")
        if ts[0] < 0 or ts[-1] > t_end:
            raise ValidationError("t_samples must lie within [0, t_end]")

    A = gen.rates
    R = gen.params.loading_rate

    t_int = float(t_end)
    steady_tail = None
    t_relax = _relaxation_time(gen.params)
    if t_relax is not None and t_end > RELAX_SWITCH_MULTIPLE * t_relax:
        t_int = RELAX_SWITCH_MULTIPLE * t_relax
        steady_tail = steady_state(gen).probs

    events = None
    if R > 0:
        thresh = STEADY_DECLARE_FACTOR * R

        def settled(t, y):
            return float(np.abs(A @ y).sum()) - thresh

        settled.terminal = True
        settled.direction = -1
        events = [settled]

    inner = ts[ts <= t_int]
    sol = solve_ivp(lambda t, y: A @ y, (0.0, t_int), y0, method="RK45",
                    t_eval=inner, rtol=rel_tol, atol=1e-14, events=events)
    if not sol.success:
        t_fail = float(sol.t[-1]) if sol.t.size else 0.0
        if "step size" in sol.message.lower():
            raise StiffnessError(f"integrator step size underflowed at t={t_fail:g}: {sol.message}", time=t_fail)
        raise NumericalError(f"integration failed at t={t_fail:g}: {sol.message}")

    out = []
    cols = {float(t): sol.y[:, i] for i, t in enumerate(sol.t)}
    declared = sol.y_events[0][0] if (events and sol.status == 1 and len(sol.y_events[0])) else None
    last = y0
    for t in ts:
        t = float(t)
        if t in cols:
            last = cols[t]
        elif steady_tail is not None and t > t_int:
            last = steady_tail
        # remaining case: sample beyond the steady-declaration event; the
        # distribution no longer moves, reuse the declared state
        elif declared is not None:
            last = declared
        out.append(StateDistribution(probs=last, time=t))
    return out
