"""Truncated transition-rate matrix (generator) for the occupancy process.

State space is {0, 1, ..., n_max}. A[i, j] is the probability flow rate
from occupancy j to occupancy i, so dp/dt = A @ p. Columns sum to zero:
the loading transition out of j = n_max is dropped together with its
diagonal contribution (reflecting boundary), which keeps the truncated
generator exactly conservative instead of leaking mass. truncation_check
guards that the boundary actually carries no weight.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import ValidationError
from .model import ModelParams, event_rate, mean_field_mean

N_MAX_CAP = 10_000
TAIL_FLAG_LEVEL = 1e-8


@dataclass(frozen=True)
class Generator:
    """Immutable sparse generator over {0..n_max} for fixed ModelParams."""

    params: ModelParams
    n_max: int
    rates: sparse.csc_matrix

    @property
    def size(self):
        return self.n_max + 1


def default_n_max(params, n0=0):
    """Truncation bound covering the steady state and an initial occupancy.

    Uses the mean-field root n* of the loading/loss balance (which matches
    the closed-form asymptotics where those apply): at least 4*n* and at
    least n* + 10*sqrt(max(n*, 1)) so the bulk sits more than ten standard
    deviations below the boundary, never below 10, capped at 10^4.
    """
    n_star = mean_field_mean(params)
    guard = max(10, math.ceil(4.0 * n_star), math.ceil(n_star + 10.0 * math.sqrt(max(n_star, 1.0))))
    return min(N_MAX_CAP, max(guard, int(n0)))


def build_generator(params, n_max):
    """Assemble the banded generator for `params` on {0..n_max}.

    Transitions: loading j -> j+1 at rate R (suppressed at j = n_max),
    one-body j -> j-1 at rate gamma*j, each channel j -> j-m at rate
    beta * C(j, rho). Diagonals make every column sum to zero.
    """
    if not isinstance(params, ModelParams):
        raise ValidationError("params must be a ModelParams instance")
    if n_max < 1:
        raise ValidationError(f"n_max must be >= 1, got {n_max}")
    if n_max < params.max_order():
        raise ValidationError(
            f"n_max={n_max} is smaller than the largest channel order "
            f"{params.max_order()}; a single loss event cannot be represented")
    size = n_max + 1
    rows, cols, vals = [], [], []
    diag = np.zeros(size)

    R = params.loading_rate
    if R > 0:
        for j in range(n_max):  # no loading out of the top state
            rows.append(j + 1)
            cols.append(j)
            vals.append(R)
            diag[j] -= R
    g = params.one_body_rate
    if g > 0:
        for j in range(1, size):
            rows.append(j - 1)
            cols.append(j)
            vals.append(g * j)
            diag[j] -= g * j
    for ch in params.channels:
        if ch.rate_const == 0:
            continue
        for j in range(ch.order, size):
            r = event_rate(ch, j)
            rows.append(j - ch.removed)
            cols.append(j)
            vals.append(r)
            diag[j] -= r

    rows.extend(range(size))
    cols.extend(range(size))
    vals.extend(diag)
    A = sparse.coo_matrix((vals, (rows, cols)), shape=(size, size)).tocsc()
    return Generator(params=params, n_max=n_max, rates=A)


@dataclass(frozen=True)
class TruncationDiagnostic:
    tail_mass: float
    n_tail_states: int
    flagged: bool


def truncation_check(params, dist):
    """Mass in the top 10% of states of `dist`; flagged if above 1e-8,
    in which case the caller should re-run with doubled n_max."""
    probs = np.asarray(dist.probs if hasattr(dist, "probs") else dist, dtype=float)
    size = probs.shape[0]
    k = max(1, size // 10)
    tail = float(probs[size - k:].sum())
    return TruncationDiagnostic(tail_mass=tail, n_tail_states=k, flagged=tail > TAIL_FLAG_LEVEL)


def dump_coo(gen, path):
    """Write the generator as coordinate-list CSV: row, col, rate."""
    coo = gen.rates.tocoo()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "rate"])
        for i, j, v in sorted(zip(coo.row, coo.col, coo.data), key=lambda t: (t[1], t[0])):
            w.writerow([int(i), int(j), repr(float(v))])
