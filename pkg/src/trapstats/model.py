"""Parameter model for trap loading/loss kinetics.

A trap is loaded at a constant rate R (atoms/s) and loses atoms through a
one-body process (rate gamma per atom) and any number of rho-body collision
channels. A channel of order rho with rate constant beta fires at occupancy
N with event rate beta * C(N, rho) and removes `removed` atoms per event
(1 <= removed <= rho). The workhorse two-body channel is
(rho=2, removed=2, beta'), for which the event rate is beta' * N(N-1)/2.

Units: R in s^-1, gamma in s^-1, beta in s^-1 per rho-tuple
(for rho=2 that is the usual (atom*s)^-1).
"""

import math
from dataclasses import dataclass, field

from .errors import NoClosedFormError, ValidationError

# Convention for the asymptotic-regime guards ("much greater than"): a
# factor of 10. Used only to gate closed-form formulas, never in solvers.
DOMINANCE_FACTOR = 10.0


@dataclass(frozen=True)
class LossChannel:
    """A rho-body loss channel: event rate rate_const * C(N, order),
    removing `removed` atoms per event."""

    order: int
    removed: int
    rate_const: float

    def __post_init__(self):
        if not isinstance(self.order, int) or self.order < 1:
            raise ValidationError(f"channel order must be an integer >= 1, got {self.order!r}")
        if not isinstance(self.removed, int) or not 1 <= self.removed <= self.order:
            raise ValidationError(
                f"removed atoms must satisfy 1 <= m <= order, got m={self.removed!r} order={self.order}")
        if not math.isfinite(self.rate_const) or self.rate_const < 0:
            raise ValidationError(f"channel rate constant must be finite and >= 0, got {self.rate_const!r}")


@dataclass(frozen=True)
class ModelParams:
    """Immutable, validated kinetics parameters shared by all backends."""

    loading_rate: float
    one_body_rate: float = 0.0
    channels: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        for name, v in (("loading_rate", self.loading_rate), ("one_body_rate", self.one_body_rate)):
            if not math.isfinite(v) or v < 0:
                raise ValidationError(f"{name} must be finite and >= 0, got {v!r}")
        for ch in self.channels:
            if not isinstance(ch, LossChannel):
                raise ValidationError(f"channels must be LossChannel instances, got {type(ch).__name__}")
        if self.loading_rate == 0 and self.one_body_rate == 0 and not any(
                ch.rate_const > 0 for ch in self.channels):
            raise ValidationError("all rates are zero; the dynamics are trivial and rejected")

    def max_order(self):
        return max((ch.order for ch in self.channels), default=0)


def event_rate(channel, n):
    """Event rate of `channel` at occupancy n: rate_const * C(n, order).

    C(n, rho) is computed in exact integer arithmetic (zero for n < rho),
    so rate ratios are exact integers with no combinatorial rounding.
    """
    if n < 0 or int(n) != n:
        raise ValidationError(f"occupancy must be a non-negative integer, got {n!r}")
    return channel.rate_const * math.comb(int(n), channel.order)


def total_loss_rate(params, n):
    """Summed loss event rate at occupancy n: gamma*n plus all channels."""
    r = params.one_body_rate * n
    for ch in params.channels:
        r += event_rate(ch, n)
    return r


def predict_steady_mean(params):
    """Closed-form asymptotic steady-state mean, used for truncation sizing
    and sanity reporting only (never as a result).

    Supported regimes:
      * no channels -> R/gamma (exact for the linear birth-death process);
      * single (rho=2, removed=2) channel with R >> beta' >> gamma
        -> sqrt(R/beta');
      * R << gamma -> R/gamma (losses beyond one-body are then negligible
        because multi-atom occupancies are rare).
    Anything else raises NoClosedFormError: use the master backend.
    """
    R, g = params.loading_rate, params.one_body_rate
    if not params.channels:
        if g <= 0:
            raise NoClosedFormError("no channels and gamma=0: occupancy grows without bound")
        return R / g
    if g > 0 and R <= g / DOMINANCE_FACTOR:
        return R / g
    if len(params.channels) == 1:
        ch = params.channels[0]
        if (ch.order == 2 and ch.removed == 2 and ch.rate_const > 0
                and R >= DOMINANCE_FACTOR * ch.rate_const
                and ch.rate_const >= DOMINANCE_FACTOR * g):
            return math.sqrt(R / ch.rate_const)
    raise NoClosedFormError("no closed form for this parameter set; use the master backend")


def mean_field_outflow(params, n):
    """Deterministic atom outflow at real-valued occupancy n:
    gamma*n + sum_ch removed * beta * C(n, rho), with the binomial
    coefficient continued to real n via the falling factorial (clamped
    at 0 below n = rho - 1). Monotone non-decreasing in n.
    """
    r = params.one_body_rate * n
    for ch in params.channels:
        ff = 1.0
        for i in range(ch.order):
            ff *= max(n - i, 0.0)
        r += ch.removed * ch.rate_const * ff / math.factorial(ch.order)
    return r


def mean_field_mean(params):
    """Root n* of the deterministic balance R = mean_field_outflow(n).

    Internal sizing helper: reduces to R/gamma with no channels and to
    ~sqrt(R/beta') in the two-body-dominated regime, and stays finite and
    monotone in R everywhere in between.
    """

    def outflow(n):
        return mean_field_outflow(params, n)

    R = params.loading_rate
    if R == 0:
        return 0.0
    if params.one_body_rate <= 0 and not any(ch.rate_const > 0 for ch in params.channels):
        raise NoClosedFormError("loss-free model: mean-field occupancy unbounded")
    # bracket then bisect; outflow is monotone non-decreasing
    hi = 1.0
    while outflow(hi) < R:
        hi *= 2.0
        if hi > 1e12:
            raise NoClosedFormError("mean-field balance did not bracket below n=1e12")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if outflow(mid) < R:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
