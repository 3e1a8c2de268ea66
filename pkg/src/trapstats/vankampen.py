"""Linear-noise (system-size) backend.

The occupancy is split as N(tau) = N_st * phi(tau) + sqrt(N_st) * xi(tau)
with tau = t*sqrt(R*beta') dimensionless. The deterministic fraction obeys
d(phi)/d(tau) = 1 - phi^2 and the scaled fluctuation variance obeys
d<xi^2>/d(tau) = -4*phi*<xi^2> + (1 + 2*phi^2); the Fano factor along the
trajectory is F = <xi^2>/phi. The fixed point is (phi, <xi^2>) = (1, 3/4).

F is reported as NaN while phi <= 0.05: the expansion ansatz is invalid
near an empty trap (a delta start at N=0 has phi=0, where F is 0/0), so
we expose phi0 as a parameter and simply refuse to quote F until the
deterministic part has grown clear of zero.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp

from .errors import NumericalError, ValidationError

PHI_FANO_MIN = 0.05


@dataclass(frozen=True)
class VanKampenState:
    """Deterministic fraction phi, scaled fluctuation variance xi2, and
    dimensionless time tau."""

    phi: float
    xi2: float
    tau: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.phi <= 1.0:
            raise ValidationError(f"phi must lie in [0, 1], got {self.phi!r}")
        if self.xi2 < 0:
            raise ValidationError(f"xi2 must be >= 0, got {self.xi2!r}")

    @property
    def fano(self):
        return self.xi2 / self.phi if self.phi > PHI_FANO_MIN else math.nan


def to_dimensionless(params, t):
    """tau = t * sqrt(R * beta') for a model with loading and a single
    two-body channel; undefined otherwise."""
    R = params.loading_rate
    two_body = [ch for ch in params.channels if ch.order == 2 and ch.rate_const > 0]
    if R <= 0 or len(two_body) != 1 or len(params.channels) != 1:
        raise ValidationError("tau is defined only for R > 0 with a single two-body channel")
    return t * math.sqrt(R * two_body[0].rate_const)


def vk_evolve(s0, tau_end, tau_samples=None, n_samples=201):
    """Integrate the coupled (phi, xi2) ODEs from s0 to tau_end and return
    VanKampenStates at the sample points (default: uniform grid).

    The integration is tight enough that phi matches its closed form
    tanh(tau + atanh(phi0)) to 1e-9.
    """
    if not isinstance(s0, VanKampenState):
        raise ValidationError("s0 must be a VanKampenState")
    if tau_end <= s0.tau:
        raise ValidationError("tau_end must exceed the initial tau")
    if tau_samples is None:
        taus = np.linspace(s0.tau, float(tau_end), int(n_samples))
    else:
        taus = np.asarray(tau_samples, dtype=float)
        if taus.ndim != 1 or taus.size == 0 or np.any(np.diff(taus) <= 0):
            raise ValidationError("tau_samples must be ascending and non-empty")
        if taus[0] < s0.tau or taus[-1] > tau_end:
            raise ValidationError("tau_samples must lie within [s0.tau, tau_end]")

    def rhs(tau, y):
        phi, xi2 = y
        return [1.0 - phi * phi, -4.0 * phi * xi2 + 1.0 + 2.0 * phi * phi]

    sol = solve_ivp(rhs, (s0.tau, float(tau_end)), [s0.phi, s0.xi2], method="RK45",
                    t_eval=taus, rtol=1e-11, atol=1e-13)
    if not sol.success:  # pragma: no cover - smooth contracting system
        raise NumericalError(f"fluctuation ODE integration failed: {sol.message}")
    out = []
    for tau, phi, xi2 in zip(sol.t, sol.y[0], sol.y[1]):
        # clip round-off overshoot; the flow itself preserves [0, 1]
        out.append(VanKampenState(phi=min(max(float(phi), 0.0), 1.0),
                                  xi2=max(float(xi2), 0.0), tau=float(tau)))
    return out


def vk_steady(rho, loading=True, removed=None):
    """Closed-form steady-state Fano factor for a single rho-body channel
    removing full rho-tuples: (1 + 1/rho)/2 with loading, rho/(2*rho - 1)
    for pure decay (R = 0). No closed form exists when removed != rho."""
    if not isinstance(rho, int) or rho < 1:
        raise ValidationError(f"rho must be an integer >= 1, got {rho!r}")
    if removed is not None and removed != rho:
        raise ValidationError("closed forms hold only for channels removing full rho-tuples")
    if loading:
        return float(Fraction(1, 2) * (1 + Fraction(1, rho)))
    return float(Fraction(rho, 2 * rho - 1))
