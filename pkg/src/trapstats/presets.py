"""Bundled parameter presets for one-command figure reproduction.

Rates follow the trap-kinetics conventions: R and gamma in s^-1, beta2 in
(atom*s)^-1, general channels as "rho,m,rate" strings. The pair-loss rate
constant 500 is a convention for the measured order of magnitude, not an
exact physical value.

Natural subcommands: fig1/fig3a/fig3a-dashed -> sweep, fig2 -> evolve,
fig3b -> steady. A preset only contributes the keys the invoked subcommand
actually uses.
"""

PRESETS = {
    # steady-occupancy sweep of the pair-loss trap: Fano dip to ~0.5 at
    # half filling, plateau at 3/4 once the trap holds a few atoms
    "fig1": {
        "gamma": 0.2,
        "beta2": 500.0,
        "removed": 2,
        "n_points": 40,
        "mean_lo": 0.05,
        "mean_hi": 40.0,
    },
    # loading transient at R=6000/s: steady by 3 ms with mean 3.6, F 0.74
    "fig2": {
        "R": 6000.0,
        "gamma": 0.2,
        "beta2": 500.0,
        "removed": 2,
        "t_end": 3e-3,
        "n0": 0,
    },
    # same sweep as fig1 (the solid theory curve)
    "fig3a": {
        "gamma": 0.2,
        "beta2": 500.0,
        "removed": 2,
        "n_points": 40,
        "mean_lo": 0.05,
        "mean_hi": 40.0,
    },
    # pair collisions ejecting a single atom: occupancy locks to 1
    "fig3a-dashed": {
        "gamma": 5e-3,
        "beta2": 500.0,
        "removed": 1,
        "n_points": 40,
        "mean_lo": 0.05,
        "mean_hi": 40.0,
    },
    # strong loading: mean 32, Fano 3/4, near-Gaussian distribution
    "fig3b": {
        "R": 5e5,
        "gamma": 0.2,
        "beta2": 500.0,
        "removed": 2,
    },
}
