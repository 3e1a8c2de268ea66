"""Command-line surface: trapstats <subcommand> [flags].

Subcommands: evolve, steady, sample, vankampen, sweep. Parameters come
from flags, a flat JSON config file (--config), or a bundled preset
(--preset); flags override the config file, which overrides the preset.

Exit codes: 0 success, 1 validation error (with a one-line JSON diagnostic
on stderr), 2 numerical failure.

Units match the kinetics conventions throughout: --R and --gamma in s^-1,
--beta2 in (atom*s)^-1, times in seconds (tau is dimensionless).
"""

import argparse
import json
import sys

from . import __version__
from . import io as tio
from . import master, mc
from .errors import NumericalError, TrapstatsError, ValidationError
from .generator import build_generator, default_n_max, dump_coo
from .model import LossChannel, ModelParams
from .presets import PRESETS
from .sweep import SweepSpec, default_grid, gaussian_check, run_sweep
from .vankampen import VanKampenState, vk_evolve


def _diag(exc):
    line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
    print(line, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags by default; the contract here is exit 1
    # for every validation problem, with a machine-parsable diagnostic
    def error(self, message):
        _diag(ValidationError(message))
        raise SystemExit(1)


def _add_common(sp):
    sp.add_argument("--R", type=float, default=None, help="loading rate R (s^-1)")
    sp.add_argument("--gamma", type=float, default=None, help="one-body loss rate gamma (s^-1)")
    sp.add_argument("--beta2", type=float, default=None,
                    help="two-body channel rate constant beta' ((atom*s)^-1)")
    sp.add_argument("--removed", type=int, default=None,
                    help="atoms removed per two-body event (1 or 2, default 2)")
    sp.add_argument("--channel", action="append", default=None, metavar="RHO,M,RATE",
                    help="general loss channel: order, atoms removed, rate constant "
                         "(s^-1 per rho-tuple); repeatable")
    sp.add_argument("--preset", choices=sorted(PRESETS), default=None,
                    help="bundled figure parameters (lowest precedence)")
    sp.add_argument("--config", default=None, metavar="FILE.json",
                    help="flat JSON key/value config (overridden by flags)")
    sp.add_argument("--n-max", type=int, default=None, help="truncation bound override")
    sp.add_argument("--out", default=None, metavar="PATH",
                    help="output file; stdout if omitted. A .manifest.json sidecar "
                         "records the resolved configuration")
    sp.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
    sp.add_argument("--dump-generator", default=None, metavar="PATH",
                    help="also write the rate matrix as coordinate CSV (row, col, rate)")


def build_parser():
    p = _Parser(prog="trapstats",
                description="Atom-number statistics of a loaded trap with one-body and "
                            "rho-body losses: master-equation, stochastic, and "
                            "linear-noise backends.")
    p.add_argument("--version", action="version", version=f"trapstats {__version__}")
    sub = p.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("evolve", parents=[], help="integrate the occupancy distribution in time")
    _add_common(sp)
    sp.add_argument("--t-end", type=float, default=None, help="final time (s)")
    sp.add_argument("--rel-tol", type=float, default=None,
                    help="integrator relative tolerance in [1e-12, 1e-3] (default 1e-8)")
    sp.add_argument("--n0", type=int, default=None, help="initial occupancy (default 0)")
    sp.add_argument("--n-samples", type=int, default=None,
                    help="uniform sample count over [0, t_end] (default 201)")
    sp.add_argument("--t-samples", default=None, metavar="T1,T2,...",
                    help="explicit ascending sample times (s), overrides --n-samples")

    sp = sub.add_parser("steady", help="solve the steady state directly")
    _add_common(sp)

    sp = sub.add_parser("sample", help="exact stochastic trajectories")
    _add_common(sp)
    sp.add_argument("--t-samples", default=None, metavar="T1,T2,...",
                    help="ascending times (s) at which occupancies are recorded (required)")
    sp.add_argument("--n-traj", type=int, default=None, help="trajectory count (default 10000)")
    sp.add_argument("--seed", type=int, default=None, help="64-bit root seed (default 0)")
    sp.add_argument("--threads", type=int, default=None,
                    help="worker threads; never affects results (default 1)")
    sp.add_argument("--n0", type=int, default=None, help="initial occupancy (default 0)")
    sp.add_argument("--bootstrap", action="store_true", default=None,
                    help="add bootstrap Fano standard errors to JSON output")

    sp = sub.add_parser("vankampen", help="linear-noise fluctuation ODEs in dimensionless time")
    _add_common(sp)
    sp.add_argument("--phi0", type=float, default=None,
                    help="initial deterministic fraction in [0, 1] (default 0)")
    sp.add_argument("--xi20", type=float, default=None,
                    help="initial scaled fluctuation variance (default 0)")
    sp.add_argument("--tau-end", type=float, default=None, help="final dimensionless time")
    sp.add_argument("--n-samples", type=int, default=None, help="sample count (default 201)")

    sp = sub.add_parser("sweep", help="sweep the loading rate and compare backends")
    _add_common(sp)
    sp.add_argument("--grid", default=None, metavar="R1,R2,...",
                    help="explicit ascending loading rates (s^-1)")
    sp.add_argument("--n-points", type=int, default=None,
                    help="default-grid size (default 40)")
    sp.add_argument("--mean-lo", type=float, default=None,
                    help="default grid spans mean-field occupancies from here (default 0.05)")
    sp.add_argument("--mean-hi", type=float, default=None, help="... to here (default 40)")
    sp.add_argument("--backends", default=None, metavar="B1,B2,...",
                    help="comma list from master,mc,vankampen (default master)")
    sp.add_argument("--n-traj", type=int, default=None, help="mc trajectories per point (default 100000)")
    sp.add_argument("--seed", type=int, default=None, help="mc root seed (default 0)")
    sp.add_argument("--threads", type=int, default=None, help="parallel grid points (default 1)")
    return p


def _load_config(path):
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ValidationError("config file must hold a flat JSON object")
    return cfg


_DEFAULTS = {
    "R": 0.0, "gamma": 0.0, "beta2": None, "removed": 2, "channel": None,
    "n_max": None, "format": None, "out": None, "dump_generator": None,
    "t_end": None, "rel_tol": 1e-8, "n0": 0, "n_samples": 201, "t_samples": None,
    "n_traj": 10000, "seed": 0, "threads": 1, "bootstrap": False,
    "phi0": 0.0, "xi20": 0.0, "tau_end": None,
    "grid": None, "n_points": 40, "mean_lo": 0.05, "mean_hi": 40.0, "backends": "master",
}


def _resolve(args):
    """Merge flag > config > preset > default into one flat dict."""
    preset = PRESETS[args.preset] if getattr(args, "preset", None) else {}
    config = _load_config(args.config) if getattr(args, "config", None) else {}
    for key in config:
        if key not in _DEFAULTS:
            raise ValidationError(f"unknown config key {key!r}")
    cfg = {}
    for key, default in _DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
        elif key in config:
            cfg[key] = config[key]
        elif key in preset:
            cfg[key] = preset[key]
        else:
            cfg[key] = default
    cfg["subcommand"] = args.subcommand
    return cfg


def _parse_channel(text):
    parts = str(text).split(",")
    if len(parts) != 3:
        raise ValidationError(f"--channel expects RHO,M,RATE, got {text!r}")
    try:
        return LossChannel(order=int(parts[0]), removed=int(parts[1]), rate_const=float(parts[2]))
    except ValueError as exc:
        raise ValidationError(f"bad --channel {text!r}: {exc}")


def _params(cfg):
    channels = []
    if cfg["beta2"] is not None:
        channels.append(LossChannel(order=2, removed=int(cfg["removed"]), rate_const=float(cfg["beta2"])))
    for text in cfg["channel"] or []:
        channels.append(_parse_channel(text))
    return ModelParams(loading_rate=float(cfg["R"]), one_body_rate=float(cfg["gamma"]),
                       channels=tuple(channels))


def _floats_list(value, name):
    if value is None:
        raise ValidationError(f"--{name} is required")
    if isinstance(value, str):
        value = value.split(",")
    try:
        return [float(v) for v in value]
    except ValueError as exc:
        raise ValidationError(f"bad --{name}: {exc}")


def _emit(cfg, text_writer, json_obj, default_format, sidecars=()):
    fmt = cfg["format"] or default_format
    out = cfg["out"]
    manifest_cfg = {k: v for k, v in cfg.items() if v is not None}
    if out:
        with open(out, "w", newline="") as fh:
            if fmt == "csv":
                text_writer(fh)
            else:
                tio.write_json(fh, json_obj)
        for suffix, obj in sidecars:
            with open(out + suffix, "w") as fh:
                tio.write_json(fh, obj)
        tio.write_manifest(out + ".manifest.json", manifest_cfg, __version__)
    else:
        if fmt == "csv":
            text_writer(sys.stdout)
        else:
            tio.write_json(sys.stdout, json_obj)
    return 0


def _maybe_dump_generator(cfg, gen):
    if cfg["dump_generator"]:
        dump_coo(gen, cfg["dump_generator"])


def _cmd_evolve(cfg):
    params = _params(cfg)
    if cfg["t_end"] is None or cfg["t_end"] <= 0:
        raise ValidationError("--t-end must be given and positive")
    n_max = cfg["n_max"] or default_n_max(params, n0=cfg["n0"])
    gen = build_generator(params, n_max)
    _maybe_dump_generator(cfg, gen)
    p0 = [0.0] * gen.size
    if cfg["n0"] > gen.n_max:
        raise ValidationError(f"initial occupancy {cfg['n0']} exceeds n_max {gen.n_max}")
    p0[cfg["n0"]] = 1.0
    ts = _floats_list(cfg["t_samples"], "t-samples") if cfg["t_samples"] is not None else None
    dists = master.evolve(gen, p0, cfg["t_end"], rel_tol=cfg["rel_tol"],
                          t_samples=ts, n_samples=cfg["n_samples"])
    meta = {"n_max": gen.n_max, "rel_tol": cfg["rel_tol"]}
    obj = tio.evolve_json_obj(dists, master.moments, meta)
    return _emit(cfg, lambda fh: tio.write_evolve_csv(fh, dists), obj, "csv")


def _cmd_steady(cfg):
    params = _params(cfg)
    n_max = cfg["n_max"] or default_n_max(params)
    gen = build_generator(params, n_max)
    _maybe_dump_generator(cfg, gen)
    dist = master.steady_state(gen)
    m = master.moments(dist)
    meta = {"n_max": gen.n_max}
    mom_mean = m.mean
    if mom_mean >= 10.0:
        meta["gaussian_tv"] = gaussian_check(dist)
    obj = tio.steady_json_obj(dist, m, meta)
    sidecars = []
    if (cfg["format"] or "json") == "csv":
        sidecars.append((".moments.json", {"moments": tio._moments_obj(m), "metadata": meta}))
    return _emit(cfg, lambda fh: tio.write_steady_csv(fh, dist), obj, "json", sidecars)


def _cmd_sample(cfg):
    params = _params(cfg)
    ts = _floats_list(cfg["t_samples"], "t-samples")
    ens = mc.sample(params, cfg["n0"], ts, cfg["n_traj"], cfg["seed"], threads=cfg["threads"])
    boot = None
    if cfg["bootstrap"]:
        boot = {t: mc.bootstrap_se_fano(ens, t) for t in ens.t_samples}
    obj = tio.sample_json_obj(ens, {"n0": cfg["n0"]}, bootstrap=boot)
    return _emit(cfg, lambda fh: tio.write_sample_csv(fh, ens), obj, "csv")


def _cmd_vankampen(cfg):
    if cfg["tau_end"] is None or cfg["tau_end"] <= 0:
        raise ValidationError("--tau-end must be given and positive")
    s0 = VanKampenState(phi=cfg["phi0"], xi2=cfg["xi20"], tau=0.0)
    states = vk_evolve(s0, cfg["tau_end"], n_samples=cfg["n_samples"])
    obj = tio.vk_json_obj(states, {"phi0": cfg["phi0"], "xi20": cfg["xi20"]})
    return _emit(cfg, lambda fh: tio.write_vk_csv(fh, states), obj, "csv")


def _cmd_sweep(cfg):
    cfg_base = dict(cfg)
    cfg_base["R"] = 0.0
    base = _params(cfg_base)
    if cfg["grid"] is not None:
        grid = _floats_list(cfg["grid"], "grid")
    else:
        grid = default_grid(base, cfg["n_points"], cfg["mean_lo"], cfg["mean_hi"])
    backends = [b.strip() for b in str(cfg["backends"]).split(",") if b.strip()]
    spec = SweepSpec(base=base, grid=grid, backends=tuple(backends),
                     n_traj=cfg["n_traj"], seed=cfg["seed"], n_max=cfg["n_max"],
                     threads=cfg["threads"])
    rows = run_sweep(spec)
    obj = tio.sweep_json_obj(rows, {"backends": backends})
    return _emit(cfg, lambda fh: tio.write_sweep_csv(fh, rows), obj, "csv")


_COMMANDS = {
    "evolve": _cmd_evolve,
    "steady": _cmd_steady,
    "sample": _cmd_sample,
    "vankampen": _cmd_vankampen,
    "sweep": _cmd_sweep,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help (0) or parse error (1, already diagnosed)
        return int(exc.code or 0)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.subcommand](cfg)
    except ValidationError as exc:
        _diag(exc)
        return 1
    except NumericalError as exc:
        _diag(exc)
        return 2
    except TrapstatsError as exc:  # pragma: no cover - future error kinds
        _diag(exc)
        return 2
    except OSError as exc:
        _diag(ValidationError(f"i/o failure: {exc}"))
        return 1


if __name__ == "__main__":
    sys.exit(main())
