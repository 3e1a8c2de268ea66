"""CSV/JSON serialization and the run manifest.

Data files are byte-stable: floats are written with repr (shortest
round-trip form), JSON keys are sorted, and no data file contains a
timestamp. Wall-clock information lives only in the manifest sidecar.
"""

import csv
import json
import math
from datetime import datetime, timezone


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_json(fh, obj):
    json.dump(obj, fh, indent=2, sort_keys=True)
    fh.write("\n")


def write_evolve_csv(fh, dists):
    w = csv.writer(fh)
    w.writerow(["t", "N", "p_N"])
    for d in dists:
        for n, p in enumerate(d.probs):
            w.writerow([_cell(float(d.time)), n, _cell(float(p))])


def evolve_json_obj(dists, moments_of, metadata=None):
    return {
        "metadata": metadata or {},
        "n_max": dists[0].n_max if dists else None,
        "series": [
            {
                "time": _jsonable(float(d.time)),
                "probs": [float(p) for p in d.probs],
                "moments": _moments_obj(moments_of(d)),
            }
            for d in dists
        ],
    }


def _moments_obj(m):
    return {"mean": _jsonable(m.mean), "variance": _jsonable(m.variance), "fano": _jsonable(m.fano)}


def write_steady_csv(fh, dist):
    w = csv.writer(fh)
    w.writerow(["N", "p_N"])
    for n, p in enumerate(dist.probs):
        w.writerow([n, _cell(float(p))])


def steady_json_obj(dist, m, metadata=None):
    return {
        "metadata": metadata or {},
        "n_max": dist.n_max,
        "probs": [float(p) for p in dist.probs],
        "moments": _moments_obj(m),
    }


def write_sample_csv(fh, ens):
    w = csv.writer(fh)
    w.writerow(["traj", "t", "N"])
    for i in range(ens.n_traj):
        for j, t in enumerate(ens.t_samples):
            w.writerow([i, _cell(float(t)), int(ens.samples[i, j])])


def sample_json_obj(ens, metadata=None, bootstrap=None):
    out = {
        "metadata": metadata or {},
        "seed": ens.seed,
        "n_traj": ens.n_traj,
        "moments": [
            {
                "time": _jsonable(e.time),
                "mean": _jsonable(e.mean),
                "variance": _jsonable(e.variance),
                "fano": _jsonable(e.fano),
                "se_mean": _jsonable(e.se_mean),
                "se_variance": _jsonable(e.se_variance),
                "se_fano": _jsonable(e.se_fano),
            }
            for e in ens.est_moments
        ],
    }
    if bootstrap is not None:
        out["se_fano_bootstrap"] = {repr(float(t)): _jsonable(v) for t, v in bootstrap.items()}
    return out


def write_vk_csv(fh, states):
    w = csv.writer(fh)
    w.writerow(["tau", "phi", "xi2", "fano"])
    for s in states:
        w.writerow([_cell(s.tau), _cell(s.phi), _cell(s.xi2), _cell(s.fano)])


def vk_json_obj(states, metadata=None):
    return {
        "metadata": metadata or {},
        "series": [
            {"tau": s.tau, "phi": s.phi, "xi2": s.xi2, "fano": _jsonable(s.fano)}
            for s in states
        ],
    }


def write_sweep_csv(fh, rows):
    w = csv.writer(fh)
    w.writerow(["R", "mean", "variance", "fano", "backend", "stderr_fano", "error"])
    for r in rows:
        w.writerow([_cell(r.loading_rate), _cell(r.mean), _cell(r.variance),
                    _cell(r.fano), r.backend, _cell(r.stderr_fano), _cell(r.error)])


def sweep_json_obj(rows, metadata=None):
    return {
        "metadata": metadata or {},
        "rows": [
            {
                "R": _jsonable(r.loading_rate),
                "mean": _jsonable(r.mean),
                "variance": _jsonable(r.variance),
                "fano": _jsonable(r.fano),
                "backend": r.backend,
                "stderr_fano": _jsonable(r.stderr_fano),
                "error": r.error,
            }
            for r in rows
        ],
    }


def write_manifest(path, config, version):
    """Sidecar recording the fully resolved run configuration. The only
    output file that carries a timestamp."""
    obj = {
        "tool": "trapstats",
        "version": version,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config": config,
    }
    with open(path, "w") as fh:
        write_json(fh, obj)
