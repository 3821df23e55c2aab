"""Output bundle: trajectory CSV, metrics JSON, run manifest.

The CSV has one row per agent per round snapshot, a fixed documented header,
and full double precision (17 significant digits) so downstream bound audits
lose nothing. Columns prefixed oracle_ come from the validation channel and
are never visible to agents.
"""

from __future__ import annotations

import json
import os

import numpy as np

from . import __version__
from .config import serialize_config

CSV_SCHEMA_VERSION = 1


def _csv_header(d):
    cols = ["k", "agent"]
    cols += [f"x{a}" for a in range(d)]
    cols += ["y"]
    cols += [f"est{a}" for a in range(d)]
    cols += ["delta_bound", "best_j", "best_l", "gram_cond", "containment"]
    cols += ["phi_i", "beta"]
    cols += [f"grad_phi{a}" for a in range(d)]
    cols += ["lambda", "alpha", "alpha_bar", "p_norm",
             "est_failed", "lambda_capped", "near_collision", "out_of_region",
             "audit_case", "audit_cap_violation", "audit_global_violation",
             "audit_realized_rise",
             "gap", "bound_recursive", "bound_analytic", "bound_distance"]
    cols += [f"oracle_grad{a}" for a in range(d)]
    cols += [f"oracle_min{a}" for a in range(d)]
    return cols


def _f(x):
    x = float(x)
    if np.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_trajectory_csv(res, path):
    d = res.config.graph.dimension
    n = res.config.graph.agent_count
    rounds = res.config.rounds
    header = _csv_header(d)
    lines = ["# schema_version=" + str(CSV_SCHEMA_VERSION),
             ",".join(header)]
    for k in range(rounds + 1):
        final = k == rounds
        for i in range(n):
            row = [str(k), str(i)]
            row += [_f(v) for v in res.positions[k, i]]
            row.append(_f(res.measurements[k, i]))
            if final:
                row += ["nan"] * d + ["nan", "-1", "-1", "nan", "-1"]
            else:
                row += [_f(v) for v in res.estimates[k, i]]
                row += [_f(res.delta_bounds[k, i]),
                        str(int(res.best_pairs[k, i, 0])),
                        str(int(res.best_pairs[k, i, 1])),
                        _f(res.gram_conds[k, i]),
                        str(int(res.containment[k, i]))]
            row += [_f(res.phi_vals[k, i]), _f(res.betas[k, i])]
            if final:
                row += ["nan"] * d + ["nan"] * 4 + ["0", "0"]
            else:
                row += [_f(v) for v in res.grad_phi[k, i]]
                row += [_f(res.lams[k, i]), _f(res.alphas[k, i]),
                        _f(res.alpha_bars[k, i]), _f(res.p_norms[k, i]),
                        str(int(res.est_failed[k, i])),
                        str(int(res.lambda_capped[k, i]))]
            row += [str(int(res.near_collision[k, i])),
                    str(int(not res.in_region[k, i]))]
            if final:
                row += ["-", "0", "0", "0"]
            else:
                row += [res.audit_cases[k, i],
                        str(int(res.audit_cap_viol[k, i])),
                        str(int(res.audit_global_viol[k])),
                        str(int(res.audit_realized[k, i]))]
            row.append(_f(res.oracle_gaps[k, i]))
            track = res.bounds.get(i)
            if track is None or final:
                row += ["nan", "nan", "nan"]
            else:
                row += [_f(track["recursive"][k]), _f(track["analytic"][k]),
                        _f(track["distance"][k])]
            row += [_f(v) for v in res.oracle_grads[k, i]]
            row += [_f(v) for v in res.oracle_minimizer[k]]
            lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return None if np.isnan(x) else x
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_metrics(res, path):
    with open(path, "w") as fh:
        json.dump(_jsonable(res.metrics), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(res, path, extra=None):
    manifest = {
        "package": "swarmseek",
        "version": __version__,
        "numpy": np.__version__,
        "seed": res.config.seed,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "config": serialize_config(res.config),
    }
    if extra:
        manifest.update(extra)
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_bundle(res, out_dir, extra_manifest=None):
    """Write trajectory.csv, metrics.json, manifest.json into out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "trajectory": os.path.join(out_dir, "trajectory.csv"),
        "metrics": os.path.join(out_dir, "metrics.json"),
        "manifest": os.path.join(out_dir, "manifest.json"),
    }
    try:
        write_trajectory_csv(res, paths["trajectory"])
        write_metrics(res, paths["metrics"])
        write_manifest(res, paths["manifest"], extra=extra_manifest)
    except Exception:
        for p in paths.values():       # do not leave partial bundles behind
            if os.path.exists(p):
                os.remove(p)
        raise
    return paths
