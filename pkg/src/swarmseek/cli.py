"""Command-line front end: run orchestration, output writing, acceptance.

Subcommands: run, ablate, delta-oracle, validate-config, acceptance. The
output directory comes from --out-dir, overridable with the SWARMSEEK_OUT_DIR
environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

from . import config as config_mod
from . import graph as graph_mod
from . import output, simkernel
from .simkernel import ConfigError

OUT_DIR_ENV = "SWARMSEEK_OUT_DIR"


def _build_parser():
    p = argparse.ArgumentParser(
        prog="swarmseek",
        description="Networked zeroth-order source seeking with formation control")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", help="run-config file (INI); defaults to "
                        "the built-in hexagon scenario")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--rounds", type=int, help="override the round count")
        if out:
            sp.add_argument("--out-dir", default="out",
                            help=f"output directory (env {OUT_DIR_ENV} wins)")

    sp = sub.add_parser("run", help="simulate one run and write the bundle")
    common(sp)
    sp.add_argument("--mode", choices=simkernel.MODES,
                    help="override the config mode")

    sp = sub.add_parser("ablate", help="matched-seed formation vs "
                        "no-formation comparison")
    common(sp)

    sp = sub.add_parser("delta-oracle", help="synthetic bounded-error "
                        "gradient oracle run")
    common(sp)
    sp.add_argument("--delta-bar", type=float,
                    help="override the perturbation norm")

    sp = sub.add_parser("validate-config", help="parse and check a config")
    sp.add_argument("--config", help="run-config file (INI); defaults to "
                    "the built-in hexagon scenario")

    sp = sub.add_parser("acceptance", help="run the acceptance suite")
    sp.add_argument("--only", help="comma-separated check names")
    sp.add_argument("--quick", action="store_true",
                    help="reduced trial counts (smoke test, not the gate)")
    return p


def _load(args):
    if args.config:
        cfg = config_mod.load_config(args.config)
    else:
        cfg = config_mod.parse_config(config_mod.DEFAULT_CONFIG)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "rounds", None) is not None:
        cfg = replace(cfg, rounds=args.rounds)
    if getattr(args, "mode", None):
        cfg = replace(cfg, mode=args.mode)
    return cfg


def _out_dir(args):
    return os.environ.get(OUT_DIR_ENV) or args.out_dir


def _cmd_run(args):
    cfg = _load(args)
    res = simkernel.run(cfg)
    out_dir = _out_dir(args)
    output.write_bundle(res, out_dir)
    m = res.metrics
    print(f"wrote {out_dir}: rounds={cfg.rounds} seed={cfg.seed} "
          f"mode={cfg.mode} burn_in_k0={m.get('burn_in_k0')} "
          f"audit_violations={m.get('audit_cap_violations', 0) + m.get('audit_global_violations', 0)}")
    return 0


def _cmd_ablate(args):
    cfg = _load(args)
    base = replace(cfg, mode="network")
    res_f = simkernel.run(base)
    res_n = simkernel.run(replace(base, mode="ablation"))
    out_dir = _out_dir(args)
    output.write_bundle(res_f, os.path.join(out_dir, "formation"))
    output.write_bundle(res_n, os.path.join(out_dir, "ablation"))
    k0 = res_f.metrics["burn_in_k0"]
    if k0 is None:
        print("burn-in never reached; no ratio to report")
        return 1
    gap_f = float(np.nanmean(res_f.oracle_gaps[k0:, :]))
    gap_n = float(np.nanmean(res_n.oracle_gaps[k0:, :]))
    ratio = gap_n / gap_f if gap_f > 0 else float("inf")
    print(f"seed={base.seed} burn_in_k0={k0} "
          f"mean gap with formation={gap_f:.6g} without={gap_n:.6g} "
          f"ratio={ratio:.3f}")
    return 0


def _cmd_delta_oracle(args):
    cfg = _load(args)
    cfg = replace(cfg, mode="delta-oracle")
    if args.delta_bar is not None:
        cfg = replace(cfg, oracle_delta_bar=args.delta_bar)
    res = simkernel.run(cfg)
    out_dir = _out_dir(args)
    output.write_bundle(res, out_dir)
    m = res.metrics
    print(f"wrote {out_dir}: delta_bar={cfg.oracle_delta_bar} "
          f"M={m['neighborhood_M']:.6g} max_sq_dist={m['max_sq_dist']:.6g}")
    return 0


def _cmd_validate(args):
    if args.config:
        cfg = config_mod.load_config(args.config)
    else:
        cfg = config_mod.parse_config(config_mod.DEFAULT_CONFIG)
    violations = graph_mod.validate(cfg.graph)
    for v in violations:
        print(f"violation [{v.code}] agents {sorted(v.agents)}: {v.message}")
    if violations:
        return 1
    print("config ok")
    return 0


def _cmd_acceptance(args):
    from . import acceptance
    names = args.only.split(",") if args.only else None
    return acceptance.run_suite(names=names, quick=args.quick)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "ablate": _cmd_ablate,
        "delta-oracle": _cmd_delta_oracle,
        "validate-config": _cmd_validate,
        "acceptance": _cmd_acceptance,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"file error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
