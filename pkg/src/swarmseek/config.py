"""Run-config files: flat INI sections, documented in the README.

Vectors and matrices are whitespace-separated row-major floats. Parsing and
serialization round-trip exactly (parse -> serialize -> parse is identity on
the resulting RunConfig).
"""

from __future__ import annotations

import configparser
import io

import numpy as np

from . import formation, graph as graph_mod
from .scenario import Box, QuadraticSource, SourcePath
from .simkernel import ConfigError, RunConfig


# Hexagon reference scenario: six agents on a cycle coalesce into a
# side-4 hexagon while tracking a quadratic source circling the origin.
DEFAULT_CONFIG = """\
[graph]
agents = 6
dimension = 2
generator = cycle

[scenario]
kind = quadratic
q = 3.89 0.45 0.45 5.86
region = -12 -12 12 12
path = line
path_start = -5 -3
path_velocity = 0.00072 0.00045

[formation]
shape = hexagon
side = 4
safety_distance = 0.05
collision_ramp = 0.05

[control]
lambda_nominal = 1
phi_cap = 1
slack = 0.1
sigma = square

[run]
rounds = 45000
seed = 0
init_box = -4 -4 4 4
init_order = ring
mode = network
"""


def _floats(text):
    return [float(t) for t in text.replace(",", " ").split()]


def _fmt(values):
    return " ".join(format(float(v), ".17g") for v in np.asarray(values).ravel())


def _box(text):
    vals = _floats(text)
    if len(vals) % 2:
        raise ConfigError(f"box needs an even count of numbers, got {len(vals)}")
    half = len(vals) // 2
    return Box(lo=tuple(vals[:half]), hi=tuple(vals[half:]))


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser()
    cp.read_string(text)
    try:
        return _build(cp)
    except (KeyError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _build(cp) -> RunConfig:
    gsec = cp["graph"]
    n = gsec.getint("agents")
    d = gsec.getint("dimension", 2)
    gen = gsec.get("generator", fallback=None)
    if gen == "cycle":
        g = graph_mod.cycle_graph(n, d)
    elif gen == "complete":
        g = graph_mod.complete_graph(n, d)
    elif gen in (None, "edges"):
        pairs = []
        for tok in gsec["edges"].split():
            a, b = tok.split("-")
            pairs.append((int(a), int(b)))
        g = graph_mod.TopologyGraph(n, d, frozenset(pairs))
    else:
        raise ConfigError(f"unknown graph generator {gen!r}")

    ssec = cp["scenario"]
    kind = ssec.get("kind", "quadratic")
    if kind != "quadratic":
        raise ConfigError(f"unsupported scenario kind {kind!r}")
    qvals = _floats(ssec["q"])
    dim = int(round(len(qvals) ** 0.5))
    q = np.array(qvals).reshape(dim, dim)
    region = _box(ssec["region"])
    pkind = ssec.get("path", "circle")
    if pkind == "circle":
        path = SourcePath(kind="circle",
                          center=tuple(_floats(ssec.get("path_center", "0 0"))),
                          radius=ssec.getfloat("path_radius", 0.0),
                          rate=ssec.getfloat("path_rate", 0.0),
                          phase=ssec.getfloat("path_phase", 0.0))
    elif pkind == "line":
        path = SourcePath(kind="line",
                          start=tuple(_floats(ssec.get("path_start", "0 0"))),
                          velocity=tuple(_floats(ssec.get("path_velocity", "0 0"))))
    else:
        raise ConfigError(f"unknown path kind {pkind!r}")
    scen = QuadraticSource(q, path, region)

    fsec = cp["formation"]
    shape = fsec.get("shape", "hexagon")
    side = fsec.getfloat("side", 4.0)
    if shape == "hexagon":
        offs = formation.hexagon_offsets(side)
    elif shape == "offsets":
        vals = _floats(fsec["offsets"])
        offs = {}
        step = 2 + d
        for base in range(0, len(vals), step):
            i, j = int(vals[base]), int(vals[base + 1])
            offs[(i, j)] = np.array(vals[base + 2:base + step])
    else:
        raise ConfigError(f"unknown formation shape {shape!r}")
    spec = formation.FormationSpec(
        desired_offsets=offs,
        safety_distance=fsec.getfloat("safety_distance", 0.5),
        collision_ramp=fsec.getfloat("collision_ramp", 0.5),
        scale=side)

    csec = cp["control"] if cp.has_section("control") else {}
    rsec = cp["run"]

    def cget(key, default, conv=float):
        if not csec or key not in csec:
            return default
        return conv(csec[key])

    policy, value = "fraction", 0.99
    if csec and "alpha_policy" in csec:
        toks = csec["alpha_policy"].split()
        policy = toks[0]
        if len(toks) > 1:
            value = float(toks[1])

    return RunConfig(
        graph=g, scenario=scen, formation=spec,
        rounds=rsec.getint("rounds"),
        seed=rsec.getint("seed", 0),
        init_box=_box(rsec["init_box"]),
        init_order=rsec.get("init_order", "sampled"),
        mode=rsec.get("mode", "network"),
        lambda_nominal=cget("lambda_nominal", 1.0),
        phi_cap=cget("phi_cap", 1.0),
        slack_c=cget("slack", 0.1),
        sigma_name=cget("sigma", "square", str),
        alpha_policy=policy, alpha_value=value,
        l_phi_override=cget("l_phi_override", None),
        l_phi_safety=cget("l_phi_safety", 2.0),
        oracle_delta_bar=float(rsec.get("delta_bar", 0.0)),
        oracle_alpha=(rsec.getfloat("oracle_alpha")
                      if "oracle_alpha" in rsec else None),
        gamma_override=cget("gamma_override", None),
        rho_override=cget("rho_override", None),
    )


def serialize_config(config: RunConfig) -> str:
    cp = configparser.ConfigParser()
    g = config.graph
    cp["graph"] = {
        "agents": str(g.agent_count),
        "dimension": str(g.dimension),
        "edges": " ".join(f"{a}-{b}" for a, b in sorted(g.edges)),
    }
    scen = config.scenario
    sdict = {"kind": "quadratic", "q": _fmt(scen.q),
             "region": _fmt(scen.region.lo) + " " + _fmt(scen.region.hi),
             "path": scen.path.kind}
    if scen.path.kind == "circle":
        sdict.update(path_center=_fmt(scen.path.center),
                     path_radius=format(scen.path.radius, ".17g"),
                     path_rate=format(scen.path.rate, ".17g"),
                     path_phase=format(scen.path.phase, ".17g"))
    else:
        sdict.update(path_start=_fmt(scen.path.start),
                     path_velocity=_fmt(scen.path.velocity))
    cp["scenario"] = sdict

    spec = config.formation
    offs = sorted((i, j) for (i, j) in spec.desired_offsets if i < j)
    cp["formation"] = {
        "shape": "offsets",
        "offsets": " ".join(
            f"{i} {j} {_fmt(spec.desired_offsets[(i, j)])}" for i, j in offs),
        "safety_distance": format(spec.safety_distance, ".17g"),
        "collision_ramp": format(spec.collision_ramp, ".17g"),
        "side": format(spec.scale, ".17g"),
    }
    ctrl = {
        "lambda_nominal": format(config.lambda_nominal, ".17g"),
        "phi_cap": format(config.phi_cap, ".17g"),
        "slack": format(config.slack_c, ".17g"),
        "sigma": config.sigma_name,
        "alpha_policy": f"{config.alpha_policy} {format(config.alpha_value, '.17g')}",
        "l_phi_safety": format(config.l_phi_safety, ".17g"),
    }
    if config.l_phi_override is not None:
        ctrl["l_phi_override"] = format(config.l_phi_override, ".17g")
    if config.gamma_override is not None:
        ctrl["gamma_override"] = format(config.gamma_override, ".17g")
    if config.rho_override is not None:
        ctrl["rho_override"] = format(config.rho_override, ".17g")
    cp["control"] = ctrl
    run = {
        "rounds": str(config.rounds),
        "seed": str(config.seed),
        "init_box": _fmt(config.init_box.lo) + " " + _fmt(config.init_box.hi),
        "init_order": config.init_order,
        "mode": config.mode,
        "delta_bar": format(config.oracle_delta_bar, ".17g"),
    }
    if config.oracle_alpha is not None:
        run["oracle_alpha"] = format(config.oracle_alpha, ".17g")
    cp["run"] = run
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
