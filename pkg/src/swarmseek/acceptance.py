"""Scenario-level acceptance checks, runnable from the CLI and from tests.

Each check returns a CheckResult; `run_suite` executes a selection and
reports pass/fail. The hexagon tracking runs are shared between the
convergence check and the ablation check because both need the same 20
matched-seed simulations, which dominate the suite's runtime.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, replace

import numpy as np

from . import analysis, config as config_mod, estimator, formation, output
from . import graph as graph_mod
from . import scenario as scenario_mod
from . import simkernel

TOLERANCE = 1e-9
SEED_COUNT = 20


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, passed, detail):
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def hexagon_run_config(seed):
    """The reference tracking scenario (the built-in default config)."""
    cfg = config_mod.parse_config(config_mod.DEFAULT_CONFIG)
    return replace(cfg, seed=seed, mode="network")


# ---------------------------------------------------------------- estimation

def check_linear_exactness(quick=False):
    """Estimates of a noiseless linear field are exact to 1e-9."""
    rng = np.random.default_rng(101)
    trials = 100 if quick else 1000
    worst = 0.0
    for _ in range(trials):
        d = rng.integers(2, 5)
        n_nbrs = rng.integers(d, d + 4)
        g = rng.normal(size=d) * rng.uniform(0.5, 10)
        b = rng.normal()
        pos = rng.uniform(-5, 5, size=(n_nbrs + 1, d))
        y = pos @ g + b
        samples = estimator.directional_samples(
            0, pos, y, list(range(1, n_nbrs + 1)), lipschitz_L=0.0)
        try:
            lam, _ = estimator.estimate_gradient(samples)
        except estimator.EstimationError:
            continue   # rank-deficient draw; exactness is vacuous
        worst = max(worst, float(np.linalg.norm(lam - g)))
    return _result("linear-exactness", worst <= 1e-9,
                   f"{trials} trials, worst error {worst:.3e} (limit 1e-9)")


def check_error_bound_soundness(quick=False):
    """For random quadratics the estimate error respects its bound, and the
    two-neighbor interval test always contains the admissible gradient."""
    rng = np.random.default_rng(202)
    trials = 1000 if quick else 10000
    violations = 0
    containment_failures = 0
    done = 0
    while done < trials:
        a = rng.normal(size=(2, 2))
        q = a @ a.T + 0.1 * np.eye(2)
        lip = 2.0 * float(np.linalg.eigvalsh(q).max())
        center = rng.normal(size=2) * 2
        pos = rng.uniform(-3, 3, size=(3, 2))
        # reject nearly collinear neighbor pairs (the bound is infinite there)
        v1 = pos[1] - pos[0]
        v2 = pos[2] - pos[0]
        cross = abs(v1[0] * v2[1] - v1[1] * v2[0])
        if cross < 1e-3 * np.linalg.norm(v1) * np.linalg.norm(v2):
            continue
        done += 1
        y = np.einsum("nd,de,ne->n", pos - center, q, pos - center)
        grad = 2.0 * q @ (pos[0] - center)
        samples = estimator.directional_samples(0, pos, y, [1, 2], lip)
        lam, _ = estimator.estimate_gradient(samples)
        bound, pair = estimator.error_bound(samples, lip)
        if float(np.linalg.norm(lam - grad)) > bound + TOLERANCE:
            violations += 1
        if not estimator.containment_check(samples[0], samples[1], lam):
            containment_failures += 1
    passed = violations == 0 and containment_failures == 0
    return _result("error-bound-soundness", passed,
                   f"{done} trials, {violations} bound violations, "
                   f"{containment_failures} containment failures")


def check_hexagon_constant(quick=False):
    """On a regular hexagon with adjacent-vertex neighbors the error bound
    equals 2*side*L to 1e-9 relative."""
    rng = np.random.default_rng(303)
    worst = 0.0
    for side in (1.0, 4.0, 10.0):
        angles = np.arange(6) * (np.pi / 3.0)
        pos = side * np.stack([np.cos(angles), np.sin(angles)], axis=1)
        for lip in rng.uniform(0.1, 20.0, size=10):
            y = np.zeros(6)   # bound is independent of the measurements
            samples = estimator.directional_samples(0, pos, y, [1, 5], lip)
            bound, _ = estimator.error_bound(samples, lip)
            rel = abs(bound - 2.0 * side * lip) / (2.0 * side * lip)
            worst = max(worst, rel)
    return _result("hexagon-constant", worst <= 1e-9,
                   f"worst relative deviation from 2sL: {worst:.3e}")


# ----------------------------------------------------------------- formation

def check_formation_gradient(quick=False):
    """Analytic formation gradient matches central differences to 1e-6
    relative, including near-collision configurations above the floor."""
    rng = np.random.default_rng(404)
    trials = 100 if quick else 1000
    g = graph_mod.cycle_graph(6, 2)
    spec = formation.FormationSpec(
        desired_offsets=formation.hexagon_offsets(4.0),
        safety_distance=0.5, collision_ramp=1.0, scale=4.0)
    eps = 1e-5
    worst = 0.0
    for t in range(trials):
        if t % 3 == 0:
            # near-collision: a hexagon squeezed so edges sit inside the ramp
            angles = np.arange(6) * (np.pi / 3.0) + rng.uniform(0, 2 * np.pi)
            pos = rng.uniform(0.45, 1.2) * np.stack(
                [np.cos(angles), np.sin(angles)], axis=1)
            pos += rng.normal(scale=0.05, size=pos.shape)
        else:
            pos = rng.uniform(-6, 6, size=(6, 2))
        _, _, grads, betas, _ = formation.global_potential(pos, spec, g)
        if np.any(betas <= spec.floor_epsilon):
            continue   # below the floor the ramp is flat; skip ambiguity
        i = rng.integers(6)
        fd = np.zeros(2)
        for a in range(2):
            for sign in (1.0, -1.0):
                p = pos.copy()
                p[i, a] += sign * eps
                total = formation.global_potential(p, spec, g)[0]
                fd[a] += sign * total / (2 * eps)
        denom = max(float(np.linalg.norm(fd)), 1e-6)
        rel = float(np.linalg.norm(grads[i] - fd)) / denom
        worst = max(worst, rel)
    return _result("formation-gradient", worst <= 1e-6,
                   f"{trials} configs, worst relative FD mismatch {worst:.3e}")


# --------------------------------------------------------------- full runs

_RUN_CACHE = {}


def _hexagon_runs(quick=False):
    seeds = range(3 if quick else SEED_COUNT)
    out = []
    for seed in seeds:
        key = ("hex", seed, quick)
        if key not in _RUN_CACHE:
            cfg = hexagon_run_config(seed)
            res_f = simkernel.run(cfg)
            res_n = simkernel.run(replace(cfg, mode="ablation"))
            _RUN_CACHE[key] = (res_f, res_n)
        out.append(_RUN_CACHE[key])
    return out


def check_hexagon_tracking(quick=False):
    """Every seed of the reference scenario reaches a round after which the
    total formation potential stays at or below the cap sum plus slack, with
    zero per-step audit violations at 1e-9 tolerance."""
    failures = []
    stats = []
    for res_f, _ in _hexagon_runs(quick):
        cfg = res_f.config
        seed = cfg.seed
        limit = cfg.graph.agent_count * cfg.phi_cap + cfg.slack_c
        above = np.nonzero(res_f.phi_total > limit)[0]
        k0 = int(above[-1]) + 1 if above.size else 0
        if k0 >= cfg.rounds:
            failures.append(f"seed {seed}: potential still above "
                            f"{limit} at the final round")
            continue
        cap = int(res_f.audit_cap_viol.sum())
        glob = int(res_f.audit_global_viol.sum())
        if cap or glob:
            failures.append(f"seed {seed}: {cap} per-agent and {glob} "
                            f"global audit violations")
        stats.append(k0)
    detail = (f"{len(stats)} seeds converged, burn-in range "
              f"[{min(stats)}, {max(stats)}]" if stats else "no seed converged")
    if failures:
        detail += "; " + "; ".join(failures)
    return _result("hexagon-tracking", not failures, detail)


def check_ablation(quick=False):
    """Removing the formation term inflates the mean post-burn-in optimality
    gap by at least 3x in at least 80% of matched-seed runs."""
    ratios = []
    skipped = []
    for res_f, res_n in _hexagon_runs(quick):
        k0 = res_f.metrics["burn_in_k0"]
        if k0 is None:
            skipped.append(res_f.config.seed)
            continue
        gap_f = float(np.nanmean(res_f.oracle_gaps[k0:, :]))
        gap_n = float(np.nanmean(res_n.oracle_gaps[k0:, :]))
        ratios.append(gap_n / gap_f if gap_f > 0 else np.inf)
    total = len(ratios) + len(skipped)
    hits = sum(r >= 3.0 for r in ratios)
    passed = total > 0 and hits >= 0.8 * total
    detail = (f"{hits}/{total} seeds with gap ratio >= 3"
              + (f", ratios min {min(ratios):.2f} median "
                 f"{float(np.median(ratios)):.2f}" if ratios else ""))
    if skipped:
        detail += f"; seeds without burn-in: {skipped}"
    return _result("ablation", passed, detail)


# ------------------------------------------------------------------- bounds

def check_bound_consistency(quick=False):
    """The unrolled recursive bound equals the closed form to 1e-9 relative."""
    rng = np.random.default_rng(505)
    trials = 100 if quick else 1000
    worst = 0.0
    for _ in range(trials):
        s = rng.uniform(0.1, 5.0)
        alpha = rng.uniform(0.01, 0.99) / s
        eta0, eta_star = rng.uniform(0, 2, size=2)
        dbar = rng.uniform(0, 4)
        g = g0 = rng.uniform(0, 50)
        for k in range(rng.integers(5, 60)):
            g = analysis.recursive_bound(g, eta0, eta_star, alpha, s, dbar)
        ana = analysis.analytic_bound(g0, k, eta0, eta_star, alpha, s, dbar)
        worst = max(worst, abs(g - ana) / max(abs(ana), 1e-12))
    return _result("bound-consistency", worst <= 1e-9,
                   f"{trials} draws, worst relative mismatch {worst:.3e}")


def check_oracle_distance_bound(quick=False):
    """With a synthetic bounded-error gradient oracle, the squared distance
    to the moving minimizer stays under the closed-form bound at every round
    and under the asymptotic neighbourhood at the end."""
    g = graph_mod.cycle_graph(3, 2)
    q = np.array([[2.0, 0.3], [0.3, 3.0]])
    region = scenario_mod.Box((-20.0, -20.0), (20.0, 20.0))
    path = scenario_mod.SourcePath(kind="line", start=(0.0, 0.0),
                                   velocity=(0.003, 0.001))
    offsets = {(0, 1): np.array([1.0, 0.0]), (1, 2): np.array([0.0, 1.0]),
               (2, 0): np.array([-1.0, -1.0])}
    spec = formation.FormationSpec(desired_offsets=offsets,
                                   safety_distance=0.2, collision_ramp=0.2)
    dbar = 0.5
    rounds = 600
    seeds = range(3 if quick else SEED_COUNT)
    failures = []
    for seed in seeds:
        scen = scenario_mod.QuadraticSource(q_matrix=q, path=path,
                                            region=region)
        cfg = simkernel.RunConfig(
            graph=g, scenario=scen, formation=spec, rounds=rounds, seed=seed,
            init_box=scenario_mod.Box((8.0, 8.0), (14.0, 14.0)),
            mode="delta-oracle", oracle_delta_bar=dbar)
        res = simkernel.run(cfg)
        c = res.constants
        m = res.metrics["neighborhood_M"]
        sq = np.sum((res.positions - res.oracle_minimizer[:, None, :]) ** 2,
                    axis=2)
        for i in range(g.agent_count):
            ks = np.arange(rounds + 1)
            bounds = analysis.distance_bound(
                sq[0, i], ks - 1, c["eta0"], c["eta_star"], c["alpha"],
                c["s"], dbar)
            bad = np.nonzero(sq[:, i] > bounds + TOLERANCE)[0]
            if bad.size:
                failures.append(
                    f"seed {seed} agent {i}: bound exceeded at round "
                    f"{int(bad[0])} ({sq[bad[0], i]:.6g} > "
                    f"{bounds[bad[0]]:.6g})")
            if sq[-1, i] > m + TOLERANCE:
                failures.append(f"seed {seed} agent {i}: final squared "
                                f"distance {sq[-1, i]:.6g} above M {m:.6g}")
    detail = (f"{len(list(seeds))} seeds, per-round and asymptotic bounds hold"
              if not failures else "; ".join(failures[:4]))
    return _result("oracle-distance-bound", not failures, detail)


def check_determinism(quick=False):
    """Identical config and seed produce byte-identical trajectory files."""
    cfg = replace(hexagon_run_config(3), rounds=300)
    blobs = []
    for _ in range(2):
        with tempfile.TemporaryDirectory() as tmp:
            res = simkernel.run(cfg)
            paths = output.write_bundle(res, tmp)
            with open(paths["trajectory"], "rb") as fh:
                blobs.append(fh.read())
    same = blobs[0] == blobs[1]
    return _result("determinism", same,
                   "byte-identical trajectory CSV" if same
                   else "trajectory CSV differs between identical runs")


CHECKS = {
    "linear-exactness": check_linear_exactness,
    "error-bound-soundness": check_error_bound_soundness,
    "hexagon-constant": check_hexagon_constant,
    "formation-gradient": check_formation_gradient,
    "hexagon-tracking": check_hexagon_tracking,
    "ablation": check_ablation,
    "bound-consistency": check_bound_consistency,
    "oracle-distance-bound": check_oracle_distance_bound,
    "determinism": check_determinism,
}


def run_suite(names=None, quick=False) -> int:
    selected = list(CHECKS) if not names else [n.strip() for n in names]
    unknown = [n for n in selected if n not in CHECKS]
    if unknown:
        print(f"unknown checks: {', '.join(unknown)}; "
              f"available: {', '.join(CHECKS)}")
        return 2
    failures = 0
    for name in selected:
        result = CHECKS[name](quick=quick)
        status = "PASS" if result.passed else "FAIL"
        print(f"{status} {name}: {result.detail}", flush=True)
        failures += not result.passed
    print(f"{len(selected) - failures}/{len(selected)} checks passed")
    return 0 if failures == 0 else 1
