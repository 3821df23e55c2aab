"""Deterministic synchronous-round simulation loop.

One round: measure -> estimate gradients -> formation gradients -> focus
weight -> step size -> synchronous position update -> descent audit. The
seed fully determines a run; trajectories are reproducible byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import analysis, controller, estimator, formation, graph as graph_mod
from .scenario import Box, measure

MODES = ("network", "ablation", "delta-oracle")


class ConfigError(Exception):
    """Run configuration failed validation before round 0."""


@dataclass(frozen=True)
class RunConfig:
    graph: graph_mod.TopologyGraph
    scenario: object
    formation: formation.FormationSpec
    rounds: int
    seed: int
    init_box: Box
    init_order: str = "sampled"       # "sampled" | "ring" (angular slot order)
    mode: str = "network"
    lambda_nominal: float = 1.0
    phi_cap: float = 1.0
    slack_c: float = 0.1
    sigma_name: str = "square"
    alpha_policy: str = "fraction"
    alpha_value: float = 0.99
    l_phi_override: float = None
    l_phi_safety: float = 2.0
    oracle_delta_bar: float = 0.0     # delta-oracle mode
    oracle_alpha: float = None        # delta-oracle mode; default 0.99/L
    gamma_override: float = None
    rho_override: float = None


@dataclass
class RunResult:
    config: RunConfig
    positions: np.ndarray        # (rounds+1, n, d)
    measurements: np.ndarray     # (rounds+1, n)
    in_region: np.ndarray        # (rounds+1, n) bool
    estimates: np.ndarray        # (rounds, n, d), NaN on failure
    delta_bounds: np.ndarray     # (rounds, n)
    best_pairs: np.ndarray       # (rounds, n, 2), -1 when absent
    gram_conds: np.ndarray       # (rounds, n)
    containment: np.ndarray      # (rounds, n) int: 1 ok, 0 violated, -1 n/a
    phi_vals: np.ndarray         # (rounds+1, n)
    phi_total: np.ndarray        # (rounds+1,)
    betas: np.ndarray            # (rounds+1, n)
    grad_phi: np.ndarray         # (rounds, n, d)
    lams: np.ndarray             # (rounds, n)
    alphas: np.ndarray           # (rounds, n)
    alpha_bars: np.ndarray       # (rounds, n)
    p_norms: np.ndarray          # (rounds, n)
    est_failed: np.ndarray       # (rounds, n) bool
    lambda_capped: np.ndarray    # (rounds, n) bool
    near_collision: np.ndarray   # (rounds+1, n) bool
    audit_cap_viol: np.ndarray       # (rounds, n) bool: quad form beyond its case limit
    audit_realized: np.ndarray       # (rounds, n) bool: realized phi_i rise (diagnostic)
    audit_global_viol: np.ndarray    # (rounds,) bool: global descent inequality failed
    audit_cases: np.ndarray          # (rounds, n) "a"/"b"/"-"
    oracle_grads: np.ndarray     # (rounds+1, n, d)
    oracle_gaps: np.ndarray      # (rounds+1, n)
    oracle_minimizer: np.ndarray  # (rounds+1, d)
    constants: dict = field(default_factory=dict)
    metrics: dict = field(default_factory=dict)
    bounds: dict = field(default_factory=dict)   # per-agent bound tracks


def _validate(config: RunConfig):
    problems = []
    if config.mode not in MODES:
        problems.append(f"unknown mode {config.mode!r}")
    for v in graph_mod.validate(config.graph):
        problems.append(f"graph: {v.message}")
    if config.rounds < 0:
        problems.append("rounds must be >= 0")
    if config.init_box.dim != config.graph.dimension:
        problems.append("init box dimension does not match graph dimension")
    if config.init_order not in ("sampled", "ring"):
        problems.append(f"unknown init_order {config.init_order!r}")
    elif config.init_order == "ring" and config.graph.dimension != 2:
        problems.append("init_order 'ring' requires dimension 2")
    missing = [e for e in config.graph.edges
               if e not in config.formation.desired_offsets]
    if missing:
        problems.append(f"formation offsets missing for edges {sorted(missing)}")
    if problems:
        raise ConfigError("; ".join(problems))


def _initial_positions(config: RunConfig, rng):
    pos = config.init_box.sample(rng, config.graph.agent_count)
    if config.init_order == "ring":
        pos = pos[formation.ring_assignment(pos, config.formation, config.graph)]
    return pos


def run(config: RunConfig) -> RunResult:
    """Execute a run in the configured mode; see module docstring."""
    _validate(config)
    if config.mode == "delta-oracle":
        return _run_delta_oracle(config)
    return _run_network(config, with_formation=(config.mode == "network"))


def run_no_formation(config: RunConfig) -> RunResult:
    """Ablation: same loop with the formation influence removed."""
    return run(replace(config, mode="ablation"))


def run_delta_oracle(config: RunConfig, delta_bar=None) -> RunResult:
    cfg = replace(config, mode="delta-oracle")
    if delta_bar is not None:
        cfg = replace(cfg, oracle_delta_bar=float(delta_bar))
    return run(cfg)


def _alloc(config):
    n = config.graph.agent_count
    d = config.graph.dimension
    r = config.rounds
    return RunResult(
        config=config,
        positions=np.full((r + 1, n, d), np.nan),
        measurements=np.full((r + 1, n), np.nan),
        in_region=np.ones((r + 1, n), dtype=bool),
        estimates=np.full((r, n, d), np.nan),
        delta_bounds=np.full((r, n), np.nan),
        best_pairs=np.full((r, n, 2), -1, dtype=int),
        gram_conds=np.full((r, n), np.nan),
        containment=np.full((r, n), -1, dtype=int),
        phi_vals=np.full((r + 1, n), np.nan),
        phi_total=np.full(r + 1, np.nan),
        betas=np.full((r + 1, n), np.nan),
        grad_phi=np.full((r, n, d), np.nan),
        lams=np.full((r, n), np.nan),
        alphas=np.full((r, n), np.nan),
        alpha_bars=np.full((r, n), np.nan),
        p_norms=np.full((r, n), np.nan),
        est_failed=np.zeros((r, n), dtype=bool),
        lambda_capped=np.zeros((r, n), dtype=bool),
        near_collision=np.zeros((r + 1, n), dtype=bool),
        audit_cap_viol=np.zeros((r, n), dtype=bool),
        audit_realized=np.zeros((r, n), dtype=bool),
        audit_global_viol=np.zeros(r, dtype=bool),
        audit_cases=np.full((r, n), "-", dtype="U1"),
        oracle_grads=np.full((r + 1, n, d), np.nan),
        oracle_gaps=np.full((r + 1, n), np.nan),
        oracle_minimizer=np.full((r + 1, d), np.nan),
    )


def _record_oracle(res, config, pos, k):
    scen = config.scenario
    xs, fstar = scen.minimizer(k)
    res.oracle_minimizer[k] = xs
    if hasattr(scen, "gradient_batch"):
        res.oracle_grads[k] = scen.gradient_batch(pos, k)
        res.oracle_gaps[k] = scen.evaluate_batch(pos, k) - fstar
    else:
        for i in range(pos.shape[0]):
            res.oracle_grads[k, i] = scen.true_gradient(pos[i], k)
            res.oracle_gaps[k, i] = scen.evaluate(pos[i], k) - fstar


def _run_network(config: RunConfig, with_formation: bool) -> RunResult:
    rng = np.random.default_rng(config.seed)
    g = config.graph
    n = g.agent_count
    scen = config.scenario
    res = _alloc(config)

    L, s, eta0, eta_star = _scenario_constants(scen, config)
    if with_formation:
        l_phi = formation.estimate_lipschitz_phi(
            config.formation, g, scen.region,
            rng=np.random.default_rng(config.seed + 1),
            safety_factor=config.l_phi_safety, override=config.l_phi_override)
    else:
        l_phi = L  # unused beyond the step-size interval; keeps alpha <= 1/L
    params = controller.ControlParams(
        lipschitz_L=L, lipschitz_L_phi=l_phi,
        phi_caps=np.full(n, config.phi_cap), slack_c=config.slack_c,
        lambda_nominal=config.lambda_nominal, sigma_name=config.sigma_name,
        alpha_policy=config.alpha_policy, alpha_value=config.alpha_value)
    res.constants = dict(L=L, s=s, eta0=eta0, eta_star=eta_star, L_phi=l_phi)

    pos = _initial_positions(config, rng)
    coincidence = estimator.COINCIDENCE_EPSILON * config.formation.scale
    neighbor_lists = [g.neighbors(i) for i in range(n)]

    phi_vals = grad_phi = None
    for k in range(config.rounds + 1):
        res.positions[k] = pos
        y, inr = measure(scen, pos, k)
        res.measurements[k] = y
        res.in_region[k] = inr
        _record_oracle(res, config, pos, k)
        if with_formation:
            if phi_vals is None:
                _, phi_vals, grad_phi, betas, near = formation.global_potential(
                    pos, config.formation, g)
            else:
                betas, near = res._next_betas, res._next_near
            res.phi_vals[k] = phi_vals
            res.phi_total[k] = phi_vals.sum()
            res.betas[k] = betas
            res.near_collision[k] = near
        if k == config.rounds:
            break

        plans = []
        lambda_vecs = np.zeros((n, g.dimension))
        for i in range(n):
            gphi = grad_phi[i] if with_formation else np.zeros(g.dimension)
            res.grad_phi[k, i] = gphi
            failed = False
            try:
                samples = estimator.directional_samples(
                    i, pos, y, neighbor_lists[i], L, coincidence_epsilon=coincidence)
                lam_vec, cond = estimator.estimate_gradient(samples)
                db, pair = estimator.error_bound(samples, L)
                res.estimates[k, i] = lam_vec
                res.gram_conds[k, i] = cond
                res.delta_bounds[k, i] = db
                if pair is not None:
                    res.best_pairs[k, i] = pair
                    by_nbr = {sm.neighbor: sm for sm in samples}
                    res.containment[k, i] = int(estimator.containment_check(
                        by_nbr[pair[0]], by_nbr[pair[1]], lam_vec))
                lambda_vecs[i] = lam_vec
            except estimator.EstimationError:
                failed = True
                res.est_failed[k, i] = True

            if with_formation:
                plan = controller.make_plan(
                    lambda_vecs[i] if not failed else None, gphi,
                    float(phi_vals[i]), float(params.phi_caps[i]), params,
                    estimation_failed=failed)
                if failed:
                    lambda_vecs[i] = gphi  # audit treats fallback as pure formation
            else:
                if failed:
                    plan = controller.StepPlan(
                        p_dir=np.zeros(g.dimension), lam=1.0, alpha=0.0,
                        alpha_bar=np.inf, u=np.zeros(g.dimension),
                        estimation_failed=True)  # skip-step: hold position
                else:
                    # lambda == 1, no phi terms; the step cap from the
                    # admissible interval still applies (it bounds the
                    # per-round displacement and keeps the run stable)
                    p = lambda_vecs[i]
                    psq = float(p @ p)
                    alpha_bar = np.inf if psq == 0.0 else 2.0 * params.slack_c / psq
                    if params.alpha_policy == "fraction":
                        alpha = params.alpha_value * min(1.0 / L, alpha_bar)
                    else:
                        alpha = params.alpha_value
                    plan = controller.StepPlan(
                        p_dir=p, lam=1.0, alpha=alpha, alpha_bar=alpha_bar,
                        u=-alpha * p)
            plans.append(plan)
            res.lams[k, i] = plan.lam
            res.alphas[k, i] = plan.alpha
            res.alpha_bars[k, i] = plan.alpha_bar
            res.p_norms[k, i] = float(np.linalg.norm(plan.p_dir))

        new_pos = controller.apply_step(pos, plans)

        if with_formation:
            _, next_phi, next_grad, next_betas, next_near = \
                formation.global_potential(new_pos, config.formation, g)
            audits, glob = controller.descent_audit(
                phi_vals, next_phi, grad_phi, lambda_vecs, plans, params)
            for rec in audits:
                res.audit_cases[k, rec.agent] = "a" if rec.case == "above_cap" else "b"
                res.audit_cap_viol[k, rec.agent] = rec.violated_cap
                res.audit_realized[k, rec.agent] = rec.realized_exceeds
            res.audit_global_viol[k] = glob.violated
            phi_vals, grad_phi = next_phi, next_grad
            res._next_betas, res._next_near = next_betas, next_near
        pos = new_pos

    _post_process(res, with_formation)
    return res


def _scenario_constants(scen, config):
    # quadratic scenarios derive their drift constants from the horizon;
    # user-supplied scenarios carry their own.
    if scen.drift_eta0 is None or scen.drift_eta_star is None:
        from .scenario import analytic_constants
        L, s, eta0, eta_star = analytic_constants(scen, scen.region,
                                                  max(config.rounds, 1))
        scen.drift_eta0 = eta0
        scen.drift_eta_star = eta_star
        return L, s, eta0, eta_star
    return scen.lipschitz_L, scen.polyak_s, scen.drift_eta0, scen.drift_eta_star


def _run_delta_oracle(config: RunConfig) -> RunResult:
    """Agents query the true gradient plus an adversarial perturbation of
    norm exactly delta_bar (anti-gradient when the gradient is nonzero)."""
    rng = np.random.default_rng(config.seed)
    g = config.graph
    n = g.agent_count
    scen = config.scenario
    res = _alloc(config)
    L, s, eta0, eta_star = _scenario_constants(scen, config)
    alpha = config.oracle_alpha if config.oracle_alpha is not None else 0.99 / L
    if abs(1.0 - alpha * s) >= 1.0:
        raise ConfigError(f"oracle alpha {alpha} violates |1 - alpha*s| < 1")
    dbar = float(config.oracle_delta_bar)
    res.constants = dict(L=L, s=s, eta0=eta0, eta_star=eta_star,
                         alpha=alpha, delta_bar=dbar)

    pos = _initial_positions(config, rng)
    for k in range(config.rounds + 1):
        res.positions[k] = pos
        y, inr = measure(scen, pos, k)
        res.measurements[k] = y
        res.in_region[k] = inr
        _record_oracle(res, config, pos, k)
        if k == config.rounds:
            break
        new_pos = np.empty_like(pos)
        for i in range(n):
            grad = scen.true_gradient(pos[i], k)
            gn = float(np.linalg.norm(grad))
            if gn > 0:
                direction = -grad / gn
            else:
                v = rng.normal(size=g.dimension)
                direction = v / np.linalg.norm(v)
            p = grad + dbar * direction
            res.estimates[k, i] = p
            res.lams[k, i] = 1.0
            res.alphas[k, i] = alpha
            res.p_norms[k, i] = float(np.linalg.norm(p))
            new_pos[i] = pos[i] - alpha * p
        pos = new_pos

    res.metrics = _oracle_metrics(res)
    return res


def _oracle_metrics(res):
    cfg = res.config
    c = res.constants
    sq_dist = np.sum(
        (res.positions - res.oracle_minimizer[:, None, :]) ** 2, axis=2)
    m, contraction = analysis.neighborhood_M(
        c["eta0"], c["eta_star"], c["alpha"], c["s"], c["delta_bar"])
    return dict(
        mode=cfg.mode, seed=cfg.seed, rounds=cfg.rounds,
        neighborhood_M=m, contraction=contraction,
        max_sq_dist=float(np.nanmax(sq_dist)) if sq_dist.size else None,
        final_sq_dist=sq_dist[-1].tolist(),
    )


def _post_process(res: RunResult, with_formation: bool):
    cfg = res.config
    n = cfg.graph.agent_count
    c = res.constants
    metrics = dict(mode=cfg.mode, seed=cfg.seed, rounds=cfg.rounds,
                   constants=c,
                   estimation_failures=int(res.est_failed.sum()),
                   out_of_region_rounds=int((~res.in_region).sum()),
                   audit_cap_violations=int(res.audit_cap_viol.sum()),
                   audit_global_violations=int(res.audit_global_viol.sum()),
                   audit_realized_rises=int(res.audit_realized.sum()),
                   near_collision_events=int(res.near_collision.sum()))

    k0 = None
    if with_formation and cfg.rounds > 0:
        k0 = analysis.detect_burn_in(
            res.phi_total[:-1], n * cfg.phi_cap, cfg.slack_c)
    metrics["burn_in_k0"] = k0

    per_agent = []
    if k0 is not None and cfg.rounds > 0:
        neighbor_lists = [cfg.graph.neighbors(i) for i in range(n)]
        rho, gamma = analysis.estimate_rho_gamma(
            res.positions[:cfg.rounds], res.estimates, neighbor_lists, k0,
            gamma_override=cfg.gamma_override, rho_override=cfg.rho_override)
        for i in range(n):
            deltas = res.delta_bounds[k0:, i]
            deltas = deltas[np.isfinite(deltas)]
            dmax = float(deltas.max()) if deltas.size else np.inf
            dbar = analysis.delta_bar(dmax, float(gamma[i]), float(rho[i]),
                                      c["L_phi"])
            a = res.alphas[k0:, i]
            a = a[~np.isnan(a)]
            a_min = float(a.min()) if a.size else None
            entry = dict(agent=i, gamma=float(gamma[i]), rho=float(rho[i]),
                         delta_max=dmax, delta_bar=dbar, k0=k0,
                         alpha_min=a_min,
                         mean_post_burn_in_gap=float(
                             np.nanmean(res.oracle_gaps[k0:, i])))
            if a_min and 0.0 < a_min * c["s"] < 2.0 and np.isfinite(dbar):
                m, _ = analysis.neighborhood_M(
                    c["eta0"], c["eta_star"], a_min, c["s"], dbar)
                entry["neighborhood_M"] = m
            else:
                entry["neighborhood_M"] = None
            per_agent.append(entry)
            if np.isfinite(dbar):
                rec, ana, dist = analysis.track_bounds(
                    res.oracle_gaps[:cfg.rounds, i],
                    res.delta_bounds[:, i], res.alphas[:, i], k0,
                    c["eta0"], c["eta_star"], c["s"], dbar)
                res.bounds[i] = dict(recursive=rec, analytic=ana, distance=dist)
    else:
        for i in range(n):
            per_agent.append(dict(
                agent=i, gamma=None, rho=None, delta_max=None, delta_bar=None,
                k0=None, alpha_min=None, neighborhood_M=None,
                mean_post_burn_in_gap=None))
        if with_formation and cfg.rounds > 0:
            metrics["bounds_unavailable"] = "burn-in never reached"
    metrics["per_agent"] = per_agent
    metrics["mean_post_burn_in_gap"] = (
        float(np.nanmean(res.oracle_gaps[k0:, :])) if k0 is not None else None)
    res.metrics = metrics
