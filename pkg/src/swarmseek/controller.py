"""Per-agent control law and runtime descent audits.

Each round an agent blends its gradient estimate with the formation gradient,
p = lambda * Lambda + (1 - lambda) * grad_i phi, takes a step x <- x - alpha p,
and the audit re-checks the per-step descent inequalities that the formation
boundedness argument relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

AUDIT_TOLERANCE = 1e-9

SIGMA_FUNCTIONS = {
    "square": lambda z: z * z,
    "identity": lambda z: z,
}


@dataclass(frozen=True)
class ControlParams:
    lipschitz_L: float
    lipschitz_L_phi: float
    phi_caps: np.ndarray               # Phi^i per agent, positive
    slack_c: float = 0.1
    lambda_nominal: float = 1.0
    sigma_name: str = "square"
    alpha_policy: str = "fraction"     # "fraction" or "fixed"
    alpha_value: float = 0.99          # fraction of interval top, or fixed alpha

    def __post_init__(self):
        if self.slack_c <= 0:
            raise ValueError("slack c must be positive")
        if not 0.0 <= self.lambda_nominal <= 1.0:
            raise ValueError("lambda_nominal must lie in [0, 1]")
        caps = np.asarray(self.phi_caps, dtype=float)
        if np.any(caps <= 0):
            raise ValueError("phi caps must be positive")
        object.__setattr__(self, "phi_caps", caps)
        if self.sigma_name not in SIGMA_FUNCTIONS:
            raise ValueError(f"unknown sigma {self.sigma_name!r}")
        if self.alpha_policy not in ("fraction", "fixed"):
            raise ValueError(f"unknown alpha policy {self.alpha_policy!r}")

    @property
    def sigma(self):
        return SIGMA_FUNCTIONS[self.sigma_name]


@dataclass(frozen=True)
class StepPlan:
    p_dir: np.ndarray
    lam: float
    alpha: float
    alpha_bar: float
    u: np.ndarray
    estimation_failed: bool = False
    lambda_capped: bool = False


def compute_lambda(grad_phi_i, lambda_vec, phi_i_val, phi_cap, params):
    """Focus weight between minimization and formation control.

    lambda = lambda_nominal * min(1, ||grad_i phi|| / ||Lambda - grad_i phi||
    * sigma(Phi) / sigma(phi_i)). Degenerate denominators (estimate equal to
    the formation gradient, or perfect formation) resolve to the cap, since
    the step direction is the same vector either way.
    """
    sigma = params.sigma
    diff = float(np.linalg.norm(np.asarray(lambda_vec) - np.asarray(grad_phi_i)))
    sig_phi = sigma(phi_i_val)
    if diff == 0.0 or sig_phi == 0.0:
        return params.lambda_nominal, True
    ratio = (float(np.linalg.norm(grad_phi_i)) / diff) * (sigma(phi_cap) / sig_phi)
    capped = ratio >= 1.0
    return params.lambda_nominal * min(1.0, ratio), capped


def compute_alpha(lambda_vec, grad_phi_i, params):
    """(alpha, alpha_bar): alpha_bar = 2c / ||Lambda - grad_i phi||^2, and
    alpha is chosen inside (0, min(1/L_phi, 1/L, alpha_bar)]."""
    diff_sq = float(np.sum((np.asarray(lambda_vec) - np.asarray(grad_phi_i)) ** 2))
    alpha_bar = np.inf if diff_sq == 0.0 else 2.0 * params.slack_c / diff_sq
    top = min(1.0 / params.lipschitz_L_phi, 1.0 / params.lipschitz_L, alpha_bar)
    if params.alpha_policy == "fraction":
        alpha = params.alpha_value * top
    else:
        alpha = params.alpha_value
        if not 0.0 < alpha <= top:
            raise ValueError(
                f"fixed alpha {alpha} outside admissible interval (0, {top:.6g}]")
    return alpha, alpha_bar


def step_direction(lam, lambda_vec, grad_phi_i):
    lam = float(lam)
    return lam * np.asarray(lambda_vec) + (1.0 - lam) * np.asarray(grad_phi_i)


def make_plan(lambda_vec, grad_phi_i, phi_i_val, phi_cap, params,
              estimation_failed=False):
    """Full per-agent decision for one round.

    On estimation failure the agent falls back to pure formation control
    (lambda = 0, Lambda treated as the formation gradient)."""
    if estimation_failed:
        lambda_vec = np.asarray(grad_phi_i)
        lam, capped = 0.0, False
    else:
        lam, capped = compute_lambda(grad_phi_i, lambda_vec, phi_i_val,
                                     phi_cap, params)
    alpha, alpha_bar = compute_alpha(lambda_vec, grad_phi_i, params)
    p = step_direction(lam, lambda_vec, grad_phi_i)
    return StepPlan(p_dir=p, lam=lam, alpha=alpha, alpha_bar=alpha_bar,
                    u=-alpha * p, estimation_failed=estimation_failed,
                    lambda_capped=capped)


def apply_step(positions, plans):
    """Synchronous update of all agents from the same round snapshot."""
    positions = np.asarray(positions, dtype=float)
    return positions + np.stack([p.u for p in plans])


@dataclass(frozen=True)
class AuditRecord:
    agent: int
    case: str                 # "above_cap" or "below_cap"
    phi_change: float         # realized change of phi_i (diagnostic)
    change_limit: float       # 0 for above_cap, c for below_cap
    quad_form: float          # (a/2) lam^2 ||Lambda - grad phi||^2 - (a/2)||grad phi||^2
    violated_cap: bool        # quad_form exceeded its case limit
    realized_exceeds: bool    # realized phi_i change exceeded the case limit

    @property
    def violated(self):
        return self.violated_cap


@dataclass(frozen=True)
class GlobalAuditRecord:
    phi_change: float          # realized change of the global potential
    descent_limit: float       # sum of per-agent quad forms
    violated: bool


def descent_audit(phi_before, phi_after, grad_phi, lambda_vecs, plans, params,
                  tolerance=AUDIT_TOLERANCE):
    """Check the per-step descent inequalities for every agent.

    The guaranteed inequalities are audited as violations: each agent's
    quadratic form is <= 0 above its cap (by the focus-weight rule) and <= c
    below it (by the step-size cap), and the realized change of the *global*
    potential is bounded by the sum of the quadratic forms whenever L_phi is
    a true Lipschitz constant -- so a global violation flags an undersized
    empirical L_phi. The per-agent realized changes are recorded as
    diagnostics: they are not implied pointwise (an agent's potential can
    rise because its neighbours move) even though the network-wide sum is.

    Returns (per-agent records, global record); violations are data, the run
    continues.
    """
    records = []
    quad_sum = 0.0
    for i, plan in enumerate(plans):
        change = float(phi_after[i] - phi_before[i])
        above = phi_before[i] >= params.phi_caps[i]
        limit = 0.0 if above else params.slack_c
        diff_sq = float(np.sum((np.asarray(lambda_vecs[i]) - grad_phi[i]) ** 2))
        quad = 0.5 * plan.alpha * (plan.lam ** 2) * diff_sq \
            - 0.5 * plan.alpha * float(grad_phi[i] @ grad_phi[i])
        quad_sum += quad
        records.append(AuditRecord(
            agent=i,
            case="above_cap" if above else "below_cap",
            phi_change=change,
            change_limit=limit,
            quad_form=quad,
            violated_cap=quad > limit + tolerance,
            realized_exceeds=change > limit + tolerance,
        ))
    total_change = float(np.sum(phi_after) - np.sum(phi_before))
    glob = GlobalAuditRecord(
        phi_change=total_change,
        descent_limit=quad_sum,
        violated=total_change > quad_sum + tolerance,
    )
    return records, glob
