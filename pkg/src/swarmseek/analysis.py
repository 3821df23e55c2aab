"""Convergence bounds and trajectory post-processing.

Implements the effective first-order-oracle error delta_bar, the asymptotic
neighbourhood M, and the recursive / closed-form / squared-distance bounds on
the tracking error, plus the empirical estimation of the constants (gamma,
rho, burn-in round) from a finished trajectory.

Caveat carried over from the source derivation: the squared-distance bound is
obtained by dividing the function-gap bound by 2s, which relies on a
quadratic-growth inequality stated with the opposite direction to the Polyak
condition. The bound is reproduced as stated; its conservatism in practice
comes from the drift constants being region-wide maxima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def delta_bar(delta_k, gamma, rho, lipschitz_L_phi):
    """Oracle error budget: geometric bound + estimate magnitude + formation.

    delta_bar = delta + gamma + L_phi * rho."""
    if min(delta_k, gamma, rho) < 0 or lipschitz_L_phi < 0:
        raise ValueError("error budget components must be nonnegative")
    return delta_k + gamma + lipschitz_L_phi * rho


def neighborhood_M(eta0, eta_star, alpha, s, dbar):
    """(M, contraction): asymptotic squared-distance neighbourhood
    M = (eta0 + eta*) / (2 alpha s^2) + dbar^2 / (4 s^2)
    valid when the contraction factor |1 - alpha s| < 1."""
    if alpha <= 0 or s <= 0:
        raise ValueError("alpha and s must be positive")
    contraction = 1.0 - alpha * s
    if abs(contraction) >= 1.0:
        raise ValueError(f"|1 - alpha*s| = {abs(contraction)} >= 1; no contraction")
    m = (eta0 + eta_star) / (2.0 * alpha * s * s) + dbar * dbar / (4.0 * s * s)
    return m, contraction


def recursive_bound(prev_bound, eta0, eta_star, alpha, s, dbar):
    """One step of the gap recursion:
    (1 - s alpha) * prev + eta0 + eta* + (alpha/2) dbar^2."""
    if prev_bound < 0:
        raise ValueError("previous bound must be nonnegative")
    return (1.0 - s * alpha) * prev_bound + eta0 + eta_star + 0.5 * alpha * dbar * dbar


def bound_limit(eta0, eta_star, alpha, s, dbar):
    """Fixed point of the gap recursion: (eta0 + eta*)/(s alpha) + dbar^2/(2s)."""
    return (eta0 + eta_star) / (s * alpha) + dbar * dbar / (2.0 * s)


def analytic_bound(initial_gap, k, eta0, eta_star, alpha, s, dbar):
    """Closed form of the unrolled recursion: bound on the gap at round k+1
    starting from `initial_gap` at round 0."""
    lim = bound_limit(eta0, eta_star, alpha, s, dbar)
    return lim + (1.0 - s * alpha) ** (k + 1) * (initial_gap - lim)


def distance_bound(initial_sq_dist, k, eta0, eta_star, alpha, s, dbar):
    """Squared-distance bound at round k+1 (gap bound divided by 2s):
    drift floor + saturating dbar term + contracting initial term. Its limit
    equals the neighbourhood M exactly."""
    drift = (eta0 + eta_star) / (2.0 * s * s * alpha)
    decay = (1.0 - s * alpha) ** (k + 1)
    return drift + (1.0 - decay) * dbar * dbar / (4.0 * s * s) \
        + decay * (initial_sq_dist - drift)


@dataclass(frozen=True)
class OracleErrorBudget:
    delta_k: float
    gamma: float
    rho: float
    delta_bar: float


def estimate_rho_gamma(positions, estimates, neighbor_lists, k0,
                       inflation=1.5, gamma_override=None, rho_override=None):
    """Per-agent (rho, gamma) from a trajectory after burn-in.

    gamma_i is the running max of the estimate norm; rho_i the max observed
    neighbour distance, inflated by a safety factor since the converged set
    is only sampled, never computed exactly. Config overrides win verbatim.

    positions: (rounds, n, d); estimates: (rounds, n, d) with NaN on failed
    rounds; k0: burn-in round index.
    """
    rounds, n, _ = positions.shape
    if not 0 <= k0 < rounds:
        raise ValueError("burn-in index outside the trajectory")
    gamma = np.zeros(n)
    rho = np.zeros(n)
    for i in range(n):
        est = estimates[k0:, i, :]
        norms = np.linalg.norm(est, axis=1)
        norms = norms[~np.isnan(norms)]
        gamma[i] = float(norms.max()) if norms.size else 0.0
        far = 0.0
        for j in neighbor_lists[i]:
            d = np.linalg.norm(positions[k0:, i, :] - positions[k0:, j, :], axis=1)
            far = max(far, float(d.max()))
        rho[i] = inflation * far
    if gamma_override is not None:
        gamma = np.full(n, float(gamma_override))
    if rho_override is not None:
        rho = np.full(n, float(rho_override))
    return rho, gamma


def detect_burn_in(phi_totals, cap_sum, slack_c):
    """First round with phi(x_k) <= sum Phi^i + c, or None if never reached."""
    limit = cap_sum + slack_c
    idx = np.nonzero(np.asarray(phi_totals) <= limit)[0]
    return int(idx[0]) if idx.size else None


def track_bounds(gaps, delta_ks, alphas, k0, eta0, eta_star, s, dbar_static):
    """Per-round bound series for one agent, anchored at burn-in.

    alphas vary per round, so the recursion is run conservatively with the
    smallest post-burn-in alpha in the contraction and the largest in the
    additive error term. Returns (recursive, analytic, distance) arrays with
    NaN before k0.
    """
    rounds = len(gaps)
    rec = np.full(rounds, np.nan)
    ana = np.full(rounds, np.nan)
    dist = np.full(rounds, np.nan)
    a = np.asarray(alphas[k0:], dtype=float)
    a = a[~np.isnan(a)]
    if a.size == 0:
        return rec, ana, dist
    a_min, a_max = float(a.min()), float(a.max())
    add = eta0 + eta_star + 0.5 * a_max * dbar_static ** 2
    lim = add / (s * a_min)
    g0 = gaps[k0]
    rec[k0] = ana[k0] = g0
    dist[k0] = g0 / (2.0 * s)
    decay = 1.0 - s * a_min
    for k in range(k0 + 1, rounds):
        rec[k] = decay * rec[k - 1] + add
        ana[k] = lim + decay ** (k - k0) * (g0 - lim)
        dist[k] = ana[k] / (2.0 * s)
    return rec, ana, dist
