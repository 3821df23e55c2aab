"""Gradient estimation from neighbour measurements.

Each neighbour j of agent i contributes a directional difference quotient
d_ji = (y_j - y_i) / ||x_j - x_i|| along the unit vector v_ji. The estimate
solves the (possibly overdetermined) system <v_ji, G> = d_ji in the
least-squares sense. In the plane, any non-collinear neighbour pair (j, l)
confines the true gradient to a parallelogram whose longer diagonal bounds
the estimation error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

COINCIDENCE_EPSILON = 1e-9   # scaled by formation scale at call sites
COLLINEARITY_EPSILON = 1e-6
GRAM_CONDITION_LIMIT = 1e8


class EstimationError(Exception):
    """Gradient estimation is impossible for this agent this round."""


@dataclass(frozen=True)
class DirectionalSample:
    neighbor: int
    direction: np.ndarray        # unit vector toward the neighbour
    difference_quotient: float   # measured slope toward the neighbour
    half_width: float            # (L/2) * separation, the slope uncertainty
    separation: float

    @property
    def offset(self) -> np.ndarray:
        """Relative position x_j - x_i of the neighbour."""
        return self.direction * self.separation


@dataclass(frozen=True)
class GradientEstimate:
    lambda_vec: np.ndarray
    error_bound: float
    best_pair: tuple             # neighbour indices attaining the bound, or None
    gram_condition: float


def directional_samples(i, positions, measurements, neighbors, lipschitz_L,
                        coincidence_epsilon=COINCIDENCE_EPSILON):
    """One DirectionalSample per neighbour of agent i, in neighbour order."""
    xi = np.asarray(positions[i], dtype=float)
    yi = float(measurements[i])
    samples = []
    for j in neighbors:
        off = np.asarray(positions[j], dtype=float) - xi
        sep = float(np.linalg.norm(off))
        if sep <= coincidence_epsilon:
            raise EstimationError(f"agents {i} and {j} coincide (separation {sep:.3e})")
        samples.append(DirectionalSample(
            neighbor=j,
            direction=off / sep,
            difference_quotient=(float(measurements[j]) - yi) / sep,
            half_width=0.5 * lipschitz_L * sep,
            separation=sep,
        ))
    return samples


def estimate_gradient(samples, condition_limit=GRAM_CONDITION_LIMIT):
    """Least-squares gradient estimate; returns (lambda_vec, gram_condition).

    Solved by orthogonal factorization rather than forming the inverse of the
    direction Gram matrix, which is fragile near collinearity.
    """
    if not samples:
        raise EstimationError("no neighbour samples")
    v = np.stack([s.direction for s in samples])
    d = np.array([s.difference_quotient for s in samples])
    dim = v.shape[1]
    lam, _, rank, sv = np.linalg.lstsq(v, d, rcond=None)
    if rank < dim or sv[-1] == 0.0:
        raise EstimationError("neighbour directions are rank deficient")
    gram_cond = float((sv[0] / sv[-1]) ** 2)
    if gram_cond > condition_limit:
        raise EstimationError(
            f"direction Gram matrix ill-conditioned (cond {gram_cond:.3e})")
    return lam, gram_cond


def _rot90(v):
    return np.array([-v[1], v[0]])


def error_bound(samples, lipschitz_L, collinearity_epsilon=COLLINEARITY_EPSILON):
    """Planar error bound: min over neighbour pairs of the longer
    parallelogram diagonal, L / |<v_l, rot90(v_j)>| * max(||x_j + x_l||, ||x_j - x_l||)
    with offsets relative to agent i. Returns (bound, best_pair); the bound is
    inf when every pair is collinear.
    """
    if samples and samples[0].direction.shape[0] != 2:
        raise ValueError("error_bound is defined for d=2 only")
    best = np.inf
    best_pair = None
    for a in range(len(samples)):
        for b in range(a + 1, len(samples)):
            sj, sl = samples[a], samples[b]
            sine = abs(float(sl.direction @ _rot90(sj.direction)))
            if sine <= collinearity_epsilon:
                continue
            oj, ol = sj.offset, sl.offset
            diag = max(np.linalg.norm(oj + ol), np.linalg.norm(oj - ol))
            cand = lipschitz_L * diag / sine
            if cand < best:
                best = cand
                best_pair = (sj.neighbor, sl.neighbor)
    return float(best), best_pair


def containment_check(sample_j, sample_l, lambda_vec, slack=1e-12):
    """True iff lambda_vec lies in the band intersection of the pair."""
    for s in (sample_j, sample_l):
        resid = abs(float(s.direction @ lambda_vec) - s.difference_quotient)
        if resid > s.half_width + slack:
            return False
    return True
