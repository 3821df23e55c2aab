"""Time-varying objective fields and their analytic ground truth.

Agents may only consume function values through :func:`measure`. Gradients,
minimizers and the analytic constants (L, s, eta0, eta_star) exist purely for
validation and bound computation, and are written to oracle-only outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Box:
    """Axis-aligned operating region."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi):
            raise ValueError("lo/hi dimension mismatch")
        if any(l >= h for l, h in zip(self.lo, self.hi)):
            raise ValueError("box must have positive extent")

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, x) -> bool:
        return bool(np.all(np.asarray(self.lo) <= x) and np.all(x <= np.asarray(self.hi)))

    def corners(self) -> np.ndarray:
        d = self.dim
        out = np.empty((2 ** d, d))
        for m in range(2 ** d):
            for a in range(d):
                out[m, a] = self.hi[a] if (m >> a) & 1 else self.lo[a]
        return out

    def sample(self, rng, size) -> np.ndarray:
        lo = np.asarray(self.lo)
        hi = np.asarray(self.hi)
        return rng.uniform(lo, hi, size=tuple(np.atleast_1d(size)) + (self.dim,))


@dataclass(frozen=True)
class SourcePath:
    """Constant-speed trajectory of the source (the minimizer of f_k).

    kind "line":   position(k) = start + k * velocity
    kind "circle": position(k) = center + radius * (cos, sin)(rate * k + phase)
    """

    kind: str = "circle"
    start: tuple = (0.0, 0.0)       # line
    velocity: tuple = (0.0, 0.0)    # line, per round
    center: tuple = (0.0, 0.0)      # circle
    radius: float = 0.0             # circle
    rate: float = 0.0               # circle, radians per round
    phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("line", "circle"):
            raise ValueError(f"unknown path kind {self.kind!r}")

    def position(self, k) -> np.ndarray:
        if self.kind == "line":
            return np.asarray(self.start) + k * np.asarray(self.velocity)
        ang = self.rate * k + self.phase
        return np.asarray(self.center) + self.radius * np.array([np.cos(ang), np.sin(ang)])


class ObjectiveScenario:
    """Interface for a time-varying field. Subclass or duck-type.

    Attributes: lipschitz_L, polyak_s, drift_eta0, drift_eta_star, region.
    Methods: evaluate(x, k), true_gradient(x, k), minimizer(k), optimal_value(k).
    """


class QuadraticSource(ObjectiveScenario):
    """f_k(x) = x^T Q x + zeta(k)^T x with Q symmetric PSD.

    The linear term translates the quadratic so its minimizer follows `path`
    at constant speed: zeta(k) = -(Q + Q^T) path(k).
    """

    def __init__(self, q_matrix, path: SourcePath, region: Box):
        q = np.asarray(q_matrix, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be square")
        if not np.allclose(q, q.T, atol=1e-12):
            raise ValueError("Q must be symmetric")
        hess = q + q.T
        eig = np.linalg.eigvalsh(hess)
        if eig[0] <= 1e-12:
            raise ValueError("Q + Q^T must be positive definite (minimizer undefined otherwise)")
        self.q = q
        self.hessian = hess
        self.path = path
        self.region = region
        self.lipschitz_L = float(eig[-1])
        self.polyak_s = float(eig[0])
        # drift constants are horizon-dependent; filled in by analytic_constants
        self.drift_eta0 = None
        self.drift_eta_star = None

    @property
    def dim(self):
        return self.q.shape[0]

    def zeta(self, k) -> np.ndarray:
        return -self.hessian @ self.path.position(k)

    def evaluate(self, x, k) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ self.q @ x + self.zeta(k) @ x)

    def true_gradient(self, x, k) -> np.ndarray:
        return self.hessian @ np.asarray(x, dtype=float) + self.zeta(k)

    def evaluate_batch(self, xs, k) -> np.ndarray:
        """Vectorized evaluate over rows of xs."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return np.einsum("ni,ij,nj->n", xs, self.q, xs) + xs @ self.zeta(k)

    def gradient_batch(self, xs, k) -> np.ndarray:
        """Vectorized true_gradient over rows of xs (validation channel)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        return xs @ self.hessian + self.zeta(k)

    def minimizer(self, k):
        """Returns (x*_k, f_k(x*_k))."""
        xs = self.path.position(k)
        return xs, self.evaluate(xs, k)


def measure(scenario, positions, k):
    """Zeroth-order oracle: y_k^i = f_k(x_k^i) for every agent.

    Returns (values, in_region). Out-of-region positions still get exact
    values but are flagged, since the assumption constants are only certified
    inside the operating region.
    """
    positions = np.atleast_2d(positions)
    if hasattr(scenario, "evaluate_batch"):
        values = scenario.evaluate_batch(positions, k)
    else:
        values = np.array([scenario.evaluate(x, k) for x in positions])
    lo, hi = np.asarray(scenario.region.lo), np.asarray(scenario.region.hi)
    in_region = np.all((positions >= lo) & (positions <= hi), axis=1)
    return values, in_region


def analytic_constants(quad: QuadraticSource, region: Box, rounds: int):
    """(L, s, eta0, eta_star) for a quadratic source over a finite horizon.

    L and s are the extreme eigenvalues of Q + Q^T. The drift constants are
    exact maxima over the horizon: |f_{k+1}(x) - f_k(x)| = |dzeta^T x| peaks
    at a corner of the region, and eta_star comes from the optimal values.
    A moving quadratic has unbounded drift over all of R^d, so eta0 is only
    meaningful over the declared region.
    """
    L = quad.lipschitz_L
    s = quad.polyak_s
    corners = region.corners()
    eta0 = 0.0
    eta_star = 0.0
    fstar_prev = quad.minimizer(0)[1]
    zeta_prev = quad.zeta(0)
    for k in range(1, rounds + 1):
        zeta_k = quad.zeta(k)
        dz = zeta_k - zeta_prev
        eta0 = max(eta0, float(np.max(np.abs(corners @ dz))))
        fstar_k = quad.minimizer(k)[1]
        eta_star = max(eta_star, abs(fstar_k - fstar_prev))
        zeta_prev = zeta_k
        fstar_prev = fstar_k
    return L, s, eta0, eta_star
