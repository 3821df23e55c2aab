"""Formation control via navigation potentials.

Each agent carries phi_i = sum_j ||x_i - x_j - c_ij||^2 / exp(beta_i), where
beta_i is a collision function over the agent's incident pairs: nominally 1,
dropping smoothly toward a small floor as any incident pair approaches the
safety distance. The global potential is the sum of the per-agent ones.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BETA_FLOOR = 1e-3


@dataclass(frozen=True)
class FormationSpec:
    """Desired offsets c_ij (one per directed edge) plus collision geometry."""

    desired_offsets: dict                 # (i, j) -> np.ndarray, antisymmetric
    safety_distance: float = 0.5
    collision_ramp: float = 0.5           # width of the smoothstep region
    scale: float = 1.0                    # nominal formation side length
    floor_epsilon: float = BETA_FLOOR

    def __post_init__(self):
        if self.safety_distance <= 0 or self.collision_ramp <= 0:
            raise ValueError("safety_distance and collision_ramp must be positive")
        offs = dict(self.desired_offsets)
        for (i, j), c in list(offs.items()):
            c = np.asarray(c, dtype=float)
            offs[(i, j)] = c
            rev = offs.get((j, i))
            if rev is None:
                offs[(j, i)] = -c
            elif not np.allclose(rev, -c, atol=1e-12):
                raise ValueError(f"offsets for edge ({i},{j}) are not antisymmetric")
        shortest = min(float(np.linalg.norm(c)) for c in offs.values())
        if self.safety_distance >= shortest:
            raise ValueError("safety_distance must be below the shortest desired offset")
        object.__setattr__(self, "desired_offsets", offs)


@dataclass(frozen=True)
class PotentialValue:
    phi_i: float
    grad_phi_i: np.ndarray    # gradient of the *global* potential in x_i
    beta_value: float
    near_collision: bool = False


def hexagon_offsets(side: float) -> dict:
    """Offsets for a regular hexagon (circumradius = side) on the 6-cycle."""
    verts = [side * np.array([np.cos(a), np.sin(a)])
             for a in np.arange(6) * (np.pi / 3.0)]
    offs = {}
    for i in range(6):
        j = (i + 1) % 6
        offs[(i, j)] = verts[i] - verts[j]
    return offs


def offsets_from_positions(desired_positions, graph) -> dict:
    pos = np.asarray(desired_positions, dtype=float)
    return {(i, j): pos[i] - pos[j] for i, j in graph.edges}


def reference_positions(spec: FormationSpec, graph) -> np.ndarray:
    """Agent positions implied by the desired offsets, centered on the centroid.

    Propagates x_j = x_i - c_ij breadth-first from agent 0 along a spanning
    tree of the communication graph; well defined whenever the graph is
    connected.
    """
    n = graph.agent_count
    pos = np.zeros((n, graph.dimension))
    seen = [False] * n
    seen[0] = True
    queue = [0]
    while queue:
        i = queue.pop(0)
        for j in graph.neighbors(i):
            if not seen[j]:
                pos[j] = pos[i] - spec.desired_offsets[(i, j)]
                seen[j] = True
                queue.append(j)
    return pos - pos.mean(axis=0)


def ring_assignment(positions, spec: FormationSpec, graph) -> np.ndarray:
    """Permutation that hands sampled start positions to agents in ring order.

    Sorts the sampled points counterclockwise about their centroid and keeps
    the cyclic rotation or reflection of that order whose layout is closest
    (total squared distance) to the formation's reference positions placed at
    the same centroid. Starting agents in the angular order of their target
    slots keeps coalescing trajectories from crossing, which otherwise can
    leave an agent stranded near the line through its neighbors where the
    gradient estimate is ill-conditioned. Two-dimensional configurations only.
    """
    pos = np.asarray(positions, dtype=float)
    n = pos.shape[0]
    if pos.shape[1] != 2:
        raise ValueError("ring ordering is defined for dimension 2 only")
    cen = pos.mean(axis=0)
    rel = pos - cen
    order = np.argsort(np.arctan2(rel[:, 1], rel[:, 0]))
    ref = reference_positions(spec, graph) + cen
    best_idx, best_cost = None, np.inf
    for rot in range(n):
        for direction in (1, -1):
            idx = np.array([order[(rot + direction * k) % n] for k in range(n)])
            cost = float(np.sum((pos[idx] - ref) ** 2))
            if cost < best_cost - 1e-12:
                best_cost, best_idx = cost, idx
    return best_idx


def pair_ramp(r: float, spec: FormationSpec):
    """(value, derivative) of the per-pair collision factor at distance r.

    Cubic smoothstep from floor_epsilon at the safety distance up to 1 at
    safety + ramp; constant outside. C^1 everywhere.
    """
    rs, w, fl = spec.safety_distance, spec.collision_ramp, spec.floor_epsilon
    if r >= rs + w:
        return 1.0, 0.0
    if r <= rs:
        return fl, 0.0
    u = (r - rs) / w
    val = fl + (1.0 - fl) * u * u * (3.0 - 2.0 * u)
    dval = (1.0 - fl) * 6.0 * u * (1.0 - u) / w
    return val, dval


def beta(i, positions, neighbors, spec: FormationSpec) -> float:
    """Collision function of agent i: product of incident pair ramps,
    floored at floor_epsilon."""
    prod = 1.0
    for j in neighbors:
        r = float(np.linalg.norm(positions[i] - positions[j]))
        prod *= pair_ramp(r, spec)[0]
    return max(prod, spec.floor_epsilon)


def _local_terms(i, positions, neighbors, spec):
    """Numerator, beta (with per-pair data) of phi_i.

    Returns (numerator, errs, beta_val, ramps, dramps, units, clamped) where
    errs[j] = x_i - x_j - c_ij and units[j] is the unit vector from j to i.
    """
    xi = positions[i]
    errs, ramps, dramps, units = {}, {}, {}, {}
    num = 0.0
    prod = 1.0
    for j in neighbors:
        diff = xi - positions[j]
        e = diff - spec.desired_offsets[(i, j)]
        errs[j] = e
        num += float(e @ e)
        r = float(np.sqrt(diff @ diff))
        val, dval = pair_ramp(r, spec)
        ramps[j], dramps[j] = val, dval
        units[j] = diff / r if r > 0 else np.zeros_like(diff)
        prod *= val
    clamped = prod < spec.floor_epsilon
    return num, errs, max(prod, spec.floor_epsilon), ramps, dramps, units, clamped


def phi_value(i, positions, neighbors, spec) -> float:
    num, _, b, *_ = _local_terms(i, positions, neighbors, spec)
    return num * np.exp(-b)


def _grad_beta_wrt(i_terms, neighbors, j, sign):
    """d(beta_i)/dx for the pair (i, j): sign +1 for x_i, -1 for x_j.

    Zero when the product is clamped at the floor (flat region)."""
    num, errs, b, ramps, dramps, units, clamped = i_terms
    if clamped or dramps[j] == 0.0:
        return 0.0
    partial = 1.0
    for m in neighbors:
        if m != j:
            partial *= ramps[m]
    return partial * dramps[j] * sign  # multiply by units[j] at call site


def _grad_contrib(i_terms, nbrs, i, j, sign):
    """d/dx [num_j e^{-beta_j}] restricted to the pair (j, ...): the error
    term plus the beta term; sign +1 when differentiating phi_i by x_i on
    pair (i,j), -1 when differentiating phi_j by x_i."""
    num, errs, b, ramps, dramps, units, clamped = i_terms
    g = (2.0 * sign) * errs[j]
    gb = _grad_beta_wrt(i_terms, nbrs, j, sign)
    if gb != 0.0:
        g = g - num * gb * units[j]
    return np.exp(-b) * g


def phi_i(i, positions, graph, spec) -> PotentialValue:
    """phi_i and the gradient of the *global* potential with respect to x_i.

    grad_i phi = d(phi_i)/dx_i + sum_{j in N_i} d(phi_j)/dx_i; only terms of
    neighbours involve x_i (locality of the potential).
    """
    positions = np.asarray(positions, dtype=float)
    nbrs = graph.neighbors(i)
    t_i = _local_terms(i, positions, nbrs, spec)
    num, errs, b, ramps, dramps, units, clamped = t_i

    grad = np.zeros(positions.shape[1])
    for j in nbrs:
        # own term: d/dx_i [num_i e^{-beta_i}]
        grad += _grad_contrib(t_i, nbrs, i, j, +1.0)
        # neighbour term: d/dx_i [num_j e^{-beta_j}]
        nbrs_j = graph.neighbors(j)
        t_j = _local_terms(j, positions, nbrs_j, spec)
        grad += _grad_contrib(t_j, nbrs_j, j, i, -1.0)

    near = any(r < 1.0 for r in ramps.values())
    return PotentialValue(phi_i=num * np.exp(-b), grad_phi_i=grad,
                          beta_value=b, near_collision=near)


def global_potential(positions, spec, graph):
    """(phi, per-agent phi values, per-agent gradients of phi).

    Single pass: each agent's local terms are computed once and shared
    between its own gradient and its neighbours' cross terms.
    """
    positions = np.asarray(positions, dtype=float)
    n = graph.agent_count
    neighbor_lists = [graph.neighbors(i) for i in range(n)]
    terms = [_local_terms(i, positions, neighbor_lists[i], spec)
             for i in range(n)]
    vals = np.empty(n)
    grads = np.zeros((n, positions.shape[1]))
    betas = np.empty(n)
    near = np.zeros(n, dtype=bool)
    for i in range(n):
        num, errs, b, ramps, dramps, units, clamped = terms[i]
        vals[i] = num * np.exp(-b)
        betas[i] = b
        near[i] = any(r < 1.0 for r in ramps.values())
        for j in neighbor_lists[i]:
            grads[i] += _grad_contrib(terms[i], neighbor_lists[i], i, j, +1.0)
            grads[i] += _grad_contrib(terms[j], neighbor_lists[j], j, i, -1.0)
    return float(vals.sum()), vals, grads, betas, near


def estimate_lipschitz_phi(spec, graph, region, rng=None, samples=200,
                           safety_factor=2.0, override=None):
    """Empirical Lipschitz constant of grad phi over the region.

    Max ratio ||grad(x) - grad(y)|| / ||x - y|| over sampled configuration
    pairs, inflated by `safety_factor`. Pairs are local perturbations of a
    base configuration (local differences track the worst curvature far
    better than distant pairs). Configurations entering the collision ramp
    are rejected so the smooth (beta = 1) regime is what gets measured; the
    descent audit reports the rounds where that regime is left. A config
    override wins when provided.
    """
    if override is not None:
        return float(override)
    if rng is None:
        rng = np.random.default_rng(0)
    n = graph.agent_count
    clear = spec.safety_distance + spec.collision_ramp
    eps = 1e-4 * max(spec.scale, 1.0)

    def draw():
        for _ in range(1000):
            pos = region.sample(rng, n)
            ok = all(np.linalg.norm(pos[i] - pos[j]) > clear for i, j in graph.edges)
            if ok:
                return pos
        raise RuntimeError("could not sample a collision-free configuration")

    best = 0.0
    for _ in range(samples):
        pos = draw()
        step = rng.normal(size=pos.shape)
        step *= eps / np.linalg.norm(step)
        _, _, ga, _, _ = global_potential(pos, spec, graph)
        _, _, gb, _, _ = global_potential(pos + step, spec, graph)
        best = max(best, float(np.linalg.norm(ga - gb)) / eps)
    return safety_factor * best
