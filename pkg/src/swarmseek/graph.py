"""Communication topology for the agent network.

The topology is a static undirected graph. Every run requires the graph to be
connected and every agent to have at least `dimension` neighbours, since the
gradient estimator needs `dimension` independent directions.
"""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Violation:
    code: str          # "degree" | "disconnected" | "self_loop" | "index"
    agents: tuple
    message: str


@dataclass(frozen=True)
class TopologyGraph:
    """Undirected communication graph on agents 0..n-1 in dimension d."""

    agent_count: int
    dimension: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.agent_count < 1:
            raise ValueError("agent_count must be >= 1")
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        norm = set()
        for e in self.edges:
            i, j = e
            if not (0 <= i < self.agent_count and 0 <= j < self.agent_count):
                raise ValueError(f"edge {e!r} references unknown agent")
            if i == j:
                raise ValueError(f"self-loop on agent {i}")
            norm.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", frozenset(norm))

    def neighbors(self, i: int) -> list:
        """Neighbour indices of agent i, ascending (deterministic order)."""
        if not 0 <= i < self.agent_count:
            raise IndexError(f"agent index {i} out of range")
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def degree(self, i: int) -> int:
        return len(self.neighbors(i))


def cycle_graph(n: int, d: int = 2) -> TopologyGraph:
    """Cycle 0-1-...-(n-1)-0."""
    edges = {(i, (i + 1) % n) for i in range(n)}
    return TopologyGraph(n, d, frozenset(edges))


def complete_graph(n: int, d: int = 2) -> TopologyGraph:
    edges = {(i, j) for i in range(n) for j in range(i + 1, n)}
    return TopologyGraph(n, d, frozenset(edges))


def validate(graph: TopologyGraph) -> list:
    """Check the network assumptions; violations are data, not exceptions.

    Returns a list of Violation records, empty when the graph is usable:
    connected, and deg(i) >= d for every agent.
    """
    report = []
    low = [i for i in range(graph.agent_count) if graph.degree(i) < graph.dimension]
    if low:
        report.append(Violation(
            "degree", tuple(low),
            f"agents {low} have fewer than d={graph.dimension} neighbours"))

    # connectivity via BFS from agent 0
    seen = {0}
    frontier = [0]
    while frontier:
        nxt = []
        for i in frontier:
            for j in graph.neighbors(i):
                if j not in seen:
                    seen.add(j)
                    nxt.append(j)
        frontier = nxt
    missing = [i for i in range(graph.agent_count) if i not in seen]
    if missing:
        report.append(Violation(
            "disconnected", tuple(missing),
            f"agents {missing} unreachable from agent 0"))
    return report
