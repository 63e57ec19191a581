"""Who may talk to whom: neighbor protocols and the communication schedule.

Adjacency is a boolean (n, n) matrix of directed edges with an empty
diagonal; adj[i, j] means j is in agent i's neighborhood. The distance and
grid protocols are symmetric by construction; random_m draws directed
out-edges per episode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROTOCOL_KINDS = ("full", "distance", "random_m", "grid_adjacent")


@dataclass(frozen=True)
class NeighborProtocol:
    kind: str
    radius: float | None = None  # distance: threshold as a fraction of scale
    m: int | None = None         # random_m: out-degree

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(f"unknown protocol {self.kind!r}, expected one of {PROTOCOL_KINDS}")
        if self.kind == "distance" and (self.radius is None or self.radius < 0):
            raise ValueError("distance protocol needs a nonnegative radius")
        if self.kind == "random_m" and (self.m is None or self.m < 0):
            raise ValueError("random_m protocol needs a nonnegative m")


@dataclass(frozen=True)
class CommSchedule:
    """Communicate every `period`-th update; period 1 means always."""

    period: int = 1

    def __post_init__(self):
        if self.period < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")


def should_communicate(schedule: CommSchedule, index: int) -> bool:
    return index % schedule.period == 0


def full_adjacency(n: int) -> np.ndarray:
    adj = np.ones((n, n), dtype=bool)
    np.fill_diagonal(adj, False)
    return adj


def distance_adjacency(points: np.ndarray, radius: float, scale: float) -> np.ndarray:
    """Symmetric adjacency: normalized euclidean distance <= radius."""
    p = np.asarray(points, dtype=np.float64)
    diffs = p[:, None, :] - p[None, :, :]
    dist = np.sqrt(np.sum(diffs**2, axis=-1)) / scale
    adj = dist <= radius
    np.fill_diagonal(adj, False)
    return adj


def grid_adjacency(cells: np.ndarray) -> np.ndarray:
    """Symmetric adjacency on integer cells: Chebyshev distance <= 1."""
    c = np.asarray(cells, dtype=np.int64)
    cheb = np.abs(c[:, None, :] - c[None, :, :]).max(axis=-1)
    adj = cheb <= 1
    np.fill_diagonal(adj, False)
    return adj


def random_m_adjacency(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Each agent draws m distinct out-neighbors uniformly (directed edges)."""
    if m > n - 1:
        raise ValueError(f"m={m} exceeds the {n - 1} available peers")
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        peers = np.delete(np.arange(n), i)
        picks = rng.choice(peers, size=m, replace=False) if m else []
        adj[i, list(picks)] = True
    return adj


def adjacency_for_batch(protocol: NeighborProtocol, env, states: np.ndarray,
                        rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-step adjacency stack (T, n, n) for one episode's visited states.

    full and random_m are constant within an episode (random_m is drawn once
    per episode, here); distance and grid_adjacent follow the agents around.
    """
    T = states.shape[0]
    n = env.n_agents
    if protocol.kind == "full":
        return np.broadcast_to(full_adjacency(n), (T, n, n)).copy()
    if protocol.kind == "random_m":
        if rng is None:
            raise ValueError("random_m needs an rng")
        return np.broadcast_to(random_m_adjacency(n, protocol.m, rng), (T, n, n)).copy()
    stack = np.empty((T, n, n), dtype=bool)
    for t in range(T):
        pts = env.agent_points(states[t])
        if protocol.kind == "distance":
            stack[t] = distance_adjacency(pts, protocol.radius, env.position_scale)
        else:
            stack[t] = grid_adjacency(pts)
    return stack


def episode_union(adjacency: np.ndarray) -> np.ndarray:
    """Collapse a (T, n, n) stack to agents that were ever neighbors."""
    if adjacency.ndim == 2:
        return adjacency.copy()
    return adjacency.any(axis=0)
