"""Undirected communication graphs and dwell-time switching signals.

Graphs are unweighted (every edge carries weight 1) and 1-indexed to match
the usual multi-agent convention in the literature; schedule graph indices
are 0-based internally with conversion handled by the config layer.
"""

from __future__ import annotations

import bisect
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatch

#: Gap tolerance when validating dwell-time floors and switch-time grids.
TIME_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Graph:
    """Undirected graph on nodes ``1..n`` with unit adjacency weights."""

    n: int
    edges: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise DimensionMismatch("graph needs at least one node")
        canon = set()
        for e in self.edges:
            i, j = int(e[0]), int(e[1])
            if i == j:
                raise DimensionMismatch(f"self-loop at node {i}")
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise DimensionMismatch(f"edge ({i},{j}) outside 1..{self.n}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    def neighbors(self, i: int):
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return out


def adjacency(g: Graph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    for i, j in g.edges:
        A[i - 1, j - 1] = 1.0
        A[j - 1, i - 1] = 1.0
    return A


def laplacian(g: Graph) -> np.ndarray:
    """Graph Laplacian ``L = D - A``; symmetric with zero row sums."""
    A = adjacency(g)
    return np.diag(A.sum(axis=1)) - A


def lambda2(g: Graph) -> float:
    """Algebraic connectivity: second-smallest Laplacian eigenvalue."""
    if g.n < 2:
        raise DimensionMismatch("lambda2 needs at least two nodes")
    w, _ = linalg.sym_eigen(laplacian(g))
    return float(w[1])


def is_connected(g: Graph) -> bool:
    """Breadth-first reachability of all nodes from node 1."""
    if g.n == 1:
        return True
    adj = {i: [] for i in range(1, g.n + 1)}
    for a, b in g.edges:
        adj[a].append(b)
        adj[b].append(a)
    seen = {1}
    queue = deque([1])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == g.n


def min_algebraic_connectivity(graphs) -> float:
    """Smallest lambda2 over a finite graph family."""
    return min(lambda2(g) for g in graphs)


@dataclass(frozen=True)
class SwitchingSchedule:
    """Piecewise-constant, right-continuous switching signal over a graph family.

    ``switch_times`` starts at 0 and is strictly increasing; interval ``k``
    is ``[switch_times[k], switch_times[k+1])`` with the final interval
    extending to infinity. ``active[k]`` is the 0-based index into
    ``graphs`` during interval ``k``. Consecutive gaps must respect the
    dwell floor ``tau``.
    """

    graphs: tuple
    switch_times: tuple
    active: tuple
    tau: float = field(default=0.0)

    def __post_init__(self):
        graphs = tuple(self.graphs)
        times = tuple(float(t) for t in self.switch_times)
        active = tuple(int(a) for a in self.active)
        if not graphs:
            raise DimensionMismatch("schedule needs at least one graph")
        if not times or abs(times[0]) > TIME_TOLERANCE:
            raise DimensionMismatch("switch times must start at 0")
        if len(times) != len(active):
            raise DimensionMismatch("one active index per interval required")
        if self.tau <= 0:
            raise DimensionMismatch("dwell floor tau must be > 0")
        for a, b in zip(times, times[1:]):
            if b - a < self.tau - TIME_TOLERANCE:
                raise DimensionMismatch(
                    f"gap {b - a:.6g} below dwell floor {self.tau:.6g}"
                )
        for a in active:
            if not (0 <= a < len(graphs)):
                raise DimensionMismatch(f"active index {a} out of range")
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "switch_times", times)
        object.__setattr__(self, "active", active)
        object.__setattr__(self, "tau", float(self.tau))

    def intervals(self, horizon: float):
        """Intervals ``(t_start, t_end, graph_index)`` covering ``[0, horizon]``.

        A switch landing within rounding distance of the horizon does not
        open a degenerate final interval.
        """
        if horizon <= 0:
            raise DimensionMismatch("horizon must be > 0")
        out = []
        eps = TIME_TOLERANCE * max(1.0, horizon)
        times = list(self.switch_times) + [float("inf")]
        for k, idx in enumerate(self.active):
            t0, t1 = times[k], min(times[k + 1], horizon)
            if t0 >= horizon - eps:
                break
            out.append((t0, t1, idx))
        return out


def single_graph_schedule(g: Graph, tau: float = 1.0) -> SwitchingSchedule:
    return SwitchingSchedule(graphs=(g,), switch_times=(0.0,), active=(0,), tau=tau)


def periodic_schedule(graphs, order, period: float, horizon: float,
                      tau=None) -> SwitchingSchedule:
    """Unroll a periodic switching pattern up to ``horizon``.

    ``order`` lists 0-based graph indices visited cyclically, each held for
    ``period`` seconds. The dwell floor defaults to the period itself, so the
    dwell invariant holds by construction.
    """
    if period <= 0:
        raise DimensionMismatch("period must be > 0")
    n_intervals = max(1, int(np.ceil(horizon / period - TIME_TOLERANCE)))
    times = tuple(k * period for k in range(n_intervals))
    active = tuple(order[k % len(order)] for k in range(n_intervals))
    return SwitchingSchedule(graphs=tuple(graphs), switch_times=times,
                             active=active, tau=period if tau is None else tau)


def sigma_at(schedule: SwitchingSchedule, t: float) -> int:
    """Active 0-based graph index at time ``t`` (right-continuous)."""
    if t < 0:
        raise DimensionMismatch("t must be >= 0")
    k = bisect.bisect_right(schedule.switch_times, t) - 1
    return schedule.active[max(k, 0)]
