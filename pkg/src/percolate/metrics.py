"""Distances, balls and radii on sampled graphs, plus brute-force oracles.

"Unreachable" is always the distinguished return `None`, never a sentinel
number.  All operations are read-only over immutable inputs.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BudgetError, DomainError
from .sampler import CffpRealization, CostMap, SampledGraph

__all__ = [
    "BallKind",
    "BallSeries",
    "graph_distance",
    "hop_distances_from",
    "cost_distance",
    "cost_distances_from",
    "k_ball",
    "t_ball",
    "ball_series",
    "brute_force_distance",
    "brute_force_cost_distance",
]


class BallKind(str, Enum):
    HOP = "hop"
    COST = "cost"


def _check_vertex(n: int, *vs: int) -> None:
    for v in vs:
        if not 0 <= v < n:
            raise DomainError(f"vertex id {v} outside [0, {n})")


def hop_distances_from(
    graph: SampledGraph, x: int, max_depth: int | None = None
) -> np.ndarray:
    """BFS hop distances from x; -1 marks vertices beyond reach/depth."""
    _check_vertex(graph.n, x)
    dist = np.full(graph.n, -1, dtype=np.int64)
    dist[x] = 0
    queue = deque([x])
    adj = graph.neighbors
    while queue:
        u = queue.popleft()
        du = dist[u]
        if max_depth is not None and du >= max_depth:
            continue
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = du + 1
                queue.append(v)
    return dist


def graph_distance(graph: SampledGraph, x: int, y: int) -> int | None:
    """Shortest-path hop count between x and y, or None if unreachable."""
    _check_vertex(graph.n, x, y)
    if x == y:
        return 0
    dist = np.full(graph.n, -1, dtype=np.int64)
    dist[x] = 0
    queue = deque([x])
    adj = graph.neighbors
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                if v == y:
                    return int(dist[u] + 1)
                dist[v] = dist[u] + 1
                queue.append(v)
    return None


def _sparse_cost_search(
    graph: SampledGraph,
    costs: CostMap,
    x: int,
    target: int | None,
    t_max: float | None,
) -> np.ndarray:
    dist = np.full(graph.n, np.inf)
    dist[x] = 0.0
    done = np.zeros(graph.n, dtype=bool)
    heap = [(0.0, x)]
    adj = graph.neighbors
    while heap:
        du, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if target is not None and u == target:
            break
        if t_max is not None and du > t_max:
            break
        for v in adj[u]:
            try:
                c = costs.cost(u, v)
            except KeyError:
                raise DomainError(f"cost map does not cover edge ({u}, {v})") from None
            nd = du + c
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def _dense_cost_search(
    real: CffpRealization, x: int, target: int | None, t_max: float | None
) -> np.ndarray:
    n = real.n
    dist = np.full(n, np.inf)
    dist[x] = 0.0
    done = np.zeros(n, dtype=bool)
    for _ in range(n):
        masked = np.where(done, np.inf, dist)
        u = int(np.argmin(masked))
        du = masked[u]
        if not np.isfinite(du):
            break
        if t_max is not None and du > t_max:
            break
        done[u] = True
        if target is not None and u == target:
            break
        np.minimum(dist, du + real.cost_row(u), out=dist)
    return dist


def cost_distance(obj, costs: CostMap | None, x: int, y: int) -> float | None:
    """Minimum path cost between x and y, or None if unreachable.

    `obj` is either a SampledGraph (costs must cover its edges) or a
    CffpRealization, whose complete-graph costs are derived on demand.
    """
    if isinstance(obj, CffpRealization):
        _check_vertex(obj.n, x, y)
        if x == y:
            return 0.0
        dist = _dense_cost_search(obj, x, target=y, t_max=None)
    else:
        _check_vertex(obj.n, x, y)
        if x == y:
            return 0.0
        if costs is None:
            raise DomainError("a CostMap is required for sparse graphs")
        dist = _sparse_cost_search(obj, costs, x, target=y, t_max=None)
    d = float(dist[y])
    return d if np.isfinite(d) else None


def cost_distances_from(
    obj, costs: CostMap | None, x: int, t_max: float | None = None
) -> np.ndarray:
    """Cost distances from x to every vertex; inf beyond reach or `t_max`."""
    if isinstance(obj, CffpRealization):
        _check_vertex(obj.n, x)
        return _dense_cost_search(obj, x, target=None, t_max=t_max)
    _check_vertex(obj.n, x)
    if costs is None:
        raise DomainError("a CostMap is required for sparse graphs")
    return _sparse_cost_search(obj, costs, x, target=None, t_max=t_max)


def k_ball(graph: SampledGraph, x: int, k: int) -> set[int]:
    """All vertices within hop distance k of x (contains x)."""
    if k < 0:
        raise DomainError(f"k must be nonnegative, got {k}")
    dist = hop_distances_from(graph, x, max_depth=k)
    return {int(v) for v in np.nonzero(dist >= 0)[0]}


def t_ball(obj, costs: CostMap | None, x: int, t: float) -> set[int]:
    """All vertices within cost distance t of x (contains x)."""
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    dist = cost_distances_from(obj, costs, x, t_max=t)
    return {int(v) for v in np.nonzero(dist <= t)[0]}


@dataclass(frozen=True)
class BallSeries:
    """Sizes and maximal geometric radii of balls along a threshold grid."""

    root: int
    radii_kind: BallKind
    thresholds: tuple
    sizes: tuple
    max_geo_radius: tuple

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("threshold,size,max_geo_radius\n")
            for t, s, r in zip(self.thresholds, self.sizes, self.max_geo_radius):
                fh.write(f"{format(float(t), '.17g')},{s},{format(float(r), '.17g')}\n")


def ball_series(obj, x: int, thresholds, costs: CostMap | None = None) -> BallSeries:
    """Ball sizes |B(x, .)| and max Euclidean radii along increasing thresholds.

    Hop balls for a bare SampledGraph; cost balls when costs are supplied or
    `obj` is a CffpRealization.
    """
    thresholds = list(thresholds)
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise DomainError("thresholds must be strictly increasing")
    if not thresholds:
        raise DomainError("need at least one threshold")

    cost_mode = isinstance(obj, CffpRealization) or costs is not None
    if cost_mode:
        dist = cost_distances_from(obj, costs, x, t_max=float(thresholds[-1]))
        kind = BallKind.COST
    else:
        dist = hop_distances_from(obj, x, max_depth=int(thresholds[-1])).astype(float)
        dist[dist < 0] = np.inf
        kind = BallKind.HOP

    geo = np.linalg.norm(obj.positions - obj.positions[x], axis=1)
    sizes, radii = [], []
    for thr in thresholds:
        member = dist <= thr
        sizes.append(int(member.sum()))
        radii.append(float(geo[member].max()))
    return BallSeries(
        root=x,
        radii_kind=kind,
        thresholds=tuple(thresholds),
        sizes=tuple(sizes),
        max_geo_radius=tuple(radii),
    )


_BRUTE_MAX_VERTICES = 12
_BRUTE_MAX_LEN = 6


def brute_force_distance(
    graph: SampledGraph, x: int, y: int, max_len: int | None = None
) -> int | None:
    """Exhaustive simple-path search; the oracle for `graph_distance`.

    Only admissible on tiny inputs: <= 12 vertices, or an explicit
    max_len <= 6.
    """
    _check_vertex(graph.n, x, y)
    if graph.n > _BRUTE_MAX_VERTICES and (max_len is None or max_len > _BRUTE_MAX_LEN):
        raise BudgetError(
            f"brute force needs <= {_BRUTE_MAX_VERTICES} vertices or "
            f"max_len <= {_BRUTE_MAX_LEN}"
        )
    if x == y:
        return 0
    cap = graph.n - 1 if max_len is None else max_len
    adj = graph.neighbors
    best: list[int | None] = [None]
    visited = [False] * graph.n
    visited[x] = True

    def walk(u: int, length: int) -> None:
        if length >= cap or (best[0] is not None and length + 1 >= best[0]):
            return
        for v in adj[u]:
            if v == y:
                best[0] = length + 1
                return
            if not visited[v]:
                visited[v] = True
                walk(v, length + 1)
                visited[v] = False

    if graph.has_edge(x, y):
        return 1
    walk(x, 0)
    return best[0]


def brute_force_cost_distance(
    graph: SampledGraph, costs: CostMap, x: int, y: int
) -> float | None:
    """Exhaustive minimum over simple paths; the oracle for `cost_distance`."""
    _check_vertex(graph.n, x, y)
    if graph.n > _BRUTE_MAX_VERTICES:
        raise BudgetError(f"brute force needs <= {_BRUTE_MAX_VERTICES} vertices")
    if x == y:
        return 0.0
    adj = graph.neighbors
    best: list[float] = [np.inf]
    visited = [False] * graph.n
    visited[x] = True

    def walk(u: int, acc: float) -> None:
        if acc >= best[0]:
            return
        for v in adj[u]:
            c = acc + costs.cost(u, v)
            if v == y:
                if c < best[0]:
                    best[0] = c
            elif not visited[v]:
                visited[v] = True
                walk(v, c)
                visited[v] = False

    walk(x, 0.0)
    return float(best[0]) if np.isfinite(best[0]) else None
