"""Reproducible finite-box realizations of LRP, SFP, GIRG and edge-cost maps.

Every edge indicator is a deterministic function of (seed, {u, v}) via the
counter-based uniforms in `rng`, so two parameterizations sampled with the
same seed share their uniforms edge by edge.  That is what makes the
couplings in `couplings` exact rather than merely distributional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import BudgetError, DomainError
from .kernels import ModelParams, connection_prob, pareto_quantile
from .rng import (
    COST_STREAM,
    absorb_indices,
    edge_uniform,
    edge_uniforms,
    position_uniforms,
    seed_state,
    stream_seed,
    uniforms_from_states,
    vertex_uniform,
    vertex_uniforms,
)

__all__ = [
    "Model",
    "RateModel",
    "BoxSpec",
    "SampledGraph",
    "CostMap",
    "CffpRealization",
    "DEFAULT_SPARSE_BUDGET",
    "DEFAULT_COMPLETE_BUDGET",
    "set_vertex_budgets",
    "vertex_budget",
    "edge_uniform",
    "edge_uniforms",
    "vertex_uniform",
    "sample_weights",
    "sample_graph",
    "sample_fpp_costs",
    "sample_cffp_costs",
    "save_graph",
    "load_graph",
]

DEFAULT_SPARSE_BUDGET = 200_000
DEFAULT_COMPLETE_BUDGET = 4_000

_budgets = {"sparse": DEFAULT_SPARSE_BUDGET, "complete": DEFAULT_COMPLETE_BUDGET}


def set_vertex_budgets(sparse: int | None = None, complete: int | None = None) -> None:
    """Override the process-wide vertex budgets (the CLI wires an env var here)."""
    if sparse is not None:
        _budgets["sparse"] = int(sparse)
    if complete is not None:
        _budgets["complete"] = int(complete)


def vertex_budget(kind: str) -> int:
    return _budgets[kind]


class Model(str, Enum):
    LRP = "lrp"
    SFP = "sfp"
    GIRG = "girg"


class RateModel(str, Enum):
    UNIT_RATE = "unit"
    CFFP_RATE = "cffp"


@dataclass(frozen=True)
class BoxSpec:
    """A finite observation window: the lattice box origin + {0..side-1}^d."""

    d: int
    side: int
    origin: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.d < 1:
            raise DomainError(f"dimension must be >= 1, got {self.d}")
        if self.side < 1:
            raise DomainError(f"side must be >= 1, got {self.side}")
        if self.origin is None:
            object.__setattr__(self, "origin", (0,) * self.d)
        elif len(self.origin) != self.d:
            raise DomainError("origin length must equal the dimension")

    @property
    def n_vertices(self) -> int:
        return self.side**self.d

    def lattice_positions(self) -> np.ndarray:
        """(n, d) float array of lattice points in row-major vertex order."""
        n = self.n_vertices
        coords = np.stack(
            np.unravel_index(np.arange(n), (self.side,) * self.d), axis=1
        ).astype(np.float64)
        return coords + np.asarray(self.origin, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """One realization: positions, weights, symmetric edge set, and its seed."""

    model: Model
    positions: np.ndarray
    weights: np.ndarray
    edges: frozenset
    seed: int
    params: ModelParams

    @property
    def n(self) -> int:
        return len(self.weights)

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    @cached_property
    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return adj

    def euclidean(self, x: int, y: int) -> float:
        return float(np.linalg.norm(self.positions[x] - self.positions[y]))


@dataclass(frozen=True, eq=False)
class CostMap:
    """Nonnegative costs keyed by unordered vertex pairs."""

    costs: dict
    rate_model: RateModel

    def cost(self, u: int, v: int) -> float:
        return self.costs[(min(u, v), max(u, v))]

    def __contains__(self, pair) -> bool:
        u, v = pair
        return (min(u, v), max(u, v)) in self.costs

    def __len__(self) -> int:
        return len(self.costs)


def grid_edges(box: BoxSpec) -> frozenset:
    """All nearest-neighbour lattice pairs inside the box."""
    n = box.n_vertices
    d, side = box.d, box.side
    idx = np.arange(n)
    coords = np.stack(np.unravel_index(idx, (side,) * d), axis=1)
    pairs = []
    for axis in range(d):
        stride = side ** (d - 1 - axis)
        mask = coords[:, axis] < side - 1
        us = idx[mask]
        pairs.append(np.stack([us, us + stride], axis=1))
    if not pairs:
        return frozenset()
    stacked = np.concatenate(pairs, axis=0)
    return frozenset((int(a), int(b)) for a, b in stacked)


def sample_weights(n: int, tau: float, seed: int) -> np.ndarray:
    """n reproducible Pareto(tau) weights, one per vertex index."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    u = vertex_uniforms(seed, np.arange(n))
    return np.asarray(pareto_quantile(u, tau), dtype=np.float64)


def _kernel_probs(w_u, w_v, dist, params: ModelParams) -> np.ndarray:
    """Vectorized kernel with the dist -> 0 limit pinned to probability 1."""
    dist = np.asarray(dist, dtype=np.float64)
    out = np.empty(dist.shape, dtype=np.float64)
    zero = dist == 0.0
    if np.any(zero):
        out[zero] = 1.0
        pos = ~zero
        out[pos] = connection_prob(
            np.asarray(w_u)[pos], np.asarray(w_v)[pos], dist[pos], params
        )
        return out
    return np.asarray(connection_prob(w_u, w_v, dist, params), dtype=np.float64)


def _long_range_pairs_1d(seed, n, weights, params, lrp):
    """Per-offset scan of all non-grid pairs on the 1-d lattice."""
    pre = absorb_indices(seed_state(seed), np.arange(n))
    out_u, out_v = [], []
    alpha, lam, d = params.alpha, params.lam, params.d
    exp_kernel = params.kernel_variant.value == "exp"
    for r in range(2, n):
        lo = np.arange(0, n - r)
        u = uniforms_from_states(pre[lo], lo + r)
        if lrp:
            arg = lam * float(r) ** (-alpha * d)
            p = 1.0 - math.exp(-arg) if exp_kernel else min(1.0, arg)
            sel = u < p
        else:
            arg = lam * (weights[lo] * weights[lo + r] / float(r) ** d) ** alpha
            p = -np.expm1(-arg) if exp_kernel else np.minimum(1.0, arg)
            sel = u < p
        hits = np.nonzero(sel)[0]
        if hits.size:
            out_u.append(lo[hits])
            out_v.append(lo[hits] + r)
    if not out_u:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(out_u), np.concatenate(out_v)


def _long_range_pairs_general(seed, positions, weights, params, skip_grid):
    """Blocked scan over all vertex pairs for d >= 2 lattices and GIRG."""
    n = len(weights)
    pre = absorb_indices(seed_state(seed), np.arange(n))
    out_u, out_v = [], []
    rows_per_block = max(1, int(4_000_000 // max(n, 1)))
    for i0 in range(0, n - 1, rows_per_block):
        rows = np.arange(i0, min(i0 + rows_per_block, n - 1))
        counts = n - 1 - rows
        us = np.repeat(rows, counts)
        vs = np.concatenate([np.arange(i + 1, n) for i in rows])
        diff = positions[us] - positions[vs]
        dist2 = np.einsum("ij,ij->i", diff, diff)
        if skip_grid:
            keep = dist2 != 1.0
            us, vs, dist2 = us[keep], vs[keep], dist2[keep]
        if us.size == 0:
            continue
        u01 = uniforms_from_states(pre[us], vs)
        p = _kernel_probs(weights[us], weights[vs], np.sqrt(dist2), params)
        sel = u01 < p
        if np.any(sel):
            out_u.append(us[sel])
            out_v.append(vs[sel])
    if not out_u:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    return np.concatenate(out_u), np.concatenate(out_v)


def sample_graph(
    box: BoxSpec,
    params: ModelParams,
    model: Model,
    seed: int,
    budget: int | None = None,
) -> SampledGraph:
    """Sample one finite-box realization of the requested model.

    LRP/SFP vertices are the lattice points of `box` and always carry the
    grid edges; each remaining pair {u, v} is an edge iff
    edge_uniform(seed, u, v) < connection_prob(w_u, w_v, |pos_u - pos_v|).
    GIRG places n = side^d vertices uniformly in the cube and has no grid
    edges.  LRP forces all weights to 1.
    """
    model = Model(model)
    if box.d != params.d:
        raise DomainError(f"box dimension {box.d} != params dimension {params.d}")
    n = box.n_vertices
    limit = vertex_budget("sparse") if budget is None else budget
    if n > limit:
        raise BudgetError(f"{n} vertices exceed the budget of {limit}")

    if model is Model.GIRG:
        positions = box.side * position_uniforms(seed, n, box.d) + np.asarray(
            box.origin, dtype=np.float64
        )
        weights = sample_weights(n, params.tau, seed)
        base = frozenset()
    else:
        positions = box.lattice_positions()
        if model is Model.LRP:
            weights = np.ones(n, dtype=np.float64)
        else:
            weights = sample_weights(n, params.tau, seed)
        base = grid_edges(box)

    if n >= 2:
        if model is not Model.GIRG and box.d == 1:
            us, vs = _long_range_pairs_1d(seed, n, weights, params, model is Model.LRP)
        else:
            us, vs = _long_range_pairs_general(
                seed, positions, weights, params, skip_grid=model is not Model.GIRG
            )
        long_range = {(int(a), int(b)) for a, b in zip(us, vs)}
    else:
        long_range = set()

    return SampledGraph(
        model=model,
        positions=positions,
        weights=weights,
        edges=base | frozenset(long_range),
        seed=seed,
        params=params,
    )


def sample_fpp_costs(graph: SampledGraph, seed: int) -> CostMap:
    """Attach i.i.d. Exp(1) costs to the existing edges of a graph.

    Cost of edge e is -log(1 - u_e), with u_e drawn from a cost stream
    derived from `seed`, so costs are independent of edge existence.
    """
    cost_seed = stream_seed(seed, COST_STREAM)
    if not graph.edges:
        return CostMap(costs={}, rate_model=RateModel.UNIT_RATE)
    pairs = np.array(sorted(graph.edges), dtype=np.int64)
    u = edge_uniforms(cost_seed, pairs[:, 0], pairs[:, 1])
    costs = -np.log1p(-u)
    return CostMap(
        costs={(int(a), int(b)): float(c) for (a, b), c in zip(pairs, costs)},
        rate_model=RateModel.UNIT_RATE,
    )


@dataclass(frozen=True, eq=False)
class CffpRealization:
    """Complete-graph cost model on the lattice with lazily derived costs.

    The cost of pair {u, v} is Exp with rate (w_u w_v)^alpha |u-v|^(-alpha d),
    computed on demand from the pair's uniform; materializing via
    `sample_cffp_costs` yields the identical values.
    """

    box: BoxSpec
    weights: np.ndarray
    params: ModelParams
    seed: int

    def __post_init__(self):
        if len(self.weights) != self.box.n_vertices:
            raise DomainError("weights length must equal the box vertex count")
        if self.params.lam != 1.0:
            raise DomainError("CFFP is normalized to lambda = 1")

    @property
    def n(self) -> int:
        return self.box.n_vertices

    @cached_property
    def positions(self) -> np.ndarray:
        return self.box.lattice_positions()

    @cached_property
    def _cost_seed(self) -> int:
        return stream_seed(self.seed, COST_STREAM)

    @cached_property
    def _w_alpha(self) -> np.ndarray:
        return self.weights**self.params.alpha

    def rate(self, u: int, v: int) -> float:
        dist = float(np.linalg.norm(self.positions[u] - self.positions[v]))
        return float(
            self._w_alpha[u] * self._w_alpha[v] * dist ** (-self.params.alpha * self.params.d)
        )

    def cost(self, u: int, v: int) -> float:
        if u == v:
            raise DomainError("no self-loop costs")
        u01 = edge_uniform(self._cost_seed, u, v)
        return -math.log1p(-u01) / self.rate(u, v)

    def cost_row(self, u: int) -> np.ndarray:
        """Costs from u to every vertex (inf at u itself)."""
        n = self.n
        others = np.arange(n)
        mask = others != u
        vs = others[mask]
        diff = self.positions[vs] - self.positions[u]
        dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        rates = self._w_alpha[u] * self._w_alpha[vs] * dist ** (
            -self.params.alpha * self.params.d
        )
        u01 = edge_uniforms(self._cost_seed, np.full(vs.shape, u), vs)
        row = np.full(n, np.inf)
        row[vs] = -np.log1p(-u01) / rates
        return row

    def euclidean(self, x: int, y: int) -> float:
        return float(np.linalg.norm(self.positions[x] - self.positions[y]))


def sample_cffp_costs(
    box: BoxSpec,
    weights: np.ndarray,
    params: ModelParams,
    seed: int,
    budget: int | None = None,
) -> CostMap:
    """Materialize the full quadratic cost map of a CFFP realization."""
    limit = vertex_budget("complete") if budget is None else budget
    if box.n_vertices > limit:
        raise BudgetError(
            f"{box.n_vertices} vertices exceed the complete-graph budget of {limit}"
        )
    real = CffpRealization(box=box, weights=np.asarray(weights, dtype=np.float64),
                           params=params, seed=seed)
    costs = {}
    for u in range(real.n - 1):
        row = real.cost_row(u)
        for v in range(u + 1, real.n):
            costs[(u, v)] = float(row[v])
    return CostMap(costs=costs, rate_model=RateModel.CFFP_RATE)


# ---------------------------------------------------------------------------
# Text serialization: header `model d L alpha tau lambda seed`, one
# `w <index> <weight>` line per vertex, `e <u> <v>` per edge, and optional
# `c <u> <v> <cost>` lines.  Reals use 17 significant digits so doubles
# round-trip exactly.
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_graph(graph: SampledGraph, path, costs: CostMap | None = None) -> None:
    side = round(graph.n ** (1.0 / graph.params.d))
    lines = [
        f"{graph.model.value} {graph.params.d} {side} "
        f"{_fmt(graph.params.alpha)} {_fmt(graph.params.tau)} "
        f"{_fmt(graph.params.lam)} {graph.seed}"
    ]
    for i, w in enumerate(graph.weights):
        lines.append(f"w {i} {_fmt(w)}")
    for u, v in sorted(graph.edges):
        lines.append(f"e {u} {v}")
    if costs is not None:
        for (u, v), c in sorted(costs.costs.items()):
            lines.append(f"c {u} {v} {_fmt(c)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_graph(path) -> tuple[SampledGraph, CostMap | None]:
    """Read a graph (and costs, if present) written by `save_graph`.

    GIRG positions and the kernel variant are not part of the format;
    positions are regenerated deterministically from the stored seed and
    the kernel defaults to the min-form.  The box origin defaults to zero.
    """
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    model_s, d_s, side_s, alpha_s, tau_s, lam_s, seed_s = lines[0].split()
    model = Model(model_s)
    d, side, seed = int(d_s), int(side_s), int(seed_s)
    params = ModelParams(d=d, alpha=float(alpha_s), tau=float(tau_s), lam=float(lam_s))
    box = BoxSpec(d=d, side=side)
    n = box.n_vertices

    weights = np.ones(n, dtype=np.float64)
    edges = set()
    costs = {}
    for ln in lines[1:]:
        parts = ln.split()
        if parts[0] == "w":
            weights[int(parts[1])] = float(parts[2])
        elif parts[0] == "e":
            u, v = int(parts[1]), int(parts[2])
            edges.add((min(u, v), max(u, v)))
        elif parts[0] == "c":
            u, v = int(parts[1]), int(parts[2])
            costs[(min(u, v), max(u, v))] = float(parts[3])
        else:
            raise DomainError(f"unrecognized record {parts[0]!r}")

    if model is Model.GIRG:
        positions = side * position_uniforms(seed, n, d) + np.zeros(d)
    else:
        positions = box.lattice_positions()
    graph = SampledGraph(
        model=model,
        positions=positions,
        weights=weights,
        edges=frozenset(edges),
        seed=seed,
        params=params,
    )
    cost_map = None
    if costs:
        unit = all(pair in graph.edges for pair in costs)
        cost_map = CostMap(
            costs=costs,
            rate_model=RateModel.UNIT_RATE if unit else RateModel.CFFP_RATE,
        )
    return graph, cost_map
