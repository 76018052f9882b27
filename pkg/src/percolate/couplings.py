"""Executable couplings: alpha-reduction, FPP/CFFP domination, box blow-ups.

Each check returns a CouplingReport with per-record detail.  Monte Carlo
dominance checks flag a violation only when the empirical shortfall exceeds
three binomial standard errors, computed under the boundary hypothesis
(the target probability itself), which keeps the criterion meaningful in
tail regions the trial count cannot resolve.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DomainError
from .kernels import (
    ModelParams,
    alpha_reduced_params,
    connection_prob,
    pareto_quantile,
    tau_prime_max,
)
from .rng import trial_seed, trial_seeds, vertex_uniform_each, vertex_uniforms
from .sampler import BoxSpec, Model, SampledGraph, sample_graph

__all__ = [
    "CouplingKind",
    "BlowupSpec",
    "CouplingReport",
    "couple_alpha",
    "min_exp_inequality",
    "fpp_cffp_edge_check",
    "blowup_box_map",
    "blowup_lrp",
    "combine_blowup_reports",
    "stitch_fine_path",
    "aggregate_weight",
    "weight_dominance_test",
    "path_stitch_bound",
]


class CouplingKind(str, Enum):
    ALPHA_REDUCE = "AlphaReduce"
    FPP_CFFP = "FppCffp"
    BLOWUP_LRP = "BlowupLRP"
    BLOWUP_SFP = "BlowupSFP"
    WEIGHT_DOMINANCE = "WeightDominance"


@dataclass(frozen=True)
class BlowupSpec:
    """Blow-up factor and small-parameter model of a box coupling."""

    r: int
    params_small: ModelParams
    tau_prime: float | None = None
    c_agg: float = 1.0

    def __post_init__(self):
        # r = 1 is the identity blow-up, useful as a degenerate check.
        if self.r < 1:
            raise DomainError(f"blow-up factor must be >= 1, got {self.r}")
        if self.c_agg <= 0:
            raise DomainError("c_agg must be positive")
        if self.tau_prime is not None:
            hi = tau_prime_max(self.params_small.tau, self.params_small.alpha)
            if not 3.0 < self.tau_prime < hi:
                raise DomainError(
                    f"tau' must lie in (3, {hi}), got {self.tau_prime}"
                )


@dataclass
class CouplingReport:
    kind: CouplingKind
    trials: int
    violations: int
    parameters: dict = field(default_factory=dict)
    details: list = field(default_factory=list)

    def __post_init__(self):
        if self.violations > self.trials:
            raise DomainError("violations cannot exceed trials")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "trials": self.trials,
            "violations": self.violations,
            "parameters": self.parameters,
            "details": self.details,
        }

    def save_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def couple_alpha(
    box: BoxSpec, params: ModelParams, alpha_prime: float, seed: int
) -> tuple[SampledGraph, SampledGraph, CouplingReport]:
    """Sample (alpha, lambda) and (alpha', lambda^(alpha'/alpha)) on shared uniforms.

    Weights and edge uniforms are shared through the common seed, so the
    first graph must be a subgraph of the second edge by edge; any missing
    edge is recorded as a violation.
    """
    reduced = alpha_reduced_params(params, alpha_prime)
    g_orig = sample_graph(box, params, Model.SFP, seed)
    g_red = sample_graph(box, reduced, Model.SFP, seed)
    missing = sorted(g_orig.edges - g_red.edges)
    details = [{"edge": list(e)} for e in missing]
    report = CouplingReport(
        kind=CouplingKind.ALPHA_REDUCE,
        trials=len(g_orig.edges),
        violations=len(missing),
        parameters={
            "alpha": params.alpha,
            "alpha_prime": alpha_prime,
            "lambda": params.lam,
            "lambda_prime": reduced.lam,
            "seed": seed,
        },
        details=details,
    )
    return g_orig, g_red, report


def min_exp_inequality(a: float, b: float) -> tuple[float, float]:
    """Both sides of min{1, a}(1 - e^-b) <= 1 - e^-(ab), for a, b >= 0."""
    if a < 0 or b < 0:
        raise DomainError("a and b must be nonnegative")
    lhs = min(1.0, a) * -math.expm1(-b)
    rhs = -math.expm1(-a * b)
    return lhs, rhs


def fpp_cffp_edge_check(
    wu: float,
    wv: float,
    dist: float,
    t: float,
    trials: int,
    seed: int,
    params: ModelParams,
) -> CouplingReport:
    """Monte Carlo check that a single FPP edge is dominated by its CFFP cost.

    X <= t needs the edge to exist (probability min{1, lam * kernel}) and an
    independent Exp(1) cost below t; Y is Exp(lam * kernel) directly.  Both
    events are driven by the same per-trial uniform pair, and a violation is
    flagged only when p_hat(X <= t) exceeds p_hat(Y <= t) by more than three
    pooled standard errors.
    """
    if wu < 1 or wv < 1:
        raise DomainError("weights must be >= 1")
    if dist < 1:
        raise DomainError("dist must be >= 1")
    if t < 0:
        raise DomainError("t must be nonnegative")
    if trials < 1:
        raise DomainError("trials must be >= 1")

    p_exist = float(connection_prob(wu, wv, dist, params))
    # lambda multiplies the CFFP rate so that domination also holds away
    # from the paper's lambda = 1 normalization.
    rate = params.lam * (wu * wv) ** params.alpha * dist ** (-params.alpha * params.d)

    seeds = trial_seeds(seed, trials)
    u1 = vertex_uniform_each(seeds, 1)
    u2 = vertex_uniform_each(seeds, 2)

    p_cost_unit = -math.expm1(-t)
    p_cost_rate = -math.expm1(-rate * t)
    x_hits = int(np.count_nonzero((u1 < p_exist) & (u2 < p_cost_unit)))
    y_hits = int(np.count_nonzero(u2 < p_cost_rate))
    p_x = x_hits / trials
    p_y = y_hits / trials
    sigma = math.sqrt((p_x * (1 - p_x) + p_y * (1 - p_y)) / trials)
    violated = p_x > p_y + 3.0 * sigma
    detail = {
        "wu": wu,
        "wv": wv,
        "dist": dist,
        "t": t,
        "lhs": p_x,
        "rhs": p_y,
        "lhs_exact": p_exist * p_cost_unit,
        "rhs_exact": p_cost_rate,
        "sigma": sigma,
    }
    return CouplingReport(
        kind=CouplingKind.FPP_CFFP,
        trials=trials,
        violations=int(violated),
        parameters={"alpha": params.alpha, "d": params.d, "lambda": params.lam,
                    "seed": seed},
        details=[detail],
    )


def _as_coord(u, d: int) -> tuple[int, ...]:
    if isinstance(u, (int, np.integer)):
        if d != 1:
            raise DomainError("scalar coarse vertex only valid in dimension 1")
        return (int(u),)
    coord = tuple(int(c) for c in u)
    if len(coord) != d:
        raise DomainError(f"coarse vertex has {len(coord)} coordinates, expected {d}")
    return coord


def blowup_box_map(u, r: int, d: int) -> set[tuple[int, ...]]:
    """The r^d fine lattice points associated with coarse vertex u.

    Fine coordinates are r*u + {0..r-1}^d; boxes of distinct coarse
    vertices are disjoint and tile the fine lattice.
    """
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    coord = _as_coord(u, d)
    offsets = np.stack(
        np.unravel_index(np.arange(r**d), (r,) * d), axis=1
    )
    base = np.asarray(coord) * r
    return {tuple(int(c) for c in base + off) for off in offsets}


def path_stitch_bound(r: int, d: int, k: int) -> int:
    """Fine-lattice path budget 3*d*r*k for a coarse path of length k."""
    if r < 1 or d < 1 or k < 1:
        raise DomainError("r, d and k must be positive integers")
    return 3 * d * r * k


def _coarse_of_fine(fine_coord: np.ndarray, r: int) -> tuple[int, ...]:
    return tuple(int(c) // r for c in fine_coord)


def blowup_lrp(
    coarse_box: BoxSpec,
    spec: BlowupSpec,
    lambda_goal: float,
    seed: int,
    budget: int | None = None,
) -> tuple[SampledGraph, SampledGraph, CouplingReport]:
    """Blow up a small-lambda LRP into a coarse graph and rate its strength.

    Samples LRP_s on the fine box of side r*L; the coarse graph has edge
    {u, v} iff some fine edge joins box(u) to box(v).  The report bins all
    coarse pairs by their Euclidean distance and flags bins whose edge
    frequency falls more than 3 sigma short of min{1, lambda_goal *
    dist^(-alpha d)}.
    """
    if lambda_goal <= 0:
        raise DomainError("lambda_goal must be positive")
    params = spec.params_small
    if coarse_box.d != params.d:
        raise DomainError("box dimension must match the model dimension")
    r = spec.r
    fine_box = BoxSpec(
        d=coarse_box.d,
        side=r * coarse_box.side,
        origin=tuple(r * o for o in coarse_box.origin),
    )
    fine = sample_graph(fine_box, params, Model.LRP, seed, budget=budget)

    # Map fine edges to coarse pairs; remember one witness edge per pair.
    side_c, d = coarse_box.side, coarse_box.d
    witnesses: dict = {}
    coarse_edges = set()
    for fu, fv in fine.edges:
        cu = _coarse_of_fine(fine.positions[fu], r)
        cv = _coarse_of_fine(fine.positions[fv], r)
        if cu == cv:
            continue
        iu = _coarse_index(cu, coarse_box)
        iv = _coarse_index(cv, coarse_box)
        key = (min(iu, iv), max(iu, iv))
        coarse_edges.add(key)
        if key not in witnesses:
            witnesses[key] = (fu, fv) if iu < iv else (fv, fu)

    coarse = SampledGraph(
        model=Model.LRP,
        positions=coarse_box.lattice_positions(),
        weights=np.ones(coarse_box.n_vertices),
        edges=frozenset(coarse_edges),
        seed=seed,
        params=params,
    )

    report = _blowup_bin_report(coarse, params, lambda_goal, spec.r)
    report.parameters["witnesses"] = {
        f"{k[0]},{k[1]}": list(v) for k, v in sorted(witnesses.items())
    }
    return fine, coarse, report


def _coarse_index(coord: tuple[int, ...], box: BoxSpec) -> int:
    rel = tuple(c - o for c, o in zip(coord, box.origin))
    return int(np.ravel_multi_index(rel, (box.side,) * box.d))


def _blowup_bin_report(
    coarse: SampledGraph, params: ModelParams, lambda_goal: float, r: int
) -> CouplingReport:
    n = coarse.n
    pos = coarse.positions
    ad = params.alpha * params.d
    bins: dict = {}
    for i in range(n - 1):
        diff = pos[i + 1 :] - pos[i]
        dists = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        for j, dist in zip(range(i + 1, n), dists):
            key = round(float(dist), 9)
            present = (i, j) in coarse.edges
            cnt = bins.setdefault(key, [0, 0])
            cnt[0] += 1
            cnt[1] += int(present)

    details = []
    violations = 0
    total_pairs = 0
    for dist in sorted(bins):
        npairs, hits = bins[dist]
        total_pairs += npairs
        target = min(1.0, lambda_goal * dist ** (-ad))
        freq = hits / npairs
        sigma = math.sqrt(target * (1.0 - target) / npairs)
        flagged = freq + 3.0 * sigma < target
        violations += int(flagged)
        details.append(
            {
                "dist": dist,
                "pairs": npairs,
                "edges": hits,
                "freq": freq,
                "target": target,
                "sigma": sigma,
                "lambda_hat": freq * dist**ad,
                "flagged": flagged,
            }
        )
    return CouplingReport(
        kind=CouplingKind.BLOWUP_LRP,
        trials=total_pairs,
        violations=violations,
        parameters={
            "r": r,
            "alpha": params.alpha,
            "d": params.d,
            "lambda_small": params.lam,
            "lambda_goal": lambda_goal,
        },
        details=details,
    )


def combine_blowup_reports(reports: list[CouplingReport]) -> CouplingReport:
    """Pool per-bin counts across independent blow-up realizations."""
    if not reports:
        raise DomainError("need at least one report")
    params = reports[0].parameters
    lambda_goal = params["lambda_goal"]
    ad = params["alpha"] * params["d"]
    pooled: dict = {}
    for rep in reports:
        for rec in rep.details:
            cnt = pooled.setdefault(rec["dist"], [0, 0])
            cnt[0] += rec["pairs"]
            cnt[1] += rec["edges"]
    details = []
    violations = 0
    total = 0
    for dist in sorted(pooled):
        npairs, hits = pooled[dist]
        total += npairs
        target = min(1.0, lambda_goal * dist ** (-ad))
        freq = hits / npairs
        sigma = math.sqrt(target * (1.0 - target) / npairs)
        flagged = freq + 3.0 * sigma < target
        violations += int(flagged)
        details.append(
            {
                "dist": dist,
                "pairs": npairs,
                "edges": hits,
                "freq": freq,
                "target": target,
                "sigma": sigma,
                "lambda_hat": freq * dist**ad,
                "flagged": flagged,
            }
        )
    return CouplingReport(
        kind=CouplingKind.BLOWUP_LRP,
        trials=total,
        violations=violations,
        parameters={k: v for k, v in params.items() if k != "witnesses"},
        details=details,
    )


def _walk_within_box(a: np.ndarray, b: np.ndarray) -> list[np.ndarray]:
    """Axis-by-axis unit steps from a to b; stays inside the shared box."""
    path = [a.copy()]
    cur = a.astype(np.int64).copy()
    for axis in range(len(a)):
        step = 1 if b[axis] > cur[axis] else -1
        while cur[axis] != b[axis]:
            cur[axis] += step
            path.append(cur.copy())
    return path


def stitch_fine_path(
    fine: SampledGraph,
    fine_box: BoxSpec,
    coarse_path: list[int],
    witnesses: dict,
    r: int,
    coarse_box: BoxSpec,
) -> list[int]:
    """Construct a fine path realizing a coarse path, via witness edges.

    Consecutive coarse vertices are joined by their witness fine edge;
    within each box the walk proceeds along grid edges one axis at a time.
    The result length is at most path_stitch_bound(r, d, k).
    """
    if len(coarse_path) < 2:
        raise DomainError("coarse path needs at least two vertices")

    def fine_index(coord: np.ndarray) -> int:
        rel = tuple(int(c) - o for c, o in zip(coord, fine_box.origin))
        return int(np.ravel_multi_index(rel, (fine_box.side,) * fine_box.d))

    path: list[int] = []
    cur: np.ndarray | None = None
    for cu, cv in zip(coarse_path, coarse_path[1:]):
        key = (min(cu, cv), max(cu, cv))
        if key not in witnesses:
            raise DomainError(f"coarse pair {key} has no witness edge")
        fu, fv = witnesses[key]
        if cu > cv:
            fu, fv = fv, fu
        a = fine.positions[fu].astype(np.int64)
        b = fine.positions[fv].astype(np.int64)
        if cur is None:
            path.append(fine_index(a))
        else:
            for step in _walk_within_box(cur, a)[1:]:
                path.append(fine_index(step))
        path.append(fine_index(b))
        cur = b
    return path


def aggregate_weight(
    box_weights, alpha: float, r: int, d: int, c_agg: float = 1.0
) -> float:
    """Aggregated box weight c * (sum w_i^alpha)^(1/alpha) / r^(d/2).

    Deterministically at least c * n^(1/alpha - 1/2) with n = r^d, because
    every constituent weight is at least 1.
    """
    w = np.asarray(box_weights, dtype=np.float64)
    n = r**d
    if len(w) != n:
        raise DomainError(f"expected r^d = {n} weights, got {len(w)}")
    if np.any(w < 1):
        raise DomainError("weights must be >= 1")
    if alpha <= 0 or c_agg <= 0:
        raise DomainError("alpha and c_agg must be positive")
    return float(c_agg * (w**alpha).sum() ** (1.0 / alpha) / r ** (d / 2.0))


def aggregate_weight_floor(alpha: float, r: int, d: int, c_agg: float = 1.0) -> float:
    """The deterministic lower bound c * n^(1/alpha - 1/2), n = r^d."""
    n = r**d
    return float(c_agg * n ** (1.0 / alpha - 0.5))


def weight_dominance_test(
    tau: float,
    tau_prime: float,
    alpha: float,
    r: int,
    d: int,
    c_agg: float,
    trials: int,
    seed: int,
    grid_points: int = 40,
) -> CouplingReport:
    """Empirical tail of the aggregated weight versus the Pareto(tau) tail.

    Draws `trials` aggregated weights from Pareto(tau') boxes of n = r^d
    samples and compares Pr[W >= x] against x^(1-tau) on a log-spaced grid
    spanning [1, floor * 1e3].  Grid points where the empirical tail plus
    3 sigma falls below the target are flagged; for large enough r none
    should be.
    """
    hi = tau_prime_max(tau, alpha)
    if not 3.0 < tau_prime < hi:
        raise DomainError(f"tau' must lie in (3, {hi}), got {tau_prime}")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    n = r**d
    floor = aggregate_weight_floor(alpha, r, d, c_agg)

    samples = np.empty(trials)
    for i in range(trials):
        u = vertex_uniforms(trial_seed(seed, i), np.arange(n))
        w = np.asarray(pareto_quantile(u, tau_prime))
        samples[i] = c_agg * (w**alpha).sum() ** (1.0 / alpha) / r ** (d / 2.0)

    xs = np.geomspace(1.0, floor * 1e3, grid_points)
    details = []
    violations = 0
    for x in xs:
        emp = float(np.mean(samples >= x))
        target = float(x ** (1.0 - tau))
        sigma = math.sqrt(target * (1.0 - target) / trials)
        flagged = emp + 3.0 * sigma < target
        violations += int(flagged)
        details.append(
            {"x": float(x), "empirical": emp, "target": target,
             "sigma": sigma, "flagged": flagged}
        )
    return CouplingReport(
        kind=CouplingKind.WEIGHT_DOMINANCE,
        trials=trials,
        violations=violations,
        parameters={
            "tau": tau,
            "tau_prime": tau_prime,
            "alpha": alpha,
            "r": r,
            "d": d,
            "c_agg": c_agg,
            "floor": floor,
            "seed": seed,
        },
        details=details,
    )
