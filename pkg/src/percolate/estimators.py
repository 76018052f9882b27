"""Monte Carlo estimation of tail probabilities, ball growth and exponent fits,
plus exact enumeration of the disjoint-occurrence (BK) inequality.

Binomial point estimates carry 95% Wilson score intervals, which behave
sensibly near p = 0 where the interesting tail probabilities live.  Trial
seeds are a stateless mix of (master seed, trial index), so rerunning a grid
with more thresholds reuses the identical realizations.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import BudgetError, DomainError
from .kernels import ModelParams, delta_exponent, pareto_quantile
from .metrics import cost_distances_from, hop_distances_from
from .rng import trial_seed, trial_seeds, vertex_uniform_each
from .sampler import (
    BoxSpec,
    CffpRealization,
    Model,
    sample_fpp_costs,
    sample_graph,
    sample_weights,
    vertex_budget,
)

__all__ = [
    "wilson_interval",
    "TailEstimate",
    "ModelConfig",
    "mc_tail",
    "mc_tail_grid",
    "write_tail_csv",
    "ComplianceReport",
    "bound_compliance",
    "GrowthSeries",
    "mc_ball_growth",
    "sum_exp_tail",
    "calibrate_sum_exp_constant",
    "bk_brute_force",
    "bk_brute_force_k",
    "fit_distance_exponent",
    "DistanceExponentFit",
    "shape_containment",
    "fit_shape_constant",
    "fkt_h_functional",
    "fit_selfbound_constant",
]

_Z95 = 1.959963984540054


def wilson_interval(successes: int, trials: int, z: float = _Z95) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise DomainError("successes must lie in [0, trials]")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    # at the boundary the exact interval endpoint is 0 (resp. 1); keep it exact
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return lo, hi


@dataclass(frozen=True)
class TailEstimate:
    """One Monte Carlo point Pr[distance(x, y) <= threshold]."""

    dist: float
    threshold: float
    trials: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float

    @classmethod
    def from_counts(cls, dist, threshold, trials, successes) -> "TailEstimate":
        lo, hi = wilson_interval(successes, trials)
        return cls(
            dist=float(dist),
            threshold=threshold,
            trials=trials,
            successes=successes,
            p_hat=successes / trials,
            ci_low=lo,
            ci_high=hi,
        )


def write_tail_csv(estimates, path) -> None:
    with open(path, "w") as fh:
        fh.write("dist,threshold,trials,successes,p_hat,ci_low,ci_high\n")
        for e in estimates:
            fh.write(
                f"{format(e.dist, '.17g')},{format(float(e.threshold), '.17g')},"
                f"{e.trials},{e.successes},{format(e.p_hat, '.17g')},"
                f"{format(e.ci_low, '.17g')},{format(e.ci_high, '.17g')}\n"
            )


@dataclass(frozen=True)
class ModelConfig:
    """What to sample per trial: a model on a box, measured in a metric.

    metric is one of "hop" (graph distance), "fpp" (Exp(1) costs on the
    sampled edges) or "cffp" (complete graph with weight-dependent rates).
    """

    box: BoxSpec
    params: ModelParams
    model: Model = Model.LRP
    metric: str = "hop"

    def __post_init__(self):
        if self.metric not in ("hop", "fpp", "cffp"):
            raise DomainError(f"unknown metric {self.metric!r}")
        if self.metric == "cffp" and self.params.lam != 1.0:
            raise DomainError("CFFP is normalized to lambda = 1")


def _distances_for_trial(config: ModelConfig, root: int, s: int, cap) -> np.ndarray:
    """Distance array from `root` for one realization, truncated at `cap`."""
    if config.metric == "hop":
        g = sample_graph(config.box, config.params, config.model, s)
        dist = hop_distances_from(g, root, max_depth=int(cap)).astype(np.float64)
        dist[dist < 0] = np.inf
        return dist
    if config.metric == "fpp":
        g = sample_graph(config.box, config.params, config.model, s)
        costs = sample_fpp_costs(g, s)
        return cost_distances_from(g, costs, root, t_max=float(cap))
    n = config.box.n_vertices
    if n > vertex_budget("complete"):
        raise BudgetError(
            f"{n} vertices exceed the complete-graph budget of "
            f"{vertex_budget('complete')}"
        )
    weights = (
        np.ones(n)
        if config.model is Model.LRP
        else sample_weights(n, config.params.tau, s)
    )
    real = CffpRealization(box=config.box, weights=weights, params=config.params, seed=s)
    return cost_distances_from(real, None, root, t_max=float(cap))


def _map_trials(fn, trials: int, threads: int) -> list:
    if threads <= 1:
        return [fn(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(trials)))


def interior_vertices(box: BoxSpec) -> np.ndarray:
    """Vertex ids at L-inf distance >= side/4 from the box boundary."""
    pos = box.lattice_positions() - np.asarray(box.origin, dtype=np.float64)
    margin = box.side / 4.0
    ok = np.all((pos >= margin) & (pos <= box.side - 1 - margin), axis=1)
    return np.nonzero(ok)[0]


def mc_tail(
    config: ModelConfig,
    x: int,
    y: int,
    threshold,
    trials: int,
    seed: int,
    threads: int = 1,
) -> TailEstimate:
    """Fraction of independent realizations with distance(x, y) <= threshold."""
    return mc_tail_grid(config, x, [y], [threshold], trials, seed, threads)[0]


def mc_tail_grid(
    config: ModelConfig,
    x: int,
    ys,
    thresholds,
    trials: int,
    seed: int,
    threads: int = 1,
) -> list[TailEstimate]:
    """TailEstimates for every (y, threshold) cell, one search per trial.

    All cells of one trial share the same realization (seed mixed with the
    trial index), so estimates are monotone in the threshold by construction.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    ys = [int(y) for y in ys]
    thresholds = list(thresholds)
    if not ys or not thresholds:
        raise DomainError("need at least one target and one threshold")
    cap = max(thresholds)

    def one(i: int) -> np.ndarray:
        dist = _distances_for_trial(config, x, trial_seed(seed, i), cap)
        return dist[ys]

    rows = np.array(_map_trials(one, trials, threads))
    if config.model is Model.GIRG:
        # GIRG positions are re-drawn per trial; no fixed geometric distance.
        geo = {y: float("nan") for y in ys}
    else:
        geo_pos = config.box.lattice_positions()
        geo = {y: float(np.linalg.norm(geo_pos[y] - geo_pos[x])) for y in ys}

    out = []
    for j, y in enumerate(ys):
        for thr in thresholds:
            successes = int(np.count_nonzero(rows[:, j] <= thr))
            out.append(TailEstimate.from_counts(geo[y], thr, trials, successes))
    return out


@dataclass
class ComplianceReport:
    """Outcome of searching a constants grid for a dominating bound.

    `margin` is the compliance margin min over grid points of
    log(bound) - log(ci_low); points whose Wilson lower bound is zero are
    trivially compliant and contribute +inf.  `margin_upper` is the stricter
    min of log(bound) - log(ci_high), reported as a diagnostic (it is
    typically negative wherever the trial count cannot resolve the bound).
    """

    compliant: bool
    best_constants: object
    margin: float
    margin_upper: float
    searched: int
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "compliant": self.compliant,
            "best_constants": self.best_constants,
            "margin": self.margin,
            "margin_upper": self.margin_upper,
            "searched": self.searched,
            "records": self.records,
        }


def bound_compliance(estimates, bound_fn, constants_grid) -> ComplianceReport:
    """Search a constants grid for values whose bound dominates every estimate.

    `bound_fn(threshold, dist, constants)` evaluates the closed-form bound.
    A constants choice complies when ci_low <= bound at every grid point;
    the best choice maximizes the compliance margin.
    """
    estimates = list(estimates)
    constants_grid = list(constants_grid)
    if not estimates or not constants_grid:
        raise DomainError("need at least one estimate and one constants choice")

    best = None
    for constants in constants_grid:
        margin = math.inf
        margin_up = math.inf
        recs = []
        for e in estimates:
            bound = bound_fn(e.threshold, e.dist, constants)
            m_low = (
                math.inf if e.ci_low == 0 else math.log(bound) - math.log(e.ci_low)
            )
            m_up = math.log(bound) - math.log(e.ci_high)
            margin = min(margin, m_low)
            margin_up = min(margin_up, m_up)
            recs.append(
                {
                    "dist": e.dist,
                    "threshold": e.threshold,
                    "p_hat": e.p_hat,
                    "ci_low": e.ci_low,
                    "ci_high": e.ci_high,
                    "bound": bound,
                }
            )
        candidate = (margin, margin_up, constants, recs)
        if best is None or candidate[0] > best[0]:
            best = candidate

    margin, margin_up, constants, recs = best
    return ComplianceReport(
        compliant=margin >= 0,
        best_constants=constants,
        margin=margin,
        margin_upper=margin_up,
        searched=len(constants_grid),
        records=recs,
    )


@dataclass(frozen=True)
class LogLinearFit:
    intercept: float
    slope: float
    r2: float
    residuals: tuple

    @property
    def max_abs_residual(self) -> float:
        return max(abs(r) for r in self.residuals)


@dataclass(frozen=True)
class StretchedFit:
    intercept: float
    coeff: float
    exponent: float
    r2: float


def _r2(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def _fit_loglinear(ts: np.ndarray, logg: np.ndarray) -> LogLinearFit:
    slope, intercept = np.polyfit(ts, logg, 1)
    fitted = intercept + slope * ts
    return LogLinearFit(
        intercept=float(intercept),
        slope=float(slope),
        r2=_r2(logg, fitted),
        residuals=tuple((logg - fitted).tolist()),
    )


def _fit_stretched(ts: np.ndarray, logg: np.ndarray) -> StretchedFit:
    def sse(s: float) -> float:
        reg = ts**s
        b, a = np.polyfit(reg, logg, 1)
        return float(np.sum((a + b * reg - logg) ** 2))

    res = minimize_scalar(sse, bounds=(0.05, 3.0), method="bounded")
    s = float(res.x)
    b, a = np.polyfit(ts**s, logg, 1)
    fitted = a + b * ts**s
    return StretchedFit(intercept=float(a), coeff=float(b), exponent=s,
                        r2=_r2(logg, fitted))


@dataclass(frozen=True)
class GrowthSeries:
    """Mean ball sizes over a threshold grid with both growth fits attached."""

    thresholds: tuple
    mean_sizes: tuple
    loglinear: LogLinearFit
    stretched: StretchedFit

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("threshold,mean_size\n")
            for t, s in zip(self.thresholds, self.mean_sizes):
                fh.write(f"{format(float(t), '.17g')},{format(float(s), '.17g')}\n")


def mc_ball_growth(
    config: ModelConfig,
    root: int,
    thresholds,
    trials: int,
    seed: int,
    threads: int = 1,
) -> GrowthSeries:
    """Per-threshold mean ball size around `root`, with growth-law fits.

    Fits log g-hat = a + C t (the exponential-growth check) and
    log g-hat = a + b k^s with free stretch exponent s.
    """
    thresholds = list(thresholds)
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise DomainError("thresholds must be strictly increasing")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    cap = max(thresholds)

    def one(i: int) -> np.ndarray:
        dist = _distances_for_trial(config, root, trial_seed(seed, i), cap)
        return np.array([np.count_nonzero(dist <= thr) for thr in thresholds])

    sizes = np.array(_map_trials(one, trials, threads), dtype=np.float64)
    mean_sizes = sizes.mean(axis=0)
    ts = np.asarray(thresholds, dtype=np.float64)
    logg = np.log(mean_sizes)
    if len(ts) >= 2:
        loglinear = _fit_loglinear(ts, logg)
        stretched = _fit_stretched(ts, logg)
    else:
        loglinear = LogLinearFit(float(logg[0]), 0.0, 1.0, (0.0,))
        stretched = StretchedFit(float(logg[0]), 0.0, 1.0, 1.0)
    return GrowthSeries(
        thresholds=tuple(thresholds),
        mean_sizes=tuple(mean_sizes.tolist()),
        loglinear=loglinear,
        stretched=stretched,
    )


def calibrate_sum_exp_constant(alpha: float, tau: float) -> float:
    """Smallest constant making the k=1 Chernoff closed form an upper bound.

    Equals max(1, E[W^(2 alpha)]) = max(1, (tau-1)/(tau-1-2 alpha)); with
    this value the analytic bound dominates for every path length, since
    each interior weight enters two adjacent rates.
    """
    if not 2 * alpha < tau - 1:
        raise DomainError("requires 2*alpha < tau - 1")
    return max(1.0, (tau - 1.0) / (tau - 1.0 - 2.0 * alpha))


def sum_exp_tail(
    rates,
    t: float,
    trials: int,
    seed: int,
    alpha: float,
    d: int,
    dists,
    tau: float | None = None,
    c: float = math.e,
) -> tuple[float, float]:
    """Monte Carlo Pr[sum X_i <= t] against the bound (e c t / k)^k prod dist^-ad.

    With `rates=None`, weights are re-sampled per trial from Pareto(tau) and
    rate_i = (w_i w_{i+1})^alpha dist_i^(-alpha d); requires 2 alpha < tau-1.
    Fixed `rates` skip the weight layer (the k=1 closed-form mode).
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    if trials < 1:
        raise DomainError("trials must be >= 1")
    dists = np.asarray(dists, dtype=np.float64)
    if np.any(dists < 1):
        raise DomainError("distances must be >= 1")
    k = len(dists)
    if k < 1:
        raise DomainError("need at least one hop")
    ad = alpha * d

    bound = 0.0 if t == 0 else (math.e * c * t / k) ** k * float(
        np.prod(dists ** (-ad))
    )

    seeds = trial_seeds(seed, trials)
    if rates is not None:
        rates = np.asarray(rates, dtype=np.float64)
        if len(rates) != k:
            raise DomainError("rates and dists must have equal length")
        if np.any(rates <= 0):
            raise DomainError("rates must be positive")
        rate_matrix = np.broadcast_to(rates, (trials, k))
    else:
        if tau is None:
            raise DomainError("tau is required when weights are re-sampled")
        if not 2 * alpha < tau - 1:
            raise DomainError("requires 2*alpha < tau - 1")
        w = np.empty((trials, k + 1))
        for j in range(k + 1):
            w[:, j] = pareto_quantile(vertex_uniform_each(seeds, 1000 + j), tau)
        rate_matrix = (w[:, :-1] * w[:, 1:]) ** alpha * dists ** (-ad)

    total = np.zeros(trials)
    for i in range(k):
        u = vertex_uniform_each(seeds, 2000 + i)
        total += -np.log1p(-u) / rate_matrix[:, i]
    p_hat = float(np.mean(total <= t))
    return p_hat, float(bound)


# ---------------------------------------------------------------------------
# BK inequality by exact enumeration.
#
# Events are predicates over the tuple of edge states.  For monotone
# (increasing) events, A box B holds at an outcome iff the open coordinates
# can be split into disjoint witness sets certifying A and B; that split
# search is run exactly for every outcome via a ranked subset convolution.
# Non-monotone events are rejected.
# ---------------------------------------------------------------------------

_BK_MAX_EDGES = 12


def _tabulate_event(n: int, event) -> np.ndarray:
    """Boolean table over all 2^n outcomes; accepts a ready-made table too."""
    if isinstance(event, np.ndarray):
        if event.shape != (1 << n,):
            raise DomainError(f"event table must have 2^{n} entries")
        return event.astype(bool)
    tab = np.zeros(1 << n, dtype=bool)
    for mask in range(1 << n):
        states = tuple(bool(mask >> i & 1) for i in range(n))
        tab[mask] = bool(event(states))
    return tab


def _check_monotone(tab: np.ndarray, n: int, name: str) -> None:
    masks = np.arange(1 << n)
    for bit in range(n):
        step = 1 << bit
        lower = masks[(masks >> bit) & 1 == 0]
        if np.any(tab[lower] & ~tab[lower + step]):
            raise DomainError(f"event {name} is not monotone increasing")


def _subset_convolve_indicator(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Boolean table of {exists partition s, mask\\s with a[s] and b[mask\\s]}."""
    size = 1 << n
    pop = np.array([bin(m).count("1") for m in range(size)])
    ahat = np.zeros((n + 1, size), dtype=np.int64)
    bhat = np.zeros((n + 1, size), dtype=np.int64)
    for r in range(n + 1):
        ahat[r][pop == r] = a[pop == r]
        bhat[r][pop == r] = b[pop == r]
    for mat in (ahat, bhat):
        for bit in range(n):
            step = 1 << bit
            lower = np.nonzero(np.arange(size) & step == 0)[0]
            mat[:, lower + step] += mat[:, lower]
    out = np.zeros(size, dtype=bool)
    for r in range(n + 1):
        chat = np.zeros(size, dtype=np.int64)
        for i in range(r + 1):
            chat += ahat[i] * bhat[r - i]
        # Moebius transform back to the partition count at rank r.
        for bit in range(n):
            step = 1 << bit
            lower = np.nonzero(np.arange(size) & step == 0)[0]
            chat[lower + step] -= chat[lower]
        out[pop == r] |= chat[pop == r] > 0
    return out


def _outcome_probs(n: int, probs: np.ndarray) -> np.ndarray:
    p = np.ones(1 << n)
    for bit in range(n):
        open_mask = np.arange(1 << n) >> bit & 1 == 1
        p[open_mask] *= probs[bit]
        p[~open_mask] *= 1.0 - probs[bit]
    return p


def bk_brute_force(n_edges: int, probs, event_a, event_b) -> tuple[float, float]:
    """Exact Pr[A box B] and Pr[A]Pr[B] over the product space of n edges.

    Events are callables over the tuple of edge indicators and must be
    monotone increasing.  The disjoint-occurrence probability never exceeds
    the product.
    """
    p_disjoint, p_product = bk_brute_force_k(n_edges, probs, [event_a, event_b])
    return p_disjoint, p_product


def bk_brute_force_k(n_edges: int, probs, events) -> tuple[float, float]:
    """k-ary disjoint occurrence versus the product of the probabilities."""
    if n_edges > _BK_MAX_EDGES:
        raise BudgetError(f"enumeration capped at {_BK_MAX_EDGES} edges")
    if n_edges < 1:
        raise DomainError("need at least one edge")
    probs = np.asarray(probs, dtype=np.float64)
    if len(probs) != n_edges:
        raise DomainError("probs length must equal n_edges")
    if np.any((probs < 0) | (probs > 1)):
        raise DomainError("probabilities must lie in [0, 1]")
    events = list(events)
    if len(events) < 2:
        raise DomainError("need at least two events")

    tabs = []
    for i, ev in enumerate(events):
        tab = _tabulate_event(n_edges, ev)
        _check_monotone(tab, n_edges, f"#{i}")
        tabs.append(tab)

    disjoint = tabs[0]
    for tab in tabs[1:]:
        disjoint = _subset_convolve_indicator(disjoint, tab, n_edges)

    w = _outcome_probs(n_edges, probs)
    p_disjoint = float(w[disjoint].sum())
    p_product = float(np.prod([w[tab].sum() for tab in tabs]))
    return p_disjoint, p_product


@dataclass(frozen=True)
class DistanceExponentFit:
    slope: float
    intercept: float
    r2: float
    residuals: tuple
    reference_delta: float | None


def fit_distance_exponent(
    samples, params: ModelParams | None = None
) -> tuple[float, DistanceExponentFit]:
    """Least-squares slope of log(median distance) against log log(dist).

    Needs at least 4 distinct distances spanning two decades.  When params
    are given, the diagnostics carry the theoretical exponent
    delta_exponent(min{alpha, tau - 2}) for reference.
    """
    samples = [(float(a), float(b)) for a, b in samples]
    dists = sorted({a for a, _ in samples})
    if len(dists) < 2 or dists[0] == dists[-1]:
        raise DomainError("degenerate regressor: need distinct distances")
    if len(dists) < 4:
        raise DomainError("need at least 4 distinct distances")
    if dists[-1] / dists[0] < 100:
        raise DomainError("distances must span at least two decades")
    if any(a <= 1 or b <= 0 for a, b in samples):
        raise DomainError("need dist > 1 and positive medians")

    x = np.log(np.log([a for a, _ in samples]))
    y = np.log([b for _, b in samples])
    slope, intercept = np.polyfit(x, y, 1)
    fitted = intercept + slope * x
    ref = None
    if params is not None:
        ref = delta_exponent(min(params.alpha, params.tau - 2))
    fit = DistanceExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        r2=_r2(y, fitted),
        residuals=tuple((y - fitted).tolist()),
        reference_delta=ref,
    )
    return float(slope), fit


def shape_containment(
    config: ModelConfig,
    root: int,
    ks,
    r_fn,
    trials: int,
    seed: int,
    threads: int = 1,
) -> list[dict]:
    """Per-k frequency of max geo radius of B(root, k) staying within r(k)."""
    ks = [int(k) for k in ks]
    if not ks:
        raise DomainError("need at least one k")
    if config.metric != "hop":
        raise DomainError("shape containment is a hop-ball check")
    cap = max(ks)

    def one(i: int) -> np.ndarray:
        s = trial_seed(seed, i)
        g = sample_graph(config.box, config.params, config.model, s)
        dist = hop_distances_from(g, root, max_depth=cap)
        geo = np.linalg.norm(g.positions - g.positions[root], axis=1)
        return np.array(
            [geo[(dist >= 0) & (dist <= k)].max() for k in ks], dtype=np.float64
        )

    radii = np.array(_map_trials(one, trials, threads))
    out = []
    for j, k in enumerate(ks):
        contained = int(np.count_nonzero(radii[:, j] <= r_fn(k)))
        out.append(
            {
                "k": k,
                "radius": float(r_fn(k)),
                "trials": trials,
                "contained": contained,
                "frequency": contained / trials,
            }
        )
    return out


def fit_shape_constant(
    config: ModelConfig,
    root: int,
    k0: int,
    delta: float,
    trials: int,
    seed: int,
    quantile: float = 0.95,
) -> float:
    """Fit c in r(k) = exp(c k^(1/delta)) to a quantile of the k0-ball radius."""
    if not 0 < quantile < 1:
        raise DomainError("quantile must lie in (0, 1)")

    def one(i: int) -> float:
        s = trial_seed(seed, i)
        g = sample_graph(config.box, config.params, config.model, s)
        dist = hop_distances_from(g, root, max_depth=k0)
        geo = np.linalg.norm(g.positions - g.positions[root], axis=1)
        return float(geo[(dist >= 0) & (dist <= k0)].max())

    radii = np.array(_map_trials(one, trials, 1))
    q = float(np.quantile(radii, quantile))
    if q < 1:
        q = 1.0
    return math.log(q) / k0 ** (1.0 / delta)


def fkt_h_functional(
    g_hat: GrowthSeries, t: float, alpha: float, d: int, delta_rate: float
) -> float:
    """h(t) = t^(alpha d) * integral_0^t g(t-y)(g(y)-1) dy + exp(-delta t).

    Trapezoidal quadrature on the measured grid; g is interpolated linearly
    between grid points and pinned to g(0) = 1.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    ts = np.asarray(g_hat.thresholds, dtype=np.float64)
    gs = np.asarray(g_hat.mean_sizes, dtype=np.float64)
    if t > ts[-1]:
        raise DomainError(f"t={t} outside the series range [0, {ts[-1]}]")
    if ts[0] > 0:
        ts = np.concatenate([[0.0], ts])
        gs = np.concatenate([[1.0], gs])
    if t == 0:
        return 1.0

    ys = np.unique(np.concatenate([ts[ts <= t], [t]]))
    g_y = np.interp(ys, ts, gs)
    g_ty = np.interp(t - ys, ts, gs)
    integral = float(np.trapezoid(g_ty * (g_y - 1.0), ys))
    return t ** (alpha * d) * integral + math.exp(-delta_rate * t)


def fit_selfbound_constant(g_hat: GrowthSeries, alpha: float, d: int) -> float:
    """Smallest c with g(t)^alpha <= c (t^(alpha d) int g(t-y)g(y) dy + 1)."""
    ts = np.asarray(g_hat.thresholds, dtype=np.float64)
    gs = np.asarray(g_hat.mean_sizes, dtype=np.float64)
    if ts[0] > 0:
        ts = np.concatenate([[0.0], ts])
        gs = np.concatenate([[1.0], gs])
    worst = 1.0
    for t, g_t in zip(ts, gs):
        if t == 0:
            continue
        ys = ts[ts <= t]
        g_y = np.interp(ys, ts, gs)
        g_ty = np.interp(t - ys, ts, gs)
        denom = t ** (alpha * d) * float(np.trapezoid(g_ty * g_y, ys)) + 1.0
        worst = max(worst, g_t**alpha / denom)
    return worst
