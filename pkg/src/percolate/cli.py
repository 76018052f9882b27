"""Batch experiment runner.

Every subcommand is fully determined by (config, seed): flags may be loaded
from a flat JSON config file (flags given on the command line win), all
randomized subcommands require an explicit --seed, and a one-line JSON
summary echoing the resolved config is printed to stdout.

Exit codes: 0 success, 1 usage error, 2 budget/resource error,
3 compliance failure (coupling/bk runs with violations).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import BudgetError, DomainError
from .kernels import (
    BoundConstants,
    KernelVariant,
    ModelParams,
    delta_exponent,
    tail_bound_lrp,
    tail_bound_sfp,
)
from .sampler import (
    BoxSpec,
    Model,
    load_graph,
    sample_cffp_costs,
    sample_fpp_costs,
    sample_graph,
    sample_weights,
    save_graph,
    set_vertex_budgets,
)
from .metrics import cost_distance, graph_distance
from .couplings import (
    BlowupSpec,
    blowup_lrp,
    combine_blowup_reports,
    couple_alpha,
    fpp_cffp_edge_check,
    min_exp_inequality,
    weight_dominance_test,
)
from .estimators import (
    ModelConfig,
    bk_brute_force,
    bk_brute_force_k,
    bound_compliance,
    fit_distance_exponent,
    fit_shape_constant,
    fkt_h_functional,
    fit_selfbound_constant,
    mc_ball_growth,
    mc_tail_grid,
    shape_containment,
    write_tail_csv,
)
from .rng import trial_seed

BUDGET_ENV = "PERCOLATE_BUDGET_VERTICES"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        raise UsageError(message)


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _add_model_args(sp):
    sp.add_argument("--model", choices=["lrp", "sfp", "girg"], default="lrp")
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--L", type=int, default=None)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--tau", type=float, default=math.inf)
    sp.add_argument("--lambda", dest="lam", type=float, default=None)
    sp.add_argument("--kernel", choices=["min", "exp"], default="min")


def _params_from(args) -> ModelParams:
    return ModelParams(
        d=args.d,
        alpha=args.alpha,
        tau=args.tau,
        lam=args.lam,
        kernel_variant=KernelVariant(args.kernel),
    )


def _resolved_config(args) -> dict:
    skip = {"func", "config", "_required"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        out[k] = v
    return out


def _emit(command: str, args, result: dict) -> None:
    summary = {
        "command": command,
        "version": __version__,
        "config": _resolved_config(args),
        "result": result,
    }
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")


# --------------------------------------------------------------------- generate

def _cmd_generate(args) -> int:
    params = _params_from(args)
    box = BoxSpec(d=args.d, side=args.L)
    graph = sample_graph(box, params, Model(args.model), args.seed)
    costs = None
    if args.costs == "fpp":
        costs = sample_fpp_costs(graph, args.seed)
    elif args.costs == "cffp":
        costs = sample_cffp_costs(box, graph.weights, params, args.seed)
    save_graph(graph, args.out, costs=costs)
    _emit("generate", args, {
        "vertices": graph.n,
        "edges": len(graph.edges),
        "costs": 0 if costs is None else len(costs),
        "out": args.out,
    })
    return 0


# --------------------------------------------------------------------- distance

def _cmd_distance(args) -> int:
    graph, costs = load_graph(args.infile)
    if args.cost:
        if costs is None:
            raise UsageError("graph file carries no cost records")
        d = cost_distance(graph, costs, args.source, args.target)
    else:
        d = graph_distance(graph, args.source, args.target)
    _emit("distance", args, {"distance": d})
    return 0


# --------------------------------------------------------------------- tail

def _cmd_tail(args) -> int:
    params = _params_from(args)
    box = BoxSpec(d=args.d, side=args.L)
    config = ModelConfig(box=box, params=params, model=Model(args.model),
                         metric=args.metric)
    thresholds = _floats(args.thresholds)
    if args.metric == "hop":
        thresholds = [int(t) for t in thresholds]
    estimates = mc_tail_grid(
        config, args.source, _ints(args.targets), thresholds,
        args.trials, args.seed, threads=args.threads,
    )
    if args.out:
        write_tail_csv(estimates, args.out)
    result = {
        "points": len(estimates),
        "out": args.out,
    }
    if args.bound == "lrp":
        lo, hi, count = (float(x) for x in args.eps_grid.split(":"))
        grid = np.linspace(lo, hi, int(count))
        report = bound_compliance(
            estimates,
            lambda k, dist, eps: tail_bound_lrp(int(k), dist, eps, params),
            grid.tolist(),
        )
        result["compliant"] = report.compliant
        result["best_eps"] = report.best_constants
        result["margin"] = report.margin
        result["margin_upper"] = report.margin_upper
    elif args.bound == "sfp":
        grid = [
            BoundConstants(c1=c1, c2=c2, beta_exp=b)
            for c1 in _floats(args.c1_grid)
            for c2 in _floats(args.c2_grid)
            for b in _floats(args.beta_grid)
        ]
        report = bound_compliance(
            estimates,
            lambda k, dist, bc: tail_bound_sfp(int(k), dist, bc, params),
            grid,
        )
        result["compliant"] = report.compliant
        result["best_constants"] = {
            "c1": report.best_constants.c1,
            "c2": report.best_constants.c2,
            "beta": report.best_constants.beta_exp,
        }
        result["margin"] = report.margin
        result["margin_upper"] = report.margin_upper
    _emit("tail", args, result)
    return 0


# --------------------------------------------------------------------- growth

def _cmd_growth(args) -> int:
    params = _params_from(args)
    box = BoxSpec(d=args.d, side=args.L)
    config = ModelConfig(box=box, params=params, model=Model(args.model),
                         metric=args.metric)
    root = args.root if args.root is not None else box.n_vertices // 2
    series = mc_ball_growth(config, root, _floats(args.thresholds),
                            args.trials, args.seed, threads=args.threads)
    if args.out:
        series.to_csv(args.out)
    result = {
        "mean_sizes": list(series.mean_sizes),
        "loglinear": {
            "intercept": series.loglinear.intercept,
            "slope": series.loglinear.slope,
            "r2": series.loglinear.r2,
        },
        "stretched": {
            "intercept": series.stretched.intercept,
            "coeff": series.stretched.coeff,
            "exponent": series.stretched.exponent,
            "r2": series.stretched.r2,
        },
        "out": args.out,
    }
    if args.h_t is not None:
        result["h_functional"] = fkt_h_functional(
            series, args.h_t, params.alpha, params.d, args.h_delta
        )
    if args.selfbound:
        result["selfbound_c"] = fit_selfbound_constant(series, params.alpha, params.d)
    _emit("growth", args, result)
    return 0


# --------------------------------------------------------------------- coupling

def _cmd_coupling(args) -> int:
    kind = args.kind
    if kind == "alpha":
        params = ModelParams(d=args.d, alpha=args.alpha, tau=args.tau, lam=args.lam)
        box = BoxSpec(d=args.d, side=args.L)
        trials = violations = 0
        for i in range(args.seeds):
            _, _, rep = couple_alpha(box, params, args.alpha_prime,
                                     trial_seed(args.seed, i))
            trials += rep.trials
            violations += rep.violations
        report_dict = {
            "kind": "AlphaReduce", "trials": trials, "violations": violations,
            "parameters": {"alpha": args.alpha, "alpha_prime": args.alpha_prime,
                           "lambda": args.lam, "seeds": args.seeds},
        }
    elif kind == "fpp-cffp":
        params = ModelParams(d=args.d, alpha=args.alpha, tau=args.tau, lam=args.lam)
        rep = fpp_cffp_edge_check(args.wu, args.wv, args.dist, args.t,
                                  args.trials, args.seed, params)
        report_dict = rep.to_dict()
        violations = rep.violations
    elif kind == "blowup-lrp":
        params = ModelParams(d=args.d, alpha=args.alpha, tau=math.inf,
                             lam=args.lambda_small)
        spec = BlowupSpec(r=args.r, params_small=params)
        box = BoxSpec(d=args.d, side=args.L)
        reports = []
        for i in range(args.seeds):
            _, _, rep = blowup_lrp(box, spec, args.lambda_goal,
                                   trial_seed(args.seed, i))
            reports.append(rep)
        combined = combine_blowup_reports(reports)
        report_dict = combined.to_dict()
        violations = combined.violations
    elif kind == "weights":
        rep = weight_dominance_test(args.tau, args.tau_prime, args.alpha,
                                    args.r, args.d, args.c_agg,
                                    args.trials, args.seed)
        report_dict = rep.to_dict()
        violations = rep.violations
    else:  # min-exp grid
        step = args.step
        grid = np.arange(0.0, args.grid_max + step / 2, step)
        violations = 0
        worst = 0.0
        for a in grid:
            for b in grid:
                lhs, rhs = min_exp_inequality(float(a), float(b))
                gap = lhs - rhs
                worst = max(worst, gap)
                if gap > 1e-12:
                    violations += 1
        report_dict = {
            "kind": "MinExpGrid",
            "trials": len(grid) ** 2,
            "violations": violations,
            "parameters": {"grid_max": args.grid_max, "step": step,
                           "worst_gap": worst},
        }

    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report_dict, fh, indent=2, sort_keys=True)
            fh.write("\n")
    _emit("coupling", args, {
        "kind": kind,
        "trials": report_dict["trials"],
        "violations": report_dict["violations"],
        "out": args.out,
    })
    return 3 if report_dict["violations"] > 0 else 0


# --------------------------------------------------------------------- bk

def _parse_event(spec: str, n: int):
    spec = spec.strip()
    if spec == "full":
        return lambda s: True
    if spec.startswith("open:"):
        idx = [int(x) - 1 for x in spec[5:].split(",")]
    elif spec.startswith("any:"):
        idx = [int(x) - 1 for x in spec[4:].split(",")]
        if any(i < 0 or i >= n for i in idx):
            raise UsageError(f"event index out of range in {spec!r}")
        return lambda s, idx=tuple(idx): any(s[i] for i in idx)
    elif spec.startswith("count>="):
        m = int(spec[7:])
        return lambda s, m=m: sum(s) >= m
    else:
        raise UsageError(f"unrecognized event spec {spec!r}")
    if any(i < 0 or i >= n for i in idx):
        raise UsageError(f"event index out of range in {spec!r}")
    return lambda s, idx=tuple(idx): all(s[i] for i in idx)


def _cmd_bk(args) -> int:
    probs = _floats(args.p)
    if len(probs) == 1:
        probs = probs * args.n
    ev_a = _parse_event(args.eventA, args.n)
    ev_b = _parse_event(args.eventB, args.n)
    if args.eventC:
        ev_c = _parse_event(args.eventC, args.n)
        p_disjoint, p_product = bk_brute_force_k(args.n, probs, [ev_a, ev_b, ev_c])
    else:
        p_disjoint, p_product = bk_brute_force(args.n, probs, ev_a, ev_b)
    violated = p_disjoint > p_product + 1e-12
    _emit("bk", args, {
        "p_disjoint": p_disjoint,
        "p_product": p_product,
        "violations": int(violated),
    })
    return 3 if violated else 0


# --------------------------------------------------------------------- fit

def _cmd_fit(args) -> int:
    if args.infile:
        samples = []
        with open(args.infile) as fh:
            header = fh.readline()
            del header
            for line in fh:
                if line.strip():
                    a, b = line.split(",")
                    samples.append((float(a), float(b)))
    elif args.samples:
        samples = []
        for chunk in args.samples.split(","):
            a, b = chunk.split(":")
            samples.append((float(a), float(b)))
    else:
        raise UsageError("fit needs --in or --samples")
    params = None
    if args.alpha is not None and args.tau is not None:
        params = ModelParams(d=max(args.d, 1), alpha=args.alpha, tau=args.tau, lam=1.0)
    delta_hat, diag = fit_distance_exponent(samples, params)
    _emit("fit", args, {
        "delta_hat": delta_hat,
        "intercept": diag.intercept,
        "r2": diag.r2,
        "reference_delta": diag.reference_delta,
    })
    return 0


# --------------------------------------------------------------------- shape

def _cmd_shape(args) -> int:
    params = _params_from(args)
    box = BoxSpec(d=args.d, side=args.L)
    config = ModelConfig(box=box, params=params, model=Model(args.model),
                         metric="hop")
    root = args.root if args.root is not None else box.n_vertices // 2
    delta = args.delta
    if delta is None:
        delta = delta_exponent(min(params.alpha, params.tau - 2))
    ks = _ints(args.ks)
    if args.c is not None:
        c = args.c
    else:
        c = fit_shape_constant(config, root, args.fit_k, delta,
                               args.fit_trials, trial_seed(args.seed, 10**6),
                               quantile=args.fit_quantile)
    rows = shape_containment(
        config, root, ks, lambda k: math.exp(c * k ** (1.0 / delta)),
        args.trials, args.seed, threads=args.threads,
    )
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("k,radius,trials,contained,frequency\n")
            for r in rows:
                fh.write(
                    f"{r['k']},{format(r['radius'], '.17g')},{r['trials']},"
                    f"{r['contained']},{format(r['frequency'], '.17g')}\n"
                )
    _emit("shape", args, {
        "c": c,
        "delta": delta,
        "frequencies": {str(r["k"]): r["frequency"] for r in rows},
        "out": args.out,
    })
    return 0


# --------------------------------------------------------------------- wiring

def build_parser() -> _Parser:
    parser = _Parser(prog="percolate", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    parser.subparsers_by_name = {}

    def new(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.add_argument("--config", default=None,
                        help="flat JSON file with flag defaults")
        sp.set_defaults(func=fn)
        parser.subparsers_by_name[name] = sp
        return sp

    sp = new("generate", _cmd_generate, help="sample a graph to a text file")
    _add_model_args(sp)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--costs", choices=["none", "fpp", "cffp"], default="none")
    sp.set_defaults(_required=("L", "alpha", "lam", "seed", "out"))

    sp = new("distance", _cmd_distance, help="distances on a stored graph")
    sp.add_argument("--in", dest="infile", default=None)
    sp.add_argument("--source", type=int, default=None)
    sp.add_argument("--target", type=int, default=None)
    sp.add_argument("--cost", action="store_true")
    sp.set_defaults(_required=("infile", "source", "target"))

    sp = new("tail", _cmd_tail, help="Monte Carlo tail estimates on a grid")
    _add_model_args(sp)
    sp.add_argument("--metric", choices=["hop", "fpp", "cffp"], default="hop")
    sp.add_argument("--source", type=int, default=None)
    sp.add_argument("--targets", default=None, help="comma-separated vertex ids")
    sp.add_argument("--thresholds", default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.add_argument("--bound", choices=["lrp", "sfp"], default=None)
    sp.set_defaults(_required=("L", "alpha", "lam", "source", "targets",
                               "thresholds", "trials", "seed"))
    sp.add_argument("--eps-grid", dest="eps_grid", default="0.05:0.5:10")
    sp.add_argument("--c1-grid", dest="c1_grid", default="1.0")
    sp.add_argument("--c2-grid", dest="c2_grid", default="1.0")
    sp.add_argument("--beta-grid", dest="beta_grid", default="1.0")

    sp = new("growth", _cmd_growth, help="mean ball growth with fits")
    _add_model_args(sp)
    sp.add_argument("--metric", choices=["hop", "fpp", "cffp"], default="hop")
    sp.add_argument("--root", type=int, default=None)
    sp.add_argument("--thresholds", default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--out", default=None)
    sp.add_argument("--h-t", dest="h_t", type=float, default=None)
    sp.set_defaults(_required=("L", "alpha", "lam", "thresholds", "trials", "seed"))
    sp.add_argument("--h-delta", dest="h_delta", type=float, default=1.0)
    sp.add_argument("--selfbound", action="store_true")

    sp = new("coupling", _cmd_coupling, help="dominance and coupling checks")
    sp.add_argument("--kind", required=True,
                    choices=["alpha", "fpp-cffp", "blowup-lrp", "weights", "min-exp"])
    sp.add_argument("--d", type=int, default=1)
    sp.add_argument("--L", type=int, default=64)
    sp.add_argument("--alpha", type=float, default=1.5)
    sp.add_argument("--alpha-prime", dest="alpha_prime", type=float, default=None)
    sp.add_argument("--tau", type=float, default=math.inf)
    sp.add_argument("--tau-prime", dest="tau_prime", type=float, default=None)
    sp.add_argument("--lambda", dest="lam", type=float, default=1.0)
    sp.add_argument("--lambda-small", dest="lambda_small", type=float, default=0.01)
    sp.add_argument("--lambda-goal", dest="lambda_goal", type=float, default=0.1)
    sp.add_argument("--r", type=int, default=3)
    sp.add_argument("--c-agg", dest="c_agg", type=float, default=1.0)
    sp.add_argument("--wu", type=float, default=1.0)
    sp.add_argument("--wv", type=float, default=1.0)
    sp.add_argument("--dist", type=float, default=1.0)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--seeds", type=int, default=1)
    sp.add_argument("--trials", type=int, default=10000)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--grid-max", dest="grid_max", type=float, default=5.0)
    sp.add_argument("--step", type=float, default=0.1)
    sp.add_argument("--out", default=None)
    sp.set_defaults(_required=("seed",))

    sp = new("bk", _cmd_bk, help="exact disjoint-occurrence enumeration")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--p", default=None, help="edge probabilities, broadcast if one")
    sp.add_argument("--eventA", default=None)
    sp.add_argument("--eventB", default=None)
    sp.add_argument("--eventC", default=None)
    sp.set_defaults(_required=("n", "p", "eventA", "eventB"))

    sp = new("fit", _cmd_fit, help="distance-exponent regression")
    sp.add_argument("--in", dest="infile", default=None)
    sp.add_argument("--samples", default=None, help="dist:median pairs")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--d", type=int, default=1)

    sp = new("shape", _cmd_shape, help="shape-theorem containment frequencies")
    _add_model_args(sp)
    sp.add_argument("--root", type=int, default=None)
    sp.add_argument("--ks", default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--delta", type=float, default=None)
    sp.set_defaults(_required=("L", "alpha", "lam", "ks", "trials", "seed"))
    sp.add_argument("--c", type=float, default=None)
    sp.add_argument("--fit-k", dest="fit_k", type=int, default=2)
    sp.add_argument("--fit-quantile", dest="fit_quantile", type=float, default=0.95)
    sp.add_argument("--fit-trials", dest="fit_trials", type=int, default=200)
    sp.add_argument("--out", default=None)

    return parser


_CONFIG_KEYMAP = {"lambda": "lam", "in": "infile"}


def _config_path_from_argv(argv: list[str]) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config_file(parser: _Parser, argv: list[str]) -> argparse.Namespace:
    path = _config_path_from_argv(argv)
    if path:
        with open(path) as fh:
            values = json.load(fh)
        mapped = {_CONFIG_KEYMAP.get(k, k): v for k, v in values.items()}
        # defaults must land on the subparser: its own defaults would
        # otherwise overwrite anything set on the parent
        probe = parser.parse_args(argv)
        parser.subparsers_by_name[probe.subcommand].set_defaults(**mapped)
    args = parser.parse_args(argv)
    missing = [k for k in getattr(args, "_required", ()) if getattr(args, k) is None]
    if missing:
        raise UsageError(f"missing required arguments: {', '.join(sorted(missing))}")
    return args


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if os.environ.get(BUDGET_ENV):
        try:
            limit = int(os.environ[BUDGET_ENV])
        except ValueError:
            sys.stderr.write(f"{BUDGET_ENV} must be an integer\n")
            return 1
        set_vertex_budgets(sparse=limit, complete=limit)
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 1
    except DomainError as exc:
        sys.stderr.write(f"invalid arguments: {exc}\n")
        return 1
    except BudgetError as exc:
        sys.stderr.write(f"budget exceeded: {exc}\n")
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
