"""Model parameters, connection kernels and closed-form bound evaluators.

All functions here are pure and accept either scalars or numpy arrays where
that is natural (kernels, quantiles).  Nothing in this module draws
randomness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DomainError


class KernelVariant(str, Enum):
    """min{1, x} kernel versus the 1 - exp(-x) variant."""

    MIN = "min"
    EXP = "exp"


@dataclass(frozen=True)
class ModelParams:
    """The (d, alpha, tau, lambda, kernel) tuple governing all kernels.

    `tau` may be `math.inf`, which degenerates the weight law to the
    constant 1 (the LRP case).  `alpha == 1` and `lam == 0` are accepted
    as boundary parameterizations; operations with stricter domains
    (e.g. the LRP tail bound) validate their own ranges.
    """

    d: int
    alpha: float
    tau: float
    lam: float
    kernel_variant: KernelVariant = KernelVariant.MIN

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.d}")
        if self.alpha < 1:
            raise DomainError(f"alpha must be >= 1, got {self.alpha}")
        if self.tau <= 1:
            raise DomainError(f"tau must exceed 1, got {self.tau}")
        if self.lam < 0:
            raise DomainError(f"lambda must be nonnegative, got {self.lam}")


@dataclass(frozen=True)
class BoundConstants:
    """Caller-supplied constants (c1, c2, beta, epsilon) of the SFP tail bound."""

    c1: float
    c2: float
    beta_exp: float
    epsilon: float = 0.0

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0 or self.beta_exp <= 0:
            raise DomainError("c1, c2 and beta must be strictly positive")
        if self.epsilon < 0:
            raise DomainError("epsilon must be nonnegative")


@dataclass(frozen=True)
class EnvelopeParams:
    """Parameters of the stretched-exponential envelope G(t)."""

    theta: float
    beta_env: float
    lambda_env: float
    c_theta: float
    big_c: float = 1.0

    def __post_init__(self):
        if not 0.5 < self.theta < 1.0:
            raise DomainError(f"theta must lie in (1/2, 1), got {self.theta}")
        if self.beta_env < 0:
            raise DomainError("beta_env must be nonnegative")
        if self.lambda_env <= 0:
            raise DomainError("lambda_env must be positive")
        if self.c_theta <= 1:
            raise DomainError(f"c_theta must exceed 1, got {self.c_theta}")
        if self.big_c <= 0:
            raise DomainError("big_c must be positive")


def delta_exponent(beta: float) -> float:
    """The polylog exponent 1 / log2(2 / beta), defined for beta in (0, 2).

    Strictly increasing in beta; diverges as beta -> 2.
    """
    if not 0 < beta < 2:
        raise DomainError(f"delta_exponent requires beta in (0, 2), got {beta}")
    return 1.0 / math.log2(2.0 / beta)


def connection_prob(wx, wy, dist, params: ModelParams):
    """Edge probability for weights (wx, wy) at Euclidean distance `dist`.

    MIN kernel: min{1, lam * (wx*wy / dist^d)^alpha};
    EXP kernel: 1 - exp(-lam * (wx*wy / dist^d)^alpha).
    LRP is the same kernel with unit weights.  Accepts arrays.
    """
    wx = np.asarray(wx, dtype=np.float64)
    wy = np.asarray(wy, dtype=np.float64)
    dist = np.asarray(dist, dtype=np.float64)
    if np.any(dist <= 0):
        raise DomainError("connection_prob requires strictly positive distances")
    if np.any(wx < 1) or np.any(wy < 1):
        raise DomainError("weights must be >= 1 (Pareto floor)")
    arg = params.lam * (wx * wy / dist**params.d) ** params.alpha
    if params.kernel_variant is KernelVariant.MIN:
        out = np.minimum(1.0, arg)
    else:
        out = -np.expm1(-arg)
    return float(out) if out.ndim == 0 else out


def pareto_quantile(u, tau: float):
    """Inverse CDF of the weight law Pr{W >= z} = z^(1-tau), z >= 1.

    Maps uniform u in [0, 1) to (1-u)^(-1/(tau-1)).  Accepts arrays.
    `tau == inf` yields the constant 1.
    """
    if tau <= 1:
        raise DomainError(f"pareto_quantile requires tau > 1, got {tau}")
    u = np.asarray(u, dtype=np.float64)
    if np.any(u < 0) or np.any(u >= 1):
        raise DomainError("pareto_quantile requires u in [0, 1)")
    if math.isinf(tau):
        out = np.ones_like(u)
    else:
        out = (1.0 - u) ** (-1.0 / (tau - 1.0))
    return float(out) if out.ndim == 0 else out


def _delta_prime_sfp(params: ModelParams, epsilon: float) -> float:
    base = min(params.alpha, params.tau - 2.0 - epsilon)
    if not 0 < base < 2:
        raise DomainError(
            f"min{{alpha, tau-2-eps}} = {base} outside (0, 2); tail bound undefined"
        )
    return delta_exponent(base)


def tail_bound_sfp(k: int, dist: float, bc: BoundConstants, params: ModelParams) -> float:
    """Upper bound on Pr{d_G(x, y) <= k} in SFP at geometric distance `dist`.

    Evaluates c2^-1 * dist^(-alpha d) * (k+1)^-beta * exp(c1 * k^(1/Delta'))
    with Delta' = delta_exponent(min{alpha, tau - 2 - eps}).  The value may
    exceed 1: it is a bound, not a probability.
    """
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if dist < 1:
        raise DomainError(f"dist must be >= 1, got {dist}")
    dprime = _delta_prime_sfp(params, bc.epsilon)
    if math.isinf(dist):
        return 0.0
    ad = params.alpha * params.d
    return (
        dist ** (-ad)
        * (k + 1.0) ** (-bc.beta_exp)
        * math.exp(bc.c1 * k ** (1.0 / dprime))
        / bc.c2
    )


def tail_bound_lrp(k: int, dist: float, eps: float, params: ModelParams) -> float:
    """Upper bound dist^(-alpha d) * exp(alpha d * k^(1/(Delta+eps))) for LRP."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if dist < 1:
        raise DomainError(f"dist must be >= 1, got {dist}")
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not 1 < params.alpha < 2:
        raise DomainError(f"LRP tail bound requires alpha in (1, 2), got {params.alpha}")
    dprime = delta_exponent(params.alpha) + eps
    ad = params.alpha * params.d
    if math.isinf(dist):
        return 0.0
    return dist ** (-ad) * math.exp(ad * k ** (1.0 / dprime))


def tail_bound_fpp_log(
    t: float, dist: float, c: float, params: ModelParams, delta: float | None = None
) -> float:
    """Log of the cost-distance tail bound for FPP on SFP.

    Returns c * (log(1+t))^(1 - 1/Delta) * t^(1/Delta) - alpha d log(dist) + c,
    with the asymptotic slack factor fixed to 1.  `delta` defaults to
    delta_exponent(alpha), valid when 2 alpha < tau - 1; otherwise the
    caller must supply the adjusted exponent.
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if dist < 1:
        raise DomainError(f"dist must be >= 1, got {dist}")
    if c <= 0:
        raise DomainError("c must be positive")
    if delta is None:
        if not 2 * params.alpha < params.tau - 1:
            raise DomainError(
                "2*alpha < tau - 1 required for the Delta(alpha) form; "
                "supply delta explicitly otherwise"
            )
        delta = delta_exponent(params.alpha)
    inv = 1.0 / delta
    # 0^0 := 1 at the alpha -> 1 boundary; both t-factors vanish for t = 0.
    if t == 0:
        head = 0.0
    else:
        head = c * math.log1p(t) ** (1.0 - inv) * t**inv
    return head - params.alpha * params.d * math.log(dist) + c


def envelope_G_log(t: float, ep: EnvelopeParams) -> float:
    """log G(t) = c_theta (2 lam t)^(log2 2theta) (log(1+t^beta))^(log2 1/theta).

    The stretched-exponential envelope of the expected ball size;
    G(0) = 1, i.e. the log is 0 at t = 0.
    """
    if t < 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    if t == 0:
        return 0.0
    e_outer = math.log2(2.0 * ep.theta)
    e_inner = math.log2(1.0 / ep.theta)
    return (
        ep.c_theta
        * (2.0 * ep.lambda_env * t) ** e_outer
        * math.log1p(t**ep.beta_env) ** e_inner
    )


def shape_radii(k: int, delta: float, eps: float) -> tuple[float, float]:
    """Inner and outer sandwich radii (q, r) = (e^(k^(1/D-e)), e^(k^(1/D+e)))."""
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if delta <= 0 or eps <= 0:
        raise DomainError("delta and eps must be positive")
    if 1.0 / delta - eps < 0:
        raise DomainError(f"1/delta - eps = {1.0 / delta - eps} is negative")
    q = math.exp(k ** (1.0 / delta - eps))
    r = math.exp(k ** (1.0 / delta + eps))
    return q, r


def alpha_reduced_params(params: ModelParams, alpha_prime: float) -> ModelParams:
    """Parameters of the denser model after reducing alpha.

    Reducing alpha to alpha' while moving lambda to lambda^(alpha'/alpha)
    pointwise increases every connection probability, so the original graph
    is a subgraph of the reduced one under shared uniforms.
    """
    if not 1 < alpha_prime < params.alpha:
        raise DomainError(
            f"alpha' must lie strictly between 1 and alpha={params.alpha}, got {alpha_prime}"
        )
    return replace(
        params, alpha=alpha_prime, lam=params.lam ** (alpha_prime / params.alpha)
    )


def tau_prime_max(tau: float, alpha: float) -> float:
    """Supremum of admissible reduced exponents: tau(1 - a/2) + 3a/2.

    Any tau' in (3, tau_prime_max) makes the aggregated blow-up weight
    dominate Pareto(tau) for large enough blow-up factor.
    """
    if tau <= 3:
        raise DomainError(f"tau must exceed 3, got {tau}")
    if not 1 <= alpha < 2:
        raise DomainError(f"alpha must lie in [1, 2), got {alpha}")
    return tau * (1.0 - alpha / 2.0) + 3.0 * alpha / 2.0
