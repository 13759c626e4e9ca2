"""Closed-form evaluators for the excess-risk rate calculus.

Everything here is formula-level: generalization gap bounds with the
complexity factor (B + gamma*B^2) * t / n where t = log(1/delta) + (log n)^3,
the combined optimization-plus-generalization bound, its parametrization in n
via k + 2 = n^(alpha/2) and gamma = n^beta, and the two-regime bound with the
crossover sample size n0.  Universal constants are configurable inputs that
default to 1 and are never estimated from data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


@dataclass
class RateParams:
    """Inputs of the rate calculus; ``t`` is always recomputed from (delta, n)."""

    B: float = 1.0
    delta: float = 0.05
    n: int = 1000
    k: int = 100
    gamma: float = 1.0
    alpha: float = 1.0
    beta: float = 0.0
    xi: float = 0.0
    a: float = 1.0
    K1: float = 1.0
    K2: float = 1.0
    K: float = 1.0
    K3: float = 1.0
    K4: float = 1.0
    K5: float = 1.0
    C: float = 1.0
    constants: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for name, value in self.constants.items():
            if name not in {"K1", "K2", "K", "K3", "K4", "K5", "C"}:
                raise ValueError(f"unknown constant override: {name!r}")
            setattr(self, name, float(value))
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.B <= 0 or self.gamma <= 0 or self.a <= 0:
            raise ValueError("B, gamma, and a must be positive")
        if self.n < 1 or self.k < 1:
            raise ValueError("n and k must be positive integers")
        if self.xi < 0:
            raise ValueError("xi must be nonnegative")

    @property
    def t(self):
        """log(1/delta) + (log n)^3, natural logarithms."""
        return math.log(1.0 / self.delta) + math.log(self.n) ** 3

    @property
    def complexity(self):
        """(B + gamma * B^2) * t / n."""
        return (self.B + self.gamma * self.B**2) * self.t / self.n


def generalization_gap_bound(risk, params, which="empirical"):
    """K * (complexity + sqrt(risk * complexity)).

    ``which`` selects the constant: K1 when the plugged-in risk is the
    empirical one, K2 when it is the population risk.
    """
    if which not in ("empirical", "true"):
        raise ValueError("which must be 'empirical' or 'true'")
    if risk < 0:
        raise ValueError("risk must be nonnegative")
    const = params.K1 if which == "empirical" else params.K2
    c = params.complexity
    return const * (c + math.sqrt(risk * c))


def excess_phi_bound(params, r_phi_star):
    """Four-term bound on the surrogate excess risk of the trained model.

    gamma*B^2/(k+2)^2 + K * (complexity + sqrt(R_phi_star * complexity)
    + sqrt(gamma*B^2 * complexity / (k+2)^2)).
    """
    if r_phi_star < 0:
        raise ValueError("r_phi_star must be nonnegative")
    opt = params.gamma * params.B**2 / (params.k + 2.0) ** 2
    c = params.complexity
    return opt + params.K * (c + math.sqrt(r_phi_star * c) + math.sqrt(opt * c))


def corollary_bound(n, alpha, beta, r_phi_star, C=1.0):
    """Rate in n under k + 2 = n^(alpha/2), gamma = n^beta.

    C * (n^(beta-alpha) + n^(beta-1) + n^(beta-(alpha+1)/2)
         + sqrt(R_phi_star) * n^((beta-1)/2)).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha < 0 or beta < 0:
        raise ValueError("alpha and beta must be nonnegative")
    if r_phi_star < 0:
        raise ValueError("r_phi_star must be nonnegative")
    return C * (
        n ** (beta - alpha)
        + n ** (beta - 1.0)
        + n ** (beta - (alpha + 1.0) / 2.0)
        + math.sqrt(r_phi_star) * n ** ((beta - 1.0) / 2.0)
    )


def r_phi_star_assumption(r_hinge_star, a, xi, gamma):
    """R_hinge_star + a / gamma^(1 + xi): the smoothing-decay model of R_phi*."""
    if r_hinge_star < 0:
        raise ValueError("r_hinge_star must be nonnegative")
    if a <= 0 or xi < 0 or gamma <= 0:
        raise ValueError("require a > 0, xi >= 0, gamma > 0")
    return r_hinge_star + a / gamma ** (1.0 + xi)


def _check_alpha_xi(alpha, xi):
    if alpha < 0.5:
        raise ValueError("alpha must be at least 1/2")
    if xi < 0:
        raise ValueError("xi must be nonnegative")


def select_beta(alpha, xi):
    """Rate-optimal smoothing exponent: min(1/2, alpha - 1/2) / (1 + xi)."""
    _check_alpha_xi(alpha, xi)
    return min(0.5, alpha - 0.5) / (1.0 + xi)


def tau_exponents(alpha, xi):
    """(tau1, tau2) = ((1 + 2*xi*min(1, alpha)) / (2(1+xi)), (1/2 + xi) / (2(1+xi)))."""
    _check_alpha_xi(alpha, xi)
    tau1 = (1.0 + 2.0 * xi * min(1.0, alpha)) / (2.0 * (1.0 + xi))
    tau2 = (0.5 + xi) / (2.0 * (1.0 + xi))
    return tau1, tau2


def n0_threshold(r_hinge_star, params):
    """Crossover sample size K3 * (1/R_hinge_star)^(1/(2*tau1 - 2*tau2)).

    Returns +inf when the optimal hinge risk is zero (the threshold is never
    reached).
    """
    if r_hinge_star < 0:
        raise ValueError("r_hinge_star must be nonnegative")
    if r_hinge_star == 0.0:
        return math.inf
    tau1, tau2 = tau_exponents(params.alpha, params.xi)
    return params.K3 * (1.0 / r_hinge_star) ** (1.0 / (2.0 * tau1 - 2.0 * tau2))


@dataclass(frozen=True)
class RegimeBound:
    """Piecewise binary-excess rate: value, active regime, and chosen beta."""

    value: float
    regime: str  # "small_n" (n <= n0) or "large_n"
    beta: float
    n0: float
    tau1: float
    tau2: float


def regime_bound(n, r_hinge_star, params):
    """Two-regime bound: K4 * n^-tau1 * log n up to n0, then K5 * n^-1/2 * log n.

    The smoothing exponent beta is the rate-optimal choice below the
    threshold and 0 above it.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    tau1, tau2 = tau_exponents(params.alpha, params.xi)
    n0 = n0_threshold(r_hinge_star, params)
    if n <= n0:
        return RegimeBound(
            value=params.K4 * n ** (-tau1) * math.log(n),
            regime="small_n",
            beta=select_beta(params.alpha, params.xi),
            n0=n0,
            tau1=tau1,
            tau2=tau2,
        )
    return RegimeBound(
        value=params.K5 * n ** (-0.5) * math.log(n),
        regime="large_n",
        beta=0.0,
        n0=n0,
        tau1=tau1,
        tau2=tau2,
    )
