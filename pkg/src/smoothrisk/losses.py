"""Smoothed hinge loss family and the classical convex surrogates.

The smoothed hinge loss with smoothing parameter ``gamma`` is

    phi(z; gamma) = (1/gamma) * log(1 + exp(gamma * (1 - z)))

It arises as the value of an entropy-regularized variational problem over a
mixing weight alpha in [0, 1] (see :func:`variational_objective`), sits in the
sandwich  hinge(z) <= phi(z; gamma) <= hinge(z) + log(2)/gamma,  and has first
and second derivatives bounded by 1 and gamma/4 respectively.

All functions accept scalars or numpy arrays for the margin argument ``z`` and
return matching shapes; ``gamma`` is always a positive scalar.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REFERENCE_KINDS = ("hinge", "exponential", "logit", "truncated_quadratic")


def softplus(x):
    """log(1 + exp(x)), overflow-safe for large |x|."""
    x = np.asarray(x, dtype=float)
    return np.log1p(np.exp(-np.abs(x))) + np.maximum(x, 0.0)


def sigmoid(x):
    """1 / (1 + exp(-x)), evaluated without overflow on either tail."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def binary_entropy(alpha):
    """-a*log(a) - (1-a)*log(1-a), with the endpoint limit value 0."""
    a = np.asarray(alpha, dtype=float)
    if np.any(a < 0.0) or np.any(a > 1.0):
        raise ValueError("entropy argument must lie in [0, 1]")
    interior = (a > 0.0) & (a < 1.0)
    out = np.zeros_like(a)
    ai = a[interior]
    out[interior] = -ai * np.log(ai) - (1.0 - ai) * np.log1p(-ai)
    return out if out.ndim else float(out)


def _check_args(z, gamma):
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("margin z must be finite")
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise ValueError(f"gamma must be a positive finite real, got {gamma}")
    return z, gamma


def _scalar_like(out, z):
    return float(out) if np.isscalar(z) or np.ndim(z) == 0 else out


def smoothed_hinge_value(z, gamma):
    """Evaluate (1/gamma) * log(1 + exp(gamma*(1 - z))).

    Computed as (1-z) + softplus(-gamma*(1-z))/gamma when the exponent is
    positive and softplus(gamma*(1-z))/gamma otherwise, so that gamma up to
    1e4 and beyond never overflows.
    """
    zz, gamma = _check_args(z, gamma)
    u = gamma * (1.0 - zz)
    out = np.where(u > 0.0, (1.0 - zz), 0.0) + np.log1p(np.exp(-np.abs(u))) / gamma
    return _scalar_like(out, z)


def smoothed_hinge_deriv(z, gamma):
    """First derivative -exp(g(1-z)) / (1 + exp(g(1-z))); lies in (-1, 0)."""
    zz, gamma = _check_args(z, gamma)
    out = -sigmoid(gamma * (1.0 - zz))
    return _scalar_like(out, z)


def smoothed_hinge_second_deriv(z, gamma):
    """Second derivative gamma * s * (1 - s) with s = sigmoid(gamma*(1-z)).

    Nonnegative everywhere, maximized at z = 1 where it equals gamma/4.
    """
    zz, gamma = _check_args(z, gamma)
    s = sigmoid(gamma * (1.0 - zz))
    out = gamma * s * (1.0 - s)
    return _scalar_like(out, z)


def variational_maximizer(z, gamma):
    """Maximizing mixing weight of the entropy-regularized form.

    The objective alpha*(1-z) + entropy(alpha)/gamma over alpha in [0, 1] is
    maximized at sigmoid(gamma*(1-z)).  The result is clamped to the open
    interval so callers can take logarithms of both alpha and 1-alpha.
    """
    zz, gamma = _check_args(z, gamma)
    a = sigmoid(gamma * (1.0 - zz))
    tiny = np.finfo(float).tiny
    out = np.clip(a, tiny, np.nextafter(1.0, 0.0))
    return _scalar_like(out, z)


def variational_objective(z, gamma, alpha):
    """alpha*(1 - z) + entropy(alpha)/gamma, the variational form of the loss.

    Its maximum over alpha in [0, 1] equals smoothed_hinge_value(z, gamma).
    """
    zz, gamma = _check_args(z, gamma)
    a = np.asarray(alpha, dtype=float)
    out = a * (1.0 - zz) + binary_entropy(a) / gamma
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SmoothedHingeLoss:
    """The gamma-parameterized smoothed hinge surrogate as a loss object."""

    gamma: float

    def __post_init__(self):
        if not np.isfinite(self.gamma) or self.gamma <= 0.0:
            raise ValueError(f"gamma must be a positive finite real, got {self.gamma}")

    def value(self, z):
        return smoothed_hinge_value(z, self.gamma)

    def deriv(self, z):
        return smoothed_hinge_deriv(z, self.gamma)

    def second_deriv(self, z):
        return smoothed_hinge_second_deriv(z, self.gamma)


def reference_loss_value(kind, z):
    """Value of one of the classical surrogates at margin z.

    hinge -> max(0, 1-z); exponential -> exp(-z); logit -> log(1+exp(-z));
    truncated_quadratic -> max(0, 1-z)**2.
    """
    zz = np.asarray(z, dtype=float)
    if kind == "hinge":
        out = np.maximum(0.0, 1.0 - zz)
    elif kind == "exponential":
        # inf on extreme negative margins is the correct limiting value
        with np.errstate(over="ignore"):
            out = np.exp(-zz)
    elif kind == "logit":
        out = softplus(-zz)
    elif kind == "truncated_quadratic":
        out = np.maximum(0.0, 1.0 - zz) ** 2
    else:
        raise ValueError(f"unknown reference loss kind: {kind!r}")
    return _scalar_like(out, z)


def reference_loss_deriv(kind, z):
    """Derivative of a classical surrogate (right derivative at hinge kinks)."""
    zz = np.asarray(z, dtype=float)
    if kind == "hinge":
        out = np.where(zz < 1.0, -1.0, 0.0)
    elif kind == "exponential":
        with np.errstate(over="ignore"):
            out = -np.exp(-zz)
    elif kind == "logit":
        out = -sigmoid(-zz)
    elif kind == "truncated_quadratic":
        out = -2.0 * np.maximum(0.0, 1.0 - zz)
    else:
        raise ValueError(f"unknown reference loss kind: {kind!r}")
    return _scalar_like(out, z)


@dataclass(frozen=True)
class ReferenceLoss:
    """One of the classical convex surrogates, addressed by name."""

    kind: str

    def __post_init__(self):
        if self.kind not in REFERENCE_KINDS:
            raise ValueError(
                f"unknown reference loss kind: {self.kind!r}; expected one of {REFERENCE_KINDS}"
            )

    def value(self, z):
        return reference_loss_value(self.kind, z)

    def deriv(self, z):
        return reference_loss_deriv(self.kind, z)
