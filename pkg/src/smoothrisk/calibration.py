"""Classification-calibration engine for convex margin losses.

Given a convex loss phi and a conditional class probability eta, the two
central quantities are

    H(eta)  = inf over all real alpha of  eta*phi(alpha) + (1-eta)*phi(-alpha)
    H-(eta) = the same infimum restricted to alpha with alpha*(2*eta-1) <= 0

The psi-transform linking binary excess risk to surrogate excess risk is the
convex closure of  psi~(z) = H-((1+z)/2) - H((1+z)/2)  on z in [0, 1].  For
the smoothed hinge loss psi has a closed form, implemented here in a way that
stays finite for smoothing parameters up to 1e12; the numeric construction
(bracketed ternary search plus lower convex hull) is kept fully independent of
the closed form so the two can be checked against each other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .losses import SmoothedHingeLoss, softplus

_DEFAULT_TOL = 1e-10
_CLAMP = 1.0 - 1e-9


@dataclass(frozen=True)
class ConstantLoss:
    """Flat loss used as a negative control: never classification-calibrated."""

    level: float = 1.0

    def value(self, z):
        z = np.asarray(z, dtype=float)
        out = np.full_like(z, self.level)
        return float(out) if out.ndim == 0 else out

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConditionalRiskProblem:
    """A loss together with a conditional probability eta of the +1 class."""

    loss: object
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")


class HResult(NamedTuple):
    value: float
    minimizer: float


def _weighted_risk(loss, eta, alpha):
    # a zero-weight side contributes nothing even where the loss is infinite
    va = loss.value(alpha)
    vb = loss.value(-np.asarray(alpha, dtype=float))
    eta = np.asarray(eta, dtype=float)
    with np.errstate(invalid="ignore"):
        left = np.where(eta == 0.0, 0.0, eta * va)
        right = np.where(eta == 1.0, 0.0, (1.0 - eta) * vb)
    return left + right


def conditional_risk(problem, alpha):
    """eta * phi(alpha) + (1 - eta) * phi(-alpha)."""
    out = _weighted_risk(problem.loss, problem.eta, np.asarray(alpha, dtype=float))
    return float(out) if np.ndim(alpha) == 0 else out


def _risk_fn(loss, eta):
    """Vectorized conditional risk: eta may be an array aligned with alpha."""

    def fn(alpha):
        return _weighted_risk(loss, eta, alpha)

    return fn


def _bracket_cap(loss):
    gamma = getattr(loss, "gamma", None)
    return 1e3 / gamma + 10.0 if gamma else 1010.0


def _expand_bracket(fn, n, cap, probe=1e-7):
    """Grow [-2, 2] per element by doubling until the minimum is interior.

    A convex objective has its minimum left of lo when fn(lo) <= fn(lo+probe),
    and right of hi when fn(hi) <= fn(hi-probe).  Expansion stops at +-cap,
    which covers infima attained only in the limit.
    """
    lo = np.full(n, -2.0)
    hi = np.full(n, 2.0)
    for _ in range(64):
        need_left = (fn(lo) <= fn(lo + probe)) & (lo > -cap)
        need_right = (fn(hi) <= fn(hi - probe)) & (hi < cap)
        if not (need_left.any() or need_right.any()):
            break
        lo = np.where(need_left, np.maximum(2.0 * lo, -cap), lo)
        hi = np.where(need_right, np.minimum(2.0 * hi, cap), hi)
    return lo, hi


def _ternary_minimize(fn, lo, hi, tol=_DEFAULT_TOL, max_iter=140):
    """Elementwise ternary search for the minimum of a convex objective."""
    lo = np.asarray(lo, dtype=float).copy()
    hi = np.asarray(hi, dtype=float).copy()
    for _ in range(max_iter):
        span = hi - lo
        if span.max() <= tol:
            break
        m1 = lo + span / 3.0
        m2 = hi - span / 3.0
        left = fn(m1) <= fn(m2)
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
    mid = 0.5 * (lo + hi)
    return mid, fn(mid)


def _h_values(loss, etas):
    """H on an array of etas: unconstrained bracketed minimization."""
    etas = np.asarray(etas, dtype=float)
    fn = _risk_fn(loss, etas)
    cap = _bracket_cap(loss)
    lo, hi = _expand_bracket(fn, etas.shape[0], cap)
    return _ternary_minimize(fn, lo, hi)


def _h_minus_values(loss, etas):
    """H- on an array of etas: infimum over the sign-constrained half-line."""
    etas = np.asarray(etas, dtype=float)
    fn = _risk_fn(loss, etas)
    cap = _bracket_cap(loss)
    lo = np.where(etas >= 0.5, -cap, 0.0)
    hi = np.where(etas <= 0.5, cap, 0.0)
    _, vals = _ternary_minimize(fn, lo, hi)
    return vals


def compute_H(problem):
    """Minimize the conditional risk over all of R.

    Returns the infimum and an attaining alpha; when the infimum is only
    approached in the limit, the reported minimizer sits at the search cap.
    """
    mins, vals = _h_values(problem.loss, np.array([problem.eta]))
    return HResult(float(vals[0]), float(mins[0]))


def compute_H_minus(problem):
    """Conditional risk infimum restricted to alpha*(2*eta - 1) <= 0."""
    vals = _h_minus_values(problem.loss, np.array([problem.eta]))
    return float(vals[0])


def _deriv_at_zero(loss):
    if hasattr(loss, "deriv"):
        return float(loss.deriv(0.0))
    h = 1e-6
    return float((loss.value(h) - loss.value(-h)) / (2.0 * h))


@dataclass(frozen=True, eq=False)
class CalibrationCertificate:
    """Evidence gathered by the calibration check.

    ``gaps`` holds H-(eta) - H(eta) on the scanned grid; calibration requires
    every gap to exceed ``margin`` and the derivative at the origin to be
    strictly negative.
    """

    calibrated: bool
    deriv_at_zero: float
    etas: np.ndarray
    gaps: np.ndarray
    min_gap: float
    margin: float

    def __bool__(self):
        return self.calibrated


def is_calibrated(loss, margin=1e-9, eta_grid=None):
    """Check classification calibration of a convex loss.

    Two conditions are verified: phi'(0) < 0 (analytic derivative when the
    loss provides one, central difference otherwise) and H-(eta) > H(eta) +
    margin for every eta in the scan grid (default 0.01..0.99 without 0.5).
    """
    if eta_grid is None:
        eta_grid = np.linspace(0.01, 0.99, 99)
    etas = np.asarray(eta_grid, dtype=float)
    etas = etas[np.abs(etas - 0.5) > 1e-12]
    _, h_vals = _h_values(loss, etas)
    hm_vals = _h_minus_values(loss, etas)
    gaps = hm_vals - h_vals
    deriv0 = _deriv_at_zero(loss)
    ok = bool(deriv0 < 0.0 and np.min(gaps) > margin)
    return CalibrationCertificate(
        calibrated=ok,
        deriv_at_zero=deriv0,
        etas=etas,
        gaps=gaps,
        min_gap=float(np.min(gaps)),
        margin=float(margin),
    )


def convex_closure(z, values):
    """Lower convex envelope of the graph (z, values) on the given grid.

    Monotone-chain sweep over the (already sorted) abscissas followed by
    linear interpolation between the kept hull vertices.
    """
    z = np.asarray(z, dtype=float)
    v = np.asarray(values, dtype=float)
    hull = [0]
    for i in range(1, z.shape[0]):
        while len(hull) >= 2:
            o, a = hull[-2], hull[-1]
            cross = (z[a] - z[o]) * (v[i] - v[o]) - (v[a] - v[o]) * (z[i] - z[o])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.array(hull)
    return np.interp(z, z[idx], v[idx])


@dataclass(frozen=True, eq=False)
class PsiTransform:
    """Tabulated psi-transform on a z-grid over [0, 1].

    ``values`` is the convex closure actually used as psi; ``raw_values``
    keeps the H-minus-H differences before the closure, and for calibrated
    convex losses ``simplified_values`` tabulates phi(0) - H((1+z)/2), which
    should agree with psi up to grid resolution.
    """

    z: np.ndarray
    values: np.ndarray
    raw_values: np.ndarray
    simplified_values: np.ndarray | None
    construction: str
    gamma: float | None = None

    def __call__(self, at):
        out = np.interp(np.asarray(at, dtype=float), self.z, self.values)
        return float(out) if np.ndim(at) == 0 else out

    @property
    def max_simplification_gap(self):
        if self.simplified_values is None:
            return None
        return float(np.max(np.abs(self.values - self.simplified_values)))


def psi_numeric(loss, grid_size=1001):
    """Tabulate psi for a calibrated convex loss by direct minimization.

    Runs the bracketed ternary search for H and H- at eta = (1+z)/2 over a
    uniform z-grid, takes the lower convex hull of the differences, and clips
    the tiny negative dust the two independent searches can leave at z = 0.
    """
    cert = is_calibrated(loss)
    if not cert:
        raise ValueError(
            "psi requires a classification-calibrated loss "
            f"(deriv at 0 = {cert.deriv_at_zero:.3g}, min gap = {cert.min_gap:.3g})"
        )
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    z = np.linspace(0.0, 1.0, grid_size)
    etas = 0.5 * (1.0 + z)
    _, h_vals = _h_values(loss, etas)
    hm_vals = _h_minus_values(loss, etas)
    raw = hm_vals - h_vals
    simplified = float(loss.value(0.0)) - h_vals
    values = np.maximum(convex_closure(z, raw), 0.0)
    return PsiTransform(
        z=z,
        values=values,
        raw_values=raw,
        simplified_values=simplified,
        construction="numeric_convex_closure",
        gamma=getattr(loss, "gamma", None),
    )


def _clamp_eta(eta):
    a = np.asarray(eta, dtype=float)
    clipped = np.abs(a) >= 1.0
    if clipped.any():
        warnings.warn(
            "eta outside (-1, 1) clamped to +-(1 - 1e-9)", RuntimeWarning, stacklevel=3
        )
        a = np.clip(a, -_CLAMP, _CLAMP)
    return a


def conditional_minimizer_z(eta, gamma):
    """Margin minimizing the smoothed-hinge conditional risk at (1+eta)/2.

    Solved from the stationarity condition; evaluated through

        z = 1 + (log(|eta| + sqrt(eta^2 + (1-eta^2)*exp(-2*gamma)))
                 - log(1 - |eta|)) / gamma

    which is free of cancellation and overflow for any gamma > 0, and carries
    the sign of eta.
    """
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise ValueError(f"gamma must be a positive finite real, got {gamma}")
    a = _clamp_eta(eta)
    mag = np.abs(a)
    with np.errstate(divide="ignore"):
        inner = mag + np.sqrt(mag**2 + (1.0 - mag**2) * np.exp(-2.0 * gamma))
        z = 1.0 + (np.log(inner) - np.log1p(-mag)) / gamma
    out = np.where(mag == 0.0, 0.0, np.sign(a) * z)
    return float(out) if np.ndim(eta) == 0 else out


def psi_smoothed_hinge_closed(eta, gamma):
    """Closed-form psi-transform of the smoothed hinge loss.

    Evaluates phi(0) - H((1+|eta|)/2) at the analytic conditional minimizer,
    sharing the overflow-safe machinery of :func:`conditional_minimizer_z`;
    even in eta by construction.  Arguments with |eta| >= 1 are clamped to
    +-(1 - 1e-9) with a warning.
    """
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise ValueError(f"gamma must be a positive finite real, got {gamma}")
    a = np.abs(_clamp_eta(eta))
    zstar = conditional_minimizer_z(a, gamma)
    eta_c = 0.5 * (1.0 + a)
    h_val = eta_c * softplus(gamma * (1.0 - zstar)) + (1.0 - eta_c) * softplus(
        gamma * (1.0 + zstar)
    )
    out = (softplus(gamma) - h_val) / gamma
    return float(out) if np.ndim(eta) == 0 else out


def psi_closed_form_table(gamma, grid_size=1001):
    """Closed-form psi tabulated as a PsiTransform on z in [0, 1]."""
    z = np.linspace(0.0, 1.0, grid_size)
    values = psi_smoothed_hinge_closed(z, gamma)
    return PsiTransform(
        z=z,
        values=values,
        raw_values=values,
        simplified_values=None,
        construction="closed_form_smoothed_hinge",
        gamma=float(gamma),
    )


def psi_lower_bound(eta, gamma):
    """|eta| - log(1/|eta|)/gamma, a simple floor under the closed-form psi.

    May be negative (the floor is vacuous for small |eta|); diverges at
    eta = 0, which is rejected.
    """
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise ValueError(f"gamma must be a positive finite real, got {gamma}")
    a = np.asarray(eta, dtype=float)
    if np.any(a == 0.0):
        raise ValueError("eta = 0 is outside the bound's domain (log divergence)")
    if np.any(np.abs(a) >= 1.0):
        raise ValueError("eta must lie in (-1, 1)")
    mag = np.abs(a)
    out = mag + np.log(mag) / gamma
    return float(out) if np.ndim(eta) == 0 else out


def binary_excess_bound(excess_phi, gamma):
    """Translate a surrogate excess risk into a binary excess risk bound.

    Returns  E + E/(1 + gamma*E) * log(1/E)  for E in (0, 1); for E >= 1 the
    logarithm is clamped at zero (outside the derivation's regime the bound
    reduces to E itself).
    """
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma <= 0.0:
        raise ValueError(f"gamma must be a positive finite real, got {gamma}")
    e = np.asarray(excess_phi, dtype=float)
    if np.any(e <= 0.0):
        raise ValueError("excess_phi must be positive")
    out = e + e / (1.0 + gamma * e) * np.maximum(-np.log(e), 0.0)
    return float(out) if np.ndim(excess_phi) == 0 else out
