"""Synthetic classification distributions with known conditional probabilities.

Three families, all over R^d with the first coordinate carrying the signal:

- margin_blobs(epsilon): two mirrored slabs; the first coordinate of a point
  with label y is y * (epsilon + U[0,1)), so the unit direction e_1 separates
  every point with margin at least epsilon and eta(x) is 0 or 1.  Bayes risk 0.
- noisy_halfspace(flip_prob): standard normal inputs, labels of the halfspace
  {x_1 > 0} flipped independently with the given probability, so eta(x) is
  flip_prob or 1 - flip_prob.  Bayes risk flip_prob.
- smooth_eta: standard normal inputs with eta(x) = sigmoid(w . x) for a fixed
  direction w (default 2 * e_1).  Bayes risk estimated by Monte Carlo.

Everything is deterministic given (spec, n): each call builds a fresh
generator from the spec's seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import sigmoid

FAMILIES = ("margin_blobs", "noisy_halfspace", "smooth_eta")


@dataclass(frozen=True)
class SyntheticSpec:
    """Distribution family, its parameters, and the sampling seed."""

    family: str
    dim: int = 2
    epsilon: float | None = None
    flip_prob: float | None = None
    w: tuple[float, ...] | None = None
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown synthetic family: {self.family!r}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.family == "margin_blobs":
            if self.epsilon is None or self.epsilon <= 0:
                raise ValueError("margin_blobs requires epsilon > 0")
        if self.family == "noisy_halfspace":
            if self.flip_prob is None or not 0.0 <= self.flip_prob < 0.5:
                raise ValueError("noisy_halfspace requires flip_prob in [0, 1/2)")
        if self.w is not None and len(self.w) != self.dim:
            raise ValueError("w must have length dim")

    def direction(self):
        """The planted direction: w for smooth_eta, e_1 otherwise."""
        if self.family == "smooth_eta":
            if self.w is not None:
                return np.asarray(self.w, dtype=float)
            w = np.zeros(self.dim)
            w[0] = 2.0
            return w
        e1 = np.zeros(self.dim)
        e1[0] = 1.0
        return e1

    def to_dict(self):
        return {
            "family": self.family,
            "dim": self.dim,
            "epsilon": self.epsilon,
            "flip_prob": self.flip_prob,
            "w": list(self.w) if self.w is not None else None,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload):
        w = payload.get("w")
        return cls(
            family=payload["family"],
            dim=int(payload.get("dim", 2)),
            epsilon=payload.get("epsilon"),
            flip_prob=payload.get("flip_prob"),
            w=tuple(w) if w is not None else None,
            seed=int(payload.get("seed", 0)),
        )


@dataclass(frozen=True, eq=False)
class Dataset:
    """Instances, +-1 labels, and (when known) the true eta at each instance."""

    instances: np.ndarray
    labels: np.ndarray
    eta_values: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "instances", np.asarray(self.instances, dtype=float))
        object.__setattr__(self, "labels", np.asarray(self.labels, dtype=float))
        if self.eta_values is not None:
            object.__setattr__(
                self, "eta_values", np.asarray(self.eta_values, dtype=float)
            )
        if self.instances.ndim != 2:
            raise ValueError("instances must be a 2-d array")
        n = self.instances.shape[0]
        if self.labels.shape != (n,):
            raise ValueError("labels must align with instances")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must lie in {-1, +1}")
        if self.eta_values is not None and self.eta_values.shape != (n,):
            raise ValueError("eta_values must align with instances")

    def __len__(self):
        return self.instances.shape[0]

    def to_dict(self):
        return {
            "instances": self.instances.tolist(),
            "labels": self.labels.tolist(),
            "eta_values": self.eta_values.tolist() if self.eta_values is not None else None,
        }

    @classmethod
    def from_dict(cls, payload):
        eta = payload.get("eta_values")
        return cls(
            instances=np.asarray(payload["instances"], dtype=float),
            labels=np.asarray(payload["labels"], dtype=float),
            eta_values=np.asarray(eta, dtype=float) if eta is not None else None,
        )


def _draw(spec, n, rng):
    """Sample (instances, eta) and, where labels are needed, labels too."""
    d = spec.dim
    if spec.family == "margin_blobs":
        y = rng.choice((-1.0, 1.0), size=n)
        x = rng.standard_normal((n, d))
        x[:, 0] = y * (spec.epsilon + rng.random(n))
        eta = (x[:, 0] > 0).astype(float)
        return x, eta, y
    if spec.family == "noisy_halfspace":
        x = rng.standard_normal((n, d))
        clean = np.where(x[:, 0] > 0, 1.0, -1.0)
        flips = rng.random(n) < spec.flip_prob
        y = np.where(flips, -clean, clean)
        eta = np.where(x[:, 0] > 0, 1.0 - spec.flip_prob, spec.flip_prob)
        return x, eta, y
    x = rng.standard_normal((n, d))
    eta = sigmoid(x @ spec.direction())
    y = np.where(rng.random(n) < eta, 1.0, -1.0)
    return x, eta, y


def generate(spec, n):
    """Draw an i.i.d. dataset of size n; identical for identical (spec, n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(spec.seed)
    x, eta, y = _draw(spec, n, rng)
    return Dataset(instances=x, labels=y, eta_values=eta)


def sample_instances(spec, m, seed):
    """Draw m instances with their eta values (no labels), for Monte Carlo."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    x, eta, _ = _draw(spec, m, rng)
    return x, eta


def bayes_risk(spec, mc_samples=1_000_000, seed=0):
    """Minimum achievable misclassification risk, with its standard error.

    Closed form for margin_blobs (0) and noisy_halfspace (flip_prob); for
    smooth_eta a Monte Carlo estimate of E[min(eta, 1 - eta)] over the
    one-dimensional law of w . x.
    """
    if spec.family == "margin_blobs":
        return 0.0, 0.0
    if spec.family == "noisy_halfspace":
        return float(spec.flip_prob), 0.0
    w = spec.direction()
    scale = float(np.linalg.norm(w))
    if scale == 0.0:
        return 0.5, 0.0
    rng = np.random.default_rng(seed)
    eta = sigmoid(scale * rng.standard_normal(mc_samples))
    vals = np.minimum(eta, 1.0 - eta)
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(mc_samples))
