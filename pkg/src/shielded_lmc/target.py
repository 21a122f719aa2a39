"""Target distributions given by a score and, optionally, a log-density.

A target is any object with a ``score(x)`` method returning the gradient of
the log-density.  Targets that can also evaluate ``log_density(x)`` set
``has_log_density = True``; only those can back a :class:`PotentialView`.
"""

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import UnsupportedOperation

__all__ = [
    "TargetModel",
    "GaussianMixture",
    "PotentialView",
    "gmm_log_density",
    "gmm_score",
    "potential_value",
    "calibrate_offset",
    "gmm_benchmark",
]


def logsumexp(a, axis=-1, keepdims=False):
    """Max-shifted log-sum-exp (plain numpy; far cheaper per call than scipy's)."""
    # the floor keeps an all -inf row from producing nan
    m = np.maximum(a.max(axis=axis, keepdims=True), -1e300)
    out = np.log(np.exp(a - m).sum(axis=axis, keepdims=True)) + m
    return out if keepdims else np.squeeze(out, axis=axis)


class TargetModel(Protocol):
    has_log_density: bool

    def score(self, x: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class GaussianMixture:
    """Finite mixture of multivariate normals.

    Parameters
    ----------
    weights : array_like, shape (K,)
        Positive mixing weights summing to one.
    means : array_like, shape (K, d)
    covariances : array_like, shape (K, d, d)
        Symmetric positive-definite covariance matrices.
    """

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    has_log_density: bool = field(default=True, init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.atleast_2d(np.asarray(self.means, dtype=float))
        cov = np.asarray(self.covariances, dtype=float)
        if cov.ndim == 2:
            cov = cov[None]
        K, d = mu.shape
        if w.shape != (K,) or cov.shape != (K, d, d):
            raise ValueError(f"inconsistent shapes: weights {w.shape}, means {mu.shape}, covariances {cov.shape}")
        if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be positive and sum to 1")
        if not np.allclose(cov, np.swapaxes(cov, -1, -2)):
            raise ValueError("covariances must be symmetric")
        try:
            chol = np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ValueError("covariances must be positive definite") from None
        precision = np.linalg.inv(cov)
        logdet = 2.0 * np.log(np.diagonal(chol, axis1=-2, axis2=-1)).sum(-1)
        log_norm = np.log(w) - 0.5 * (d * math.log(2.0 * math.pi) + logdet)
        for name, val in (("weights", w), ("means", mu), ("covariances", cov),
                          ("_chol", chol), ("_precision", precision), ("_log_norm", log_norm)):
            object.__setattr__(self, name, val)

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.means.shape[0]

    def _component_terms(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise ValueError(f"dimension mismatch: mixture is {self.dim}-D, x has shape {x.shape}")
        diff = x[..., None, :] - self.means  # (..., K, d)
        pdiff = np.einsum("...kj,kij->...ki", diff, self._precision)
        quad = np.einsum("...ki,...ki->...k", diff, pdiff)
        return self._log_norm - 0.5 * quad, pdiff

    def log_density(self, x):
        """log p(x), evaluated with a max-shifted log-sum-exp."""
        log_comp, _ = self._component_terms(x)
        return logsumexp(log_comp, axis=-1)

    def score(self, x):
        """grad log p(x) = sum_k r_k(x) Sigma_k^{-1} (mu_k - x)."""
        log_comp, pdiff = self._component_terms(x)
        log_resp = log_comp - logsumexp(log_comp, axis=-1, keepdims=True)
        return -np.einsum("...k,...ki->...i", np.exp(log_resp), pdiff)

    def log_density_and_score(self, x):
        """Both quantities from one pass over the components."""
        log_comp, pdiff = self._component_terms(x)
        lse = logsumexp(log_comp, axis=-1, keepdims=True)
        score = -np.einsum("...k,...ki->...i", np.exp(log_comp - lse), pdiff)
        return lse[..., 0], score

    def sample(self, n, rng):
        """Exact i.i.d. draws, shape ``(n, d)``."""
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        z = rng.standard_normal((n, self.dim))
        return self.means[comp] + np.einsum("nij,nj->ni", self._chol[comp], z)

    @property
    def mean(self):
        return self.weights @ self.means


def gmm_log_density(gmm, x):
    return gmm.log_density(x)


def gmm_score(gmm, x):
    return gmm.score(x)


def gmm_benchmark():
    """Equal-weight two-component mixture used for the 2-D obstacle study."""
    return GaussianMixture(
        weights=[0.5, 0.5],
        means=[[-2.0, -1.0], [0.9, 1.0]],
        covariances=[[[2.0, 1.0], [1.0, 2.0]], [[0.5, -0.25], [-0.25, 0.5]]],
    )


@dataclass(eq=False)
class PotentialView:
    """U(x) = -log p(x) + C for a target with a log-density.

    ``n_nonpositive`` counts evaluations where U(x) <= 0, i.e. where the
    offset ``C`` was too small for the region visited.
    """

    target: object
    offset: float
    n_nonpositive: int = 0

    def __post_init__(self):
        if not getattr(self.target, "has_log_density", False):
            raise UnsupportedOperation(
                "target has no log-density; use the constant (alpha_bar) repulsion instead"
            )

    def value(self, x):
        u = -self.target.log_density(x) + self.offset
        self.n_nonpositive += int(np.count_nonzero(u <= 0))
        return u

    def grad(self, x):
        return -self.target.score(x)

    def value_and_grad(self, x):
        if hasattr(self.target, "log_density_and_score"):
            logp, score = self.target.log_density_and_score(x)
        else:
            logp, score = self.target.log_density(x), self.target.score(x)
        u = -logp + self.offset
        self.n_nonpositive += int(np.count_nonzero(u <= 0))
        return u, -score


def potential_value(view, x):
    return view.value(x)


def _probe_grid(lower, upper, n_probe):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    d = lower.size
    m = max(1, math.ceil(n_probe ** (1.0 / d)))
    if m % 2 == 0:
        m += 1  # odd count keeps the box center on the grid
    if m == 1:
        axes = [np.array([0.5 * (lo + hi)]) for lo, hi in zip(lower, upper)]
    else:
        axes = [np.linspace(lo, hi, m) for lo, hi in zip(lower, upper)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def calibrate_offset(target, probe_box, n_probe=10_000, extra_points=None):
    """Offset C making U = -log p + C positive on a probed region.

    Returns ``max(0, max log p over the probes) + 1``.  Probes are a regular
    grid over ``probe_box = (lower, upper)`` with an odd number of points per
    axis (so the box center is always probed), plus any ``extra_points``,
    e.g. known modes.
    """
    if not getattr(target, "has_log_density", False):
        raise UnsupportedOperation("offset calibration needs a log-density")
    probes = _probe_grid(*probe_box, n_probe)
    if extra_points is not None:
        probes = np.concatenate([probes, np.atleast_2d(extra_points)], axis=0)
    peak = float(np.max(target.log_density(probes)))
    return max(0.0, peak) + 1.0
