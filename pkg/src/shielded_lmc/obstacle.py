"""Convex obstacles described by sign functions ("beta functions").

Each obstacle carries a scalar function that is negative on its interior,
zero on its boundary and positive outside.  An :class:`ObstacleSet`
aggregates them by taking the product of the individual functions, which is
positive exactly on the free space when obstacles do not overlap.

All evaluations broadcast over leading axes: ``x`` may be a single point of
shape ``(d,)`` or a batch of shape ``(..., d)``.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

__all__ = [
    "Obstacle",
    "ObstacleSet",
    "beta_single",
    "beta_aggregate",
    "grad_beta",
    "is_feasible",
    "gmm_benchmark_obstacles",
]

_KINDS = ("sphere", "ellipsoid", "cylinder")


@dataclass(frozen=True, eq=False)
class Obstacle:
    """A single convex obstacle.

    Use the :meth:`sphere`, :meth:`ellipsoid` and :meth:`cylinder`
    constructors rather than calling the class directly.

    Attributes
    ----------
    kind : {"sphere", "ellipsoid", "cylinder"}
    center : ndarray or None
        Center point (sphere, ellipsoid).  Cylinders are centered at the
        origin of their coordinate pair.
    radius : float or None
        Radius (sphere, cylinder).
    shape : ndarray or None
        Symmetric positive-definite matrix ``A`` of the ellipsoid
        ``(x - c)^T A (x - c) < 1``.
    axes : tuple of int or None
        The two coordinates a cylinder acts on.
    """

    kind: str
    center: np.ndarray | None = None
    radius: float | None = None
    shape: np.ndarray | None = None
    axes: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown obstacle kind {self.kind!r}")
        if self.kind in ("sphere", "cylinder"):
            if self.radius is None or not self.radius > 0:
                raise ValueError(f"{self.kind} radius must be positive, got {self.radius}")
        if self.kind in ("sphere", "ellipsoid"):
            if self.center is None or np.ndim(self.center) != 1:
                raise ValueError(f"{self.kind} needs a 1-D center")
        if self.kind == "ellipsoid":
            A = self.shape
            if A is None or A.shape != (self.center.size, self.center.size):
                raise ValueError("ellipsoid shape must be a d x d matrix")
            if not np.allclose(A, A.T):
                raise ValueError("ellipsoid shape must be symmetric")
            try:
                np.linalg.cholesky(A)
            except np.linalg.LinAlgError:
                raise ValueError("ellipsoid shape must be positive definite") from None
        if self.kind == "cylinder":
            ax = self.axes
            if ax is None or len(ax) != 2 or ax[0] == ax[1] or min(ax) < 0:
                raise ValueError(f"cylinder axes must be two distinct non-negative indices, got {ax}")

    @classmethod
    def sphere(cls, center, radius):
        return cls("sphere", center=np.asarray(center, dtype=float), radius=float(radius))

    @classmethod
    def ellipsoid(cls, center, shape):
        return cls("ellipsoid", center=np.asarray(center, dtype=float),
                   shape=np.asarray(shape, dtype=float))

    @classmethod
    def cylinder(cls, axes, radius):
        i, j = (int(a) for a in axes)
        return cls("cylinder", axes=(i, j), radius=float(radius))

    @property
    def dim(self):
        """Ambient dimension, or None for cylinders (any d > max(axes))."""
        return None if self.center is None else self.center.size

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            raise ValueError("x must be at least 1-D")
        d = x.shape[-1]
        if self.kind == "cylinder":
            if max(self.axes) >= d:
                raise ValueError(f"cylinder axes {self.axes} out of range for dimension {d}")
        elif d != self.center.size:
            raise ValueError(f"dimension mismatch: obstacle is {self.center.size}-D, x is {d}-D")
        return x

    def beta(self, x):
        """Sign function: < 0 inside, 0 on the boundary, > 0 outside."""
        x = self._check(x)
        if self.kind == "sphere":
            diff = x - self.center
            return (diff * diff).sum(axis=-1) - self.radius**2
        if self.kind == "ellipsoid":
            diff = x - self.center
            return np.einsum("...i,ij,...j->...", diff, self.shape, diff) - 1.0
        i, j = self.axes
        return x[..., i] ** 2 + x[..., j] ** 2 - self.radius**2

    def grad(self, x):
        x = self._check(x)
        if self.kind == "sphere":
            return 2.0 * (x - self.center)
        if self.kind == "ellipsoid":
            return 2.0 * (x - self.center) @ self.shape
        g = np.zeros_like(x)
        i, j = self.axes
        g[..., i] = 2.0 * x[..., i]
        g[..., j] = 2.0 * x[..., j]
        return g

    def beta_and_grad(self, x):
        x = self._check(x)
        if self.kind == "sphere":
            diff = x - self.center
            return (diff * diff).sum(axis=-1) - self.radius**2, 2.0 * diff
        if self.kind == "cylinder":
            i, j = self.axes
            xi, xj = x[..., i], x[..., j]
            g = np.zeros_like(x)
            g[..., i] = 2.0 * xi
            g[..., j] = 2.0 * xj
            return xi * xi + xj * xj - self.radius**2, g
        return self.beta(x), self.grad(x)

    def boundary_distance(self, x):
        """Euclidean distance from ``x`` to the obstacle boundary."""
        x = self._check(x)
        if self.kind == "sphere":
            return np.abs(np.linalg.norm(x - self.center, axis=-1) - self.radius)
        if self.kind == "cylinder":
            i, j = self.axes
            return np.abs(np.hypot(x[..., i], x[..., j]) - self.radius)
        raise NotImplementedError("no closed-form boundary distance for ellipsoids")

    def to_record(self):
        """Plain-dict form used by experiment config files."""
        if self.kind == "sphere":
            return {"kind": "sphere", "center": self.center.tolist(), "radius": self.radius}
        if self.kind == "ellipsoid":
            return {"kind": "ellipsoid", "center": self.center.tolist(), "shape": self.shape.tolist()}
        return {"kind": "cylinder", "axes": list(self.axes), "radius": self.radius}

    @classmethod
    def from_record(cls, rec):
        kind = rec.get("kind")
        if kind == "sphere":
            return cls.sphere(rec["center"], rec["radius"])
        if kind == "ellipsoid":
            return cls.ellipsoid(rec["center"], rec["shape"])
        if kind == "cylinder":
            return cls.cylinder(rec["axes"], rec["radius"])
        raise ValueError(f"unknown obstacle kind {kind!r}")


def _overlap_problem(a, b):
    if a.kind == "cylinder" and b.kind == "cylinder":
        if set(a.axes) & set(b.axes):
            return "cylinders share a coordinate axis"
        # Disjoint coordinate pairs: treated as non-overlapping (see is_feasible).
        return None
    if a.kind == "sphere" and b.kind == "sphere":
        if a.dim != b.dim:
            return "dimension mismatch"
        if np.linalg.norm(a.center - b.center) <= a.radius + b.radius:
            return "spheres intersect"
        return None
    for p, q in ((a, b), (b, a)):
        if p.center is not None and q.beta(p.center) <= 0:
            return "center of one obstacle lies inside the other"
    return None


@dataclass(frozen=True, eq=False)
class ObstacleSet:
    """An ordered, immutable collection of non-overlapping obstacles.

    Parameters
    ----------
    obstacles : sequence of Obstacle
    beta_cap : float or None, default 1.0
        Ceiling applied to positive values of the aggregated function.
        ``None`` disables saturation.
    """

    obstacles: tuple = ()
    beta_cap: float | None = 1.0
    _dim: int | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        obs = tuple(self.obstacles)
        object.__setattr__(self, "obstacles", obs)
        if self.beta_cap is not None and not self.beta_cap > 0:
            raise ValueError("beta_cap must be positive or None")
        dims = {o.dim for o in obs if o.dim is not None}
        if len(dims) > 1:
            raise ValueError(f"obstacles have inconsistent dimensions {sorted(dims)}")
        for (ia, a), (ib, b) in combinations(enumerate(obs), 2):
            problem = _overlap_problem(a, b)
            if problem:
                raise ValueError(f"obstacles {ia} and {ib} overlap: {problem}")
        object.__setattr__(self, "_dim", dims.pop() if dims else None)

    def __len__(self):
        return len(self.obstacles)

    def __iter__(self):
        return iter(self.obstacles)

    def with_cap(self, beta_cap):
        return ObstacleSet(self.obstacles, beta_cap=beta_cap)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            raise ValueError("x must be at least 1-D")
        if self._dim is not None and x.shape[-1] != self._dim:
            raise ValueError(f"dimension mismatch: obstacles are {self._dim}-D, x is {x.shape[-1]}-D")
        return x

    def factors(self, x):
        """Individual obstacle functions stacked on the last axis, shape ``(..., n)``."""
        x = self._check(x)
        if not self.obstacles:
            return np.ones(x.shape[:-1] + (0,))
        return np.stack([o.beta(x) for o in self.obstacles], axis=-1)

    def saturate(self, b):
        if self.beta_cap is None:
            return b
        return np.minimum(b, self.beta_cap)

    def beta(self, x, capped=True):
        """Product of the obstacle functions, saturated at ``beta_cap`` if ``capped``."""
        b = np.prod(self.factors(x), axis=-1)
        return self.saturate(b) if capped else b

    def beta_and_grad(self, x):
        """Uncapped product and its analytic gradient in one pass."""
        x = self._check(x)
        n = len(self.obstacles)
        if n == 0:
            return np.ones(x.shape[:-1]), np.zeros_like(x)
        f, g = zip(*(o.beta_and_grad(x) for o in self.obstacles))
        if n == 1:
            return f[0], g[0]
        # leave-one-out products without division, so zero factors are safe
        prefix = [None, f[0]]
        for fk in f[1:-1]:
            prefix.append(prefix[-1] * fk)
        grad = prefix[-1][..., None] * g[-1]
        suffix = f[-1]
        for k in range(n - 2, -1, -1):
            loo = suffix if k == 0 else prefix[k] * suffix
            grad += loo[..., None] * g[k]
            suffix = suffix * f[k]
        return suffix, grad

    def grad_beta(self, x):
        return self.beta_and_grad(x)[1]

    def is_feasible(self, x):
        """True where every obstacle function is strictly positive."""
        x = self._check(x)
        ok = np.ones(x.shape[:-1], dtype=bool)
        for o in self.obstacles:
            ok &= o.beta(x) > 0
        return ok

    def boundary_distance(self, x):
        """Distance to the nearest obstacle boundary (``inf`` for an empty set)."""
        x = self._check(x)
        if not self.obstacles:
            return np.full(x.shape[:-1], np.inf)
        return np.min(np.stack([o.boundary_distance(x) for o in self.obstacles], axis=-1), axis=-1)

    def to_records(self):
        return [o.to_record() for o in self.obstacles]

    @classmethod
    def from_records(cls, records, beta_cap=1.0):
        return cls(tuple(Obstacle.from_record(r) for r in records), beta_cap=beta_cap)


def beta_single(obs, x):
    return obs.beta(x)


def beta_aggregate(obstacles, x):
    return obstacles.beta(x, capped=True)


def grad_beta(obstacles, x):
    return obstacles.grad_beta(x)


def is_feasible(obstacles, x):
    return obstacles.is_feasible(x)


def gmm_benchmark_obstacles(beta_cap=1.0):
    """The two circular obstacles (radius 0.4) of the 2-D mixture benchmark."""
    return ObstacleSet(
        (Obstacle.sphere([-1.0, 1.0], 0.4), Obstacle.sphere([-1.0, 0.1], 0.4)),
        beta_cap=beta_cap,
    )
