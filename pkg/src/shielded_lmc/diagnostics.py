"""Sample-level diagnostics: feasibility, mode balance, boundary mass, TV distance."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateConstraintError

__all__ = [
    "SampleStats",
    "feasibility_rate",
    "mode_occupancy",
    "boundary_fraction",
    "mean_mode_distance",
    "rejection_oracle",
    "histogram",
    "histogram_tv",
    "sample_stats",
]


def _points(samples):
    s = np.asarray(samples, dtype=float)
    return s.reshape(-1, s.shape[-1])


def feasibility_rate(samples, obstacles):
    s = _points(samples)
    if len(s) == 0:
        return float("nan")
    return float(np.mean(obstacles.is_feasible(s)))


def mode_occupancy(samples, means, assign_radius=2.0):
    """Fraction of samples assigned to each mean.

    A sample goes to its nearest mean (lowest index on ties) and counts only
    if it lies within ``assign_radius`` of it, so the fractions may sum to
    less than one.
    """
    if not assign_radius > 0:
        raise ValueError("assign_radius must be positive")
    s = _points(samples)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    if len(s) == 0:
        return np.zeros(len(means))
    dist = np.linalg.norm(s[:, None, :] - means, axis=-1)
    nearest = dist.argmin(axis=1)  # argmin returns the first minimum
    hit = dist[np.arange(len(s)), nearest] <= assign_radius
    return np.bincount(nearest[hit], minlength=len(means)) / len(s)


def boundary_fraction(samples, obstacles, delta=0.05):
    """Fraction of samples within ``delta`` of some obstacle boundary.

    Raises NotImplementedError for ellipsoids (no closed-form distance).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    s = _points(samples)
    if len(s) == 0:
        return float("nan")
    return float(np.mean(obstacles.boundary_distance(s) <= delta))


def mean_mode_distance(samples, means):
    """Average Euclidean distance from each sample to its nearest mean."""
    s = _points(samples)
    means = np.atleast_2d(np.asarray(means, dtype=float))
    return float(np.linalg.norm(s[:, None, :] - means, axis=-1).min(axis=1).mean())


def rejection_oracle(gmm, obstacles, n, rng, max_factor=100):
    """Exact draws from the mixture restricted to the free space.

    Proposes from the mixture in batches and keeps feasible draws.  Gives up
    with :class:`DegenerateConstraintError` after ``max_factor * n`` proposals.
    """
    out, kept, proposed = [], 0, 0
    budget = max_factor * n
    while kept < n:
        if proposed >= budget:
            raise DegenerateConstraintError(
                f"only {kept} of {n} draws accepted after {proposed} proposals")
        batch = min(max(2 * (n - kept), 1024), budget - proposed)
        x = gmm.sample(batch, rng)
        proposed += batch
        x = x[obstacles.is_feasible(x)]
        out.append(x)
        kept += len(x)
    return np.concatenate(out)[:n]


def histogram(samples, box, bins=20):
    """Normalized ``bins x bins`` histogram of the in-box samples (first two coordinates)."""
    s = _points(samples)
    (x0, y0), (x1, y1) = box
    h, _, _ = np.histogram2d(s[:, 0], s[:, 1], bins=bins, range=[[x0, x1], [y0, y1]])
    total = h.sum()
    return h / total if total > 0 else h


def histogram_tv(samples_a, samples_b, box=((-6.0, -6.0), (6.0, 6.0)), bins=20):
    """Half the L1 distance between the normalized histograms of two sample sets."""
    if len(_points(samples_a)) == 0 or len(_points(samples_b)) == 0:
        raise ValueError("both sample sets must be non-empty")
    ha = histogram(samples_a, box, bins)
    hb = histogram(samples_b, box, bins)
    return float(0.5 * np.abs(ha - hb).sum())


@dataclass
class SampleStats:
    """Summary of one run, written as a row of ``stats.csv``."""

    run_id: str
    alpha: float
    tau: float
    feasibility_rate: float
    mode_occupancy: list = field(default_factory=list)
    boundary_fraction: float = float("nan")
    mean_mode_distance: float = float("nan")
    infeasible_step_fraction: float = float("nan")
    histogram: np.ndarray | None = field(default=None, repr=False)

    def header(self):
        modes = [f"mode_{k + 1}" for k in range(len(self.mode_occupancy))]
        return ["run_id", "alpha", "tau", "feasibility_rate", *modes, "boundary_fraction",
                "mean_mode_distance", "infeasible_step_fraction"]

    def row(self):
        return [self.run_id, self.alpha, self.tau, self.feasibility_rate, *self.mode_occupancy,
                self.boundary_fraction, self.mean_mode_distance, self.infeasible_step_fraction]


def sample_stats(run_id, samples, obstacles, means, alpha, tau, assign_radius=2.0, delta=0.05,
                 box=((-6.0, -6.0), (6.0, 6.0)), bins=20, infeasible_step_fraction=float("nan")):
    return SampleStats(
        run_id=run_id,
        alpha=alpha,
        tau=tau,
        feasibility_rate=feasibility_rate(samples, obstacles),
        mode_occupancy=[float(v) for v in mode_occupancy(samples, means, assign_radius)],
        boundary_fraction=boundary_fraction(samples, obstacles, delta),
        mean_mode_distance=mean_mode_distance(samples, means),
        infeasible_step_fraction=infeasible_step_fraction,
        histogram=histogram(samples, box, bins),
    )
