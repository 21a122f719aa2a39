"""MIMO symbol detection with annealed Langevin dynamics.

Complex model ``y = H x + n`` with ``H`` Rayleigh (entries CN(0, 1/N_r)),
``x`` drawn uniformly from a constellation and ``n ~ CN(0, sigma0^2 I)``.
Everything downstream works on the real lifting

    H_r = [[Re H, -Im H], [Im H, Re H]],  x_r = [Re x, Im x],

so coordinate ``i`` and ``i + N_u`` hold the real and imaginary parts of
symbol ``i``.

Detectors run many annealed chains at once: arrays of chain states have shape
``(n_instances, n_candidates, 2 N_u)``.
"""

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConfigError, DetectionError, UnsupportedOperation
from .obstacle import Obstacle, ObstacleSet
from .sampler import (
    INIT_STREAM,
    NoiseBank,
    SamplerConfig,
    chain_seed,
    shielded_update,
)
from .target import PotentialView, logsumexp

__all__ = [
    "Constellation",
    "MimoInstance",
    "AnnealSchedule",
    "LevelPosterior",
    "gen_channel",
    "lift_real",
    "make_instance",
    "instance_for",
    "noise_variance_from_snr",
    "smoothed_log_prior",
    "smoothed_prior_score",
    "likelihood_log",
    "likelihood_score",
    "posterior_score",
    "symbol_obstacles",
    "project",
    "residual",
    "detect_langevin",
    "detect_langevin_batch",
    "detect_ml_exhaustive",
    "ser",
    "symbol_errors",
]

INSTANCE_STREAM = 3
ML_GUARD = 2**24


@dataclass(frozen=True, eq=False)
class Constellation:
    """Complex symbol alphabet with a product (Re x Im) structure."""

    points: np.ndarray
    real_levels_re: np.ndarray
    real_levels_im: np.ndarray

    @classmethod
    def qpsk(cls, re=0.74, im=0.84):
        pts = np.array([complex(a, b) for a in (-re, re) for b in (-im, im)])
        return cls(pts, np.array([-re, re]), np.array([-im, im]))

    @property
    def energy(self):
        """Mean symbol energy E_s = mean |s|^2."""
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def size(self):
        return len(self.points)

    def level_table(self, n_u):
        """Per-coordinate admissible levels, shape ``(2 n_u, M)``."""
        if len(self.real_levels_re) != len(self.real_levels_im):
            raise UnsupportedOperation("real and imaginary level sets must have equal size")
        return np.concatenate([np.tile(self.real_levels_re, (n_u, 1)),
                               np.tile(self.real_levels_im, (n_u, 1))])


QPSK = Constellation.qpsk()


@dataclass(frozen=True, eq=False)
class MimoInstance:
    H_real: np.ndarray
    sigma0_sq: float
    x_true: np.ndarray
    y_real: np.ndarray
    n_u: int
    n_r: int


@dataclass(frozen=True)
class AnnealSchedule:
    """Decreasing noise scales with a fixed number of steps per level."""

    levels: tuple
    steps_per_level: int
    step_sizes: tuple

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=float)
        if lv.ndim != 1 or lv.size < 1:
            raise ConfigError("need at least one annealing level")
        if np.any(lv <= 0) or np.any(np.diff(lv) >= 0):
            raise ConfigError("annealing levels must be positive and strictly decreasing")
        if len(self.step_sizes) != lv.size or any(not e > 0 for e in self.step_sizes):
            raise ConfigError("need one positive step size per level")
        if self.steps_per_level < 1:
            raise ConfigError("steps_per_level must be >= 1")

    @classmethod
    def geometric(cls, sigma_max=0.84, sigma_min=0.01, n_levels=5, steps_per_level=40, eps=0.1):
        """Geometric scales with step size ``eps * sigma_l**2`` at level l."""
        if n_levels == 1:
            levels = np.array([sigma_max])
        else:
            levels = np.geomspace(sigma_max, sigma_min, n_levels)
        return cls(tuple(levels.tolist()), int(steps_per_level), tuple((eps * levels**2).tolist()))

    def __iter__(self):
        return iter(zip(self.levels, self.step_sizes))

    @property
    def n_steps(self):
        return len(self.levels) * self.steps_per_level


def gen_channel(n_r, n_u, rng):
    """Rayleigh channel, entries CN(0, 1/n_r)."""
    if n_r < 1 or n_u < 1:
        raise ValueError("n_r and n_u must be >= 1")
    scale = math.sqrt(0.5 / n_r)
    return scale * (rng.standard_normal((n_r, n_u)) + 1j * rng.standard_normal((n_r, n_u)))


def lift_real(H, v):
    """Real block lifting of a complex matrix and vector."""
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    if H.shape[1] != v.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape}, v {v.shape}")
    Hr = np.block([[H.real, -H.imag], [H.imag, H.real]])
    return Hr, np.concatenate([v.real, v.imag])


def noise_variance_from_snr(n_u, n_r, constellation, snr_db):
    """sigma0^2 = N_u E_s / (N_r 10^(snr/10))."""
    return n_u * constellation.energy / (n_r * 10.0 ** (snr_db / 10.0))


def make_instance(n_u, n_r, snr_db, rng, constellation=QPSK):
    H = gen_channel(n_r, n_u, rng)
    x = constellation.points[rng.integers(constellation.size, size=n_u)]
    s2 = noise_variance_from_snr(n_u, n_r, constellation, snr_db)
    n = math.sqrt(s2 / 2) * (rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r))
    Hr, xr = lift_real(H, x)
    y = H @ x + n
    yr = np.concatenate([y.real, y.imag])
    return MimoInstance(Hr, s2, xr, yr, n_u, n_r)


def instance_for(seed, snr_index, trial, n_u, n_r, snr_db, constellation=QPSK):
    """Instance drawn from its own stream, keyed by (seed, SNR index, trial)."""
    rng = np.random.default_rng(chain_seed(INSTANCE_STREAM, seed, snr_index, trial))
    return make_instance(n_u, n_r, snr_db, rng, constellation)


def _level_logits(x, sigma, levels):
    d = levels - x[..., None]
    return -(d * d) / (2.0 * sigma**2), d


def smoothed_log_prior(x, level_sigma, constellation=QPSK):
    """Log-density of the discrete prior convolved with N(0, level_sigma^2), per coordinate."""
    x = np.asarray(x, dtype=float)
    levels = constellation.level_table(x.shape[-1] // 2)
    logits, _ = _level_logits(x, level_sigma, levels)
    per = logsumexp(logits) - math.log(levels.shape[1]) - 0.5 * math.log(2 * math.pi * level_sigma**2)
    return per.sum(axis=-1)


def smoothed_prior_score(x, level_sigma, constellation=QPSK):
    """Gradient of :func:`smoothed_log_prior`: softmax-weighted pull toward the levels."""
    x = np.asarray(x, dtype=float)
    if not level_sigma > 0:
        raise ValueError("level_sigma must be positive")
    levels = constellation.level_table(x.shape[-1] // 2)
    logits, d = _level_logits(x, level_sigma, levels)
    w = np.exp(logits - logsumexp(logits, keepdims=True))
    return (w * d).sum(axis=-1) / level_sigma**2


def _tempered_variance(sigma0_sq, level_sigma):
    return sigma0_sq / 2.0 + level_sigma**2


def likelihood_log(x, inst, level_sigma):
    """Gaussian log-likelihood with per-coordinate variance sigma0^2/2 + level_sigma^2."""
    v = _tempered_variance(inst.sigma0_sq, level_sigma)
    r = inst.y_real - np.asarray(x) @ inst.H_real.T
    return -0.5 * (r * r).sum(axis=-1) / v - inst.n_r * math.log(2 * math.pi * v)


def likelihood_score(x, inst, level_sigma):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != inst.H_real.shape[1]:
        raise ValueError(f"dimension mismatch: expected {inst.H_real.shape[1]}, got {x.shape[-1]}")
    v = _tempered_variance(inst.sigma0_sq, level_sigma)
    return (inst.y_real - x @ inst.H_real.T) @ inst.H_real / v


def posterior_score(x, inst, level_sigma, constellation=QPSK):
    return likelihood_score(x, inst, level_sigma) + smoothed_prior_score(x, level_sigma, constellation)


class LevelPosterior:
    """Annealed posterior at one noise scale for a stack of instances.

    Chain states have shape ``(B, C, 2 N_u)``: ``B`` instances, ``C`` chains
    each.  Exposes ``score`` and ``log_density`` (unnormalized in nothing but
    the discrete-prior smoothing), so it can back a :class:`PotentialView`.
    """

    has_log_density = True

    def __init__(self, H, y, sigma0_sq, level_sigma, constellation=QPSK):
        self.H = np.asarray(H, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.var = _tempered_variance(np.asarray(sigma0_sq, dtype=float), level_sigma)
        self.sigma = level_sigma
        self.constellation = constellation
        self.n_r = self.H.shape[1] // 2

    def _residual(self, x):
        return self.y[:, None, :] - np.einsum("bij,bcj->bci", self.H, x)

    def score(self, x):
        r = self._residual(x)
        lik = np.einsum("bci,bij->bcj", r, self.H) / self.var[:, None, None]
        return lik + smoothed_prior_score(x, self.sigma, self.constellation)

    def log_density(self, x):
        r = self._residual(x)
        v = self.var[:, None]
        lik = -0.5 * (r * r).sum(axis=-1) / v - self.n_r * np.log(2 * math.pi * v)
        return lik + smoothed_log_prior(x, self.sigma, self.constellation)

    def offset(self):
        """C = max(0, upper bound of log p) + 1, per instance, shape ``(B, 1)``."""
        d = self.H.shape[2]
        peak = -0.5 * d * math.log(2 * math.pi * self.sigma**2) - self.n_r * np.log(2 * math.pi * self.var)
        return (np.maximum(0.0, peak) + 1.0)[:, None]


def symbol_obstacles(n_u, radius=0.5, beta_cap=1.0, constellation=QPSK):
    """One origin-centered cylinder per complex symbol, over coordinates (i, i + n_u)."""
    limit = min(np.min(np.abs(constellation.real_levels_re)), np.min(np.abs(constellation.real_levels_im)))
    if not 0 < radius < limit:
        raise ValueError(f"radius must lie in (0, {limit}), got {radius}")
    return ObstacleSet(tuple(Obstacle.cylinder((i, i + n_u), radius) for i in range(n_u)),
                       beta_cap=beta_cap)


def project(x, constellation=QPSK):
    """Nearest constellation point for every (Re, Im) coordinate pair."""
    x = np.asarray(x, dtype=float)
    n_u = x.shape[-1] // 2
    z = x[..., :n_u] + 1j * x[..., n_u:]
    k = np.abs(z[..., None] - constellation.points).argmin(axis=-1)
    s = constellation.points[k]
    return np.concatenate([s.real, s.imag], axis=-1)


def residual(inst, x):
    r = inst.y_real - np.asarray(x) @ inst.H_real.T
    return (r * r).sum(axis=-1)


def _initial_states(seed, keys, dim, obstacles, max_attempts=10_000):
    x = np.empty((len(keys), dim))
    for n, key in enumerate(keys):
        rng = np.random.default_rng(chain_seed(INIT_STREAM, seed, *key))
        for _ in range(max_attempts):
            x[n] = rng.standard_normal(dim)
            if obstacles.is_feasible(x[n]):
                break
        else:
            raise DetectionError(f"no feasible start for chain {key}")
    return x


def _ula_update(x, target, noise, eta, tau):
    return x + eta * target.score(x) + np.sqrt(2.0 * tau * eta) * noise


def anneal_chains(instances, schedule, obstacles, cfg, n_candidates, keys, constellation=QPSK):
    """Final states of annealed chains, shape ``(B, C, 2 N_u)``; failed chains are nan.

    With an empty ``obstacles`` the plain annealed ULA update is used,
    otherwise the shielded update with the repulsion chosen by ``cfg``
    (``alpha_bar`` constant, or ``U / alpha`` with a per-level offset).
    ``keys[b]`` identifies instance ``b``; chain ``c`` of it draws from the
    stream keyed ``(*keys[b], c)``.
    """
    B, C = len(instances), n_candidates
    dim = 2 * instances[0].n_u
    H = np.stack([inst.H_real for inst in instances])
    y = np.stack([inst.y_real for inst in instances])
    s2 = np.array([inst.sigma0_sq for inst in instances])
    chain_keys = [(*k, c) for k in keys for c in range(C)]
    bank = NoiseBank(cfg.seed, B * C, dim, keys=chain_keys)
    shielded = len(obstacles) > 0
    reject = shielded and cfg.feasibility_policy == "reject-infeasible"

    x = _initial_states(cfg.seed, chain_keys, dim, obstacles).reshape(B, C, dim)
    dead = np.zeros((B, C), dtype=bool)

    def kernel(rows, sigma, eta):
        # rows=None: every chain, states (B, C, dim); otherwise (b, c) index
        # arrays selecting chains, evaluated as a (n, 1, dim) stack
        if rows is None:
            target = LevelPosterior(H, y, s2, sigma, constellation)
        else:
            b = rows[0]
            target = LevelPosterior(H[b], y[b], s2[b], sigma, constellation)
        view = PotentialView(target, target.offset()) if cfg.alpha_bar is None else None
        if shielded:
            return lambda s, z: shielded_update(s, target, obstacles, cfg, z, view, eta)
        return lambda s, z: _ula_update(s, target, z, eta, cfg.tau)

    with np.errstate(over="ignore", invalid="ignore"):
        for sigma, eta in schedule:
            step = kernel(None, sigma, eta)
            for _ in range(schedule.steps_per_level):
                safe = np.where(dead[..., None], 0.0, x)
                prop = step(safe, bank.draw().reshape(B, C, dim))
                if reject:
                    bad = ~obstacles.is_feasible(prop) & ~dead
                    for _ in range(cfg.max_retries):
                        if not bad.any():
                            break
                        rows = np.nonzero(bad)
                        noise = bank.draw(np.ravel_multi_index(rows, (B, C)))[:, None]
                        retry = kernel(rows, sigma, eta)(safe[rows][:, None], noise)[:, 0]
                        prop[rows] = retry
                        bad[rows] = ~obstacles.is_feasible(retry)
                    prop[bad] = safe[bad]
                failed = ~np.isfinite(prop).all(axis=-1) & ~dead
                dead |= failed
                x = np.where(dead[..., None], np.nan, prop)
    return x


def detect_langevin_batch(instances, schedule, obstacles, cfg, n_candidates=10, keys=None,
                          constellation=QPSK):
    """Detect every instance; returns ``(estimates (B, 2 N_u), residuals (B, C))``.

    Each instance runs ``n_candidates`` annealed chains; final states are
    projected onto the constellation and the candidate with the smallest
    residual ``||y - H x||^2`` wins.
    """
    if n_candidates < 1:
        raise ConfigError("n_candidates must be >= 1")
    keys = [(b,) for b in range(len(instances))] if keys is None else keys
    x = anneal_chains(instances, schedule, obstacles, cfg, n_candidates, keys, constellation)
    ok = np.isfinite(x).all(axis=-1)
    cand = project(np.where(ok[..., None], x, 0.0), constellation)
    res = np.stack([residual(inst, c) for inst, c in zip(instances, cand)])
    res = np.where(ok, res, np.inf)
    best = res.argmin(axis=1)
    if not ok[np.arange(len(instances)), best].all():
        bad = np.flatnonzero(~ok.any(axis=1))
        raise DetectionError(f"every chain failed for instance(s) {bad.tolist()}")
    return cand[np.arange(len(instances)), best], res


def detect_langevin(inst, schedule, obstacles=None, cfg=None, n_candidates=10, key=(0,),
                    constellation=QPSK):
    """Annealed Langevin detector for one instance (shielded when ``obstacles`` is non-empty)."""
    obstacles = ObstacleSet() if obstacles is None else obstacles
    cfg = SamplerConfig(alpha_bar=500.0) if cfg is None else cfg
    est, _ = detect_langevin_batch([inst], schedule, obstacles, cfg, n_candidates, [tuple(key)],
                                   constellation)
    return est[0]


_ENUM_CACHE = {}


def _enumeration(constellation, n_u):
    key = (id(constellation), n_u)
    if key not in _ENUM_CACHE:
        idx = np.array(list(product(range(constellation.size), repeat=n_u)))
        s = constellation.points[idx]
        _ENUM_CACHE[key] = (constellation, np.concatenate([s.real, s.imag], axis=1))
    return _ENUM_CACHE[key][1]


def detect_ml_exhaustive(inst, constellation=QPSK, chunk=1 << 16):
    """Global minimizer of ||y - H x||^2 over all symbol vectors, by enumeration."""
    if constellation.size**inst.n_u > ML_GUARD:
        raise UnsupportedOperation(
            f"{constellation.size}^{inst.n_u} candidates exceeds the enumeration guard of 2^24")
    X = _enumeration(constellation, inst.n_u)
    best, best_val = None, np.inf
    for start in range(0, len(X), chunk):
        block = X[start:start + chunk]
        r = inst.y_real - block @ inst.H_real.T
        val = (r * r).sum(axis=1)
        j = int(val.argmin())
        if val[j] < best_val:
            best, best_val = block[j], val[j]
    return best.copy()


def symbol_errors(x_hat, x_true, n_u):
    x_hat, x_true = np.asarray(x_hat), np.asarray(x_true)
    same = (x_hat[..., :n_u] == x_true[..., :n_u]) & (x_hat[..., n_u:] == x_true[..., n_u:])
    return np.count_nonzero(~same, axis=-1)


def ser(x_hat, x_true, n_u):
    """Fraction of complex symbols whose (Re, Im) pair differs."""
    return float(symbol_errors(x_hat, x_true, n_u)) / n_u
