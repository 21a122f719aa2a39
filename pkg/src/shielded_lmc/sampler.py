"""Langevin-family samplers: ULA, the Rimon-Koditschek potential, and shielded LMC.

Step functions are pure: they take the current state(s) and a standard-normal
noise draw and return the proposal.  All randomness lives in
:func:`run_chain`, which gives every chain its own deterministic stream.

States may be a single point ``(d,)`` or a batch of independent chains
``(n, d)``; every step function broadcasts over the leading axis.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, InitializationError, NumericalFailure

__all__ = [
    "SamplerConfig",
    "ChainResult",
    "NoiseBank",
    "ula_step",
    "rk_potential",
    "rk_gradient",
    "shielded_step",
    "naive_shielded_step",
    "run_chain",
    "chain_seed",
]

_POLICIES = ("measure-only", "reject-infeasible")
_SCHEDULES = ("constant", "inverse-sqrt")
_DRIFTS = ("repulsive", "literal")

# stream tags keep noise and initialization draws independent
NOISE_STREAM = 1
INIT_STREAM = 2


@dataclass
class SamplerConfig:
    """Parameters shared by all Langevin variants.

    Attributes
    ----------
    alpha : float
        Navigation-potential tuning parameter; the repulsive coefficient is
        ``U(x) / alpha`` when a potential view is supplied.
    alpha_bar : float or None
        Global constant replacing ``U(x) / alpha``.  When set it takes
        precedence and no log-density is needed.
    tau : float
        Temperature.
    step_size : float
        Base step size eta.
    schedule : {"constant", "inverse-sqrt"}
        ``inverse-sqrt`` uses ``eta / sqrt(k + 1)`` at iteration ``k``.
    n_steps, burn_in, record_every : int
        ``burn_in`` defaults to 2% of ``n_steps``.
    seed : int
    feasibility_policy : {"measure-only", "reject-infeasible"}
    max_retries : int
        Noise redraws per step under ``reject-infeasible``.
    drift : {"repulsive", "literal"}
        ``literal`` uses ``-log p(x) / alpha`` as the repulsive coefficient
        instead of ``U(x) / alpha``; they differ by ``C / alpha``.
    """

    alpha: float = 1.0
    alpha_bar: float | None = None
    tau: float = 1.0
    step_size: float = 1e-3
    schedule: str = "constant"
    n_steps: int = 50_000
    burn_in: int | None = None
    seed: int = 0
    feasibility_policy: str = "measure-only"
    max_retries: int = 100
    record_every: int = 1
    drift: str = "repulsive"

    def __post_init__(self):
        if self.burn_in is None:
            self.burn_in = self.n_steps // 50
        if not self.alpha > 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.alpha_bar is not None and not self.alpha_bar > 0:
            raise ConfigError(f"alpha_bar must be positive, got {self.alpha_bar}")
        if not self.step_size > 0:
            raise ConfigError(f"step_size must be positive, got {self.step_size}")
        if not self.tau >= 0:
            raise ConfigError(f"tau must be non-negative, got {self.tau}")
        if self.n_steps < 0 or not 0 <= self.burn_in <= self.n_steps:
            raise ConfigError(f"need 0 <= burn_in <= n_steps, got {self.burn_in}, {self.n_steps}")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")
        if self.schedule not in _SCHEDULES:
            raise ConfigError(f"schedule must be one of {_SCHEDULES}")
        if self.feasibility_policy not in _POLICIES:
            raise ConfigError(f"feasibility_policy must be one of {_POLICIES}")
        if self.drift not in _DRIFTS:
            raise ConfigError(f"drift must be one of {_DRIFTS}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")

    def eta(self, k):
        if self.schedule == "constant":
            return self.step_size
        return self.step_size / np.sqrt(k + 1.0)

    @property
    def n_records(self):
        return (self.n_steps - self.burn_in) // self.record_every


@dataclass
class ChainResult:
    """Output of :func:`run_chain`.

    ``samples`` has shape ``(n_records, d)`` for a single chain and
    ``(n_records, n_chains, d)`` for a batch.  Counters are summed over
    chains.  ``n_stalled_steps`` counts steps where every retry under
    ``reject-infeasible`` failed and the state was kept.
    """

    samples: np.ndarray
    final_state: np.ndarray
    n_infeasible_steps: int = 0
    n_rejected_proposals: int = 0
    n_stalled_steps: int = 0
    n_nonpositive_potential: int = 0
    n_transitions: int = 0

    @property
    def infeasible_fraction(self):
        return self.n_infeasible_steps / self.n_transitions if self.n_transitions else 0.0

    def pooled(self):
        """All recorded samples as a flat ``(m, d)`` array."""
        return self.samples.reshape(-1, self.samples.shape[-1])


def chain_seed(tag, seed, *key):
    return np.random.SeedSequence([tag, int(seed), *(int(k) for k in key)])


class NoiseBank:
    """Per-chain standard-normal streams, buffered for vectorized access.

    Chain ``i`` draws from ``SeedSequence([NOISE_STREAM, seed, *key, i])``
    (or ``[NOISE_STREAM, seed, *keys[i]]`` when explicit keys are given) in
    order, so its noise does not depend on how many other chains run
    alongside it or on how often they redraw.
    """

    def __init__(self, seed, n_chains, dim, key=(), block=512, keys=None):
        self.dim = dim
        if keys is None:
            keys = [(*key, i) for i in range(n_chains)]
        elif len(keys) != n_chains:
            raise ValueError("need one key per chain")
        self._gens = [np.random.default_rng(chain_seed(NOISE_STREAM, seed, *k)) for k in keys]
        self._block = block
        self._buf = np.empty((n_chains, block, dim))
        self._ptr = np.full(n_chains, block)
        self._all = np.arange(n_chains)

    def draw(self, idx=None):
        if idx is None and self._ptr[0] < self._block and np.all(self._ptr == self._ptr[0]):
            # lockstep fast path
            out = self._buf[:, self._ptr[0]].copy()
            self._ptr += 1
            return out
        idx = self._all if idx is None else np.asarray(idx)
        for i in idx[self._ptr[idx] >= self._block]:
            self._buf[i] = self._gens[i].standard_normal((self._block, self.dim))
            self._ptr[i] = 0
        out = self._buf[idx, self._ptr[idx]]
        self._ptr[idx] += 1
        return out


def _check_finite(x, step, what="state"):
    # any nan or inf entry makes the sum non-finite
    if not np.isfinite(np.sum(x)):
        raise NumericalFailure(f"non-finite {what}", step=step)


def ula_step(x, score, eta, tau, noise, step=None):
    """One unadjusted Langevin step: ``x + eta * score + sqrt(2 tau eta) * noise``."""
    new = x + eta * score + np.sqrt(2.0 * tau * eta) * noise
    _check_finite(new, step)
    return new


def rk_potential(U, beta, alpha):
    """Navigation potential ``U / (U**alpha + beta)**(1/alpha)``."""
    U = np.asarray(U, dtype=float)
    if np.any(U <= 0):
        raise DomainError("U must be positive; the offset C is mis-calibrated")
    base = U**alpha + beta
    if np.any(base <= 0):
        raise DomainError("U**alpha + beta must be positive")
    return U / base ** (1.0 / alpha)


def rk_gradient(U, grad_u, beta, grad_beta, alpha):
    """Gradient of :func:`rk_potential` given U, beta and their gradients."""
    U = np.asarray(U, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if np.any(U <= 0):
        raise DomainError("U must be positive; the offset C is mis-calibrated")
    base = U**alpha + beta
    if np.any(base <= 0):
        raise DomainError("denominator of the navigation gradient is not positive")
    num = beta[..., None] * grad_u - (U / alpha)[..., None] * grad_beta
    return num / (base ** (1.0 + 1.0 / alpha))[..., None]


def _capped_beta(obstacles, x):
    """Saturated beta and the gradient used by the sampler (zero where clipped)."""
    b, gb = obstacles.beta_and_grad(x)
    cap = obstacles.beta_cap
    if cap is None:
        return b, gb
    clipped = b > cap
    if clipped.any():
        gb = np.where(clipped[..., None], 0.0, gb)
        b = np.minimum(b, cap)
    return b, gb


def _score_and_repulsion(x, target, cfg, view):
    if cfg.alpha_bar is not None:
        return target.score(x), np.full(np.shape(x)[:-1], float(cfg.alpha_bar))
    if view is None:
        raise ConfigError("shielded step needs either alpha_bar or a potential view")
    u, grad_u = view.value_and_grad(x)
    if cfg.drift == "literal":
        u = u - view.offset
    return -grad_u, u / cfg.alpha


def shielded_step(x, target, obstacles, cfg, noise, view=None, eta=None, step=None):
    """One shielded LMC step.

    ``x + eta [b(x) grad log p(x) + c(x) grad beta(x)] + sqrt(2 eta tau) |b(x)| noise``
    where ``b`` is the saturated aggregate and ``c = U / alpha`` (with a
    potential view) or ``alpha_bar``.  The positive denominator of the
    navigation gradient is folded into ``eta``.
    """
    eta = cfg.step_size if eta is None else eta
    new = shielded_update(x, target, obstacles, cfg, noise, view, eta)
    _check_finite(new, step)
    return new


def shielded_update(x, target, obstacles, cfg, noise, view, eta):
    """:func:`shielded_step` without the finiteness check (for batched callers)."""
    b, gb = _capped_beta(obstacles, x)
    score, coef = _score_and_repulsion(x, target, cfg, view)
    drift = b[..., None] * score + coef[..., None] * gb
    return x + eta * drift + np.sqrt(2.0 * cfg.tau * eta) * np.abs(b)[..., None] * noise


def naive_shielded_step(x, target, obstacles, cfg, noise, view=None, eta=None, step=None):
    """Gradient step on the navigation potential with isotropic, constant-variance noise.

    Kept as an ablation baseline: near obstacles the noise is not damped and
    can carry the state across the boundary.
    """
    if view is None:
        raise ConfigError("naive step needs a potential view (it evaluates U)")
    eta = cfg.step_size if eta is None else eta
    b, gb = _capped_beta(obstacles, x)
    try:
        g = rk_gradient(*view.value_and_grad(x), b, gb, cfg.alpha)
    except DomainError as exc:
        raise NumericalFailure(str(exc), step=step) from exc
    new = x - eta * g + np.sqrt(2.0 * cfg.tau * eta) * noise
    _check_finite(new, step)
    return new


def _make_kernel(step_fn, target, obstacles, cfg, view):
    if step_fn in ("ula", ula_step):
        return lambda x, noise, eta, k: ula_step(x, target.score(x), eta, cfg.tau, noise, step=k)
    if step_fn in ("shielded", shielded_step):
        step_fn = shielded_step
    elif step_fn in ("naive", naive_shielded_step):
        step_fn = naive_shielded_step
    if not callable(step_fn):
        raise ConfigError(f"unknown step function {step_fn!r}")
    return lambda x, noise, eta, k: step_fn(x, target, obstacles, cfg, noise, view=view, eta=eta, step=k)


def standard_normal_init(rng, dim):
    return rng.standard_normal(dim)


def feasible_init(n_chains, dim, obstacles, seed, init=None, initializer=None, key=(), max_attempts=10_000):
    """Initial states, redrawing infeasible chains from ``initializer``.

    Chain ``i`` uses its own stream ``SeedSequence([INIT_STREAM, seed, *key, i])``.
    With ``init=None`` every chain starts from a fresh initializer draw.
    """
    initializer = initializer or standard_normal_init
    if init is None:
        x = np.empty((n_chains, dim))
        pending = np.arange(n_chains)
    else:
        x = np.array(init, dtype=float).reshape(n_chains, dim)
        pending = np.flatnonzero(~obstacles.is_feasible(x))
    for i in pending:
        rng = np.random.default_rng(chain_seed(INIT_STREAM, seed, *key, i))
        for _ in range(max_attempts):
            x[i] = initializer(rng, dim)
            if obstacles.is_feasible(x[i]):
                break
        else:
            raise InitializationError(f"no feasible start for chain {i} after {max_attempts} draws")
    return x


def advance(x, kernel, bank, etas, obstacles, policy="measure-only", max_retries=100,
            on_record=None, alive=None):
    """Iterate ``kernel`` over ``etas`` for a batch of chains, in place.

    Returns ``(n_infeasible, n_rejected, n_stalled)``.  When ``alive`` (a
    boolean mask) is given, chains whose proposal is non-finite are marked
    dead instead of raising; dead chains are no longer updated.
    """
    n_infeasible = n_rejected = n_stalled = 0
    # measure-only counts do not feed back into the dynamics, so proposals
    # are checked in blocks rather than one call per step
    pending, n_pending = np.empty((256,) + x.shape), 0
    for k, eta in enumerate(etas):
        idx = np.flatnonzero(alive) if alive is not None else None
        if idx is not None and idx.size == 0:
            break
        cur = x if idx is None else x[idx]
        try:
            prop = kernel(cur, bank.draw(idx), eta, k)
        except NumericalFailure:
            if alive is None:
                raise
            prop = _drop_failed(kernel, cur, bank, idx, eta, k, alive)
        if policy == "reject-infeasible":
            bad = ~obstacles.is_feasible(prop)
            for _ in range(max_retries):
                if not bad.any():
                    break
                n_rejected += int(bad.sum())
                sub = np.flatnonzero(bad)
                prop[sub] = kernel(cur[sub], bank.draw(sub if idx is None else idx[sub]), eta, k)
                bad[sub] = ~obstacles.is_feasible(prop[sub])
            if bad.any():
                n_rejected += int(bad.sum())
                n_stalled += int(bad.sum())
                prop[bad] = cur[bad]
        elif idx is None:
            pending[n_pending] = prop
            n_pending += 1
            if n_pending == len(pending):
                n_infeasible += int(np.count_nonzero(~obstacles.is_feasible(pending)))
                n_pending = 0
        else:
            n_infeasible += int(np.count_nonzero(~obstacles.is_feasible(prop)))
        if idx is None:
            x[...] = prop
        else:
            x[idx] = prop
        if on_record is not None:
            on_record(k, x)
    if n_pending:
        n_infeasible += int(np.count_nonzero(~obstacles.is_feasible(pending[:n_pending])))
    return n_infeasible, n_rejected, n_stalled


def _drop_failed(kernel, cur, bank, idx, eta, k, alive):
    # the batched call failed: redo with the same noise row by row
    bank._ptr[idx] -= 1
    out = np.empty_like(cur)
    for j, i in enumerate(idx):
        try:
            out[j] = kernel(cur[j:j + 1], bank.draw([i]), eta, k)[0]
        except NumericalFailure:
            out[j] = np.nan
            alive[i] = False
    return out


def run_chain(init, step_fn, cfg, obstacles, target, view=None, initializer=None, n_chains=None):
    """Run one chain (``init`` of shape ``(d,)``) or a batch (``(n, d)``).

    Parameters
    ----------
    init : array_like or None
        Starting state(s).  Infeasible starts are redrawn from
        ``initializer(rng, d)`` (standard normal by default).  With
        ``init=None``, ``n_chains`` starts are drawn from the initializer.
    step_fn : callable or {"ula", "shielded", "naive"}
        :func:`ula_step`, :func:`shielded_step` or :func:`naive_shielded_step`.
    cfg : SamplerConfig
    obstacles : ObstacleSet
    target : TargetModel
    view : PotentialView, optional
        Required for the exact repulsion and for the naive step.

    Returns
    -------
    ChainResult
    """
    if init is None:
        if n_chains is None:
            raise ConfigError("give either init or n_chains")
        dim = target.dim
        single = False
    else:
        init = np.asarray(init, dtype=float)
        single = init.ndim == 1
        n_chains, dim = (1, init.size) if single else init.shape
    x = feasible_init(n_chains, dim, obstacles, cfg.seed, init=init, initializer=initializer)

    kernel = _make_kernel(step_fn, target, obstacles, cfg, view)
    bank = NoiseBank(cfg.seed, n_chains, dim)
    samples = np.empty((cfg.n_records, n_chains, dim))
    burn, every = cfg.burn_in, cfg.record_every

    def record(k, state):
        j = k - burn + 1
        if j > 0 and j % every == 0 and j // every <= len(samples):
            samples[j // every - 1] = state

    before = view.n_nonpositive if view is not None else 0
    etas = (cfg.eta(k) for k in range(cfg.n_steps))
    n_inf, n_rej, n_stall = advance(x, kernel, bank, etas, obstacles, cfg.feasibility_policy,
                                    cfg.max_retries, on_record=record)
    after = view.n_nonpositive if view is not None else 0
    if single:
        samples, x = samples[:, 0], x[0]
    return ChainResult(samples=samples, final_state=x, n_infeasible_steps=n_inf,
                       n_rejected_proposals=n_rej, n_stalled_steps=n_stall,
                       n_nonpositive_potential=after - before,
                       n_transitions=cfg.n_steps * n_chains)
