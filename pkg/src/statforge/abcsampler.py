"""Simulated-annealing ABC in summary-statistic space, plus a rejection baseline.

Statistics are standardized by robust prior-predictive location/scale so the
Euclidean distance treats components comparably.  The annealed sampler keeps
a particle population, perturbs particles with a Gaussian random walk scaled
to the population spread, accepts moves with probability
min(1, exp(-(d' - d) / tol)), and shrinks the tolerance after each sweep by
exp(-velocity * acceptance_rate) -- fast annealing while moves are easy,
automatic slowdown as the population tightens.  The schedule constants are
not dictated by theory; they are recorded in the run manifest.

Per-particle RNG streams are derived from (seed, sweep, particle), so results
do not depend on evaluation order.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, asdict

import numpy as np

from .errors import DegenerateStatisticError
from .models import (
    PriorSpec,
    Trajectory,
    prior_for,
    sample_prior,
    simulate_batch,
    stream,
)
from .samples import SampleSet

_INIT_SWEEP = 0
# purpose tags keep proposal streams and simulation-noise streams disjoint
PROPOSAL_TAG = 1
NOISE_TAG = 2


@dataclass
class Standardizer:
    """Componentwise robust location/scale fitted on prior-predictive statistics."""

    center: np.ndarray
    scale: np.ndarray
    m: int
    seed: int

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)

    def apply(self, stats: np.ndarray) -> np.ndarray:
        return (np.asarray(stats, dtype=float) - self.center) / self.scale


@dataclass
class AbcConfig:
    population: int = 1000
    budget: int = 100_000
    velocity: float = 0.3
    proposal_scale: float = 0.5    # random-walk scale as a fraction of population std
    seed: int = 0
    n_steps: int = 200

    def __post_init__(self):
        if self.population < 10:
            raise ValueError("population must be >= 10")
        if self.budget < self.population:
            raise ValueError("budget must cover at least the initial population")


@dataclass
class DistanceRecord:
    """Final per-particle distances plus the sampler traces."""

    component: np.ndarray          # (m, q) absolute standardized differences
    total: np.ndarray              # (m,)
    acceptance_trace: np.ndarray
    tolerance_trace: np.ndarray

    def __post_init__(self):
        self.component = np.atleast_2d(np.asarray(self.component, dtype=float))
        self.total = np.asarray(self.total, dtype=float)
        self.acceptance_trace = np.asarray(self.acceptance_trace, dtype=float)
        self.tolerance_trace = np.asarray(self.tolerance_trace, dtype=float)


def standardizer_from_stats(stats: np.ndarray, seed: int = 0) -> Standardizer:
    """Median center; IQR/1.349 scale with a std fallback for flat components."""
    stats = np.atleast_2d(np.asarray(stats, dtype=float))
    center = np.median(stats, axis=0)
    q75, q25 = np.percentile(stats, [75, 25], axis=0)
    scale = (q75 - q25) / 1.349
    flat = scale == 0.0
    if np.any(flat):
        fallback = np.std(stats, axis=0)
        scale = np.where(flat, fallback, scale)
        if np.any(scale == 0.0):
            raise DegenerateStatisticError(
                f"statistic components {np.flatnonzero(scale == 0.0)} have zero spread")
    return Standardizer(center=center, scale=scale, m=stats.shape[0], seed=seed)


def stats_fn_from_weights(weights):
    """Batch statistics via the trained encoder."""
    from .encoder import encode_batch

    def fn(x: np.ndarray, x0: float) -> np.ndarray:
        return encode_batch(x, weights)

    return fn


def stats_fn_suffstats():
    """Batch statistics via the closed-form triple (alpha_hat, sigma2_hat, order)."""
    from .suffstats import stats_batch

    def fn(x: np.ndarray, x0: float) -> np.ndarray:
        return stats_batch(x, x0)

    return fn


def stats_fn_subset(fn, indices):
    """Restrict a statistics function to selected components."""
    indices = np.asarray(indices, dtype=int)

    def sub(x: np.ndarray, x0: float) -> np.ndarray:
        return fn(x, x0)[:, indices]

    return sub


def fit_standardizer(model_id: str, prior: PriorSpec, stats_fn, m: int = 2000,
                     seed: int = 0, n_steps: int = 200) -> Standardizer:
    """Prior-predictive standardizer from m >= 1000 fresh simulations."""
    if m < 1000:
        raise ValueError("standardizer needs m >= 1000 prior-predictive simulations")
    rng = stream(seed, 0xF17)
    thetas = sample_prior(prior, rng, size=m)
    from .models import draw_noise_batch

    noise = draw_noise_batch(model_id, m, n_steps, rng)
    x = simulate_batch(model_id, thetas, noise, x0=prior.x0)
    return standardizer_from_stats(stats_fn(x, prior.x0), seed=seed)


def distance(s_sim, s_obs, std: Standardizer):
    """Euclidean norm of standardized differences, plus per-component parts."""
    diff = np.abs(std.apply(s_sim) - std.apply(s_obs))
    total = float(np.sqrt(np.sum(diff * diff)))
    return total, diff


def _distance_batch(stats: np.ndarray, s_obs: np.ndarray, std: Standardizer):
    diff = np.abs(std.apply(stats) - std.apply(s_obs)[None, :])
    return np.sqrt(np.sum(diff * diff, axis=1)), diff


def _model_stat_sim(model_id: str, prior: PriorSpec, stats_fn, seed: int,
                    n_steps: int):
    """Per-particle-stream simulator: (thetas, sweep, particle ids) -> stats."""
    from .models import noise_channels

    c = noise_channels(model_id)

    def sim(thetas: np.ndarray, sweep: int, particles: np.ndarray) -> np.ndarray:
        noise = np.empty((thetas.shape[0], n_steps, c))
        for row, pid in enumerate(particles):
            g = stream(seed, NOISE_TAG, sweep, int(pid))
            noise[row] = g.random((n_steps, c)) if model_id == "dynamo" \
                else g.standard_normal((n_steps, c))
        x = simulate_batch(model_id, thetas, noise, x0=prior.x0)
        return stats_fn(x, prior.x0)

    return sim


def sabc_core(stat_sim, prior: PriorSpec, s_obs: np.ndarray, std: Standardizer,
              cfg: AbcConfig):
    """Annealed ABC over a generic statistic simulator.

    ``stat_sim(thetas, sweep, particle_ids)`` must return one statistics row
    per theta, using RNG streams derived from (seed, sweep, particle).
    """
    pop = cfg.population
    p = prior.dim
    rng_init = stream(cfg.seed, _INIT_SWEEP)
    thetas = sample_prior(prior, rng_init, size=pop)
    stats = stat_sim(thetas, _INIT_SWEEP, np.arange(pop))
    dist, comp = _distance_batch(stats, s_obs, std)
    sims_used = pop
    tol = float(np.median(dist))
    acceptance_trace = []
    tolerance_trace = [tol]
    sweep = 0
    stagnated = False
    while sims_used < cfg.budget:
        sweep += 1
        spread = np.std(thetas, axis=0)
        scale = np.maximum(cfg.proposal_scale * spread, 1e-12 * prior.ranges)
        props = np.empty_like(thetas)
        u = np.empty(pop)
        for i in range(pop):
            g = stream(cfg.seed, PROPOSAL_TAG, sweep, i)
            props[i] = thetas[i] + g.standard_normal(p) * scale
            u[i] = g.random()
        inbox = np.all((props >= prior.lower) & (props <= prior.upper), axis=1)
        candidates = np.flatnonzero(inbox)
        room = cfg.budget - sims_used
        if candidates.size > room:
            candidates = candidates[:room]
        n_acc = 0
        if candidates.size:
            new_stats = stat_sim(props[candidates], sweep, candidates)
            new_dist, new_comp = _distance_batch(new_stats, s_obs, std)
            sims_used += candidates.size
            log_ratio = -(new_dist - dist[candidates]) / tol
            accept = np.log(u[candidates]) < log_ratio
            rows = candidates[accept]
            thetas[rows] = props[rows]
            dist[rows] = new_dist[accept]
            comp[rows] = new_comp[accept]
            n_acc = int(accept.sum())
        rate = n_acc / pop
        acceptance_trace.append(rate)
        tol *= float(np.exp(-cfg.velocity * rate))
        tolerance_trace.append(tol)
        if n_acc == 0:
            warnings.warn("SABC stagnated: zero acceptances over a full sweep",
                          RuntimeWarning)
            stagnated = True
            break
    record = DistanceRecord(component=comp, total=dist,
                            acceptance_trace=np.array(acceptance_trace),
                            tolerance_trace=np.array(tolerance_trace))
    manifest = {
        "method": "sabc",
        "config": asdict(cfg),
        "sims_used": sims_used,
        "sweeps": sweep,
        "final_tolerance": tol,
        "stagnated": stagnated,
        "standardizer": {"center": std.center.tolist(), "scale": std.scale.tolist(),
                         "m": std.m, "seed": std.seed},
    }
    sample = SampleSet(draws=thetas, method="sabc", param_names=prior.names,
                       distances=dist, component_distances=comp, manifest=manifest)
    return sample, record


def sabc_run(model_id: str, prior: PriorSpec | None, stats_fn,
             observation: Trajectory, cfg: AbcConfig,
             std: Standardizer | None = None):
    """Annealed ABC against one observed trajectory of a benchmark model."""
    prior = prior or prior_for(model_id)
    if std is None:
        std = fit_standardizer(model_id, prior, stats_fn,
                               m=max(1000, cfg.population), seed=cfg.seed,
                               n_steps=cfg.n_steps)
    s_obs = stats_fn(observation.x[None, :], observation.x0)[0]
    stat_sim = _model_stat_sim(model_id, prior, stats_fn, cfg.seed, cfg.n_steps)
    return sabc_core(stat_sim, prior, s_obs, std, cfg)


def rejection_abc(model_id: str, prior: PriorSpec | None, stats_fn,
                  observation: Trajectory, n_sims: int, keep_fraction: float,
                  std: Standardizer | None = None, seed: int = 0,
                  n_steps: int = 200, chunk: int = 10_000):
    """Keep the smallest-distance fraction of prior-predictive simulations."""
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError("keep_fraction must be in (0, 1]")
    prior = prior or prior_for(model_id)
    if std is None:
        std = fit_standardizer(model_id, prior, stats_fn,
                               m=max(1000, min(n_sims, 2000)), seed=seed,
                               n_steps=n_steps)
    s_obs = stats_fn(observation.x[None, :], observation.x0)[0]
    rng = stream(seed, 0xE)
    from .models import draw_noise_batch

    thetas = sample_prior(prior, rng, size=n_sims)
    dist = np.empty(n_sims)
    comp = None
    for lo in range(0, n_sims, chunk):
        hi = min(lo + chunk, n_sims)
        noise = draw_noise_batch(model_id, hi - lo, n_steps, rng)
        x = simulate_batch(model_id, thetas[lo:hi], noise, x0=prior.x0)
        d, c = _distance_batch(stats_fn(x, prior.x0), s_obs, std)
        if comp is None:
            comp = np.empty((n_sims, c.shape[1]))
        dist[lo:hi] = d
        comp[lo:hi] = c
    keep = max(1, round(keep_fraction * n_sims))
    order = np.argsort(dist, kind="stable")[:keep]
    manifest = {"method": "rejection", "n_sims": n_sims,
                "keep_fraction": keep_fraction, "seed": seed}
    sample = SampleSet(draws=thetas[order], method="rejection",
                       param_names=prior.names, distances=dist[order],
                       component_distances=comp[order], manifest=manifest)
    record = DistanceRecord(component=comp[order], total=dist[order],
                            acceptance_trace=np.array([]),
                            tolerance_trace=np.array([]))
    return sample, record
