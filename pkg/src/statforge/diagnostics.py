"""Posterior comparisons and figure-data emission.

Everything here produces in-memory tables (and CSV text); plotting happens
elsewhere.  Wasserstein-1 on empirical marginals is the scalar used to
compare ABC posteriors against the Metropolis ground truth: it needs no
density estimate and is robust for modest sample sizes.
"""

from __future__ import annotations

import csv
import io
import warnings

import numpy as np

from .encoder import encode_batch
from .models import (
    PriorSpec,
    TRUE_THETA,
    draw_noise_batch,
    prior_for,
    sample_prior,
    simulate_batch,
    stream,
)
from .samples import SampleSet
from .suffstats import stats_batch


def _draws(x) -> np.ndarray:
    return x.draws if isinstance(x, SampleSet) else np.atleast_2d(np.asarray(x, dtype=float))


def wasserstein_1d(u, v) -> float:
    """W1 between two empirical distributions via the merged-CDF integral."""
    u = np.sort(np.asarray(u, dtype=float))
    v = np.sort(np.asarray(v, dtype=float))
    if u.size == 0 or v.size == 0:
        raise ValueError("empty sample")
    grid = np.sort(np.concatenate([u, v]))
    deltas = np.diff(grid)
    cdf_u = np.searchsorted(u, grid[:-1], side="right") / u.size
    cdf_v = np.searchsorted(v, grid[:-1], side="right") / v.size
    return float(np.sum(np.abs(cdf_u - cdf_v) * deltas))


def marginal_wasserstein(a, b, prior: PriorSpec | None = None):
    """Per-component W1 between two sample sets.

    Returns the raw distances, or (raw, normalized-by-prior-range) when a
    prior is supplied.
    """
    da, db = _draws(a), _draws(b)
    if da.shape[1] != db.shape[1]:
        raise ValueError("sample sets have different dimension")
    raw = np.array([wasserstein_1d(da[:, j], db[:, j]) for j in range(da.shape[1])])
    if prior is None:
        return raw
    return raw, raw / prior.ranges


def distance_quantiles(record, p_quantile: float = 0.99,
                       n_regressors: int | None = None) -> np.ndarray:
    """Nearest-rank quantile of per-particle distances, regressor components only."""
    comp = np.atleast_2d(np.asarray(record.component, dtype=float))
    if comp.shape[0] == 0:
        raise ValueError("empty distance record")
    if n_regressors is not None:
        comp = comp[:, :n_regressors]
    m = comp.shape[0]
    rank = max(1, int(np.ceil(p_quantile * m)))
    return np.sort(comp, axis=0)[rank - 1]


def distance_histograms(record, bins: int = 30, n_components: int | None = None):
    """Fixed-width histograms of final distances, one table per component.

    Returns a list of dicts with keys component, edges (bins+1), counts (bins).
    """
    comp = np.atleast_2d(np.asarray(record.component, dtype=float))
    if n_components is not None:
        comp = comp[:, :n_components]
    tables = []
    for j in range(comp.shape[1]):
        col = comp[:, j]
        top = float(col.max())
        if top == 0.0:
            top = 1.0
        counts, edges = np.histogram(col, bins=bins, range=(0.0, top))
        tables.append({"component": j + 1, "edges": edges, "counts": counts})
    return tables


def histograms_to_csv(tables) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["component", "bin_lo", "bin_hi", "count"])
    for tab in tables:
        edges, counts = tab["edges"], tab["counts"]
        for i in range(len(counts)):
            w.writerow([tab["component"], repr(float(edges[i])),
                        repr(float(edges[i + 1])), int(counts[i])])
    return buf.getvalue()


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a = a - a.mean()
    b = b - b.mean()
    denom = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if denom == 0.0:
        raise ValueError("zero variance in correlation input")
    return float(np.dot(a, b) / denom)


def auc_score(scores, labels) -> float:
    """Mann-Whitney AUC of scores against binary labels."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=bool)
    pos = scores[labels]
    neg = scores[~labels]
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need both classes for AUC")
    order = np.argsort(np.concatenate([neg, pos]), kind="mergesort")
    ranks = np.empty(order.size)
    ranks[order] = np.arange(1, order.size + 1)
    # midranks for ties
    allv = np.concatenate([neg, pos])
    sorted_v = allv[order]
    i = 0
    while i < sorted_v.size:
        j = i
        while j + 1 < sorted_v.size and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        if j > i:
            mid = 0.5 * (i + 1 + j + 1)
            ranks[order[i:j + 1]] = mid
        i = j + 1
    rank_pos = ranks[neg.size:].sum()
    u_stat = rank_pos - pos.size * (pos.size + 1) / 2.0
    return float(u_stat / (pos.size * neg.size))


# ---------------------------------------------------------------------------
# figure-data tables
# ---------------------------------------------------------------------------

def simulate_prior_batch(model_id: str, prior: PriorSpec, m: int, seed: int,
                         n_steps: int):
    rng = stream(seed, 0xD1A)
    thetas = sample_prior(prior, rng, size=m)
    noise = draw_noise_batch(model_id, m, n_steps, rng)
    x = simulate_batch(model_id, thetas, noise, x0=prior.x0)
    return thetas, x


def regression_scatter(weights, model_id: str, prior: PriorSpec | None, m: int,
                       seed: int = 0, n_steps: int = 200):
    """Encoder regressors against true parameters on fresh prior draws.

    Returns a dict with the true thetas, all q statistics, per-component
    Pearson correlations, and (nlar1 only) the closed-form statistic columns.
    """
    prior = prior or prior_for(model_id)
    thetas, x = simulate_prior_batch(model_id, prior, m, seed, n_steps)
    stats = encode_batch(x, weights)
    p = prior.dim
    corr = np.array([pearson(stats[:, j], thetas[:, j]) for j in range(p)])
    out = {"theta": thetas, "stats": stats, "pearson": corr,
           "param_names": prior.names}
    if model_id == "nlar1":
        out["suffstats"] = stats_batch(x, prior.x0)
    return out


def regression_scatter_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(table["param_names"])
    q = table["stats"].shape[1]
    header = [f"theta_{n}" for n in names] + [f"s{i + 1}" for i in range(q)]
    has_suff = "suffstats" in table
    if has_suff:
        header += ["alpha_hat", "sigma2_hat", "order"]
    w.writerow(header)
    for i in range(table["theta"].shape[0]):
        row = [repr(float(v)) for v in table["theta"][i]]
        row += [repr(float(v)) for v in table["stats"][i]]
        if has_suff:
            row += [repr(float(v)) for v in table["suffstats"][i]]
        w.writerow(row)
    return buf.getvalue()


def attractor_threshold(o_values: np.ndarray, min_gap_fraction: float = 0.2):
    """Midpoint of the largest gap in sorted order-parameter values.

    Returns None when the largest gap is below ``min_gap_fraction`` of the
    value range (no usable bimodal split).
    """
    o = np.sort(np.asarray(o_values, dtype=float))
    if o.size < 2 or o[-1] == o[0]:
        return None
    gaps = np.diff(o)
    k = int(np.argmax(gaps))
    if gaps[k] < min_gap_fraction * (o[-1] - o[0]):
        return None
    return float(0.5 * (o[k] + o[k + 1]))


def latent_scatter(weights, model_id: str, prior: PriorSpec | None, m: int,
                   seed: int = 0, n_steps: int = 200, pilot: int = 1000):
    """Latent statistics with attractor labels (nlar1 only).

    The label threshold comes from the bimodal gap of the order parameter in
    a pilot run at the true parameter values; a unimodal pilot skips labeling
    with a warning.
    """
    if model_id != "nlar1":
        raise ValueError("latent scatter with attractor labels is nlar1-only")
    prior = prior or prior_for(model_id)
    rng = stream(seed, 0xA77)
    true_theta = TRUE_THETA["nlar1"]
    noise = draw_noise_batch(model_id, pilot, n_steps, rng)
    xp = simulate_batch(model_id, np.tile(true_theta, (pilot, 1)), noise, x0=prior.x0)
    o_pilot = stats_batch(xp, prior.x0)[:, 2]
    tau = attractor_threshold(o_pilot)
    thetas, x = simulate_prior_batch(model_id, prior, m, seed, n_steps)
    stats = encode_batch(x, weights)
    order = stats_batch(x, prior.x0)[:, 2]
    if tau is None:
        warnings.warn("order-parameter pilot looks unimodal; labels skipped",
                      RuntimeWarning)
        labels = None
    else:
        labels = (order > tau).astype(int)
    return {"stats": stats, "order": order, "labels": labels, "tau": tau,
            "theta": thetas}


def latent_scatter_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    q = table["stats"].shape[1]
    header = [f"s{i + 1}" for i in range(q)] + ["order", "label"]
    w.writerow(header)
    labels = table["labels"]
    for i in range(table["stats"].shape[0]):
        row = [repr(float(v)) for v in table["stats"][i]]
        row.append(repr(float(table["order"][i])))
        row.append("" if labels is None else int(labels[i]))
        w.writerow(row)
    return buf.getvalue()


def reconstruction_overlay(weights_a, weights_b, model_id: str, theta,
                           seed: int = 0, n_steps: int = 200,
                           prior: PriorSpec | None = None):
    """One held-out trajectory against its two reconstructions.

    ``weights_a`` / ``weights_b`` are trained ENCA weight mappings (e.g. two
    different latent dimensions).  Returns aligned columns (step, x, x_hat_a,
    x_hat_b).
    """
    from .enca import enca_decode
    from .encoder import encode, infer_q

    prior = prior or prior_for(model_id)
    theta = np.asarray(theta, dtype=float)
    from .models import draw_bare_noise, simulate

    noise = draw_bare_noise(model_id, n_steps, seed)
    traj = simulate(model_id, theta, noise, x0=prior.x0)
    cols = {"step": np.arange(1, n_steps + 1), "x": traj.x}
    for tag, wts in (("a", weights_a), ("b", weights_b)):
        s = encode(traj, wts)
        if s.shape[0] != infer_q(wts):
            raise ValueError("weights/statistics dimension mismatch")
        cols[f"x_hat_{tag}"] = enca_decode(s, noise, wts).x_hat
    return cols


def overlay_csv(cols) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(cols)
    w.writerow(keys)
    n = len(cols["step"])
    for i in range(n):
        w.writerow([int(cols[k][i]) if k == "step" else repr(float(cols[k][i]))
                    for k in keys])
    return buf.getvalue()
