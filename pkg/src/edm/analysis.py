"""Offline criticality diagnostics: avalanche detection, discrete power-law
fitting, branching-ratio summaries, and the Boltzmann fit of quiescent
potentials."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import zeta

from .meanfield import absorbing_state_distribution


@dataclass
class Avalanche:
    """A maximal run of consecutive nonempty time bins."""

    start: float        # ms
    duration: int       # bins
    size: int           # total spikes in the run


def detect_avalanches(spike_times, bin_width: float, t_end: float | None = None):
    """Bin spike times and extract contiguous-activity avalanches.

    Parameters
    ----------
    spike_times : array-like
        Spike timestamps in ms (agent identity is irrelevant here).
    bin_width : float
        Bin width in ms; an avalanche is a maximal run of consecutive
        nonempty bins, separated from the next by at least one empty bin.
    t_end : float, optional
        End of the recording; defaults to the last spike.

    Returns
    -------
    list of Avalanche
        Sizes partition the spike count: their sum equals ``len(spike_times)``.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be > 0")
    t = np.sort(np.asarray(spike_times, dtype=float))
    if t.size == 0:
        return []
    if t_end is None:
        t_end = t[-1]
    n_bins = int(np.floor(t_end / bin_width)) + 1
    idx = np.minimum((t / bin_width).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    avalanches = []
    run_start = None
    run_size = 0
    for b in range(n_bins):
        if counts[b] > 0:
            if run_start is None:
                run_start = b
                run_size = 0
            run_size += int(counts[b])
        elif run_start is not None:
            avalanches.append(
                Avalanche(run_start * bin_width, b - run_start, run_size)
            )
            run_start = None
    if run_start is not None:
        avalanches.append(
            Avalanche(run_start * bin_width, n_bins - run_start, run_size)
        )
    return avalanches


@dataclass
class PowerLawFit:
    """Discrete power-law fit of avalanche sizes.

    ``exponent`` is the density slope (negative for a decaying law) from the
    maximum-likelihood estimate; ``ls_slope`` and ``r_squared`` come from the
    secondary log-binned least-squares diagnostic; ``decades`` is the decimal
    range covered by that fit.
    """

    exponent: float
    exponent_se: float
    z_min: int
    ls_slope: float
    r_squared: float
    ks_distance: float
    decades: float
    n_samples: int


def _log_zeta(alpha: float, z_min: int) -> float:
    return float(np.log(zeta(alpha, z_min)))


def _log_zeta_deriv(alpha: float, z_min: int, h: float = 1e-5) -> float:
    return (_log_zeta(alpha + h, z_min) - _log_zeta(alpha - h, z_min)) / (2 * h)


def fit_power_law(sizes, z_min: int = 1) -> PowerLawFit:
    """Fit P(z) ~ z^Lambda to discrete sizes by maximum likelihood.

    The MLE solves d/d_alpha log zeta(alpha, z_min) = -mean(log z) for the
    magnitude alpha = -Lambda; a log-binned least-squares slope with its
    R^2 is reported alongside as a shape diagnostic.  Requires at least 50
    samples at or above ``z_min`` and a non-degenerate size distribution.
    """
    z = np.asarray(sizes, dtype=float)
    z = z[z >= z_min]
    if z.size < 50:
        raise ValueError(
            f"insufficient samples ({z.size} >= {z_min}); run longer simulations"
        )
    if np.all(z == z[0]):
        raise ValueError("degenerate distribution: all sizes equal")
    target = -float(np.mean(np.log(z)))

    def objective(alpha):
        return _log_zeta_deriv(alpha, z_min) - target

    # the lower edge stays above 1 + h so the zeta evaluations remain defined
    alpha_hat = brentq(objective, 1.001, 30.0, xtol=1e-8)
    # Fisher standard error from the zeta log-likelihood curvature.
    h = 1e-4
    curv = (
        _log_zeta(alpha_hat + h, z_min)
        - 2 * _log_zeta(alpha_hat, z_min)
        + _log_zeta(alpha_hat - h, z_min)
    ) / h**2
    se = 1.0 / np.sqrt(z.size * curv) if curv > 0 else np.nan

    ls_slope, r2, decades = _log_binned_slope(z, z_min)
    ks = _ks_distance(z, alpha_hat, z_min)
    return PowerLawFit(
        exponent=-alpha_hat,
        exponent_se=float(se),
        z_min=z_min,
        ls_slope=ls_slope,
        r_squared=r2,
        ks_distance=ks,
        decades=decades,
        n_samples=int(z.size),
    )


def _log_binned_slope(z: np.ndarray, z_min: int) -> tuple[float, float, float]:
    z_max = z.max()
    if z_max <= z_min:
        return np.nan, 0.0, 0.0
    n_bins = max(8, int(10 * np.log10(z_max / z_min)) + 1)
    edges = np.unique(np.floor(np.logspace(np.log10(z_min), np.log10(z_max + 1), n_bins)))
    if edges.size < 3:
        return np.nan, 0.0, 0.0
    counts, edges = np.histogram(z, bins=edges)
    widths = np.diff(edges)
    centers = np.sqrt(edges[:-1] * edges[1:])
    density = counts / (widths * z.size)
    keep = density > 0
    if keep.sum() < 3:
        return np.nan, 0.0, 0.0
    lx = np.log10(centers[keep])
    ly = np.log10(density[keep])
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    decades = float(lx.max() - lx.min())
    return float(slope), float(r2), decades


def _ks_distance(z: np.ndarray, alpha: float, z_min: int) -> float:
    values = np.unique(z)
    norm = zeta(alpha, z_min)
    model_sf = zeta(alpha, values + 1) / norm        # P(Z > value)
    emp_sf = np.array([np.mean(z > v) for v in values])
    return float(np.max(np.abs(emp_sf - model_sf)))


@dataclass
class BranchingSummary:
    mean: float
    minimum: float
    maximum: float
    terminal: float
    label: str
    transient_discarded: float


def branching_summary(sigma_series, transient_fraction: float = 0.2) -> BranchingSummary:
    """Summarize a global branching-ratio series and label the regime.

    The first ``transient_fraction`` of the series is discarded before the
    mean; the label is sub-critical below 0.9, critical in [0.9, 1.1],
    super-critical above 1.1.
    """
    sigma = np.asarray(
        [getattr(s, "sigma_global", s) for s in sigma_series], dtype=float
    )
    if sigma.size < 1:
        raise ValueError("at least one snapshot is required")
    cut = int(transient_fraction * sigma.size)
    post = sigma[cut:] if sigma.size > cut else sigma
    mean = float(post.mean())
    if mean < 0.9:
        label = "sub-critical"
    elif mean <= 1.1:
        label = "critical"
    else:
        label = "super-critical"
    return BranchingSummary(
        mean=mean,
        minimum=float(post.min()),
        maximum=float(post.max()),
        terminal=float(sigma[-1]),
        label=label,
        transient_discarded=transient_fraction,
    )


def kl_divergence(p_emp, p_model) -> float:
    """KL(empirical || model) in nats over matching categories."""
    p = np.asarray(p_emp, dtype=float)
    q = np.asarray(p_model, dtype=float)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return float("inf")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def boltzmann_fit_check(
    samples,
    f_bar: float,
    kb: float = 1.0,
    levels=None,
    min_samples: int = 100,
    kl_threshold: float = 0.1,
) -> tuple[float, bool]:
    """Compare observed quiescent potentials to the Boltzmann prediction.

    Samples are assigned to categories (explicit ``levels``, the distinct
    observed values when few, or 50 histogram bins otherwise); the
    prediction is the absorbing-state softmax over those categories.
    Returns the KL divergence and a pass flag at ``kl_threshold``.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {x.size}")
    if levels is not None:
        levels = np.asarray(levels, dtype=float)
        idx = np.argmin(np.abs(x[:, None] - levels[None, :]), axis=1)
        counts = np.bincount(idx, minlength=levels.size)
        centers = levels
    else:
        uniq = np.unique(x)
        if uniq.size <= 50:
            idx = np.searchsorted(uniq, x)
            counts = np.bincount(idx, minlength=uniq.size)
            centers = uniq
        else:
            counts, edges = np.histogram(x, bins=50)
            centers = 0.5 * (edges[:-1] + edges[1:])
    keep = counts > 0
    emp = counts / counts.sum()
    pred = absorbing_state_distribution(centers, f_bar, kb)
    # renormalize over occupied categories so sparsely sampled tails do not
    # dominate the comparison
    emp = emp[keep] / emp[keep].sum()
    pred = pred[keep] / pred[keep].sum()
    kl = kl_divergence(emp, pred)
    return kl, kl <= kl_threshold


def avalanche_size_histogram(avalanches) -> tuple[np.ndarray, np.ndarray]:
    """Unique avalanche sizes and their counts, for plot data."""
    sizes = np.asarray([a.size for a in avalanches], dtype=int)
    if sizes.size == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=int)
    return np.unique(sizes, return_counts=True)


def quiescent_boltzmann_score(artifacts) -> dict | None:
    """Boltzmann-fit score of a finished run's quiescent potentials.

    Returns None when the run has no usable drift normalizer or too few
    quiescent samples; otherwise a dict with the KL divergence, the pass
    flag, and the global field used.
    """
    from .meanfield import field_summary

    cfg = artifacts.config
    drifts = cfg.drift_vector()
    if float(np.sum(np.abs(drifts))) == 0.0:
        return None
    samples = artifacts.quiescent_samples
    if samples.size < 100:
        return None
    fields = field_summary(artifacts.final_topology, drifts, cfg.max_links, cfg.kb)
    if fields.global_field == 0.0:
        return None
    kl, passed = boltzmann_fit_check(samples, fields.global_field, cfg.kb)
    return {"kl": kl, "passed": bool(passed), "global_field": fields.global_field}
