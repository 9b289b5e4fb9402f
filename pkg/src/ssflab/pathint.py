"""Brownian-bridge Monte Carlo for heat-trace differences.

The Laplace-weighted integral of the shift data equals (1/t) times the
trace of exp(-t H0) - exp(-t H1).  Both heat kernels have the same bridge
representation, so the trace difference is an integral over start points x
of the bridge expectation of exp(-S0) * (1 - exp(-S1)), with S0 and S1 the
time integrals of the background and the perturbation along the path, and
a node-wise indicator enforcing the Dirichlet box.  Paths that never meet
the perturbation contribute exactly zero, so sampling is restricted to the
support of V dilated by a few diffusive lengths; the neglected region is
controlled by the exact maximum tail of the one-dimensional bridge.

Determinism: path k draws from default_rng((master_seed, k)) regardless of
chunking or thread count, and the reduction is a single sum over a
preallocated per-path array, so results are bit-identical for any
n_threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .potentials import (
    Potential,
    evaluate,
    support_box,
    validate_background,
    validate_perturbation,
)

_QUAD_SIGMAS = 8.0


def bridge_nodes(rng, x, y, t: float, n_steps: int) -> np.ndarray:
    """Nodes of a Brownian bridge x -> y over [0, t], shape (n_steps+1, d).

    Endpoints are pinned exactly (no rounding residue at either end).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x.size
    dt = t / n_steps
    w = np.empty((n_steps + 1, d))
    w[0] = 0.0
    np.cumsum(rng.standard_normal((n_steps, d)) * math.sqrt(dt), axis=0, out=w[1:])
    frac = np.linspace(0.0, 1.0, n_steps + 1)[:, None]
    b = x + w - frac * (w[-1] - (y - x))
    b[0] = x
    b[-1] = y
    return b


def bridge_marginal_params(x, y, t: float, s: float):
    """(mean, variance) of the bridge position at interior time s.

    Coordinates are independent with a common variance s(t-s)/t.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not 0.0 < s < t:
        raise ValueError("interior time must satisfy 0 < s < t")
    mean = x + (s / t) * (y - x)
    var = s * (t - s) / t
    return mean, var


def _transition_density(u, v, s: float) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    d = u.size
    gap2 = float(np.sum((u - v) ** 2))
    return (2.0 * math.pi * s) ** (-0.5 * d) * math.exp(-gap2 / (2.0 * s))


def bridge_density(z, s: float, x, y, t: float) -> float:
    """Position density of the x -> y bridge at time s, evaluated at z.

    Ratio p_s(x, z) p_{t-s}(z, y) / p_t(x, y) of heat kernels for the
    generator -Laplacian/2.
    """
    if not 0.0 < s < t:
        raise ValueError("interior time must satisfy 0 < s < t")
    return (
        _transition_density(x, z, s)
        * _transition_density(z, y, t - s)
        / _transition_density(x, y, t)
    )


@dataclass(frozen=True)
class ChiSquareReport:
    statistic: float
    p_value: float
    dof: int
    n_bins: int
    n_paths: int


def bridge_marginal_chi_square(
    x,
    y,
    t: float,
    n_steps: int,
    node_index: int,
    n_paths: int,
    master_seed: int,
    n_bins: int = 24,
) -> ChiSquareReport:
    """Equal-probability-bin chi-square test of the sampled node marginal.

    Bins the first coordinate of node `node_index` against the exact
    Gaussian marginal; under a correct sampler the statistic is chi-square
    with n_bins - 1 degrees of freedom.
    """
    if not 0 < node_index < n_steps:
        raise ValueError("node_index must be interior")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = node_index * t / n_steps
    mean, var = bridge_marginal_params(x, y, t, s)
    samples = np.empty(n_paths)
    for k in range(n_paths):
        rng = np.random.default_rng((master_seed, k))
        samples[k] = bridge_nodes(rng, x, y, t, n_steps)[node_index, 0]
    edges = stats.norm.ppf(
        np.linspace(0.0, 1.0, n_bins + 1), loc=mean[0], scale=math.sqrt(var)
    )
    observed, _ = np.histogram(samples, bins=edges)
    expected = n_paths / n_bins
    statistic = float(np.sum((observed - expected) ** 2) / expected)
    dof = n_bins - 1
    return ChiSquareReport(
        statistic=statistic,
        p_value=float(stats.chi2.sf(statistic, dof)),
        dof=dof,
        n_bins=n_bins,
        n_paths=n_paths,
    )


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_error: float
    n_paths: int
    n_steps: int
    seed: int
    estimator: str
    tail_bound: float
    sample_volume: float


def _truncation_bound(supp_lo, supp_hi, t: float, reach: float, dimension: int) -> float:
    """Bound on the discarded start-point mass outside the sampling box.

    A bridge started at ell-infinity distance r from the support must have
    some coordinate excursion of at least r; the exact bridge maximum tail
    exp(-2 r^2 / t) per signed coordinate gives the integrand, integrated
    over the shells around the support box.
    """
    widths = [b - a for a, b in zip(supp_lo, supp_hi)]

    def shell_rate(r: float) -> float:
        surf = sum(
            2.0 * np.prod([w + 2.0 * r for j, w in enumerate(widths) if j != i])
            for i in range(dimension)
        )
        return 2.0 * dimension * math.exp(-2.0 * r * r / t) * surf

    val, _ = integrate.quad(shell_rate, reach, reach + 12.0 * math.sqrt(t))
    return (2.0 * math.pi * t) ** (-0.5 * dimension) / t * float(val)


def _zero_estimate(n_paths, n_steps, master_seed, label) -> McEstimate:
    return McEstimate(
        value=0.0,
        std_error=0.0,
        n_paths=n_paths,
        n_steps=n_steps,
        seed=master_seed,
        estimator=label,
        tail_bound=0.0,
        sample_volume=0.0,
    )


def _path_chunk(
    vals,
    k0: int,
    k1: int,
    master_seed: int,
    lo,
    hi,
    t: float,
    n_steps: int,
    background: Potential,
    perturbation: Potential,
    half_side,
) -> None:
    d = lo.size
    count = k1 - k0
    xs = np.empty((count, d))
    nrm = np.empty((count, n_steps, d))
    for i, k in enumerate(range(k0, k1)):
        rng = np.random.default_rng((master_seed, k))
        xs[i] = lo + (hi - lo) * rng.random(d)
        nrm[i] = rng.standard_normal((n_steps, d))
    dt = t / n_steps
    w = np.empty((count, n_steps + 1, d))
    w[:, 0, :] = 0.0
    np.cumsum(nrm * math.sqrt(dt), axis=1, out=w[:, 1:, :])
    frac = np.linspace(0.0, 1.0, n_steps + 1)[None, :, None]
    b = xs[:, None, :] + w - frac * w[:, -1:, :]
    b[:, -1, :] = xs
    mids = 0.5 * (b[:, :-1, :] + b[:, 1:, :])
    weight = -np.expm1(-evaluate(perturbation, mids).sum(axis=1) * dt)
    if not (getattr(background, "kind", None) == "zero"):
        weight = weight * np.exp(-evaluate(background, mids).sum(axis=1) * dt)
    if half_side is not None:
        inside = np.all(np.abs(b) < half_side, axis=(1, 2))
        weight = weight * inside
    vals[k0:k1] = weight


def laplace_mc(
    background: Potential,
    perturbation: Potential,
    t: float,
    dimension: int,
    box_side: float | None = None,
    n_paths: int = 10000,
    n_steps: int = 128,
    master_seed: int = 0,
    n_threads: int = 1,
    reach_sigmas: float = 5.0,
) -> McEstimate:
    """Bridge estimate of the Laplace-weighted shift integral at time t.

    box_side=None drops the Dirichlet indicator (whole-space operator);
    otherwise the box is (-box_side/2, box_side/2)^d and the indicator is
    checked at every node.  The reported tail_bound covers only the
    sampling-box truncation, not the time-step bias.
    """
    validate_background(background)
    validate_perturbation(perturbation)
    if not t > 0.0:
        raise ValueError("time parameter must be positive")
    if n_steps < 1 or n_paths < 1:
        raise ValueError("need at least one step and one path")
    if dimension not in (1, 2, 3):
        raise ValueError("dimension must be 1, 2, or 3")
    for pot, role in ((background, "background"), (perturbation, "perturbation")):
        spec = pot.base if hasattr(pot, "base") else pot
        if spec.dimension != dimension:
            raise ValueError(f"{role} is {spec.dimension}-dimensional, expected {dimension}")
    if box_side is not None and not box_side > 0.0:
        raise ValueError("box side must be positive")

    label = f"bridge_laplace[L={box_side}]" if box_side is not None else "bridge_laplace[free]"
    supp = support_box(perturbation)
    if supp.is_empty:
        return _zero_estimate(n_paths, n_steps, master_seed, label)
    reach = reach_sigmas * math.sqrt(t)
    box = supp.dilated(reach)
    half_side = None
    if box_side is not None:
        half_side = 0.5 * box_side
        box = box.intersect([-half_side] * dimension, [half_side] * dimension)
        if box.is_empty:
            return _zero_estimate(n_paths, n_steps, master_seed, label)
    lo = np.asarray(box.lo)
    hi = np.asarray(box.hi)

    vals = np.empty(n_paths)
    chunk = 1024
    starts = list(range(0, n_paths, chunk))
    if n_threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            futures = [
                pool.submit(
                    _path_chunk,
                    vals, k0, min(k0 + chunk, n_paths), master_seed,
                    lo, hi, t, n_steps, background, perturbation, half_side,
                )
                for k0 in starts
            ]
            for f in futures:
                f.result()
    else:
        for k0 in starts:
            _path_chunk(
                vals, k0, min(k0 + chunk, n_paths), master_seed,
                lo, hi, t, n_steps, background, perturbation, half_side,
            )

    pref = box.volume * (2.0 * math.pi * t) ** (-0.5 * dimension) / t
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return McEstimate(
        value=pref * mean,
        std_error=pref * se,
        n_paths=n_paths,
        n_steps=n_steps,
        seed=master_seed,
        estimator=label,
        tail_bound=_truncation_bound(supp.lo, supp.hi, t, reach, dimension),
        sample_volume=box.volume,
    )


@dataclass(frozen=True)
class MarkovReport:
    lhs: float
    rhs: float
    lhs_se: float
    rhs_se: float
    split: float
    t: float


def _feynman_kac_mean(potential, x, y, t, n_steps, seed_tuple, n_paths):
    """Mean and standard error of exp(-integral of potential) over bridges."""
    vals = np.empty(n_paths)
    dt = t / n_steps
    for k in range(n_paths):
        rng = np.random.default_rng(seed_tuple + (k,))
        b = bridge_nodes(rng, x, y, t, n_steps)
        mids = 0.5 * (b[:-1] + b[1:])
        vals[k] = math.exp(-float(evaluate(potential, mids).sum()) * dt)
    se = float(vals.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return float(vals.mean()), se


def markov_identity_check(
    potential: Potential,
    x,
    y,
    t: float,
    split: float,
    n_paths: int,
    n_steps: int,
    master_seed: int,
    n_quad: int = 64,
) -> MarkovReport:
    """Splice test: one bridge expectation versus two glued at time `split`.

    The position at the split time is integrated out with its exact
    Gaussian density on Gauss-Legendre nodes; sub-bridge expectations use
    independent seeded streams per node.  Only the one-dimensional case is
    supported (the gluing integral is scalar).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size != 1 or y.size != 1:
        raise ValueError("the splice check integrates a scalar position")
    if not 0.0 < split < t:
        raise ValueError("split time must be interior")

    lhs, lhs_se = _feynman_kac_mean(
        potential, x, y, t, n_steps, (master_seed, 0), n_paths
    )

    mean, var = bridge_marginal_params(x, y, t, split)
    sigma = math.sqrt(var)
    gx, gw = np.polynomial.legendre.leggauss(n_quad)
    nodes = mean[0] + _QUAD_SIGMAS * sigma * gx
    weights = _QUAD_SIGMAS * sigma * gw
    n1 = max(1, min(n_steps - 1, round(n_steps * split / t)))
    n2 = n_steps - n1
    rhs = 0.0
    var_rhs = 0.0
    for q, (z, w) in enumerate(zip(nodes, weights)):
        zv = np.array([z])
        rho = bridge_density(zv, split, x, y, t)
        m1, se1 = _feynman_kac_mean(
            potential, x, zv, split, n1, (master_seed, 1, q), n_paths
        )
        m2, se2 = _feynman_kac_mean(
            potential, zv, y, t - split, n2, (master_seed, 2, q), n_paths
        )
        rhs += w * rho * m1 * m2
        var_rhs += (w * rho) ** 2 * (m2 * m2 * se1 * se1 + m1 * m1 * se2 * se2)
    return MarkovReport(
        lhs=lhs,
        rhs=float(rhs),
        lhs_se=lhs_se,
        rhs_se=float(math.sqrt(var_rhs)),
        split=split,
        t=t,
    )
