"""Coupling-constant integral identities for the shift function.

The quantity integrated over a spectral window B can be reached two ways:
directly from the counting-difference step curve (lhs), or by sweeping the
coupling lambda from 0 to 1 and accumulating the perturbation-weighted
spectral density of H(lambda) = H0 + lambda V inside B (rhs).  With V >= 0
the sorted eigenvalue paths are nondecreasing in lambda, so each window
endpoint is crossed at most once per path; splitting the coupling interval
at those crossings leaves piecewise-analytic integrands that Gauss rules
handle at near machine precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .counting import (
    MAX_RETRIES,
    PIVOT_RTOL,
    RETRY_STEP,
    FactorizationFailure,
    _band_negative_inertia,
    ssf_step_function,
)
from .hamiltonian import BoxGrid, DiscreteHamiltonian, assemble
from .stepfn import StepFunction

_LAMBDA_TOL = 1e-12
_PIECE_MIN = 1e-13


@dataclass(frozen=True)
class CouplingQuadrature:
    """Quadrature rule on the unit coupling interval, weights summing to 1."""

    rule: str = "gauss_legendre"
    n_nodes: int = 64

    def __post_init__(self):
        if self.rule not in ("gauss_legendre", "midpoint"):
            raise ValueError(f"unknown quadrature rule {self.rule!r}")
        if self.n_nodes < 1:
            raise ValueError("need at least one quadrature node")

    def nodes_weights(self):
        """(nodes, weights) on (0, 1); weights sum to 1 exactly up to rounding."""
        if self.rule == "gauss_legendre":
            x, w = np.polynomial.legendre.leggauss(self.n_nodes)
            return 0.5 * (x + 1.0), 0.5 * w
        n = self.n_nodes
        return (np.arange(n) + 0.5) / n, np.full(n, 1.0 / n)


@dataclass(frozen=True)
class SpectralWindow:
    """Disjoint union of half-open energy intervals [lo, hi), sorted."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        if not ivs:
            raise ValueError("window needs at least one interval")
        for a, b in ivs:
            if not (np.isfinite(a) and np.isfinite(b) and a < b):
                raise ValueError(f"bad interval [{a}, {b})")
        for (_, b), (a2, _) in zip(ivs, ivs[1:]):
            if a2 < b:
                raise ValueError("window intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def single(cls, lo: float, hi: float) -> "SpectralWindow":
        return cls(intervals=((lo, hi),))

    @property
    def lo(self) -> float:
        return self.intervals[0][0]

    @property
    def hi(self) -> float:
        return self.intervals[-1][1]

    def endpoints(self):
        out = set()
        for a, b in self.intervals:
            out.add(a)
            out.add(b)
        return sorted(out)

    def contains(self, e: float) -> bool:
        return any(a <= e < b for a, b in self.intervals)


@dataclass(frozen=True)
class BsResult:
    value: float
    crossings: tuple
    window: SpectralWindow
    samples: tuple = ()


@dataclass(frozen=True)
class BsIdentityReport:
    lhs: float
    rhs: float
    gap: float
    crossings: tuple
    window: SpectralWindow
    samples: tuple = ()


class _CouplingFamily:
    """Spectral access to H(lambda) = H0 + lambda diag(v), v >= 0.

    Two backends: a dense symmetric matrix (full eigensolves, cached per
    lambda) and a DiscreteHamiltonian (band inertia for counting, selected
    eigenpairs for traces).
    """

    def __init__(self, base, v_diag):
        v = np.asarray(v_diag, dtype=float)
        if v.ndim != 1:
            raise ValueError("perturbation diagonal must be a vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("perturbation diagonal must be finite")
        if np.any(v < 0.0):
            raise ValueError("coupling sweep requires a nonnegative perturbation")
        self.v = v
        if isinstance(base, DiscreteHamiltonian):
            if base.n_unknowns != v.size:
                raise ValueError("perturbation size does not match the operator")
            self._bands = base.lower_bands
            self._dense = None
            self._eps = PIVOT_RTOL * (base.inf_norm + float(v.max(initial=0.0)))
        else:
            a = np.asarray(base, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] != v.size:
                raise ValueError("expected a square matrix matching the perturbation")
            self._dense = a
            self._bands = None
            self._cache = {}

    # -- counting ---------------------------------------------------------

    def _dense_eigh(self, lam: float):
        hit = self._cache.get(lam)
        if hit is None:
            hit = np.linalg.eigh(self._dense + lam * np.diag(self.v))
            self._cache[lam] = hit
        return hit

    def count_below(self, lam: float, level: float) -> int:
        """#{eigenvalues of H(lam) <= level}."""
        if self._dense is not None:
            evs, _ = self._dense_eigh(lam)
            return int(np.searchsorted(evs, level, side="right"))
        bands = self._bands.copy()
        bands[0, :] += lam * self.v
        e = float(level)
        for _ in range(MAX_RETRIES):
            res = _band_negative_inertia(bands, e, self._eps)
            if res >= 0:
                return int(res)
            e = e + RETRY_STEP * (1.0 + abs(e))
        raise FactorizationFailure(f"no factorizable shift near E={level!r}")

    # -- traces -----------------------------------------------------------

    def pairs_in(self, lam: float, lo, hi):
        """(eigenvalues, v-weights) for eigenvalues in [lo, hi), ascending.

        lo=None/hi=None means the full spectrum.  Weights are
        sum_i v_i psi_n(i)^2 for unit eigenvectors psi_n.
        """
        if self._dense is not None:
            evs, vecs = self._dense_eigh(lam)
        else:
            bands = self._bands.copy()
            bands[0, :] += lam * self.v
            if lo is None or hi is None:
                evs, vecs = scipy.linalg.eig_banded(bands, lower=True)
            else:
                pad = 1e-9 * (1.0 + abs(lo) + abs(hi))
                evs, vecs = scipy.linalg.eig_banded(
                    bands,
                    lower=True,
                    select="v",
                    select_range=(lo - pad, hi + pad),
                )
        if lo is not None and hi is not None:
            keep = (evs >= lo) & (evs < hi)
            evs, vecs = evs[keep], vecs[:, keep]
        if evs.size == 0:
            return evs, np.zeros(0)
        weights = np.einsum("i,ik->k", self.v, vecs * vecs)
        return evs, weights

    def window_trace(self, lam: float, window: SpectralWindow) -> float:
        tot = 0.0
        for a, b in window.intervals:
            _, wts = self.pairs_in(lam, a, b)
            tot += float(wts.sum())
        return tot


def _crossings_for_level(fam: _CouplingFamily, level: float):
    """Couplings in (0, 1) where a sorted eigenvalue path passes `level`.

    The count c(lam) = #{E_n(lam) <= level} is a nonincreasing integer step
    function of lam; each unit drop is one upward crossing.  Stack bisection
    pins every drop to width _LAMBDA_TOL; coincident drops repeat the value.
    """
    out = []
    c0 = fam.count_below(0.0, level)
    c1 = fam.count_below(1.0, level)
    stack = [(0.0, c0, 1.0, c1)]
    while stack:
        lo, clo, hi, chi = stack.pop()
        if clo == chi:
            continue
        if hi - lo <= _LAMBDA_TOL:
            out.extend([0.5 * (lo + hi)] * (clo - chi))
            continue
        mid = 0.5 * (lo + hi)
        cmid = fam.count_below(mid, level)
        stack.append((lo, clo, mid, cmid))
        stack.append((mid, cmid, hi, chi))
    return out


def _piece_boundaries(crossings) -> np.ndarray:
    pts = [0.0]
    for lam in sorted(crossings):
        if _PIECE_MIN < lam < 1.0 - _PIECE_MIN and lam - pts[-1] > _LAMBDA_TOL:
            pts.append(lam)
    pts.append(1.0)
    return np.asarray(pts)


def bs_rhs(operator, v_diag, window: SpectralWindow, quadrature: CouplingQuadrature) -> BsResult:
    """Coupling integral of the V-weighted spectral trace over the window.

    operator is a dense symmetric matrix or a DiscreteHamiltonian at
    coupling 0; v_diag is the nonnegative perturbation diagonal.
    """
    fam = _CouplingFamily(operator, v_diag)
    crossings = []
    for a in window.endpoints():
        crossings.extend(_crossings_for_level(fam, a))
    crossings.sort()
    nodes0, weights0 = quadrature.nodes_weights()
    total = 0.0
    samples = []
    bounds = _piece_boundaries(crossings)
    for p, q in zip(bounds, bounds[1:]):
        if q - p < _PIECE_MIN:
            continue
        lams = p + (q - p) * nodes0
        wts = (q - p) * weights0
        for lam, w in zip(lams, wts):
            tr = fam.window_trace(float(lam), window)
            total += w * tr
            samples.append((float(lam), float(tr)))
    return BsResult(
        value=float(total),
        crossings=tuple(crossings),
        window=window,
        samples=tuple(samples),
    )


def bs_lhs(step: StepFunction, window: SpectralWindow) -> float:
    """Exact integral of a counting-difference step curve over the window."""
    return float(sum(step.integrate(a, b) for a, b in window.intervals))


def bs_weighted(operator, v_diag, weight, quadrature: CouplingQuadrature) -> float:
    """Coupling integral with a continuous energy weight instead of a window.

    Computes int_0^1 dlam sum_n weight(E_n(lam)) * <psi_n, V psi_n>.  The
    weight must be callable and vanish outside its `support` attribute
    (None meaning unbounded support).
    """
    fam = _CouplingFamily(operator, v_diag)
    sup = getattr(weight, "support", None)
    nodes, wts = quadrature.nodes_weights()
    total = 0.0
    for lam, w in zip(nodes, wts):
        if sup is None:
            evs, vw = fam.pairs_in(float(lam), None, None)
        else:
            lo, hi = sup
            pad = 1e-9 * (1.0 + abs(lo) + abs(hi))
            evs, vw = fam.pairs_in(float(lam), lo - pad, hi + pad)
        if evs.size:
            total += w * float(np.dot(np.asarray(weight(evs), dtype=float), vw))
    return float(total)


def _grid_pair(grid: BoxGrid, background, perturbation):
    h0 = assemble(grid, background, perturbation, coupling=0.0)
    h1 = assemble(grid, background, perturbation, coupling=1.0)
    v_diag = h1.lower_bands[0] - h0.lower_bands[0]
    return h0, h1, v_diag


def bs_check_grid(
    grid: BoxGrid,
    background,
    perturbation,
    window: SpectralWindow,
    quadrature: CouplingQuadrature,
) -> BsIdentityReport:
    """Both sides of the window identity on one discretized box."""
    h0, h1, v_diag = _grid_pair(grid, background, perturbation)
    rhs = bs_rhs(h0, v_diag, window, quadrature)
    pad = 0.25 * (1.0 + abs(window.lo) + abs(window.hi))
    step = ssf_step_function(h0, h1, lo=window.lo - pad, hi=window.hi + pad)
    lhs = bs_lhs(step, window)
    return BsIdentityReport(
        lhs=lhs,
        rhs=rhs.value,
        gap=abs(lhs - rhs.value),
        crossings=rhs.crossings,
        window=window,
        samples=rhs.samples,
    )


def bs_weighted_grid(
    grid: BoxGrid,
    background,
    perturbation,
    weight,
    quadrature: CouplingQuadrature,
) -> float:
    h0, _, v_diag = _grid_pair(grid, background, perturbation)
    return bs_weighted(h0, v_diag, weight, quadrature)


def smoothed_density_profile(
    grid: BoxGrid,
    background,
    perturbation,
    energies,
    delta: float,
    quadrature: CouplingQuadrature,
) -> np.ndarray:
    """Window averages (1/delta) * rhs([e, e+delta)) over a shared node sweep.

    One eigensolve per coupling node covers every energy window via prefix
    sums, so the cost is independent of len(energies).  No crossing
    splitting is done: intended for smooth reference profiles where the
    node count, not adaptivity, sets the accuracy.
    """
    energies = np.asarray(energies, dtype=float)
    if energies.ndim != 1 or energies.size == 0:
        raise ValueError("energies must be a nonempty vector")
    if not delta > 0.0:
        raise ValueError("window width must be positive")
    h0, _, v_diag = _grid_pair(grid, background, perturbation)
    fam = _CouplingFamily(h0, v_diag)
    lo_all = float(energies.min())
    hi_all = float(energies.max() + delta)
    margin = 1e-6 * (1.0 + abs(lo_all) + abs(hi_all))
    nodes, wts = quadrature.nodes_weights()
    out = np.zeros(energies.size)
    for lam, w in zip(nodes, wts):
        evs, vw = fam.pairs_in(float(lam), lo_all - margin, hi_all + margin)
        csum = np.concatenate(([0.0], np.cumsum(vw)))
        i0 = np.searchsorted(evs, energies, side="left")
        i1 = np.searchsorted(evs, energies + delta, side="left")
        out += w * (csum[i1] - csum[i0])
    return out / delta
