import numpy as np
import pytest

from ssflab.birman_solomyak import (
    CouplingQuadrature,
    SpectralWindow,
    bs_check_grid,
    bs_lhs,
    bs_rhs,
    bs_weighted,
    bs_weighted_grid,
    smoothed_density_profile,
)
from ssflab.counting import ssf_step_function
from ssflab.hamiltonian import BoxGrid, assemble
from ssflab.potentials import PotentialSpec
from ssflab.stepfn import ExpDecayWeight, StepFunction, hat_weight

ZERO = PotentialSpec(kind="zero", center=(0.0,))
BUMP = PotentialSpec(kind="square_bump", amplitude=10.0, support_radius=0.5, center=(0.0,))
GL64 = CouplingQuadrature(rule="gauss_legendre", n_nodes=64)


def test_quadrature_nodes_and_weights():
    for rule in ("gauss_legendre", "midpoint"):
        q = CouplingQuadrature(rule=rule, n_nodes=16)
        nodes, weights = q.nodes_weights()
        assert np.all((nodes > 0.0) & (nodes < 1.0))
        assert np.all(weights > 0.0)
        assert abs(weights.sum() - 1.0) < 1e-14
    with pytest.raises(ValueError):
        CouplingQuadrature(rule="trapezoid", n_nodes=8)
    with pytest.raises(ValueError):
        CouplingQuadrature(rule="midpoint", n_nodes=0)


def test_window_validation():
    w = SpectralWindow.single(0.0, 2.0)
    assert w.lo == 0.0 and w.hi == 2.0
    with pytest.raises(ValueError):
        SpectralWindow.single(1.0, 1.0)
    with pytest.raises(ValueError):
        SpectralWindow(intervals=((0.0, 1.0), (0.5, 2.0)))  # overlap


def test_diagonal_toy_coupling_integral():
    # eigenvalue path lambda crosses both window endpoints; the flat piece
    # between the crossings integrates to the window length
    h0 = np.diag([0.0, 1.0])
    v = np.array([1.0, 0.0])
    res = bs_rhs(h0, v, SpectralWindow.single(0.2, 0.7), GL64)
    assert res.value == pytest.approx(0.5, abs=1e-9)
    assert len(res.crossings) == 2
    np.testing.assert_allclose(sorted(res.crossings), [0.2, 0.7], atol=1e-8)


def test_zero_perturbation_gives_zero():
    h0 = np.diag([0.3, 1.4, 2.2])
    v = np.zeros(3)
    res = bs_rhs(h0, v, SpectralWindow.single(0.0, 2.0), GL64)
    assert res.value == 0.0


def test_lhs_toy_step():
    step = StepFunction.from_jumps(-1.0, 3.0, [0.0, 1.0], [1.0, -1.0])
    assert bs_lhs(step, SpectralWindow.single(0.2, 0.7)) == pytest.approx(0.5, abs=1e-14)
    zero_step = StepFunction.from_jumps(-1.0, 3.0, [], [])
    assert bs_lhs(zero_step, SpectralWindow.single(0.0, 1.0)) == 0.0


@pytest.mark.parametrize("seed", range(10))
def test_finite_matrix_identity_random_trials(seed):
    # coupling quadrature against exact step-curve integration of the pair
    rng = np.random.default_rng(seed)
    n = 12
    a = rng.standard_normal((n, n))
    h0 = 0.5 * (a + a.T)
    v = rng.uniform(0.0, 2.0, size=n)
    ev0 = np.linalg.eigvalsh(h0)
    lo = rng.uniform(ev0[2], ev0[n // 2])
    hi = lo + rng.uniform(0.5, 3.0)
    window = SpectralWindow.single(lo, hi)
    res = bs_rhs(h0, v, window, GL64)
    step = ssf_step_function(h0, h0 + np.diag(v), lo=lo - 1.0, hi=hi + 1.0)
    lhs = bs_lhs(step, window)
    assert abs(lhs - res.value) < 1e-6


def test_grid_identity_window():
    g = BoxGrid(dimension=1, side=8.0, spacing=1.0 / 32)
    window = SpectralWindow.single(0.0, 2.0)
    report = bs_check_grid(g, ZERO, BUMP, window, GL64)
    assert abs(report.lhs - report.rhs) < 1e-6
    assert report.rhs >= 0.0


def test_window_monotonicity():
    g = BoxGrid(dimension=1, side=6.0, spacing=1.0 / 16)
    small = bs_check_grid(g, ZERO, BUMP, SpectralWindow.single(0.5, 1.5), GL64)
    large = bs_check_grid(g, ZERO, BUMP, SpectralWindow.single(0.0, 2.5), GL64)
    assert large.rhs >= small.rhs - 1e-9


def test_weighted_zero_weight():
    h0 = np.diag([0.2, 0.9])
    v = np.array([0.5, 0.5])
    f = hat_weight(5.0, 6.0)  # support above the reachable spectrum
    assert bs_weighted(h0, v, f, GL64) == pytest.approx(0.0, abs=1e-12)


def test_weighted_diagonal_toy_exponential():
    # moving eigenvalue lambda carries weight 1: integral of e^(-lambda)
    h0 = np.diag([0.0, 1.0])
    v = np.array([1.0, 0.0])
    got = bs_weighted(h0, v, ExpDecayWeight(rate=1.0), GL64)
    assert got == pytest.approx(1.0 - np.exp(-1.0), rel=1e-10)


def test_weighted_grid_against_step_oracle():
    g = BoxGrid(dimension=1, side=10.0, spacing=1.0 / 32)
    f = hat_weight(0.0, 2.0)
    got = bs_weighted_grid(g, ZERO, BUMP, f, GL64)
    h0 = assemble(g, ZERO, BUMP, coupling=0.0)
    h1 = assemble(g, ZERO, BUMP, coupling=1.0)
    step = ssf_step_function(h0, h1, lo=-0.5, hi=2.5)
    ref = step.integrate_product(f)
    assert got == pytest.approx(ref, rel=0.01)


def test_smoothed_density_profile_matches_per_window_brute_force():
    # same quadrature nodes, independent bookkeeping: dense eigensolve per
    # node and window against the shared prefix-sum path
    g = BoxGrid(dimension=1, side=8.0, spacing=1.0 / 16)
    energies = np.array([0.4, 0.9, 1.7])
    delta = 0.3
    quad = CouplingQuadrature(rule="midpoint", n_nodes=48)
    profile = smoothed_density_profile(g, ZERO, BUMP, energies, delta, quad)

    h0 = assemble(g, ZERO, BUMP, coupling=0.0).dense()
    vdiag = np.diag(assemble(g, ZERO, BUMP, coupling=1.0).dense() - h0)
    nodes, weights = quad.nodes_weights()
    for e, val in zip(energies, profile):
        acc = 0.0
        for lam, w in zip(nodes, weights):
            evs, vecs = np.linalg.eigh(h0 + lam * np.diag(vdiag))
            sel = (evs >= e) & (evs < e + delta)
            acc += w * float(np.sum(vdiag @ vecs[:, sel] ** 2))
        assert val == pytest.approx(acc / delta, abs=1e-8)


def test_smoothed_density_profile_tracks_adaptive_windows():
    g = BoxGrid(dimension=1, side=8.0, spacing=1.0 / 16)
    energies = np.array([0.4, 0.9, 1.7])
    delta = 0.3
    quad = CouplingQuadrature(rule="midpoint", n_nodes=256)
    profile = smoothed_density_profile(g, ZERO, BUMP, energies, delta, quad)
    for e, val in zip(energies, profile):
        report = bs_check_grid(g, ZERO, BUMP, SpectralWindow.single(e, e + delta), GL64)
        assert val == pytest.approx(report.rhs / delta, abs=0.05)


def test_rhs_rejects_negative_perturbation():
    h0 = np.diag([0.0, 1.0])
    with pytest.raises(ValueError):
        bs_rhs(h0, np.array([-0.5, 0.0]), SpectralWindow.single(0.0, 1.0), GL64)
