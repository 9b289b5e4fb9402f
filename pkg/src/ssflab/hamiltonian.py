"""Finite-difference Dirichlet boxes and their Schrodinger matrices.

The box (-L/2, L/2)^d is discretized with interior points only, spaced h and
centered symmetrically about the origin. The kinetic part of -Laplacian/2 is
the standard second-order stencil, so the matrix is tridiagonal in d=1 and
block tridiagonal with bandwidth m in d=2 under lexicographic ordering.

Since m = round(L/h) - 1, the operator realized on the grid is exactly the
Dirichlet box of side (m+1)h. Analytic level comparisons and resonance tuning
should use effective_side, which is identical to L whenever L/h is integral.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .potentials import (
    Potential,
    evaluate,
    validate_background,
    validate_perturbation,
)


@dataclass(frozen=True)
class BoxGrid:
    dimension: int
    side: float
    spacing: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError("grids are defined for dimension 1 or 2")
        if not (self.side > 0.0 and self.spacing > 0.0):
            raise ValueError("side and spacing must be positive")
        if self.n_per_axis < 1:
            raise ValueError("box too small: no interior grid points")

    @property
    def n_per_axis(self) -> int:
        return int(round(self.side / self.spacing)) - 1

    @property
    def n_unknowns(self) -> int:
        return self.n_per_axis**self.dimension

    @property
    def effective_side(self) -> float:
        return (self.n_per_axis + 1) * self.spacing

    @property
    def axis_points(self) -> np.ndarray:
        m = self.n_per_axis
        return (np.arange(1, m + 1) - (m + 1) / 2.0) * self.spacing

    def points(self) -> np.ndarray:
        """All interior points, shape (n_unknowns, dimension), x fastest."""
        ax = self.axis_points
        if self.dimension == 1:
            return ax[:, None]
        xx, yy = np.meshgrid(ax, ax, indexing="xy")
        return np.column_stack([xx.ravel(), yy.ravel()])


@dataclass(frozen=True, eq=False)
class DiscreteHamiltonian:
    grid: BoxGrid
    coupling: float
    matrix: sp.csr_matrix
    label: str = ""

    @property
    def n_unknowns(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def inf_norm(self) -> float:
        return float(np.max(np.abs(self.matrix).sum(axis=1)))

    @cached_property
    def lower_bands(self) -> np.ndarray:
        """Lower band storage ab[k, j] = H[j+k, j], shape (bandwidth+1, n)."""
        n = self.n_unknowns
        bw = self.grid.n_per_axis if self.grid.dimension == 2 else 1
        ab = np.zeros((bw + 1, n))
        for k in range(bw + 1):
            diag = self.matrix.diagonal(-k)
            ab[k, : n - k] = diag
        return np.ascontiguousarray(ab)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def _kinetic(grid: BoxGrid) -> sp.csr_matrix:
    m = grid.n_per_axis
    h2 = grid.spacing**2
    t1 = sp.diags(
        [np.full(m - 1, -0.5 / h2), np.full(m, 1.0 / h2), np.full(m - 1, -0.5 / h2)],
        offsets=(-1, 0, 1),
        format="csr",
    )
    if grid.dimension == 1:
        return t1
    eye = sp.identity(m, format="csr")
    return (sp.kron(t1, eye) + sp.kron(eye, t1)).tocsr()


def assemble(
    grid: BoxGrid,
    background: Potential,
    perturbation: Potential,
    coupling: float = 1.0,
) -> DiscreteHamiltonian:
    """Matrix of -Laplacian/2 + V0 + coupling * V on the grid."""
    validate_background(background)
    validate_perturbation(perturbation)
    for pot, name in ((background, "background"), (perturbation, "perturbation")):
        if pot.dimension != grid.dimension:
            raise ValueError(f"{name} lives in d={pot.dimension}, grid in d={grid.dimension}")
    pts = grid.points()
    diag = evaluate(background, pts)
    if coupling != 0.0:
        diag = diag + coupling * evaluate(perturbation, pts)
    mat = (_kinetic(grid) + sp.diags(diag, format="csr")).tocsr()
    mat.sum_duplicates()
    return DiscreteHamiltonian(grid=grid, coupling=float(coupling), matrix=mat)


def two_square_count(s: int) -> int:
    """Number of ordered pairs (n1, n2) of positive integers with n1^2+n2^2 = s."""
    count = 0
    n1 = 1
    while n1 * n1 < s:
        rem = s - n1 * n1
        n2 = int(round(np.sqrt(rem)))
        if n2 >= 1 and n2 * n2 == rem:
            count += 1
        n1 += 1
    return count


def analytic_free_levels(dimension: int, side: float, e_max: float) -> list:
    """Dirichlet levels pi^2 (n1^2+...+nd^2) / (2 L^2) with multiplicities.

    Sorted list of (energy, multiplicity) for all levels <= e_max; indices
    start at 1, so squares with a zero component do not contribute.
    """
    if dimension not in (1, 2):
        raise ValueError("analytic levels implemented for dimension 1 or 2")
    scale = np.pi**2 / (2.0 * side**2)
    s_max = int(np.floor(e_max / scale + 1e-9))
    levels = []
    if dimension == 1:
        n = 1
        while n * n <= s_max:
            levels.append((scale * n * n, 1))
            n += 1
        return levels
    for s in range(2, s_max + 1):
        mult = two_square_count(s)
        if mult:
            levels.append((scale * s, mult))
    return levels


def discrete_free_levels(grid: BoxGrid) -> np.ndarray:
    """Exact eigenvalues of the free grid operator, sorted, multiplicity expanded.

    Per axis the levels are (2/h^2) sin^2(n pi / (2(m+1))), n = 1..m.
    """
    m = grid.n_per_axis
    h = grid.spacing
    n = np.arange(1, m + 1)
    axis = (2.0 / h**2) * np.sin(n * np.pi / (2.0 * (m + 1))) ** 2
    if grid.dimension == 1:
        return np.sort(axis)
    return np.sort((axis[:, None] + axis[None, :]).ravel())
