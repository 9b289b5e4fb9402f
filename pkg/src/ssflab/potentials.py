"""Potential specifications and their pointwise evaluation.

A potential is described declaratively by a PotentialSpec so that runs can be
reconstructed from a config file alone. Evaluation is vectorized over numpy
point arrays of shape (..., d). Compactly supported kinds return exactly 0.0
outside their closed support so that importance-sampling boxes and support
checks are sharp rather than approximate.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

KINDS = ("zero", "square_bump", "smooth_bump", "cosine", "well_lattice")

_COMPACT_KINDS = ("zero", "square_bump", "smooth_bump")
_PERIODIC_KINDS = ("cosine", "well_lattice")


@dataclass(frozen=True)
class PotentialSpec:
    kind: str
    amplitude: float = 0.0
    support_radius: float = 0.0
    center: tuple = (0.0,)
    period: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}, expected one of {KINDS}")
        if len(self.center) < 1:
            raise ValueError("center must have at least one coordinate")
        if not np.isfinite(self.amplitude):
            raise ValueError("amplitude must be finite")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.kind in ("square_bump", "smooth_bump") and not self.support_radius > 0.0:
            raise ValueError(f"{self.kind} requires support_radius > 0")
        if self.kind == "well_lattice" and not self.support_radius > 0.0:
            raise ValueError("well_lattice requires support_radius > 0")
        if self.kind in _PERIODIC_KINDS and not self.period > 0.0:
            raise ValueError(f"{self.kind} requires period > 0")

    @property
    def dimension(self) -> int:
        return len(self.center)


@dataclass(frozen=True)
class ScaledPerturbation:
    """Perturbation rescaled by an inverse power of the box side.

    Evaluates to box_side**(-exponent) * base(x). The exponent must exceed
    d + 1, the regime in which the scaled shift data collapses to zero.
    """

    base: PotentialSpec
    exponent: float
    box_side: float

    def __post_init__(self):
        d = self.base.dimension
        if not self.exponent > d + 1:
            raise ValueError(f"exponent must exceed d+1 = {d + 1}, got {self.exponent}")
        if not self.box_side > 0.0:
            raise ValueError("box_side must be positive")

    @property
    def dimension(self) -> int:
        return self.base.dimension


Potential = Union[PotentialSpec, ScaledPerturbation]


@dataclass(frozen=True)
class SupportBox:
    """Axis-aligned support bounding box, or the empty/unbounded markers."""

    lo: tuple = ()
    hi: tuple = ()
    is_empty: bool = False
    is_unbounded: bool = False

    def dilated(self, margin: float) -> "SupportBox":
        if self.is_empty or self.is_unbounded:
            return self
        return SupportBox(
            lo=tuple(a - margin for a in self.lo),
            hi=tuple(b + margin for b in self.hi),
        )

    def intersect(self, lo, hi) -> "SupportBox":
        if self.is_empty:
            return self
        if self.is_unbounded:
            return SupportBox(lo=tuple(lo), hi=tuple(hi))
        new_lo = tuple(max(a, l) for a, l in zip(self.lo, lo))
        new_hi = tuple(min(b, h) for b, h in zip(self.hi, hi))
        if any(a >= b for a, b in zip(new_lo, new_hi)):
            return SupportBox(is_empty=True)
        return SupportBox(lo=new_lo, hi=new_hi)

    @property
    def volume(self) -> float:
        if self.is_empty:
            return 0.0
        if self.is_unbounded:
            return float("inf")
        return float(np.prod([b - a for a, b in zip(self.lo, self.hi)]))


def _points(spec_dim: int, x) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if spec_dim == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
        pts = pts[..., None]
    if pts.shape[-1] != spec_dim:
        raise ValueError(f"points have last axis {pts.shape[-1]}, potential lives in d={spec_dim}")
    return pts


def _eval_zero(spec: PotentialSpec, pts: np.ndarray) -> np.ndarray:
    return np.zeros(pts.shape[:-1])


def _eval_square_bump(spec: PotentialSpec, pts: np.ndarray) -> np.ndarray:
    c = np.asarray(spec.center)
    inside = np.max(np.abs(pts - c), axis=-1) <= spec.support_radius
    return np.where(inside, spec.amplitude, 0.0)


def _eval_smooth_bump(spec: PotentialSpec, pts: np.ndarray) -> np.ndarray:
    c = np.asarray(spec.center)
    u = np.sum((pts - c) ** 2, axis=-1) / spec.support_radius**2
    out = np.zeros(pts.shape[:-1])
    inside = u < 1.0
    if np.any(inside):
        ui = u[inside]
        out[inside] = spec.amplitude * np.exp(1.0 - 1.0 / (1.0 - ui))
    return out


def _eval_cosine(spec: PotentialSpec, pts: np.ndarray) -> np.ndarray:
    c = np.asarray(spec.center)
    phases = 2.0 * np.pi * (pts - c) / spec.period
    return spec.amplitude * np.sum(np.cos(phases), axis=-1) / pts.shape[-1]


def _eval_well_lattice(spec: PotentialSpec, pts: np.ndarray) -> np.ndarray:
    c = np.asarray(spec.center)
    rel = pts - c
    wrapped = rel - spec.period * np.round(rel / spec.period)
    inside = np.max(np.abs(wrapped), axis=-1) <= spec.support_radius
    return np.where(inside, spec.amplitude, 0.0)


_EVALUATORS = {
    "zero": _eval_zero,
    "square_bump": _eval_square_bump,
    "smooth_bump": _eval_smooth_bump,
    "cosine": _eval_cosine,
    "well_lattice": _eval_well_lattice,
}


def evaluate(potential: Potential, x) -> np.ndarray:
    """Evaluate a potential at points of shape (..., d); returns shape (...)."""
    if isinstance(potential, ScaledPerturbation):
        scale = potential.box_side ** (-potential.exponent)
        return scale * evaluate(potential.base, x)
    pts = _points(potential.dimension, x)
    return _EVALUATORS[potential.kind](potential, pts)


def support_box(potential: Potential) -> SupportBox:
    if isinstance(potential, ScaledPerturbation):
        return support_box(potential.base)
    spec = potential
    if spec.kind == "zero":
        return SupportBox(is_empty=True)
    if spec.kind in ("square_bump", "smooth_bump"):
        if spec.amplitude == 0.0:
            return SupportBox(is_empty=True)
        r = spec.support_radius
        return SupportBox(
            lo=tuple(c - r for c in spec.center),
            hi=tuple(c + r for c in spec.center),
        )
    return SupportBox(is_unbounded=True)


def validate_perturbation(potential: Potential) -> None:
    """Perturbations must be compactly supported and nonnegative."""
    spec = potential.base if isinstance(potential, ScaledPerturbation) else potential
    if spec.kind not in _COMPACT_KINDS:
        raise ValueError(f"perturbation must be compactly supported, got kind {spec.kind!r}")
    if spec.amplitude < 0.0:
        raise ValueError("perturbation amplitude must be nonnegative")


def validate_background(potential: Potential) -> None:
    if isinstance(potential, ScaledPerturbation):
        raise ValueError("background potential cannot be a scaled perturbation")
