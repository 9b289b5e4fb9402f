import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssflab.potentials import (
    PotentialSpec,
    ScaledPerturbation,
    evaluate,
    support_box,
    validate_background,
    validate_perturbation,
)


def test_zero_vanishes_everywhere():
    v = PotentialSpec(kind="zero", center=(0.0,))
    xs = np.linspace(-7.0, 7.0, 41)
    assert np.all(evaluate(v, xs) == 0.0)


def test_square_bump_values_inside_and_outside():
    v = PotentialSpec(kind="square_bump", amplitude=3.0, support_radius=0.5, center=(0.0,))
    assert evaluate(v, np.array([0.2])) == pytest.approx(3.0)
    assert evaluate(v, np.array([0.6])) == 0.0


def test_smooth_bump_peak_value():
    v = PotentialSpec(kind="smooth_bump", amplitude=1.0, support_radius=1.0, center=(0.0,))
    assert evaluate(v, np.array([0.0])) == pytest.approx(1.0)


def test_smooth_bump_vanishes_at_radius():
    v = PotentialSpec(kind="smooth_bump", amplitude=2.0, support_radius=1.0, center=(0.0,))
    assert evaluate(v, np.array([1.0])) == 0.0
    assert evaluate(v, np.array([-1.0])) == 0.0


def test_support_boxes():
    zero = PotentialSpec(kind="zero", center=(0.0,))
    assert support_box(zero).is_empty

    bump = PotentialSpec(kind="square_bump", amplitude=1.0, support_radius=0.5, center=(0.0,))
    box = support_box(bump)
    assert not box.is_empty and not box.is_unbounded
    np.testing.assert_allclose(box.lo, [-0.5])
    np.testing.assert_allclose(box.hi, [0.5])

    cos = PotentialSpec(kind="cosine", amplitude=1.0, center=(0.0,), period=2.0)
    assert support_box(cos).is_unbounded


def test_support_box_2d():
    v = PotentialSpec(kind="smooth_bump", amplitude=1.0, support_radius=0.3, center=(0.5, -1.0))
    box = support_box(v)
    np.testing.assert_allclose(box.lo, [0.2, -1.3])
    np.testing.assert_allclose(box.hi, [0.8, -0.7])


@given(
    x=st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
    r=st.floats(min_value=0.01, max_value=2.0),
    c=st.floats(min_value=-3.0, max_value=3.0),
)
def test_compact_support_is_exact(x, r, c):
    # evaluation must return exactly 0.0 outside the closed support, not merely small
    for kind in ("square_bump", "smooth_bump"):
        v = PotentialSpec(kind=kind, amplitude=5.0, support_radius=r, center=(c,))
        if abs(x - c) > r:
            assert evaluate(v, np.array([x])) == 0.0


@given(
    x=st.floats(min_value=-10.0, max_value=10.0, allow_nan=False),
    amp=st.floats(min_value=0.0, max_value=100.0),
)
def test_perturbation_kinds_nonnegative(x, amp):
    for kind in ("square_bump", "smooth_bump"):
        v = PotentialSpec(kind=kind, amplitude=amp, support_radius=1.0, center=(0.0,))
        assert evaluate(v, np.array([x])) >= 0.0


@settings(max_examples=50)
@given(
    x=st.floats(min_value=-2.0, max_value=2.0, allow_nan=False),
    big_l=st.floats(min_value=1.0, max_value=64.0),
    k=st.floats(min_value=2.5, max_value=8.0),
)
def test_scaled_perturbation_matches_manual_scaling(x, big_l, k):
    base = PotentialSpec(kind="square_bump", amplitude=10.0, support_radius=0.5, center=(0.0,))
    scaled = ScaledPerturbation(base=base, exponent=k, box_side=big_l)
    pt = np.array([x])
    assert evaluate(scaled, pt) == evaluate(base, pt) * big_l ** (-k)


def test_scaled_perturbation_rejects_small_exponent():
    base = PotentialSpec(kind="square_bump", amplitude=1.0, support_radius=0.5, center=(0.0,))
    with pytest.raises(ValueError):
        ScaledPerturbation(base=base, exponent=2.0, box_side=4.0)  # d=1 requires k > 2
    with pytest.raises(ValueError):
        ScaledPerturbation(base=base, exponent=3.0, box_side=0.0)


def test_well_lattice_is_periodic():
    v = PotentialSpec(
        kind="well_lattice", amplitude=-2.0, support_radius=0.25, center=(0.0,), period=3.0
    )
    xs = np.array([0.1, 3.1, -2.9, 0.3])
    vals = evaluate(v, xs)
    assert vals[0] == vals[1] == vals[2] == -2.0
    assert vals[3] == 0.0


def test_cosine_values():
    v = PotentialSpec(kind="cosine", amplitude=1.5, center=(0.0,), period=2.0)
    np.testing.assert_allclose(evaluate(v, np.array([0.0])), 1.5)
    np.testing.assert_allclose(evaluate(v, np.array([1.0])), -1.5)
    np.testing.assert_allclose(evaluate(v, np.array([0.5])), 0.0, atol=1e-15)


def test_evaluate_2d_batch_shapes():
    v = PotentialSpec(kind="square_bump", amplitude=2.0, support_radius=0.5, center=(0.0, 0.0))
    pts = np.array([[0.1, 0.2], [0.6, 0.0], [0.4, -0.4]])
    vals = evaluate(v, pts)
    assert vals.shape == (3,)
    np.testing.assert_allclose(vals, [2.0, 0.0, 2.0])


def test_perturbation_validation():
    ok = PotentialSpec(kind="square_bump", amplitude=1.0, support_radius=0.5, center=(0.0,))
    validate_perturbation(ok)
    with pytest.raises(ValueError):
        validate_perturbation(
            PotentialSpec(kind="cosine", amplitude=1.0, center=(0.0,), period=1.0)
        )
    with pytest.raises(ValueError):
        validate_perturbation(
            PotentialSpec(kind="square_bump", amplitude=-1.0, support_radius=0.5, center=(0.0,))
        )
    # backgrounds may be signed and periodic
    validate_background(PotentialSpec(kind="cosine", amplitude=-3.0, center=(0.0,), period=1.0))


def test_invalid_specs_rejected():
    with pytest.raises(ValueError):
        PotentialSpec(kind="square_bump", amplitude=1.0, support_radius=0.0, center=(0.0,))
    with pytest.raises(ValueError):
        PotentialSpec(kind="cosine", amplitude=1.0, center=(0.0,), period=0.0)
    with pytest.raises(ValueError):
        PotentialSpec(kind="no_such_kind", center=(0.0,))
    with pytest.raises(ValueError):
        PotentialSpec(kind="zero", center=())
