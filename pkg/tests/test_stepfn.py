import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from ssflab.stepfn import (
    ExpDecayWeight,
    IndicatorWeight,
    PiecewiseLinearWeight,
    StepFunction,
    hat_weight,
)


def chi_01():
    # indicator of [0, 1) as a step function on [-1, 2]
    return StepFunction.from_jumps(-1.0, 2.0, [0.0, 1.0], [1.0, -1.0])


def test_step_values_right_continuous():
    s = chi_01()
    np.testing.assert_allclose(s([-0.5, 0.0, 0.5, 1.0, 1.5]), [0, 1, 1, 0, 0])


def test_step_integrate_window():
    s = chi_01()
    assert s.integrate(0.2, 0.7) == pytest.approx(0.5, abs=1e-15)
    assert s.integrate(-1.0, 2.0) == pytest.approx(1.0, abs=1e-15)
    assert s.integrate(1.2, 1.8) == 0.0


def test_step_exp_product_closed_form():
    s = chi_01()
    got = s.integrate_product(ExpDecayWeight(rate=1.0))
    assert got == pytest.approx(1.0 - np.exp(-1.0), rel=1e-14)


def test_merge_of_coincident_jumps():
    s = StepFunction.from_jumps(0.0, 2.0, [1.0, 1.0], [2.0, -2.0])
    assert s.breaks.size == 0
    np.testing.assert_allclose(s.values, [0.0])


def test_indicator_weight_overlap():
    w = IndicatorWeight(0.5, 1.5)
    assert w.integral(0.0, 2.0) == pytest.approx(1.0)
    assert w.integral(1.0, 3.0) == pytest.approx(0.5)
    assert w.integral(1.6, 3.0) == 0.0


def test_hat_weight_matches_quadrature():
    w = hat_weight(0.0, 2.0)
    for lo, hi in ((0.0, 2.0), (0.3, 0.9), (0.5, 1.7), (-1.0, 5.0)):
        ref, _ = quad(w, max(lo, 0.0), min(hi, 2.0))
        assert w.integral(lo, hi) == pytest.approx(ref, abs=1e-12)


def test_hat_weight_shape():
    w = hat_weight(0.0, 2.0)
    np.testing.assert_allclose(w([0.0, 0.5, 1.0, 1.5, 2.0, 2.5]), [0, 0.5, 1, 0.5, 0, 0])


def test_piecewise_linear_validation():
    with pytest.raises(ValueError):
        PiecewiseLinearWeight(xs=(0.0, 1.0), ys=(0.5, 0.0))
    with pytest.raises(ValueError):
        PiecewiseLinearWeight(xs=(0.0, 0.0, 1.0), ys=(0.0, 1.0, 0.0))


@given(
    cuts=st.lists(st.floats(min_value=-4.0, max_value=4.0), min_size=2, max_size=6, unique=True),
    a=st.floats(min_value=-5.0, max_value=5.0),
    b=st.floats(min_value=-5.0, max_value=5.0),
    c=st.floats(min_value=-5.0, max_value=5.0),
)
def test_step_integral_additivity(cuts, a, b, c):
    pts = sorted(cuts)
    s = StepFunction.from_jumps(-6.0, 6.0, pts, [1.0] * len(pts))
    a, b, c = sorted((a, b, c))
    whole = s.integrate(a, c)
    split = s.integrate(a, b) + s.integrate(b, c)
    assert whole == pytest.approx(split, abs=1e-12)


def test_domain_violations_raise():
    s = chi_01()
    with pytest.raises(ValueError):
        s.integrate(-5.0, 0.5)
    with pytest.raises(ValueError):
        s.integrate_product(IndicatorWeight(1.0, 5.0))
