"""Killing-rate families: evaluation, admissibility, kernel encoding,
and dict round-trips.
"""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kol import ratefn
from kol.errors import InvalidSpecError

HALF_PI = math.pi / 2.0


class TestPiecewiseConstant:
    def test_half_space_values(self):
        r = ratefn.PiecewiseConstant(c_plus=0.8)
        assert ratefn.eval_rate(r, -1.0) == 0.0
        assert ratefn.eval_rate(r, -1e-300) == 0.0
        assert ratefn.eval_rate(r, 0.0) == 0.8  # boundary belongs to the jump
        assert ratefn.eval_rate(r, 2.5) == 0.8
        assert r.bound == 0.8

    def test_rejects_negative(self):
        with pytest.raises(InvalidSpecError):
            ratefn.PiecewiseConstant(c_plus=-0.1)
        with pytest.raises(InvalidSpecError):
            ratefn.PiecewiseConstant(c_plus=float("nan"))


class TestArctan:
    def test_values_and_limits(self):
        r = ratefn.Arctan(stiffness=2.0)
        assert ratefn.eval_rate(r, 0.0) == pytest.approx(HALF_PI)
        assert ratefn.eval_rate(r, 1.0) == pytest.approx(
            math.atan(2.0) + HALF_PI)
        # saturates to 0 from above on the far left, to pi on the far right
        assert ratefn.eval_rate(r, -1e12) == pytest.approx(0.0, abs=1e-11)
        assert ratefn.eval_rate(r, 1e12) == pytest.approx(math.pi, rel=1e-11)
        assert r.bound == pytest.approx(math.pi)

    def test_zero_stiffness_is_constant(self):
        r = ratefn.Arctan(stiffness=0.0, offset=2.0)
        for x in (-5.0, 0.0, 7.0):
            assert ratefn.eval_rate(r, x) == 2.0

    def test_offset_floor(self):
        # anything below pi/2 would let the rate go negative on the left
        with pytest.raises(InvalidSpecError):
            ratefn.Arctan(stiffness=1.0, offset=1.5)
        with pytest.raises(InvalidSpecError):
            ratefn.Arctan(stiffness=-1.0)


class TestExponential:
    def test_formula_and_cap(self):
        r = ratefn.Exponential(prefactor=2.0, alpha0=3.0, y0=1.0,
                               max_rate=50.0)
        x = 0.4
        expect = 2.0 * math.exp(-3.0 * (x - 1.0) / 1.0)
        assert ratefn.eval_rate(r, x) == pytest.approx(expect, rel=1e-15)
        # grows toward the left, so far-left values hit the cap
        assert ratefn.eval_rate(r, -10.0) == 50.0
        assert ratefn.eval_rate(r, -1e6) == 50.0  # huge exponent short-circuit
        assert r.bound == 50.0

    def test_validation(self):
        with pytest.raises(InvalidSpecError):
            ratefn.Exponential(prefactor=1.0, alpha0=1.0, y0=0.0)
        with pytest.raises(InvalidSpecError):
            ratefn.Exponential(prefactor=1.0, alpha0=1.0, y0=1.0,
                               max_rate=0.0)
        with pytest.raises(InvalidSpecError):
            ratefn.Exponential(prefactor=-1.0, alpha0=1.0, y0=1.0)


class TestTabulated:
    KNOTS = ((-1.0, 0.0), (0.0, 2.0), (2.0, 3.0))

    def test_interpolation_and_clamping(self):
        r = ratefn.Tabulated(knots=self.KNOTS)
        assert ratefn.eval_rate(r, -5.0) == 0.0  # clamp left
        assert ratefn.eval_rate(r, 5.0) == 3.0  # clamp right
        assert ratefn.eval_rate(r, -0.5) == pytest.approx(1.0)
        assert ratefn.eval_rate(r, 0.0) == 2.0  # knot hit exactly
        assert ratefn.eval_rate(r, 1.0) == pytest.approx(2.5)
        assert r.bound == 3.0

    def test_validation(self):
        with pytest.raises(InvalidSpecError):
            ratefn.Tabulated(knots=())
        with pytest.raises(InvalidSpecError):
            ratefn.Tabulated(knots=((0.0, 1.0), (0.0, 2.0)))  # not increasing
        with pytest.raises(InvalidSpecError):
            ratefn.Tabulated(knots=((0.0, 1.0), (1.0, -2.0)))  # negative rate


ALL_SPECS = [
    ratefn.PiecewiseConstant(c_plus=1.3),
    ratefn.Arctan(stiffness=0.7, offset=2.0),
    ratefn.Exponential(prefactor=0.5, alpha0=2.0, y0=1.5, max_rate=20.0),
    ratefn.Tabulated(knots=((-2.0, 0.1), (0.0, 1.0), (3.0, 0.5))),
]


class TestCommonContract:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_admissible(self, spec):
        report = ratefn.validate_rate(spec)
        assert report.nonnegative
        assert report.bounded
        assert report.bound == spec.bound

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_array_matches_scalar(self, spec):
        # np.exp/np.interp may differ from math.exp/manual lerp in the last
        # ulp, so this is agreement, not bit-identity (the compiled kernel's
        # bit-identity with the scalar path is pinned end-to-end elsewhere)
        xs = np.linspace(-6.0, 6.0, 73)
        arr = ratefn.eval_rate_array(spec, xs)
        scal = np.array([ratefn.eval_rate(spec, float(x)) for x in xs])
        assert np.allclose(arr, scal, rtol=5e-16, atol=0.0)

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_rate_within_bound(self, spec):
        xs = np.linspace(-50.0, 50.0, 401)
        arr = ratefn.eval_rate_array(spec, xs)
        assert np.all(arr >= 0.0)
        assert np.all(arr <= spec.bound * (1 + 1e-12))

    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: type(s).__name__)
    def test_dict_round_trip(self, spec):
        d = ratefn.rate_to_dict(spec)
        back = ratefn.rate_from_dict(d)
        assert back == spec
        xs = np.linspace(-4.0, 4.0, 33)
        assert np.array_equal(ratefn.eval_rate_array(back, xs),
                              ratefn.eval_rate_array(spec, xs))

    def test_unknown_kind_rejected(self):
        with pytest.raises(InvalidSpecError):
            ratefn.rate_from_dict({"kind": "sigmoid", "scale": 1.0})

    def test_kernel_args_kinds(self):
        kinds = [ratefn.kernel_args(s)[0] for s in ALL_SPECS]
        assert kinds == [0, 1, 2, 3]

    def test_kernel_args_tabulated_arrays(self):
        spec = ALL_SPECS[3]
        _, _, _, _, _, xs, rs = ratefn.kernel_args(spec)
        assert xs.dtype == np.float64 and rs.dtype == np.float64
        assert list(xs) == [k[0] for k in spec.knots]
        assert list(rs) == [k[1] for k in spec.knots]


@given(
    c=st.floats(min_value=0.0, max_value=1e6, allow_nan=False),
    x=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
)
def test_piecewise_indicator_property(c, x):
    r = ratefn.PiecewiseConstant(c_plus=c)
    v = ratefn.eval_rate(r, x)
    assert v == (c if x >= 0.0 else 0.0)


@given(
    knot_xs=st.lists(
        st.floats(min_value=-100.0, max_value=100.0,
                  allow_nan=False, allow_infinity=False),
        min_size=2, max_size=8, unique=True,
    ),
    rate_seed=st.integers(min_value=0, max_value=2**31),
    x=st.floats(min_value=-200.0, max_value=200.0, allow_nan=False),
)
def test_tabulated_stays_inside_knot_range(knot_xs, rate_seed, x):
    rng = np.random.default_rng(rate_seed)
    xs = sorted(knot_xs)
    rates = rng.uniform(0.0, 10.0, len(xs))
    spec = ratefn.Tabulated(knots=tuple(zip(xs, rates)))
    v = ratefn.eval_rate(spec, x)
    assert rates.min() - 1e-12 <= v <= rates.max() + 1e-12
