"""Lane primitives: correct rounding, exactness, NaN absorption,
width independence."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanesvd import lanes

F = np.float64
INF = np.inf
NAN = np.nan
TRUE_MIN = 5e-324
DBL_MAX = 1.7976931348623157e308


def arr(*vals):
    return np.array(vals, dtype=np.float64)


def bits(x):
    return np.asarray(x, dtype=np.float64).view(np.uint64)


finite_doubles = st.floats(allow_nan=False, allow_infinity=False,
                           width=64, allow_subnormal=True)
any_doubles = st.floats(allow_nan=True, allow_infinity=True, width=64,
                        allow_subnormal=True)


# ----------------------------------------------------------------------
# environment
# ----------------------------------------------------------------------

def test_fp_env_holds():
    lanes.assert_fp_env()  # raises on violation


def test_fma_is_fused():
    x = 1.0 + 2.0 ** -52
    y = 1.0 + 2.0 ** -51
    assert lanes.fma(arr(x), arr(x), arr(-y))[0] == 2.0 ** -104


def test_fma_matches_extended_precision_oracle():
    rng = np.random.default_rng(11)
    a = np.exp(rng.uniform(-300, 300, 400) * np.log(10) / 308) \
        * np.sign(rng.standard_normal(400))
    b = np.exp(rng.uniform(-300, 300, 400) * np.log(10) / 308) \
        * np.sign(rng.standard_normal(400))
    c = a * b * rng.uniform(-2, 2, 400)
    got = lanes.fma(a, b, c)
    with mpmath.workprec(200):
        for i in range(0, 400, 7):
            exact = mpmath.mpf(float(a[i])) * mpmath.mpf(float(b[i])) \
                + mpmath.mpf(float(c[i]))
            assert float(got[i]) == float(mpmath.mpf(exact)), i


def test_fnma_is_single_rounding():
    # c - a*b where a*b rounds but the fused result does not
    a = arr(1.0 + 2.0 ** -52)
    assert lanes.fnma(a, a, arr(1.0 + 2.0 ** -51))[0] == -(2.0 ** -104)


# ----------------------------------------------------------------------
# relaxed comparisons
# ----------------------------------------------------------------------

def test_relaxed_min_basic():
    got = lanes.relaxed_min(arr(1, 7, NAN, 3), arr(2, NAN, 7, 3))
    assert got[0] == 1
    assert np.isnan(got[1])         # second operand is the NaN
    assert got[2] == 7              # NaN first -> second returned
    assert got[3] == 3


def test_relaxed_max_absorbs_nan():
    got = lanes.relaxed_max(arr(NAN), arr(0.0))
    assert got[0] == 0.0 and not np.signbit(got[0])


def test_relaxed_ties_return_second():
    # equal magnitudes: second operand comes back, signed zeros included
    got = lanes.relaxed_min(arr(0.0), arr(-0.0))
    assert np.signbit(got[0])
    got = lanes.relaxed_max(arr(-0.0), arr(0.0))
    assert not np.signbit(got[0])


@given(finite_doubles, finite_doubles)
def test_relaxed_duality(a, b):
    lo = lanes.relaxed_min(arr(a), arr(b))[0]
    hi = lanes.relaxed_max(arr(a), arr(b))[0]
    assert sorted([lo, hi]) == sorted([a, b])
    assert lo <= hi


def test_select_blends_per_lane():
    mask = np.array([True, False, True])
    got = lanes.select(mask, arr(1, 2, 3), arr(9, 8, 7))
    assert got.tolist() == [9, 2, 7]


# ----------------------------------------------------------------------
# exponent extraction and scaling
# ----------------------------------------------------------------------

def test_getexp_examples():
    got = lanes.getexp(arr(1.0, 1.5, 2.0, 0.0, DBL_MAX, TRUE_MIN, 2.0 ** -1050))
    assert got.tolist() == [0.0, 0.0, 1.0, -INF, 1023.0, -1074.0, -1050.0]


def test_getexp_sign_independent():
    assert lanes.getexp(arr(-8.0))[0] == 3.0


def test_getexp_nonfinite():
    got = lanes.getexp(arr(INF, -INF, NAN))
    assert got[0] == INF and got[1] == INF and np.isnan(got[2])


@given(finite_doubles.filter(lambda x: x != 0.0))
def test_getexp_matches_exact_fraction_oracle(x):
    f = Fraction(abs(x))
    e = f.numerator.bit_length() - f.denominator.bit_length()
    if Fraction(2) ** e > f:
        e -= 1
    assert lanes.getexp(arr(x))[0] == e


def test_scalef_examples():
    assert lanes.scalef(arr(3.0), arr(2.0))[0] == 12.0
    assert lanes.scalef(arr(TRUE_MIN), arr(1.0))[0] == 2 * TRUE_MIN
    assert lanes.scalef(arr(0.0), arr(DBL_MAX))[0] == 0.0
    assert lanes.scalef(arr(1.0), arr(-INF))[0] == 0.0
    assert lanes.scalef(arr(1.0), arr(1024.0))[0] == INF


def test_scalef_floors_the_exponent():
    assert lanes.scalef(arr(1.0), arr(2.5))[0] == 4.0
    assert lanes.scalef(arr(1.0), arr(-0.5))[0] == 0.5


@given(finite_doubles.filter(lambda x: x != 0.0),
       st.integers(min_value=-600, max_value=600))
def test_scalef_roundtrip_exact_in_normal_range(x, e):
    # staying inside the normal range, scaling is an exact bijection
    ex = lanes.getexp(arr(x))[0]
    res = ex + e
    if not (-1022 <= res <= 1023) or ex == -INF or ex < -1022:
        return
    y = lanes.scalef(arr(x), arr(float(e)))[0]
    back = lanes.scalef(arr(y), arr(float(-e)))[0]
    assert bits(arr(back))[0] == bits(arr(x))[0]


# ----------------------------------------------------------------------
# sign-bit manipulation
# ----------------------------------------------------------------------

def test_sign_helpers():
    assert bits(lanes.fabs(arr(-3.5)))[0] == bits(arr(3.5))[0]
    assert bits(lanes.negate(arr(2.0)))[0] == bits(arr(-2.0))[0]
    assert bits(lanes.negate(arr(0.0)))[0] == bits(arr(-0.0))[0]
    assert bits(lanes.sign_mask(arr(-7.0)))[0] == bits(arr(-0.0))[0]
    assert bits(lanes.sign_mask(arr(7.0)))[0] == bits(arr(0.0))[0]


def test_bit_ops_compose_signs():
    # applying a stored sign with xor, clearing with andnot
    s = lanes.sign_mask(arr(-1.0))
    assert lanes.bit_xor(arr(5.0), s)[0] == -5.0
    assert lanes.bit_andnot(arr(-0.0), arr(-5.0))[0] == 5.0
    assert lanes.bit_or(arr(0.5), arr(-0.0))[0] == -0.5
    assert lanes.bit_and(arr(-3.0), arr(-0.0))[0] == -0.0
    assert np.signbit(lanes.bit_and(arr(-3.0), arr(-0.0)))[0]


@given(finite_doubles)
def test_negate_is_involution(x):
    assert bits(lanes.negate(lanes.negate(arr(x))))[0] == bits(arr(x))[0]


# ----------------------------------------------------------------------
# hypot / invsqrt
# ----------------------------------------------------------------------

def test_hypot_pythagorean():
    assert lanes.hypot_lane(arr(3.0), arr(4.0))[0] == 5.0
    assert lanes.hypot_lane(arr(-3.0), arr(4.0))[0] == 5.0


def test_hypot_zero_and_huge():
    assert lanes.hypot_lane(arr(0.0), arr(0.0))[0] == 0.0
    got = lanes.hypot_lane(arr(3e300), arr(4e300))[0]
    assert abs(got - 5e300) <= 4 * np.spacing(5e300)
    big = lanes.hypot_lane(arr(2.0 ** 1022), arr(2.0 ** 1022))[0]
    assert np.isfinite(big)


def test_hypot_subnormal_inputs():
    assert lanes.hypot_lane(arr(TRUE_MIN), arr(0.0))[0] == TRUE_MIN


@given(finite_doubles, finite_doubles)
def test_hypot_symmetric_in_magnitude(a, b):
    x = lanes.hypot_lane(arr(a), arr(b))[0]
    y = lanes.hypot_lane(arr(b), arr(a))[0]
    z = lanes.hypot_lane(arr(-a), arr(b))[0]
    assert bits(arr(x))[0] == bits(arr(y))[0] == bits(arr(z))[0]


def test_hypot_within_two_ulps_of_reference():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(20000) * np.exp2(rng.integers(-540, 540, 20000))
    b = rng.standard_normal(20000) * np.exp2(rng.integers(-540, 540, 20000))
    got = lanes.hypot_lane(a, b)
    worst = 0.0
    with mpmath.workprec(160):
        for i in range(0, 20000, 97):
            exact = mpmath.sqrt(mpmath.mpf(float(a[i])) ** 2
                                + mpmath.mpf(float(b[i])) ** 2)
            err = abs(mpmath.mpf(float(got[i])) - exact) / exact
            worst = max(worst, float(err / (2.0 ** -52)))
    assert worst <= 2.0, worst  # measured: ~1.2 ulp


def test_invsqrt_exact_cases():
    assert lanes.invsqrt_lane(arr(1.0))[0] == 1.0
    assert lanes.invsqrt_lane(arr(4.0))[0] == 0.5
    assert lanes.invsqrt_lane(arr(0.25))[0] == 2.0


def test_invsqrt_derived_value():
    # 1/sqrt(1.0557280900008412) computed to 50 digits: 0.97324898946773021...
    got = lanes.invsqrt_lane(arr(1.0557280900008412))[0]
    assert abs(got - 0.9732489894677302) <= np.spacing(1.0)


def test_invsqrt_within_two_ulps_of_reference():
    rng = np.random.default_rng(5)
    a = np.exp2(rng.uniform(-2, 2, 5000))
    got = lanes.invsqrt_lane(a)
    worst = 0.0
    with mpmath.workprec(160):
        for i in range(0, 5000, 41):
            exact = 1 / mpmath.sqrt(mpmath.mpf(float(a[i])))
            err = abs(mpmath.mpf(float(got[i])) - exact) / exact
            worst = max(worst, float(err / (2.0 ** -52)))
    assert worst <= 2.0, worst  # measured: ~1.0 ulp


def test_invsqrt_result_at_most_one_for_args_at_least_one():
    # two correctly rounded steps cannot push 1/sqrt(a>=1) above 1
    rng = np.random.default_rng(6)
    a = 1.0 + np.abs(rng.standard_normal(4096))
    assert (lanes.invsqrt_lane(a) <= 1.0).all()


# ----------------------------------------------------------------------
# complex helpers
# ----------------------------------------------------------------------

def test_complex_mul_exact_cases():
    re, im = lanes.complex_mul(arr(0.0), arr(1.0), arr(0.0), arr(1.0))
    assert re[0] == -1.0 and im[0] == 0.0
    re, im = lanes.complex_mul(arr(3.0), arr(4.0), arr(3.0), arr(-4.0))
    assert re[0] == 25.0 and im[0] == 0.0


def test_complex_mul_identity_is_exact():
    re, im = lanes.complex_mul(arr(1.0), arr(0.0), arr(0.3), arr(-0.7))
    assert re[0] == 0.3 and im[0] == -0.7


def test_complex_mul_against_reference():
    # each component errs by at most 2*eps*|a|*|b| (the fma grouping's
    # provable bound); that is 2 eps relative except under cancellation
    rng = np.random.default_rng(8)
    ar, ai, br, bi = rng.uniform(-2, 2, (4, 4000))
    re, im = lanes.complex_mul(ar, ai, br, bi)
    eps = 2.0 ** -53
    with mpmath.workprec(160):
        for i in range(0, 4000, 53):
            bound = 2 * eps * math.hypot(ar[i], ai[i]) \
                * math.hypot(br[i], bi[i])
            er = mpmath.mpf(float(ar[i])) * float(br[i]) \
                - mpmath.mpf(float(ai[i])) * float(bi[i])
            ei = mpmath.mpf(float(ar[i])) * float(bi[i]) \
                + mpmath.mpf(float(ai[i])) * float(br[i])
            prod_re = abs(mpmath.mpf(float(ai[i])) * float(bi[i]))
            prod_im = abs(mpmath.mpf(float(ai[i])) * float(br[i]))
            for got, exact, prod in ((re[i], er, prod_re),
                                     (im[i], ei, prod_im)):
                err = abs(mpmath.mpf(float(got)) - exact)
                assert float(err) <= bound, i
                if abs(exact) >= prod:  # no cancellation in the fma
                    assert float(err / abs(exact)) <= 2 * eps, i


def test_polar_three_four_five():
    mag, cos, sin = lanes.polar(arr(-3.0), arr(4.0))
    assert mag[0] == 5.0 and cos[0] == -0.6 and sin[0] == 0.8


def test_polar_zero_keeps_signs():
    mag, cos, sin = lanes.polar(arr(-0.0), arr(-0.0))
    assert mag[0] == 0.0
    assert cos[0] == -1.0
    assert sin[0] == 0.0 and np.signbit(sin[0])
    mag, cos, sin = lanes.polar(arr(0.0), arr(0.0))
    assert cos[0] == 1.0 and not np.signbit(sin[0])


def test_polar_unit_norm_property():
    rng = np.random.default_rng(9)
    zr = rng.standard_normal(8192) * np.exp2(rng.integers(-500, 500, 8192))
    zi = rng.standard_normal(8192) * np.exp2(rng.integers(-500, 500, 8192))
    mag, cos, sin = lanes.polar(zr, zi)
    nrm = cos * cos + sin * sin
    assert (np.abs(nrm - 1.0) <= 4 * 2.0 ** -53).all()
    assert (np.abs(cos) <= 1.0).all()


def test_phase_from_parts_matches_polar():
    zr, zi = arr(1.0, -2.0, 0.0), arr(2.0, 0.5, -1.0)
    mag, cos, sin = lanes.polar(zr, zi)
    c2, s2 = lanes.phase_from_parts(zr, zi, mag)
    assert np.array_equal(bits(cos), bits(c2))
    assert np.array_equal(bits(sin), bits(s2))


# ----------------------------------------------------------------------
# width independence: the defining lane invariant
# ----------------------------------------------------------------------

def _million_inputs():
    rng = np.random.default_rng(12)
    n = 1_000_000
    vals = rng.integers(0, 2 ** 64, size=(3, n), dtype=np.uint64) \
        .view(np.float64)
    vals[~np.isfinite(vals)] = 1.25  # keep kernels in their contract
    return vals


@pytest.mark.parametrize("op,arity", [
    ("fma", 3), ("fnma", 3), ("relaxed_min", 2), ("relaxed_max", 2),
    ("getexp", 1), ("hypot_lane", 2), ("invsqrt_lane", 1),
    ("bit_xor", 2), ("fabs", 1),
])
def test_chunked_equals_slab_on_a_million_lanes(op, arity):
    vals = _million_inputs()
    fn = getattr(lanes, op)
    args = [vals[i] for i in range(arity)]
    if op == "invsqrt_lane":
        args = [lanes.fabs(args[0])]
    with np.errstate(all="ignore"):
        slab = fn(*args)
        n = args[0].size
        chunked = np.empty_like(np.asarray(slab))
        for lo in range(0, n, 8):
            chunked[lo:lo + 8] = fn(*(a[lo:lo + 8] for a in args))
    assert np.array_equal(bits(slab), bits(chunked))


def test_scalef_chunked_equals_slab_on_a_million_lanes():
    vals = _million_inputs()
    a = vals[0]
    e = np.round(np.clip(vals[1], -3000, 3000))
    with np.errstate(all="ignore"):
        slab = lanes.scalef(a, e)
        chunked = np.empty_like(slab)
        for lo in range(0, a.size, 8):
            chunked[lo:lo + 8] = lanes.scalef(a[lo:lo + 8], e[lo:lo + 8])
    assert np.array_equal(bits(slab), bits(chunked))


def test_width_one_equals_slab_lanes():
    rng = np.random.default_rng(13)
    n = 1 << 14
    a = rng.integers(0, 2 ** 64, n, dtype=np.uint64).view(np.float64)
    b = rng.integers(0, 2 ** 64, n, dtype=np.uint64).view(np.float64)
    a[~np.isfinite(a)] = 0.5
    b[~np.isfinite(b)] = -0.5
    with np.errstate(all="ignore"):
        slab_h = lanes.hypot_lane(a, b)
        slab_f = lanes.fma(a, b, a)
        for k in range(0, n, 211):
            one_h = lanes.hypot_lane(a[k:k + 1], b[k:k + 1])[0]
            one_f = lanes.fma(a[k:k + 1], b[k:k + 1], a[k:k + 1])[0]
            assert bits(arr(one_h))[0] == bits(slab_h[k:k + 1])[0]
            assert bits(arr(one_f))[0] == bits(slab_f[k:k + 1])[0]
