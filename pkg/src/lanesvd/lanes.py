"""Branch-free lane arithmetic underneath the two-by-two SVD kernels.

Every function here operates elementwise on float64 arrays ("lane
vectors"); one slot is one independent problem lane.  Any width is
accepted: the batched kernels pass eight-lane chunks or longer slabs,
the pointwise path passes width one.  Each primitive is either
correctly rounded per lane or an exact bit manipulation, so a lane's
result never depends on the width of the vector it rides in, and the
two paths agree bit for bit.

There are no data-dependent branches.  Invalid intermediate values are
absorbed by the relaxed min/max pair, which mirrors vector-unit
semantics: when the comparison is false or unordered (NaN) the second
operand is returned.  Comparing a possibly-NaN value against a
well-defined fallback therefore replaces it without a branch.

The caller is expected to run under a nonstop floating-point policy
(``np.errstate(all="ignore")``); the kernels in this package do so.
"""

from __future__ import annotations

import functools

import numpy as np
from llvmlite import ir as _ir
from numba import types as _nb_types
from numba import vectorize as _nb_vectorize
from numba.extending import intrinsic as _nb_intrinsic

__all__ = [
    "LANE_WIDTH", "DBL_MAX", "DBL_MIN_NORMAL", "DBL_TRUE_MIN", "EPS",
    "fma", "fnma", "relaxed_min", "relaxed_max", "select",
    "getexp", "scalef", "hypot_lane", "invsqrt_lane",
    "bit_and", "bit_or", "bit_xor", "bit_andnot",
    "fabs", "negate", "sign_mask",
    "complex_mul", "phase_from_parts", "polar",
    "assert_fp_env",
]

# Lanes per SIMD word: a 512-bit register holds eight binary64 values.
LANE_WIDTH = 8

DBL_MAX = 1.7976931348623157e+308
DBL_MIN_NORMAL = 2.2250738585072014e-308
DBL_TRUE_MIN = 5e-324
EPS = 2.0 ** -53  # unit roundoff

_SIGN_BIT = np.uint64(0x8000000000000000)


def _nonstop(fn):
    """Run ``fn`` with floating-point traps and warnings silenced."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with np.errstate(all="ignore"):
            return fn(*args, **kwargs)
    return wrapper


# ----------------------------------------------------------------------
# fused multiply-add
#
# numpy has no fma ufunc, so one is built here: a numba ufunc whose body
# is the llvm.fma.f64 intrinsic, which lowers to the hardware fused
# instruction.  A startup canary (assert_fp_env) proves the fusion.
# ----------------------------------------------------------------------

@_nb_intrinsic
def _llvm_fma(typingctx, a, b, c):
    sig = _nb_types.float64(_nb_types.float64, _nb_types.float64,
                            _nb_types.float64)

    def codegen(context, builder, signature, args):
        f64 = _ir.DoubleType()
        fnty = _ir.FunctionType(f64, [f64, f64, f64])
        mod = builder.module
        fn = mod.globals.get("llvm.fma.f64")
        if fn is None:
            fn = _ir.Function(mod, fnty, name="llvm.fma.f64")
        return builder.call(fn, args)

    return sig, codegen


@_nb_vectorize(["float64(float64, float64, float64)"], nopython=True)
def fma(a, b, c):
    """``a*b + c`` with a single rounding."""
    return _llvm_fma(a, b, c)


@_nb_vectorize(["float64(float64, float64, float64)"], nopython=True)
def fnma(a, b, c):
    """``c - a*b`` with a single rounding."""
    return _llvm_fma(-a, b, c)


# ----------------------------------------------------------------------
# relaxed comparisons and blends
# ----------------------------------------------------------------------

def relaxed_min(a, b):
    """Lane minimum with vector-unit NaN semantics.

    Returns ``a`` where ``a < b`` and ``b`` everywhere else, so a NaN
    first operand yields the second and equal magnitudes (including
    signed zeros) yield the second.
    """
    return np.where(a < b, a, b)


def relaxed_max(a, b):
    """Lane maximum; second operand wins on ties and NaN (see relaxed_min)."""
    return np.where(a > b, a, b)


def select(mask, a, b):
    """Per-lane blend: ``b`` where ``mask`` is set, ``a`` elsewhere."""
    return np.where(mask, b, a)


# ----------------------------------------------------------------------
# exponent extraction and exact power-of-two scaling
# ----------------------------------------------------------------------

def getexp(a):
    """Unbiased binary exponent of each lane as a float64.

    ``2**getexp(a) <= |a| < 2**(getexp(a)+1)`` for finite nonzero
    ``a``, exact down to the last subnormal (``getexp(2**-1074) ==
    -1074``).  Zero maps to ``-inf``; infinities map to ``+inf`` and
    NaN propagates, mirroring the hardware exponent-extraction
    instruction.
    """
    a = np.asarray(a, dtype=np.float64)
    _, e = np.frexp(a)
    r = e.astype(np.float64) - 1.0
    r = np.where(a == 0.0, -np.inf, r)
    r = np.where(np.isinf(a), np.inf, r)
    return np.where(np.isnan(a), a, r)


@_nonstop
def scalef(a, e):
    """``a * 2**floor(e)`` with a single rounding.

    Exact whenever the result stays normal (or ``a`` is zero); rounds
    once when the scaled value falls into the subnormal range and
    overflows to infinity past ``DBL_MAX``.  Non-finite ``e`` follows
    ordinary arithmetic: ``scalef(x, -inf)`` gives ``x * 0``.
    """
    a = np.asarray(a, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    ef = np.floor(e)
    # Shifts beyond +-4500 saturate to zero/inf anyway; the clip keeps
    # the int cast defined.  Non-finite exponents take the second path.
    shift = np.clip(np.where(np.isfinite(ef), ef, 0.0), -4500, 4500)
    r = np.ldexp(a, shift.astype(np.int64))
    return np.where(np.isfinite(ef), r, a * np.exp2(ef))


# ----------------------------------------------------------------------
# sign-bit manipulation
#
# Unit factors of real matrices are carried as bare sign bits (+-0.0
# patterns) and applied with xor, which is exact.
# ----------------------------------------------------------------------

def _u64(x):
    x = np.ascontiguousarray(x, dtype=np.float64)
    return x.view(np.uint64)


def bit_and(a, b):
    """Bitwise AND of the raw lane patterns."""
    return (_u64(a) & _u64(b)).view(np.float64)


def bit_or(a, b):
    """Bitwise OR of the raw lane patterns."""
    return (_u64(a) | _u64(b)).view(np.float64)


def bit_xor(a, b):
    """Bitwise XOR of the raw lane patterns."""
    return (_u64(a) ^ _u64(b)).view(np.float64)


def bit_andnot(a, b):
    """``~a & b`` on the raw lane patterns."""
    return (~_u64(a) & _u64(b)).view(np.float64)


def fabs(x):
    """Clear the sign bit of each lane (works for NaN payloads too)."""
    return (_u64(x) & ~_SIGN_BIT).view(np.float64)


def negate(x):
    """Flip the sign bit of each lane (exact, no arithmetic)."""
    return (_u64(x) ^ _SIGN_BIT).view(np.float64)


def sign_mask(x):
    """The sign bit of each lane as a +-0.0 pattern."""
    return (_u64(x) & _SIGN_BIT).view(np.float64)


# ----------------------------------------------------------------------
# compound lane functions
# ----------------------------------------------------------------------

@_nonstop
def hypot_lane(a, b):
    """``sqrt(a*a + b*b)`` without undue overflow or underflow.

    The smaller magnitude is divided by the larger (clamped up to the
    smallest subnormal so 0/0 cannot arise), squared into an fma and
    rooted, keeping the error within two ulps.  Never overflows when
    both magnitudes are at most ``2**1022``.
    """
    aa = fabs(np.asarray(a, dtype=np.float64))
    ab = fabs(np.asarray(b, dtype=np.float64))
    big = relaxed_max(aa, ab)
    small = relaxed_min(aa, ab)
    q = small / relaxed_max(big, DBL_TRUE_MIN)
    return big * np.sqrt(fma(q, q, 1.0))


def invsqrt_lane(a):
    """``1 / sqrt(a)``, two correctly rounded operations."""
    return 1.0 / np.sqrt(a)


@_nonstop
def complex_mul(ar, ai, br, bi):
    """Componentwise complex product with one fma per component.

    ``re = fma(ar, br, -(ai*bi))`` and ``im = fma(ar, bi, ai*br)``:
    two roundings per component.  To reproduce the kernels bit for
    bit, pass the unit phase factor as the first operand.
    """
    re = fma(ar, br, negate(ai * bi))
    im = fma(ar, bi, ai * br)
    return re, im


@_nonstop
def phase_from_parts(re, im, mag):
    """Unit phase (cos, sin) of ``re + i*im`` given its magnitude.

    For a zero value the cosine is +-1 carrying the sign of ``re`` and
    the sine is +-0 carrying the sign of ``im``: the 0/0 quotient in
    the cosine is absorbed by the relaxed min against 1, and the sine
    divides by the magnitude clamped up to the smallest subnormal.
    """
    cos = bit_or(relaxed_min(fabs(re) / mag, 1.0), sign_mask(re))
    sin = im / relaxed_max(mag, DBL_TRUE_MIN)
    return cos, sin


def polar(zr, zi):
    """Magnitude and unit phase (cos, sin) of ``zr + i*zi``."""
    mag = hypot_lane(zr, zi)
    cos, sin = phase_from_parts(np.asarray(zr, dtype=np.float64),
                                np.asarray(zi, dtype=np.float64), mag)
    return mag, cos, sin


# ----------------------------------------------------------------------
# floating-point environment checks
# ----------------------------------------------------------------------

def assert_fp_env():
    """Verify the floating-point environment the kernels require.

    Checks round-to-nearest-even, live gradual underflow (no
    flush-to-zero), and that :func:`fma` is truly fused.  Raises
    ``RuntimeError`` on the first violation.  Runs once at package
    import.
    """
    one = np.float64(1.0)
    eps = np.float64(EPS)
    with np.errstate(all="ignore"):
        # round to nearest, ties to even: 1 + 2^-53 ties down to 1,
        # 1 + 3*2^-54 rounds up to 1 + 2^-52
        if not (one + eps == one and one + 2 * eps > one):
            raise RuntimeError("rounding mode is not round-to-nearest-even")
        if one + np.float64(3 * 2.0 ** -54) != one + 2 * eps:
            raise RuntimeError("rounding mode is not round-to-nearest-even")
        # gradual underflow: subnormals must be produced, not flushed
        tiny = np.float64(DBL_TRUE_MIN)
        if not (tiny > 0.0 and tiny * 0.5 == 0.0
                and np.float64(2.0 ** -1073) * 0.5 == tiny):
            raise RuntimeError("gradual underflow is not available")
        # fused multiply-add canary: (1+2^-52)^2 - (1+2^-51) = 2^-104
        # survives only if the product is not rounded before the add
        x = one + np.float64(2.0 ** -52)
        y = one + np.float64(2.0 ** -51)
        canary = fma(np.array([x]), np.array([x]), np.array([-y]))[0]
        if canary != 2.0 ** -104:
            raise RuntimeError("fma is not fused (canary %r)" % canary)
