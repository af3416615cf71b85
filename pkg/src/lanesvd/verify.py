"""Extended-precision verification: reference SVDs and batch metrics.

Quality statements about the pipeline are made against arithmetic
with at least 106 significand bits.  The workhorse is a vectorized
compensated double-double number (an unevaluated sum of two float64,
``|lo| <= ulp(hi)/2``), built from error-free transforms on top of the
package fma; each operation keeps relative error below ``2**-100``.
Complex values are pairs of double-doubles.

Double-double inherits float64's exponent range, so batch comparisons
first scale each lane by an exact power of two chosen from the stored
top singular value; the scaling cancels in every relative measure.
Condition numbers routinely exceed the float64 range and are kept as
an exact (106-bit mantissa, integer exponent) pair, reported through
mpmath.

:func:`oracle_svd2` is an independent closed-form 2x2 SVD (Gram
matrix eigensystem) used to derive expected values; it shares no code
with the pipeline phases.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import mpmath
import numpy as np

from . import lanes
from .lanes import fma, negate, relaxed_max

__all__ = [
    "DD", "dd_from", "dd_add", "dd_sub", "dd_mul", "dd_div", "dd_sqrt",
    "dd_fma", "dd_hypot", "dd_scalb", "dd_neg", "dd_abs", "dd_to_mpf",
    "OracleSvd", "oracle_svd2", "Metrics", "metrics",
]

_MP_PREC = 240  # working precision for exact double-double conversion


class DD(NamedTuple):
    """Unevaluated sum hi + lo of two float64 arrays, |lo| <= ulp(hi)/2."""
    hi: np.ndarray
    lo: np.ndarray


def dd_from(x):
    """Exact promotion of float64 values (scalar or array) to DD."""
    hi = np.asarray(x, dtype=np.float64)
    return DD(hi, np.zeros_like(hi))


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    # requires |a| >= |b| or a == 0
    s = a + b
    return s, b - (s - a)


def _two_prod(a, b):
    p = a * b
    return p, fma(a, b, negate(np.asarray(p)))


def dd_add(a, b):
    s1, s2 = _two_sum(a.hi, b.hi)
    t1, t2 = _two_sum(a.lo, b.lo)
    s2 = s2 + t1
    s1, s2 = _quick_two_sum(s1, s2)
    s2 = s2 + t2
    return DD(*_quick_two_sum(s1, s2))


def dd_neg(a):
    return DD(-a.hi, -a.lo)


def dd_abs(a):
    flip = a.hi < 0
    return DD(np.where(flip, -a.hi, a.hi), np.where(flip, -a.lo, a.lo))


def dd_sub(a, b):
    return dd_add(a, dd_neg(b))


def dd_mul(a, b):
    p1, p2 = _two_prod(a.hi, b.hi)
    p2 = p2 + (a.hi * b.lo + a.lo * b.hi)
    return DD(*_quick_two_sum(p1, p2))


def _dd_mul_f(a, b):
    # DD times plain float64
    p1, p2 = _two_prod(a.hi, b)
    p2 = p2 + a.lo * b
    return DD(*_quick_two_sum(p1, p2))


def _dd_add_f(a, b):
    s1, s2 = _two_sum(a.hi, b)
    s2 = s2 + a.lo
    return DD(*_quick_two_sum(s1, s2))


def dd_fma(a, b, c):
    """a*b + c in double-double (composite, not a single rounding)."""
    return dd_add(dd_mul(a, b), c)


def dd_div(a, b):
    with np.errstate(all="ignore"):
        q1 = a.hi / b.hi
        r = dd_sub(a, _dd_mul_f(b, q1))
        q2 = r.hi / b.hi
        r = dd_sub(r, _dd_mul_f(b, q2))
        q3 = r.hi / b.hi
        s1, s2 = _quick_two_sum(q1, q2)
        return _dd_add_f(DD(s1, s2), q3)


def dd_sqrt(a):
    """Square root by one Newton correction of the float64 root."""
    with np.errstate(all="ignore"):
        x = 1.0 / np.sqrt(a.hi)
        ax = a.hi * x
        axx = DD(*_two_prod(ax, ax))
        corr = dd_sub(a, axx).hi * (x * 0.5)
        s1, s2 = _quick_two_sum(ax, corr)
        zero = a.hi == 0.0
        return DD(np.where(zero, 0.0, s1), np.where(zero, 0.0, s2))


def dd_hypot(a, b):
    """sqrt(a*a + b*b) in double-double (no overflow guard; callers
    prescale)."""
    return dd_sqrt(dd_add(dd_mul(a, a), dd_mul(b, b)))


def dd_scalb(a, k):
    """a * 2**k, exact while both components stay normal."""
    return DD(lanes.scalef(a.hi, k), lanes.scalef(a.lo, k))


def _dd_where(mask, a, b):
    return DD(np.where(mask, a.hi, b.hi), np.where(mask, a.lo, b.lo))


def _dd_max(a):
    """Exact maximum of a DD array as a scalar DD."""
    mhi = np.max(a.hi)
    sel = a.hi == mhi
    return DD(np.float64(mhi), np.float64(np.max(a.lo[sel])))


def dd_to_mpf(a, lane=None):
    """Exact mpmath value of a scalar DD, or of one lane of a train."""
    hi, lo = a.hi, a.lo
    if lane is not None:
        hi, lo = np.asarray(hi)[lane], np.asarray(lo)[lane]
    with mpmath.workprec(_MP_PREC):
        return mpmath.mpf(float(np.asarray(hi).item())) \
            + mpmath.mpf(float(np.asarray(lo).item()))


# ----------------------------------------------------------------------
# complex double-double: (re DD, im DD) pairs
# ----------------------------------------------------------------------

def _cd(re, im):
    return (re, im)


def _cd_from(re, im=None):
    r = dd_from(re)
    i = dd_from(im) if im is not None else dd_from(np.zeros_like(r.hi))
    return (r, i)


def _cd_conj(a):
    return (a[0], dd_neg(a[1]))


def _cd_add(a, b):
    return (dd_add(a[0], b[0]), dd_add(a[1], b[1]))


def _cd_sub(a, b):
    return (dd_sub(a[0], b[0]), dd_sub(a[1], b[1]))


def _cd_mul(a, b):
    re = dd_sub(dd_mul(a[0], b[0]), dd_mul(a[1], b[1]))
    im = dd_add(dd_mul(a[0], b[1]), dd_mul(a[1], b[0]))
    return (re, im)


def _cd_mul_dd(a, s):
    return (dd_mul(a[0], s), dd_mul(a[1], s))


def _cd_div_dd(a, s):
    return (dd_div(a[0], s), dd_div(a[1], s))


def _cd_abs2(a):
    return dd_add(dd_mul(a[0], a[0]), dd_mul(a[1], a[1]))


def _cd_where(mask, a, b):
    return (_dd_where(mask, a[0], b[0]), _dd_where(mask, a[1], b[1]))


# ----------------------------------------------------------------------
# independent reference SVD
# ----------------------------------------------------------------------

@dataclass
class OracleSvd:
    """Reference factors in double-double, one lane per array slot.

    ``smax``/``smin`` are DD arrays; the factor entries are complex
    double-double pairs even for real input (imaginary parts exactly
    zero then).  Accuracy: singular values to ~2**-100 relative
    (smin relative to smax); U, V unitary to ~2**-100, with the
    second columns falling back to an exact unitary completion when
    smin/smax < 1e-25 so residual checks stay meaningful.
    """
    smax: DD
    smin: DD
    u11: tuple
    u21: tuple
    u12: tuple
    u22: tuple
    v11: tuple
    v21: tuple
    v12: tuple
    v22: tuple

    def u_array(self, k):
        return _factor_array((self.u11, self.u12, self.u21, self.u22), k)

    def v_array(self, k):
        return _factor_array((self.v11, self.v12, self.v21, self.v22), k)


def _factor_array(entries, k):
    vals = [complex(float(e[0].hi[k]) + float(e[0].lo[k]),
                    float(e[1].hi[k]) + float(e[1].lo[k])) for e in entries]
    return np.array([[vals[0], vals[1]], [vals[2], vals[3]]])


def oracle_svd2(matrices):
    """Closed-form reference SVD of 2x2 lanes in double-double.

    Accepts one (2, 2) matrix or an (n, 2, 2) stack, real or complex.
    Each lane is exactly prescaled by a power of two, the Gram matrix
    eigensystem is solved with the cancellation-free discriminant
    ``sqrt((m11-m22)^2 + 4|m12|^2)``, smin comes from the determinant
    (``|det| / smax``), and the left vectors are the images of the
    right ones.  Shares no code with the pipeline phases.
    """
    a = np.asarray(matrices)
    if a.shape == (2, 2):
        a = a.reshape(1, 2, 2)
    if a.ndim != 3 or a.shape[1:] != (2, 2):
        raise ValueError("expected (n, 2, 2) matrices, got %r" % (a.shape,))
    if np.iscomplexobj(a):
        a = a.astype(np.complex128, copy=False)
        as_re = a.real
        as_im = a.imag
    else:
        as_re = a.astype(np.float64, copy=False)
        as_im = np.zeros_like(as_re)
    with np.errstate(all="ignore"):
        mags = np.abs(as_re).max(axis=(1, 2))
        mags = np.maximum(mags, np.abs(as_im).max(axis=(1, 2)))
        g = np.where(mags > 0, lanes.getexp(mags), 0.0)
        sre = lanes.scalef(np.moveaxis(as_re, 0, -1), -g)
        sim = lanes.scalef(np.moveaxis(as_im, 0, -1), -g)
        e = {}
        for (i, j) in ((0, 0), (1, 0), (0, 1), (1, 1)):
            e[(i, j)] = _cd_from(sre[i, j], sim[i, j])
        m11 = dd_add(_cd_abs2(e[(0, 0)]), _cd_abs2(e[(1, 0)]))
        m22 = dd_add(_cd_abs2(e[(0, 1)]), _cd_abs2(e[(1, 1)]))
        m12 = _cd_add(_cd_mul(_cd_conj(e[(0, 0)]), e[(0, 1)]),
                      _cd_mul(_cd_conj(e[(1, 0)]), e[(1, 1)]))
        trace = dd_add(m11, m22)
        diff = dd_sub(m11, m22)
        disc = dd_sqrt(dd_add(dd_mul(diff, diff),
                              dd_scalb(_cd_abs2(m12), 2.0)))
        lam_max = dd_scalb(dd_add(trace, disc), -1.0)
        smax = dd_sqrt(lam_max)
        det = _cd_sub(_cd_mul(e[(0, 0)], e[(1, 1)]),
                      _cd_mul(e[(0, 1)], e[(1, 0)]))
        absdet = dd_sqrt(_cd_abs2(det))
        zero_s = smax.hi == 0.0
        smin = dd_div(absdet, smax)
        smin = _dd_where(zero_s, dd_from(np.zeros_like(smax.hi)), smin)
        # right vector for lam_max from the better-conditioned Gram row
        big1 = m11.hi >= m22.hi
        zero = dd_from(np.zeros_like(smax.hi))
        cand_a = (_cd(dd_sub(lam_max, m22), zero), _cd_conj(m12))
        cand_b = (m12, _cd(dd_sub(lam_max, m11), zero))
        v1_1 = _cd_where(big1, cand_a[0], cand_b[0])
        v1_2 = _cd_where(big1, cand_a[1], cand_b[1])
        nrm2 = dd_add(_cd_abs2(v1_1), _cd_abs2(v1_2))
        degen = nrm2.hi == 0.0
        one = dd_from(np.ones_like(smax.hi))
        v1_1 = _cd_where(degen, _cd(one, zero), v1_1)
        v1_2 = _cd_where(degen, _cd(zero, zero), v1_2)
        nrm = dd_sqrt(_dd_where(degen, one, nrm2))
        v1_1 = _cd_div_dd(v1_1, nrm)
        v1_2 = _cd_div_dd(v1_2, nrm)
        # orthogonal completion of (a, b) is (-conj(b), conj(a))
        v2_1 = (dd_neg(v1_2[0]), v1_2[1])
        v2_2 = _cd_conj(v1_1)
        # u1 = A v1 / smax
        av1_1 = _cd_add(_cd_mul(e[(0, 0)], v1_1), _cd_mul(e[(0, 1)], v1_2))
        av1_2 = _cd_add(_cd_mul(e[(1, 0)], v1_1), _cd_mul(e[(1, 1)], v1_2))
        safe_smax = _dd_where(zero_s, one, smax)
        u1_1 = _cd_div_dd(av1_1, safe_smax)
        u1_2 = _cd_div_dd(av1_2, safe_smax)
        u1_1 = _cd_where(zero_s, _cd(one, zero), u1_1)
        u1_2 = _cd_where(zero_s, _cd(zero, zero), u1_2)
        # u2 = A v2 / smin, or the unitary completion of u1 when smin
        # is too small for the image to determine a direction
        av2_1 = _cd_add(_cd_mul(e[(0, 0)], v2_1), _cd_mul(e[(0, 1)], v2_2))
        av2_2 = _cd_add(_cd_mul(e[(1, 0)], v2_1), _cd_mul(e[(1, 1)], v2_2))
        reliable = smin.hi > smax.hi * 1e-25
        safe_smin = _dd_where(reliable, smin, one)
        u2_1 = _cd_div_dd(av2_1, safe_smin)
        u2_2 = _cd_div_dd(av2_2, safe_smin)
        comp_1 = (dd_neg(u1_2[0]), u1_2[1])
        comp_2 = _cd_conj(u1_1)
        u2_1 = _cd_where(reliable, u2_1, comp_1)
        u2_2 = _cd_where(reliable, u2_2, comp_2)
        smax = dd_scalb(smax, g)
        smin = dd_scalb(smin, g)
    return OracleSvd(smax=smax, smin=smin,
                     u11=u1_1, u21=u1_2, u12=u2_1, u22=u2_2,
                     v11=v1_1, v21=v1_2, v12=v2_1, v22=v2_2)


# ----------------------------------------------------------------------
# batch quality metrics
# ----------------------------------------------------------------------

@dataclass
class Metrics:
    """Worst-lane quality measures of one decomposed batch.

    All four are mpmath values carrying the full 106-bit accumulator:
    ``kappa`` the largest condition number (``inf`` when any lane has
    ``smin == 0``), ``rho`` the largest relative residual
    ``|U S V* - A|_F / |A|_F``, ``delta``/``eta`` the largest
    departures of U/V from unitarity ``|U* U - I|_F``.  Lanes whose
    stored singular values are non-finite (a failed unconditional
    backscale) cannot be reconstructed and are left out of ``rho``;
    ``rho_excluded_lanes`` counts them.
    """
    kappa: mpmath.mpf
    rho: mpmath.mpf
    delta: mpmath.mpf
    eta: mpmath.mpf
    rho_excluded_lanes: int = 0


def _entry_pairs(re_rows, im_rows, n):
    out = []
    for t in range(4):
        re = re_rows[t, :n]
        im = im_rows[t, :n] if im_rows is not None else None
        out.append(_cd_from(re, im))
    return out


def _gram_deviation(c11, c21, c12, c22):
    """|G* G - I|_F of the 2x2 with columns (c11,c21), (c12,c22)."""
    one = dd_from(np.ones_like(c11[0].hi))
    g11 = dd_sub(dd_add(_cd_abs2(c11), _cd_abs2(c21)), one)
    g22 = dd_sub(dd_add(_cd_abs2(c12), _cd_abs2(c22)), one)
    g12 = _cd_add(_cd_mul(_cd_conj(c11), c12), _cd_mul(_cd_conj(c21), c22))
    s = dd_add(dd_add(dd_mul(g11, g11), dd_mul(g22, g22)),
               dd_scalb(_cd_abs2(g12), 1.0))
    return dd_sqrt(s)


def metrics(batch, out):
    """Worst-lane quality measures of ``out`` against ``batch``.

    Each genuine lane is compared in the domain its values live in:
    against A when the lane was backscaled (shift stored as -0.0),
    against the scaled matrix ``2**shift * A`` otherwise, so skipped
    backscales never fake an error.  Evaluation is double-double
    after an exact per-lane power-of-two normalization; reductions
    are exact maxima, so the result is independent of lane order and
    batch partition (the maximum over a union of batches is the
    maximum of the parts).
    """
    n = batch.n
    if out.n != n:
        raise ValueError("batch and output sizes differ")
    cplx = batch.im is not None
    with np.errstate(all="ignore"):
        smax = out.smax[:n].copy()
        smin = out.smin[:n].copy()
        shift = out.shift[:n]
        performed = (shift == 0.0) & np.signbit(shift)
        eff_shift = np.where(performed, 0.0, shift)
        bad = ~(np.isfinite(smax) & np.isfinite(smin))
        # exact per-lane normalization so double-double never overflows
        g = np.where((smax > 0) & ~bad, lanes.getexp(smax), 0.0)
        t_re = np.empty((4, n))
        t_im = np.empty((4, n)) if cplx else None
        for t in range(4):
            dom = lanes.scalef(batch.re[t, :n], eff_shift)
            t_re[t] = lanes.scalef(dom, -g)
            if cplx:
                dom_i = lanes.scalef(batch.im[t, :n], eff_shift)
                t_im[t] = lanes.scalef(dom_i, -g)
        s1 = dd_from(np.where(bad, 0.0, lanes.scalef(smax, -g)))
        s2 = dd_from(np.where(bad, 0.0, lanes.scalef(smin, -g)))
        a = _entry_pairs(t_re, t_im, n)
        u = _entry_pairs(out.u_re, out.u_im, n)
        v = _entry_pairs(out.v_re, out.v_im, n)
        # residual |U S V* - A|_F / |A|_F per lane
        w = [_cd_mul_dd(u[0], s1), _cd_mul_dd(u[1], s1),
             _cd_mul_dd(u[2], s2), _cd_mul_dd(u[3], s2)]
        num2 = dd_from(np.zeros(n))
        den2 = dd_from(np.zeros(n))
        for t, (i, j) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
            rec = _cd_add(_cd_mul(w[i], _cd_conj(v[j])),
                          _cd_mul(w[2 + i], _cd_conj(v[2 + j])))
            num2 = dd_add(num2, _cd_abs2(_cd_sub(rec, a[t])))
            den2 = dd_add(den2, _cd_abs2(a[t]))
        rho = dd_sqrt(dd_div(num2, den2))
        # absorb 0/0 lanes (zero matrices) and drop non-reconstructible
        # ones, mirroring the max-against-zero device
        drop = bad | ~np.isfinite(rho.hi)
        rho = DD(np.where(drop, 0.0, relaxed_max(rho.hi, 0.0)),
                 np.where(drop, 0.0, rho.lo))
        delta = _gram_deviation(u[0], u[1], u[2], u[3])
        eta = _gram_deviation(v[0], v[1], v[2], v[3])
        # condition number from the stored values, exponent carried
        # separately because the ratio exceeds the float64 range
        kappa_inf = bool((bad | (smin == 0.0)).any())
        if kappa_inf:
            kappa = mpmath.mpf("inf")
        else:
            e1 = lanes.getexp(smax)
            e2 = lanes.getexp(smin)
            q = dd_div(dd_from(lanes.scalef(smax, -e1)),
                       dd_from(lanes.scalef(smin, -e2)))
            d = e1 - e2
            low = q.hi < 1.0
            q = _dd_where(low, dd_scalb(q, 1.0), q)
            d = d - low.astype(np.float64)
            dmax = d.max()
            sel = d == dmax
            qhi = q.hi[sel].max()
            sel &= q.hi == qhi
            qlo = q.lo[sel].max()
            with mpmath.workprec(_MP_PREC):
                kappa = ((mpmath.mpf(float(qhi)) + mpmath.mpf(float(qlo)))
                         * mpmath.power(2, int(dmax)))
    return Metrics(kappa=kappa,
                   rho=dd_to_mpf(_dd_max(rho)),
                   delta=dd_to_mpf(_dd_max(delta)),
                   eta=dd_to_mpf(_dd_max(eta)),
                   rho_excluded_lanes=int(np.count_nonzero(bad)))
