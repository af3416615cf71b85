"""Four-phase SVD pipeline for lane vectors of 2x2 matrices.

Phase order per lane:

1. scale      -- multiply the whole matrix by one exact power of two so
                 every entry magnitude lands at or below ``2**1022``;
                 downstream arithmetic then cannot overflow and only
                 loses underflowed bits the input already had.
2. factor     -- order columns by norm and rows by pivot magnitude,
                 make the pivot column real and non-negative with unit
                 row phases, then one Givens rotation and two more unit
                 phases leave a non-negative upper-triangular factor
                 with its largest entry in the corner.
3. triangle   -- closed-form SVD of that triangle through one tangent
                 of a double angle; the ordering above bounds every
                 quantity (tangents by sqrt(2), secants by 3).
4. assemble   -- compose the permutations, phases and rotations into
                 U and V, and optionally undo the scaling.

Matrices travel as per-entry lane trains in column-major entry order
(e11, e21, e12, e22).  An entry is a ``(re, im)`` pair of equal-length
float64 arrays; ``im is None`` selects the real variant, which stores
unit phases as bare sign bits (+-0.0 patterns) and applies them with
xor.  Complex phases are (cos, sin) pairs.

Everything is elementwise and branch-free, so any lane width runs the
same instruction sequence: results are bit-identical whether a lane is
processed alone or inside a slab.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lanes
from .lanes import (
    fabs, fma, fnma, bit_or, bit_xor, negate, relaxed_max, relaxed_min,
    select, sign_mask,
)

__all__ = [
    "HEADROOM_EXP", "SQRT_DBL_MAX",
    "ScaleResult", "UrvState", "TriangleSvd", "Svd2",
    "compute_scale", "column_norms", "column_pivot", "row_sort",
    "left_phase_reduce", "givens_qr", "phase_fix_r", "triangular_svd",
    "assemble_uv", "assemble_uv_sine", "backscale",
    "svd2_lanes",
]

# Target exponent for the largest scaled entry: three binades of
# headroom under the overflow threshold keep every derived quantity
# (column norms, sqrt(3) growth of the top singular value) finite.
HEADROOM_EXP = 1021.0

# sqrt(DBL_MAX), frozen so the clamp below never depends on a library
# sqrt of an inexact constant.
SQRT_DBL_MAX = 1.34078079299425956e+154


@dataclass
class ScaleResult:
    """Exactly scaled matrix entries and the per-lane exponent used."""
    shift: np.ndarray            # power-of-two exponent s; -2 <= s <= DBL_MAX
    parts: tuple                 # scaled component trains, input order


@dataclass
class UrvState:
    """Unitary reduction of the scaled matrix to a non-negative triangle.

    The matrix factors as  (row phases, row swap, Givens)* . R . (col
    swap, offdiag phase)*  where R = [[r11, r12], [0, r22]] with
    r11 >= max(r12, r22) >= 0 and r12, r22 >= 0.
    """
    swap_cols: np.ndarray        # bool lanes: columns were exchanged
    swap_rows: np.ndarray        # bool lanes: rows were exchanged
    row_phase1: tuple            # unit phase removed from row-1 pivot entry
    row_phase2: tuple            # unit phase removed from row-2 pivot entry
    givens_tan: np.ndarray       # rotation tangent, in [-1, 0]
    givens_cos: np.ndarray       # rotation cosine, in [1/sqrt(2), 1]
    r12_phase: tuple             # unit factor absorbing arg(r12) into V
    r22_phase: tuple             # unit phase of r22 after the r12 fix
    r11: np.ndarray
    r12: np.ndarray
    r22: np.ndarray


@dataclass
class TriangleSvd:
    """Closed-form SVD of the non-negative triangle.

    The left rotation (tangent bounded by 1) is applied to rows, the
    right one (tangent bounded by sqrt(2)) to columns.  Scaled singular
    values are ordered: inf > smax_scaled >= smin_scaled >= 0.
    """
    left_tan: np.ndarray
    left_sec2: np.ndarray        # 1 + left_tan**2
    left_cos: np.ndarray
    right_tan: np.ndarray
    right_sec2: np.ndarray
    right_cos: np.ndarray        # >= 1/sqrt(3)
    smax_scaled: np.ndarray
    smin_scaled: np.ndarray


@dataclass
class Svd2:
    """Assembled factors of one lane vector of 2x2 matrices.

    U and V entries are (re, im) pairs in column-major entry order;
    ``im is None`` in the real case.  Singular values are those of the
    scaled matrix until :func:`backscale` divides the shift back out
    and marks ``shift`` with -0.0.
    """
    u11: tuple
    u21: tuple
    u12: tuple
    u22: tuple
    v11: tuple
    v21: tuple
    v12: tuple
    v22: tuple
    smax_scaled: np.ndarray
    smin_scaled: np.ndarray
    shift: np.ndarray


# ----------------------------------------------------------------------
# phase 1: exact scaling
# ----------------------------------------------------------------------

def compute_scale(parts):
    """Joint exact power-of-two scaling of all matrix components.

    ``shift`` is the smaller of ``DBL_MAX`` and the minimum over all
    components of ``HEADROOM_EXP - getexp(component)``; a zero matrix
    therefore keeps ``shift = DBL_MAX``, an all-huge one gets -2, and
    the scaled entries never exceed ``2**1022``.  Multiplication by
    ``2**shift`` is exact except for entries pushed into the subnormal
    range by a lane whose largest entry sits above ``2**1021``.

    Parameters
    ----------
    parts : sequence of float64 arrays
        All component trains of the matrix (4 real or 8 complex).

    Returns
    -------
    ScaleResult
    """
    with np.errstate(all="ignore"):
        margins = [HEADROOM_EXP - lanes.getexp(p) for p in parts]
        while len(margins) > 1:
            margins = [relaxed_min(margins[i], margins[i + 1])
                       for i in range(0, len(margins), 2)]
        shift = relaxed_min(np.float64(lanes.DBL_MAX), margins[0])
        scaled = tuple(lanes.scalef(p, shift) for p in parts)
    return ScaleResult(shift=shift, parts=scaled)


# ----------------------------------------------------------------------
# phase 2: unitary reduction to a non-negative triangle
# ----------------------------------------------------------------------

def column_norms(e11, e21, e12, e22):
    """Entry magnitudes and column Frobenius norms of scaled entries.

    Returns ``(m11, m21, m12, m22, norm1, norm2)``.  With every entry
    at or below ``2**1022`` the norms stay finite (at most
    ``2**1022 * sqrt(2) < DBL_MAX``).
    """
    with np.errstate(all="ignore"):
        if e11[1] is None:
            m11, m21, m12, m22 = (fabs(e[0]) for e in (e11, e21, e12, e22))
        else:
            m11, m21, m12, m22 = (lanes.hypot_lane(e[0], e[1])
                                  for e in (e11, e21, e12, e22))
        norm1 = lanes.hypot_lane(m11, m21)
        norm2 = lanes.hypot_lane(m12, m22)
    return m11, m21, m12, m22, norm1, norm2


def _swap_pair(mask, a, b):
    if a[1] is None:
        return ((select(mask, a[0], b[0]), None),
                (select(mask, b[0], a[0]), None))
    return ((select(mask, a[0], b[0]), select(mask, a[1], b[1])),
            (select(mask, b[0], a[0]), select(mask, b[1], a[1])))


def column_pivot(entries, mags, norm1, norm2):
    """Exchange columns where the second has the strictly larger norm.

    ``entries`` and ``mags`` are column-major 4-tuples; the swapped
    tuples, swapped norms and the swap mask come back.  Ties keep the
    original order.
    """
    swap = norm1 < norm2
    e11, e21, e12, e22 = entries
    m11, m21, m12, m22 = mags
    (e11, e12) = _swap_pair(swap, e11, e12)
    (e21, e22) = _swap_pair(swap, e21, e22)
    m11, m12 = select(swap, m11, m12), select(swap, m12, m11)
    m21, m22 = select(swap, m21, m22), select(swap, m22, m21)
    n1, n2 = select(swap, norm1, norm2), select(swap, norm2, norm1)
    return (e11, e21, e12, e22), (m11, m21, m12, m22), n1, n2, swap


def row_sort(entries, mags):
    """Exchange rows where the pivot-column top magnitude is smaller.

    After this the (1,1) entry has the largest magnitude in column 1,
    which caps the Givens tangent below at -1.
    """
    e11, e21, e12, e22 = entries
    m11, m21, m12, m22 = mags
    swap = m11 < m21
    (e11, e21) = _swap_pair(swap, e11, e21)
    (e12, e22) = _swap_pair(swap, e12, e22)
    m11, m21 = select(swap, m11, m21), select(swap, m21, m11)
    m12, m22 = select(swap, m12, m22), select(swap, m22, m12)
    return (e11, e21, e12, e22), (m11, m21, m12, m22), swap


def left_phase_reduce(e11, e21, e12, e22, m11, m21):
    """Remove the unit phases of the pivot column into row factors.

    Row i is multiplied by the conjugate phase of its column-1 entry,
    which turns column 1 into the carried magnitudes (m11, m21) and
    rotates column 2.  Real lanes carry the phase as the entry's sign
    bit and apply it with xor (exact); complex lanes build (cos, sin)
    from the carried magnitude and multiply with one fma per component.

    Returns ``(b11, b21, f12, f22, phase1, phase2)`` where b are the
    now non-negative column-1 values and f the rotated column-2 pairs.
    """
    with np.errstate(all="ignore"):
        if e11[1] is None:
            ph1 = sign_mask(e11[0])
            ph2 = sign_mask(e21[0])
            f12 = (bit_xor(e12[0], ph1), None)
            f22 = (bit_xor(e22[0], ph2), None)
            return m11, m21, f12, f22, (ph1, None), (ph2, None)
        c1, s1 = lanes.phase_from_parts(e11[0], e11[1], m11)
        c2, s2 = lanes.phase_from_parts(e21[0], e21[1], m21)
        f12 = lanes.complex_mul(c1, negate(s1), e12[0], e12[1])
        f22 = lanes.complex_mul(c2, negate(s2), e22[0], e22[1])
        return m11, m21, f12, f22, (c1, s1), (c2, s2)


def givens_qr(b11, b21, f12, f22, norm1):
    """One plane rotation annihilating the subdiagonal.

    The tangent is ``-relaxed_max(b21/b11, 0)``: ordering bounds it in
    [-1, 0] and the relaxed max absorbs the 0/0 of an all-zero column
    (zero matrix lanes roll through as the identity rotation).  The
    new (1,1) entry is the carried column norm, not a recomputation.

    Returns ``(tan, cos, r11, g12, g22)`` with g12/g22 the rotated
    column-2 pairs (complex phases still attached).
    """
    with np.errstate(all="ignore"):
        mt = relaxed_max(b21 / b11, 0.0)
        cos = lanes.invsqrt_lane(fma(mt, mt, 1.0))
        r11 = norm1
        if f12[1] is None:
            g12 = (cos * fma(mt, f22[0], f12[0]), None)
            g22 = (cos * fnma(mt, f12[0], f22[0]), None)
        else:
            g12 = (cos * fma(mt, f22[0], f12[0]),
                   cos * fma(mt, f22[1], f12[1]))
            g22 = (cos * fnma(mt, f12[0], f22[0]),
                   cos * fnma(mt, f12[1], f22[1]))
        return negate(mt), cos, r11, g12, g22


def phase_fix_r(g12, g22):
    """Strip the unit phases of the rotated column-2 entries.

    The (1,2) phase moves into the right-hand factor (returned
    conjugated, ready for V); the (2,2) entry is first rotated by that
    conjugate phase and its own remaining phase moves into the left
    factor.  Real lanes use sign bits throughout.

    Returns ``(r12, r22, r12_phase, r22_phase)`` with r12, r22 >= 0.
    """
    with np.errstate(all="ignore"):
        if g12[1] is None:
            sg12 = sign_mask(g12[0])
            w = bit_xor(g22[0], sg12)
            return fabs(g12[0]), fabs(w), (sg12, None), (sign_mask(w), None)
        r12 = lanes.hypot_lane(g12[0], g12[1])
        c12, s12 = lanes.phase_from_parts(g12[0], g12[1], r12)
        wr, wi = lanes.complex_mul(c12, negate(s12), g22[0], g22[1])
        r22 = lanes.hypot_lane(wr, wi)
        c22, s22 = lanes.phase_from_parts(wr, wi, r22)
        return r12, r22, (c12, negate(s12)), (c22, s22)


# ----------------------------------------------------------------------
# phase 3: closed-form SVD of the triangle
# ----------------------------------------------------------------------

def triangular_svd(r11, r12, r22):
    """Singular values and rotation angles of [[r11, r12], [0, r22]].

    Requires r11 >= max(r12, r22) >= 0 and r12, r22 >= 0 (what the
    reduction above produces).  Works on the ratios x = r12/r11 and
    y = r22/r11, both clamped through a relaxed max against 0 so the
    0/0 of a zero lane becomes the identity.  The double-angle tangent

        tan(2*phi) = -min(2*min(x,y)*max(x,y) / ((x-y)(x+y)+1),
                          sqrt(DBL_MAX))

    is clamped before its square can overflow and given a forced
    negative sign (OR with -0.0), which makes both half-angle tangents
    non-positive and the singular values come out ordered:

        smax = (cos_l*cos_r*(1+tan_r^2)) * r11 >= smin >= 0,
        |tan_r| <= sqrt(2),  |tan_l| <= 1,  cos_r >= 1/sqrt(3).
    """
    with np.errstate(all="ignore"):
        x = relaxed_max(r12 / r11, 0.0)
        y = relaxed_max(r22 / r11, 0.0)
        num = lanes.scalef(relaxed_min(x, y), 1.0) * relaxed_max(x, y)
        den = fma(x - y, x + y, 1.0)
        tan2 = bit_or(relaxed_min(relaxed_max(num / den, 0.0),
                                  SQRT_DBL_MAX), np.float64(-0.0))
        left_tan = tan2 / (1.0 + np.sqrt(fma(tan2, tan2, 1.0)))
        left_sec2 = fma(left_tan, left_tan, 1.0)
        left_cos = lanes.invsqrt_lane(left_sec2)
        right_tan = fma(y, left_tan, negate(x))
        right_sec2 = fma(right_tan, right_tan, 1.0)
        right_cos = lanes.invsqrt_lane(right_sec2)
        cc = left_cos * right_cos
        smax = (cc * right_sec2) * r11
        smin = (cc * left_sec2) * r22
    return TriangleSvd(left_tan=left_tan, left_sec2=left_sec2,
                       left_cos=left_cos, right_tan=right_tan,
                       right_sec2=right_sec2, right_cos=right_cos,
                       smax_scaled=smax, smin_scaled=smin)


# ----------------------------------------------------------------------
# phase 4: assembly of U and V
# ----------------------------------------------------------------------

def _assemble_v(urv, tri):
    """Right factor: the right rotation times the stored (1,2) phase,
    rows swapped where the columns were pivoted."""
    dt = urv.r12_phase
    cos_r = tri.right_cos
    sin_r = cos_r * tri.right_tan
    if dt[1] is None:
        v11 = (cos_r, None)
        v12 = (sin_r, None)
        v21 = (bit_xor(sin_r, bit_xor(dt[0], np.float64(-0.0))), None)
        v22 = (bit_xor(cos_r, dt[0]), None)
    else:
        zero = np.zeros_like(cos_r)
        v11 = (cos_r, zero)
        v12 = (sin_r, zero)
        v21 = (negate(sin_r * dt[0]), negate(sin_r * dt[1]))
        v22 = (cos_r * dt[0], cos_r * dt[1])
    (v11, v21) = _swap_pair(urv.swap_cols, v11, v21)
    (v12, v22) = _swap_pair(urv.swap_cols, v12, v22)
    return v11, v21, v12, v22


def _finish_u(urv, pre11, pre21, pre12, pre22):
    (u11, u21) = _swap_pair(urv.swap_rows, pre11, pre21)
    (u12, u22) = _swap_pair(urv.swap_rows, pre12, pre22)
    return u11, u21, u12, u22


def assemble_uv(urv, tri, shift):
    """Compose U and V from the reduction state, tangent form.

    U folds the Givens rotation and the left triangle rotation into a
    single product of tangents scaled by the joint cosine, with the
    row phases applied last; V is the right rotation with the (1,2)
    phase.  Real lanes apply every unit factor with xor.
    """
    with np.errstate(all="ignore"):
        neg0 = np.float64(-0.0)
        mt = negate(urv.givens_tan)              # -tan >= 0
        g_tan = urv.givens_tan
        l_tan = tri.left_tan
        c = urv.givens_cos * tri.left_cos
        ph1, ph2 = urv.row_phase1, urv.row_phase2
        dh = urv.r22_phase
        if ph1[1] is None:
            d = dh[0]                            # sign bit of the phase
            core11 = fma(bit_xor(mt, d), l_tan, 1.0)
            core12 = l_tan + bit_xor(g_tan, d)
            core21 = g_tan + bit_xor(l_tan, d)
            core22 = fma(mt, l_tan, bit_xor(np.float64(1.0), d))
            pre11 = (bit_xor(c * core11, ph1[0]), None)
            pre12 = (bit_xor(c * core12, ph1[0]), None)
            pre21 = (bit_xor(c * core21, bit_xor(ph2[0], neg0)), None)
            pre22 = (bit_xor(c * core22, ph2[0]), None)
        else:
            t = mt * l_tan
            dr, di = dh
            inner11 = (fma(dr, t, 1.0), di * t)
            inner21 = (fma(dr, l_tan, g_tan), di * l_tan)
            inner12 = (fma(dr, g_tan, l_tan), di * g_tan)
            inner22 = (fma(mt, l_tan, dr), di)
            p11 = lanes.complex_mul(ph1[0], ph1[1], *inner11)
            p21 = lanes.complex_mul(ph2[0], ph2[1], *inner21)
            p12 = lanes.complex_mul(ph1[0], ph1[1], *inner12)
            p22 = lanes.complex_mul(ph2[0], ph2[1], *inner22)
            pre11 = (c * p11[0], c * p11[1])
            pre21 = (negate(c * p21[0]), negate(c * p21[1]))
            pre12 = (c * p12[0], c * p12[1])
            pre22 = (c * p22[0], c * p22[1])
        u11, u21, u12, u22 = _finish_u(urv, pre11, pre21, pre12, pre22)
        v11, v21, v12, v22 = _assemble_v(urv, tri)
    return Svd2(u11=u11, u21=u21, u12=u12, u22=u22,
                v11=v11, v21=v21, v12=v12, v22=v22,
                smax_scaled=tri.smax_scaled, smin_scaled=tri.smin_scaled,
                shift=shift)


def assemble_uv_sine(urv, tri, shift):
    """Compose U and V through explicit sines instead of tangents.

    Algebraically the same factors as :func:`assemble_uv` with each
    rotation written out as (cos, sin) products; rounding differs by a
    few ulps, which the pointwise comparison tests quantify.  V is
    identical to the tangent form.
    """
    with np.errstate(all="ignore"):
        neg0 = np.float64(-0.0)
        sin_g = urv.givens_cos * urv.givens_tan
        sin_l = tri.left_cos * tri.left_tan
        cc = urv.givens_cos * tri.left_cos      # cos*cos
        ss = sin_g * sin_l                      # sin*sin >= 0
        cs = urv.givens_cos * sin_l             # cos*sin
        sc = sin_g * tri.left_cos               # sin*cos
        ph1, ph2 = urv.row_phase1, urv.row_phase2
        dh = urv.r22_phase
        if ph1[1] is None:
            d = dh[0]
            core11 = cc - bit_xor(ss, d)
            core12 = cs + bit_xor(sc, d)
            core21 = sc + bit_xor(cs, d)
            core22 = bit_xor(cc, d) - ss
            pre11 = (bit_xor(core11, ph1[0]), None)
            pre12 = (bit_xor(core12, ph1[0]), None)
            pre21 = (bit_xor(core21, bit_xor(ph2[0], neg0)), None)
            pre22 = (bit_xor(core22, ph2[0]), None)
        else:
            dr, di = dh
            inner11 = (fnma(dr, ss, cc), negate(di * ss))
            inner12 = (fma(dr, sc, cs), di * sc)
            inner21 = (fma(dr, cs, sc), di * cs)
            inner22 = (fma(dr, cc, negate(ss)), di * cc)
            p11 = lanes.complex_mul(ph1[0], ph1[1], *inner11)
            p21 = lanes.complex_mul(ph2[0], ph2[1], *inner21)
            p12 = lanes.complex_mul(ph1[0], ph1[1], *inner12)
            p22 = lanes.complex_mul(ph2[0], ph2[1], *inner22)
            pre11 = p11
            pre21 = (negate(p21[0]), negate(p21[1]))
            pre12 = p12
            pre22 = p22
        u11, u21, u12, u22 = _finish_u(urv, pre11, pre21, pre12, pre22)
        v11, v21, v12, v22 = _assemble_v(urv, tri)
    return Svd2(u11=u11, u21=u21, u12=u12, u22=u22,
                v11=v11, v21=v21, v12=v12, v22=v22,
                smax_scaled=tri.smax_scaled, smin_scaled=tri.smin_scaled,
                shift=shift)


# ----------------------------------------------------------------------
# optional phase 5: undo the scaling
# ----------------------------------------------------------------------

def backscale(smax_scaled, smin_scaled, shift, mode="safe"):
    """Divide the scaling shift back out of the singular values.

    ``mode="none"`` returns the inputs unchanged.  ``"unconditional"``
    rescales every lane, overflowing to inf or rounding into the
    subnormal range where the true values are not representable.
    ``"safe"`` rescales only lanes whose values survive exactly
    representably: it refuses a lane iff the top value would exceed
    the finite range (exponent past 1023) or a nonzero bottom value
    would drop below the normal range (exponent under -1022).

    Lanes actually rescaled get their shift replaced by -0.0 as a
    sentinel; refused lanes keep their shift and scaled values.
    """
    if mode == "none":
        return (np.array(smax_scaled, copy=True),
                np.array(smin_scaled, copy=True),
                np.array(shift, copy=True))
    if mode not in ("safe", "unconditional"):
        raise ValueError("unknown backscale mode %r" % (mode,))
    with np.errstate(all="ignore"):
        neg_s = negate(np.asarray(shift, dtype=np.float64))
        bs_max = lanes.scalef(smax_scaled, neg_s)
        bs_min = lanes.scalef(smin_scaled, neg_s)
        done = np.full_like(neg_s, -0.0)
        if mode == "unconditional":
            return bs_max, bs_min, done
        e_max = lanes.getexp(smax_scaled) - shift
        e_min = lanes.getexp(smin_scaled) - shift
        ok = (e_max <= 1023.0) & ((smin_scaled == 0.0) | (e_min >= -1022.0))
        out_max = select(ok, np.asarray(smax_scaled, dtype=np.float64), bs_max)
        out_min = select(ok, np.asarray(smin_scaled, dtype=np.float64), bs_min)
        out_shift = select(ok, np.asarray(shift, dtype=np.float64), done)
    return out_max, out_min, out_shift


# ----------------------------------------------------------------------
# whole pipeline
# ----------------------------------------------------------------------

def svd2_lanes(parts, sine_form=False, with_states=False):
    """Run the full pipeline on component trains.

    Parameters
    ----------
    parts : tuple of float64 arrays
        4 trains (e11, e21, e12, e22) for real lanes, or 8 trains with
        re/im interleaved per entry (e11r, e11i, ..., e22i) for complex.
    sine_form : bool
        Assemble U through explicit sines instead of tangents.
    with_states : bool
        Also return the intermediate phase states.

    Returns
    -------
    Svd2, or (Svd2, ScaleResult, UrvState, TriangleSvd)
    """
    if len(parts) == 4:
        entries = [(p, None) for p in parts]
    elif len(parts) == 8:
        entries = [(parts[i], parts[i + 1]) for i in range(0, 8, 2)]
    else:
        raise ValueError("expected 4 or 8 component trains, got %d"
                         % len(parts))
    scale = compute_scale(parts)
    k = len(parts) // 4
    if k == 1:
        s_entries = [(p, None) for p in scale.parts]
    else:
        s_entries = [(scale.parts[i], scale.parts[i + 1])
                     for i in range(0, 8, 2)]
    m11, m21, m12, m22, n1, n2 = column_norms(*s_entries)
    entries_p, mags_p, n1, n2, swap_c = column_pivot(
        tuple(s_entries), (m11, m21, m12, m22), n1, n2)
    entries_s, mags_s, swap_r = row_sort(entries_p, mags_p)
    b11, b21, f12, f22, ph1, ph2 = left_phase_reduce(
        *entries_s, mags_s[0], mags_s[1])
    g_tan, g_cos, r11, g12, g22 = givens_qr(b11, b21, f12, f22, n1)
    r12, r22, dt, dhat = phase_fix_r(g12, g22)
    urv = UrvState(swap_cols=swap_c, swap_rows=swap_r,
                   row_phase1=ph1, row_phase2=ph2,
                   givens_tan=g_tan, givens_cos=g_cos,
                   r12_phase=dt, r22_phase=dhat,
                   r11=r11, r12=r12, r22=r22)
    tri = triangular_svd(r11, r12, r22)
    assemble = assemble_uv_sine if sine_form else assemble_uv
    svd = assemble(urv, tri, scale.shift)
    if with_states:
        return svd, scale, urv, tri
    return svd
