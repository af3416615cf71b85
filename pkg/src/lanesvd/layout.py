"""Structure-of-arrays batch containers for 2x2 matrices.

A batch of n matrices is stored as per-entry lane trains: row t of a
C-contiguous (4, n_hat) float64 array holds entry t of every matrix,
in column-major entry order (e11, e21, e12, e22).  Lane k of every
train belongs to matrix k.  n_hat rounds n up to a whole number of
8-lane chunks and the padding lanes hold zeros, which roll through the
kernels as well-defined zero matrices and are dropped at unpacking.
Complex batches carry a second (4, n_hat) array with the imaginary
parts, same order.

Each train starts on a 64-byte boundary (one full SIMD word) and is a
whole number of words long, so a kernel may load any aligned chunk of
any train directly.  All values are IEEE-754 binary64, little-endian
in memory and on disk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .lanes import LANE_WIDTH

__all__ = [
    "padded_len", "aligned_zeros", "Batch2x2", "SvdBatchOut", "MatrixSvd",
    "pack", "unpack",
]

_ALIGN = 64  # bytes per SIMD word


def padded_len(n):
    """Smallest multiple of the lane width that is >= n."""
    if n < 0:
        raise ValueError("negative batch size")
    return -(-int(n) // LANE_WIDTH) * LANE_WIDTH


def aligned_zeros(rows, cols):
    """A zeroed C-contiguous (rows, cols) float64 array, every row
    starting on a 64-byte boundary.  ``cols`` must be a multiple of
    the lane width so the row stride preserves the alignment."""
    if cols % LANE_WIDTH != 0:
        raise ValueError("column count must be a multiple of %d" % LANE_WIDTH)
    nbytes = rows * cols * 8
    raw = np.zeros(nbytes + _ALIGN, dtype=np.uint8)
    off = (-raw.ctypes.data) % _ALIGN
    return raw[off:off + nbytes].view(np.float64).reshape(rows, cols)


class MatrixSvd(NamedTuple):
    """One unpacked result record.

    ``u`` and ``v`` are (2, 2) arrays (float64 or complex128); the
    singular values and shift are python floats, exactly the stored
    lane values (scaled values unless the lane was backscaled, in
    which case ``shift`` is -0.0).
    """
    u: np.ndarray
    v: np.ndarray
    smax: float
    smin: float
    shift: float


@dataclass
class Batch2x2:
    """Input batch: n genuine lanes inside zero-padded aligned trains."""
    n: int
    re: np.ndarray               # (4, n_hat) trains: e11, e21, e12, e22
    im: np.ndarray | None        # same shape for complex batches

    def __post_init__(self):
        shape = self.re.shape
        if len(shape) != 2 or shape[0] != 4 or shape[1] % LANE_WIDTH != 0:
            raise ValueError("trains must be (4, multiple of %d), got %r"
                             % (LANE_WIDTH, shape))
        if self.im is not None and self.im.shape != shape:
            raise ValueError("re/im train shapes differ")
        if not 0 <= self.n <= shape[1]:
            raise ValueError("n outside the padded train length")

    @property
    def n_hat(self):
        return self.re.shape[1]

    @property
    def field(self):
        return "real" if self.im is None else "complex"

    def parts(self):
        """Component trains in kernel order (re/im interleaved per
        entry for complex batches)."""
        if self.im is None:
            return tuple(self.re[t] for t in range(4))
        out = []
        for t in range(4):
            out.append(self.re[t])
            out.append(self.im[t])
        return tuple(out)


@dataclass
class SvdBatchOut:
    """Output batch: factor trains in the same layout as the input."""
    n: int
    u_re: np.ndarray             # (4, n_hat): u11, u21, u12, u22
    u_im: np.ndarray | None
    v_re: np.ndarray
    v_im: np.ndarray | None
    smax: np.ndarray             # (n_hat,)
    smin: np.ndarray
    shift: np.ndarray

    @property
    def n_hat(self):
        return self.u_re.shape[1]

    @classmethod
    def empty(cls, n, complex_field):
        n_hat = padded_len(n)
        mk = lambda: aligned_zeros(4, n_hat)
        vec = lambda: aligned_zeros(1, n_hat)[0]
        return cls(n=n,
                   u_re=mk(), u_im=mk() if complex_field else None,
                   v_re=mk(), v_im=mk() if complex_field else None,
                   smax=vec(), smin=vec(), shift=vec())


def _validate_finite(arr, what):
    if not np.isfinite(arr).all():
        raise ValueError("non-finite value in %s" % what)


def pack(matrices):
    """Pack an (n, 2, 2) array of matrices into aligned trains.

    Real input (any float dtype) gives a real batch; complex input a
    complex one.  Values are copied bit-exactly (float64/complex128
    pass through unchanged, including signed zeros and subnormals).
    Non-finite entries are rejected.
    """
    a = np.asarray(matrices)
    if a.ndim != 3 or a.shape[1:] != (2, 2):
        raise ValueError("expected shape (n, 2, 2), got %r" % (a.shape,))
    n = a.shape[0]
    if np.iscomplexobj(a):
        a = a.astype(np.complex128, copy=False)
        _validate_finite(a.real, "matrix real parts")
        _validate_finite(a.imag, "matrix imaginary parts")
        re = aligned_zeros(4, padded_len(n))
        im = aligned_zeros(4, padded_len(n))
        for t, (i, j) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
            re[t, :n] = a[:, i, j].real
            im[t, :n] = a[:, i, j].imag
        return Batch2x2(n=n, re=re, im=im)
    a = a.astype(np.float64, copy=False)
    _validate_finite(a, "matrix entries")
    re = aligned_zeros(4, padded_len(n))
    for t, (i, j) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
        re[t, :n] = a[:, i, j]
    return Batch2x2(n=n, re=re, im=None)


def from_trains(re, im=None, n=None):
    """Build a batch from already train-ordered components.

    ``re`` (and ``im``) are (4, m) arrays with m lanes of genuine
    data; they are copied into aligned padded trains.
    """
    re = np.asarray(re, dtype=np.float64)
    if re.ndim != 2 or re.shape[0] != 4:
        raise ValueError("expected (4, n) trains, got %r" % (re.shape,))
    m = re.shape[1] if n is None else int(n)
    _validate_finite(re[:, :m], "matrix entries")
    out_re = aligned_zeros(4, padded_len(m))
    out_re[:, :m] = re[:, :m]
    out_im = None
    if im is not None:
        im = np.asarray(im, dtype=np.float64)
        if im.shape != re.shape:
            raise ValueError("re/im train shapes differ")
        _validate_finite(im[:, :m], "matrix imaginary parts")
        out_im = aligned_zeros(4, padded_len(m))
        out_im[:, :m] = im[:, :m]
    return Batch2x2(n=m, re=out_re, im=out_im)


def _gather(re, im, k):
    order = ((0, 0), (1, 0), (0, 1), (1, 1))
    if im is None:
        m = np.empty((2, 2), dtype=np.float64)
        for t, (i, j) in enumerate(order):
            m[i, j] = re[t, k]
    else:
        m = np.empty((2, 2), dtype=np.complex128)
        for t, (i, j) in enumerate(order):
            m[i, j] = complex(re[t, k], im[t, k])
    return m


def unpack(out):
    """Expand an output batch into per-matrix records.

    Padding lanes are discarded.  Returns a list of n
    :class:`MatrixSvd` records whose array entries reproduce the
    stored train values bit for bit.
    """
    records = []
    for k in range(out.n):
        records.append(MatrixSvd(
            u=_gather(out.u_re, out.u_im, k),
            v=_gather(out.v_re, out.v_im, k),
            smax=float(out.smax[k]),
            smin=float(out.smin[k]),
            shift=float(out.shift[k]),
        ))
    return records


def unpack_inputs(batch):
    """Expand an input batch back into an (n, 2, 2) array, bit-exact."""
    if batch.im is None:
        a = np.empty((batch.n, 2, 2), dtype=np.float64)
    else:
        a = np.empty((batch.n, 2, 2), dtype=np.complex128)
    for t, (i, j) in enumerate(((0, 0), (1, 0), (0, 1), (1, 1))):
        if batch.im is None:
            a[:, i, j] = batch.re[t, :batch.n]
        else:
            a[:, i, j] = batch.re[t, :batch.n] + 1j * batch.im[t, :batch.n]
    return a
