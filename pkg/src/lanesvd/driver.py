"""Batch execution of the 2x2 SVD pipeline.

Three entry points share one arithmetic core: :func:`svd2_single`
decomposes one matrix at lane width 1, :func:`svd2_chunk` one aligned
8-lane chunk, and :func:`run_batch` a whole batch, vectorized over
long slabs of chunks or pointwise matrix by matrix.  Because every
lane primitive is width-invariant, all of them produce bit-identical
results for the same lane, whatever the path, slab partition or
thread count; the only differences are wall time.

Threading splits the padded lane range into contiguous chunk-aligned
slabs, one per worker.  Workers write disjoint slices of the
preallocated output trains, so no synchronization is needed beyond
joining them.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import layout, svd2
from .lanes import LANE_WIDTH
from .layout import Batch2x2, MatrixSvd, SvdBatchOut

__all__ = ["RunConfig", "svd2_single", "svd2_chunk", "run_batch"]

FIELDS = ("real", "complex")
PATHS = ("vectorized", "pointwise")
BACKSCALE_MODES = ("none", "safe", "unconditional")


@dataclass(frozen=True)
class RunConfig:
    """How a batch run executes.

    ``threads=0`` means one worker per available core.  The backscale
    mode is applied lane by lane right after assembly; ``"none"``
    leaves the scaled singular values and shifts in place.
    """
    field: str = "real"
    path: str = "vectorized"
    threads: int = 0
    backscale_mode: str = "none"

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError("field must be one of %r" % (FIELDS,))
        if self.path not in PATHS:
            raise ValueError("path must be one of %r" % (PATHS,))
        if self.backscale_mode not in BACKSCALE_MODES:
            raise ValueError("backscale_mode must be one of %r"
                             % (BACKSCALE_MODES,))
        if self.threads < 0:
            raise ValueError("threads must be >= 0")

    @property
    def worker_count(self):
        return self.threads if self.threads else (os.cpu_count() or 1)


def _store_pairs(rows, pairs, lo, hi):
    for t, pair in enumerate(pairs):
        rows[0][t, lo:hi] = pair[0]
        if rows[1] is not None:
            rows[1][t, lo:hi] = pair[1]


def _run_lanes(parts, out, lo, hi, sine_form, backscale_mode):
    """One slab through the pipeline, results stored into out[lo:hi]."""
    svd = svd2.svd2_lanes(tuple(p[lo:hi] for p in parts),
                          sine_form=sine_form)
    smax, smin, shift = svd2.backscale(svd.smax_scaled, svd.smin_scaled,
                                       svd.shift, mode=backscale_mode)
    _store_pairs((out.u_re, out.u_im),
                 (svd.u11, svd.u21, svd.u12, svd.u22), lo, hi)
    _store_pairs((out.v_re, out.v_im),
                 (svd.v11, svd.v21, svd.v12, svd.v22), lo, hi)
    out.smax[lo:hi] = smax
    out.smin[lo:hi] = smin
    out.shift[lo:hi] = shift


def svd2_chunk(re_chunk, im_chunk=None, sine_form=False):
    """Decompose one aligned chunk of exactly 8 matrices.

    ``re_chunk`` (and ``im_chunk`` for complex lanes) are (4, 8)
    slices of batch trains.  Returns an :class:`SvdBatchOut` covering
    the 8 lanes, not backscaled.
    """
    re_chunk = np.asarray(re_chunk, dtype=np.float64)
    if re_chunk.shape != (4, LANE_WIDTH):
        raise ValueError("chunk must be (4, %d), got %r"
                         % (LANE_WIDTH, (re_chunk.shape,)))
    if im_chunk is not None:
        im_chunk = np.asarray(im_chunk, dtype=np.float64)
        if im_chunk.shape != (4, LANE_WIDTH):
            raise ValueError("re/im chunk shapes differ")
    batch = layout.from_trains(re_chunk, im_chunk)
    out = SvdBatchOut.empty(LANE_WIDTH, complex_field=im_chunk is not None)
    _run_lanes(batch.parts(), out, 0, LANE_WIDTH, sine_form, "none")
    return out


def svd2_single(a, sine_form=False):
    """Decompose one 2x2 matrix at lane width 1.

    The field follows the dtype of ``a``.  Returns a
    :class:`MatrixSvd` record with the scaled singular values and the
    shift (no backscaling); pass the values through
    :func:`lanesvd.svd2.backscale` to undo the scaling.
    """
    a = np.asarray(a)
    if a.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix, got shape %r" % (a.shape,))
    batch = layout.pack(a.reshape(1, 2, 2))
    parts = tuple(p[:1] for p in batch.parts())
    svd = svd2.svd2_lanes(parts, sine_form=sine_form)
    out = SvdBatchOut.empty(1, complex_field=batch.im is not None)
    _store_pairs((out.u_re, out.u_im),
                 (svd.u11, svd.u21, svd.u12, svd.u22), 0, 1)
    _store_pairs((out.v_re, out.v_im),
                 (svd.v11, svd.v21, svd.v12, svd.v22), 0, 1)
    out.smax[:1] = svd.smax_scaled
    out.smin[:1] = svd.smin_scaled
    out.shift[:1] = svd.shift
    return layout.unpack(out)[0]


def _slabs(n_hat, workers):
    """Contiguous chunk-aligned slabs covering [0, n_hat)."""
    chunks = n_hat // LANE_WIDTH
    workers = max(1, min(workers, chunks)) if chunks else 1
    base, extra = divmod(chunks, workers)
    spans = []
    lo = 0
    for w in range(workers):
        width = (base + (1 if w < extra else 0)) * LANE_WIDTH
        if width:
            spans.append((lo, lo + width))
            lo += width
    return spans


def run_batch(batch, cfg, sine_form=False, dump_states_to=None):
    """Decompose a whole batch under a :class:`RunConfig`.

    Returns ``(SvdBatchOut, wall_time_seconds)``.  The wall time
    covers only the decomposition work (including backscaling when
    enabled), not output allocation or ingestion.  Padding lanes are
    processed as the zero matrices they hold.

    ``dump_states_to`` names a file to receive the intermediate phase
    quantities of every lane as raw little-endian binary64 trains (a
    debugging aid, off by default); see :func:`_dump_states` for the
    train order.
    """
    if not isinstance(batch, Batch2x2):
        raise TypeError("expected a Batch2x2")
    if batch.field != cfg.field:
        raise ValueError("batch field %r does not match config field %r"
                         % (batch.field, cfg.field))
    out = SvdBatchOut.empty(batch.n, complex_field=batch.im is not None)
    parts = batch.parts()
    n_hat = batch.n_hat
    spans = _slabs(n_hat, cfg.worker_count)
    if cfg.path == "vectorized":
        def work(span):
            _run_lanes(parts, out, span[0], span[1], sine_form,
                       cfg.backscale_mode)
    else:
        def work(span):
            for k in range(span[0], span[1]):
                _run_lanes(parts, out, k, k + 1, sine_form,
                           cfg.backscale_mode)
    t0 = time.perf_counter()
    if len(spans) <= 1:
        for span in spans:
            work(span)
    else:
        with ThreadPoolExecutor(max_workers=len(spans)) as pool:
            list(pool.map(work, spans))
    wall = time.perf_counter() - t0
    if dump_states_to is not None:
        _dump_states(dump_states_to, parts, n_hat, sine_form)
    return out, wall


def _dump_states(path, parts, n_hat, sine_form):
    """Write per-lane intermediate quantities as raw binary64 trains.

    Train order (each n_hat little-endian doubles, written back to
    back): shift, swap_cols, swap_rows (as 0.0/1.0), row_phase1,
    row_phase2, r12_phase, r22_phase (re then im for complex lanes),
    givens_tan, givens_cos, r11, r12, r22, left_tan, right_tan,
    smax_scaled, smin_scaled.
    """
    _, scale, urv, tri = svd2.svd2_lanes(tuple(parts), sine_form=sine_form,
                                         with_states=True)
    trains = [scale.shift,
              urv.swap_cols.astype(np.float64),
              urv.swap_rows.astype(np.float64)]
    for phase in (urv.row_phase1, urv.row_phase2,
                  urv.r12_phase, urv.r22_phase):
        trains.append(phase[0])
        if phase[1] is not None:
            trains.append(phase[1])
    trains += [urv.givens_tan, urv.givens_cos, urv.r11, urv.r12, urv.r22,
               tri.left_tan, tri.right_tan, tri.smax_scaled, tri.smin_scaled]
    with open(path, "wb") as fh:
        for train in trains:
            np.ascontiguousarray(train, dtype="<f8").tofile(fh)
