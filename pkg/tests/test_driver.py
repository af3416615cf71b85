"""Batch driver: chunked execution, threading, pointwise/vectorized
equality, padding behavior."""

import os

import numpy as np
import pytest

from lanesvd import (
    Batch2x2, RunConfig, run_batch, svd2_chunk, svd2_single,
)
from lanesvd.driver import _slabs
from lanesvd.layout import pack, unpack


def rand_mats(n, seed, complex_field=False):
    rng = np.random.default_rng(seed)
    scale = np.exp2(rng.integers(-500, 500, (n, 1, 1)).astype(np.float64))
    a = rng.standard_normal((n, 2, 2)) * scale
    if complex_field:
        a = a + 1j * rng.standard_normal((n, 2, 2)) * scale
    return a


def out_bits(out):
    used = [out.u_re, out.v_re, out.smax, out.smin, out.shift]
    if out.u_im is not None:
        used += [out.u_im, out.v_im]
    return [np.asarray(a).view(np.uint64) for a in used]


def assert_out_equal(a, b):
    for x, y in zip(out_bits(a), out_bits(b)):
        assert np.array_equal(x, y)


# ----------------------------------------------------------------------
# config
# ----------------------------------------------------------------------

def test_config_defaults():
    cfg = RunConfig()
    assert cfg.field == "real" and cfg.path == "vectorized"
    assert cfg.backscale_mode == "none"
    assert cfg.worker_count == os.cpu_count()


@pytest.mark.parametrize("kw", [dict(field="rational"),
                                dict(path="simd"),
                                dict(threads=-1),
                                dict(backscale_mode="maybe")])
def test_config_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        RunConfig(**kw)


def test_slabs_cover_and_align():
    for n_hat in (8, 64, 1024, 4096):
        for workers in (1, 2, 3, 7, 16):
            spans = _slabs(n_hat, workers)
            assert spans[0][0] == 0 and spans[-1][1] == n_hat
            for (lo, hi), (lo2, _) in zip(spans, spans[1:]):
                assert hi == lo2
            assert all(lo % 8 == 0 for lo, _ in spans)


# ----------------------------------------------------------------------
# single chunk / single matrix
# ----------------------------------------------------------------------

def test_chunk_of_identities():
    re = np.zeros((4, 8))
    re[0] = 1.0
    re[3] = 1.0
    res = svd2_chunk(re)
    assert (res.shift == 1021.0).all()
    assert (res.smax == 2.0 ** 1021).all()
    assert (res.smin == 2.0 ** 1021).all()
    assert (res.u_re[0] == 1.0).all() and (res.u_re[1] == 0.0).all()
    assert (res.v_re[0] == 1.0).all() and (res.v_re[2] == 0.0).all()


def test_chunk_requires_exact_lane_width():
    with pytest.raises(ValueError):
        svd2_chunk(np.zeros((4, 16)))


def test_single_matches_chunk_lane():
    mats = rand_mats(8, seed=31)
    re = np.ascontiguousarray(
        np.stack([mats[:, 0, 0], mats[:, 1, 0], mats[:, 0, 1],
                  mats[:, 1, 1]]))
    chunk = svd2_chunk(re)
    for k in range(8):
        one = svd2_single(mats[k])
        assert one.smax == chunk.smax[k]
        assert one.smin == chunk.smin[k]
        assert one.shift == chunk.shift[k]
        assert one.u.view(np.uint64)[0, 0] \
            == np.asarray(chunk.u_re[0, k]).view(np.uint64)
        assert one.v.view(np.uint64)[1, 1] \
            == np.asarray(chunk.v_re[3, k]).view(np.uint64)


def test_single_complex():
    a = np.array([[1 + 1j, 0], [0, 2 - 1j]])
    res = svd2_single(a)
    assert res.u.dtype == np.complex128
    s = np.array([res.smax, res.smin]) * 2.0 ** -res.shift
    rec = res.u @ np.diag(s) @ res.v.conj().T
    assert np.abs(rec - a).max() < 1e-15 * np.abs(a).max()


# ----------------------------------------------------------------------
# run_batch
# ----------------------------------------------------------------------

def test_run_batch_real_roundtrip():
    mats = rand_mats(1000, seed=32)
    out, wall = run_batch(pack(mats), RunConfig(backscale_mode="safe"))
    assert out.n == 1000 and wall > 0.0
    recs = unpack(out)
    assert len(recs) == 1000
    for k in (0, 137, 999):
        r = recs[k]
        s = np.array([r.smax, r.smin])
        if not (r.shift == 0.0 and np.signbit(r.shift)):
            s = s * 2.0 ** -r.shift
        rec = r.u @ np.diag(s) @ r.v.T
        scale = np.abs(mats[k]).max()
        assert np.abs(rec - mats[k]).max() <= 1e-13 * scale


def test_run_batch_pointwise_equals_vectorized():
    for field in (False, True):
        mats = rand_mats(500, seed=33, complex_field=field)
        b = pack(mats)
        cfg_v = RunConfig(field=b.field, path="vectorized", threads=1)
        cfg_p = RunConfig(field=b.field, path="pointwise", threads=1)
        out_v, _ = run_batch(b, cfg_v)
        out_p, _ = run_batch(b, cfg_p)
        assert_out_equal(out_v, out_p)


def test_run_batch_thread_counts_agree():
    mats = rand_mats(10000, seed=34)
    b = pack(mats)
    outs = []
    for t in (1, 2, 0):
        out, _ = run_batch(b, RunConfig(threads=t))
        outs.append(out)
    assert_out_equal(outs[0], outs[1])
    assert_out_equal(outs[0], outs[2])


def test_run_batch_repeat_determinism():
    mats = rand_mats(5000, seed=35, complex_field=True)
    b = pack(mats)
    cfg = RunConfig(field="complex", threads=0)
    out1, _ = run_batch(b, cfg)
    out2, _ = run_batch(b, cfg)
    assert_out_equal(out1, out2)


def test_run_batch_partition_invariance():
    # one 10k batch equals the concatenation of aligned sub-batches
    mats = rand_mats(10240, seed=36)
    whole, _ = run_batch(pack(mats), RunConfig(threads=1))
    lo_out, _ = run_batch(pack(mats[:4096]), RunConfig(threads=1))
    hi_out, _ = run_batch(pack(mats[4096:]), RunConfig(threads=1))
    pieces = np.concatenate([lo_out.smax, hi_out.smax])
    assert np.array_equal(whole.smax.view(np.uint64),
                          pieces.view(np.uint64))
    pieces = np.concatenate([lo_out.u_re[1], hi_out.u_re[1]])
    assert np.array_equal(whole.u_re[1].view(np.uint64),
                          pieces.view(np.uint64))


def test_run_batch_padding_lanes_discarded():
    mats = rand_mats(5, seed=37)
    b = pack(mats)
    out, _ = run_batch(b, RunConfig())
    assert out.n == 5 and out.n_hat == 8
    assert len(unpack(out)) == 5
    # padding lanes computed as zero matrices: sigma 0, shift DBL_MAX
    assert (out.smax[5:] == 0.0).all()
    assert (out.shift[5:] == 1.7976931348623157e308).all()


def test_run_batch_field_mismatch_rejected():
    b = pack(rand_mats(8, seed=38))
    with pytest.raises(ValueError):
        run_batch(b, RunConfig(field="complex"))


def test_run_batch_backscale_modes():
    # lane 0: smin 1e-310 sits below the normal range, so the safe
    # mode refuses to undo the scaling; lane 1 is ordinary
    mats = np.stack([np.diag([1e300, 1e-310]), np.diag([3.0, 1.0])])
    b = pack(mats)
    out_none, _ = run_batch(b, RunConfig(backscale_mode="none"))
    assert (out_none.shift[:2] != 0.0).all()
    out_safe, _ = run_batch(b, RunConfig(backscale_mode="safe"))
    # ordinary lane granted: exact values, sentinel shift
    assert out_safe.smax[1] == 3.0 and out_safe.smin[1] == 1.0
    assert np.signbit(out_safe.shift[1]) and out_safe.shift[1] == 0.0
    # refused lane keeps the scaled values and the true shift
    assert out_safe.shift[0] == out_none.shift[0] != 0.0
    assert out_safe.smax[0] == out_none.smax[0]
    # unconditional undoes the scaling anyway, exactly here
    out_unc, _ = run_batch(b, RunConfig(backscale_mode="unconditional"))
    assert out_unc.smax[0] == 1e300 and out_unc.smin[0] == 1e-310
    assert np.signbit(out_unc.shift[0]) and out_unc.shift[0] == 0.0


def test_run_batch_sine_form_runs():
    mats = rand_mats(64, seed=39)
    out_t, _ = run_batch(pack(mats), RunConfig())
    out_s, _ = run_batch(pack(mats), RunConfig(), sine_form=True)
    assert np.array_equal(out_t.smax.view(np.uint64),
                          out_s.smax.view(np.uint64))
    assert (np.abs(out_t.u_re - out_s.u_re) <= 8 * 2.0 ** -53).all()


def test_run_batch_dump_states(tmp_path):
    mats = rand_mats(16, seed=40)
    path = tmp_path / "states.bin"
    out, _ = run_batch(pack(mats), RunConfig(), dump_states_to=path)
    data = np.fromfile(path, dtype="<f8")
    # 16 real-field state trains of n_hat lanes each: shift, two swap
    # masks, four phases, tan/cos, three triangle entries, two rotation
    # tangents, two scaled singular values
    assert data.size == 16 * 16
    assert np.isfinite(data).all()


def test_wall_time_measures_work_only():
    # a tiny batch should report microseconds, not import time
    out, wall = run_batch(pack(rand_mats(8, seed=41)), RunConfig())
    assert 0.0 < wall < 1.0
