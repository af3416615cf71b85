"""Command-line workflow: generate test files, run batches, compare.

Three subcommands::

    lanesvd generate --out FILE --n COUNT --field real|complex
                     [--seed INT | --entropy]
    lanesvd run      --in FILE --field real|complex [--path vec|ptw]
                     [--batch-size N] [--threads T]
                     [--backscale none|safe|unconditional] [--out CSV]
    lanesvd compare  --vec CSV --ptw CSV [--out CSV]

Test files are raw little-endian binary64, eight matrices per record.
A real record is 4 consecutive 8-lane vectors (256 bytes) in entry
order e11, e21, e12, e22; a complex record is 8 vectors (512 bytes)
with re/im interleaved per entry.  Matrix k of the file lives in lane
``k % 8`` of record ``k // 8``.  Every value is finite; magnitudes
span the whole binary64 range including subnormals.

``run`` streams the file in batches, decomposes each and reports one
CSV row per batch: wall seconds to microsecond resolution and the
double-double quality measures with 21 significant digits.
``compare`` joins two such reports (pointwise and vectorized runs of
the same file) into per-batch speedups plus a min/median/max summary.

Exit codes: 0 success, 1 usage error, 2 data error (malformed file,
non-finite values, mismatched reports).
"""

from __future__ import annotations

import argparse
import csv
import sys

import mpmath
import numpy as np

from . import layout
from .driver import RunConfig, run_batch
from .lanes import LANE_WIDTH
from .verify import metrics

__all__ = ["main", "generate", "run", "compare", "DataError",
           "random_finite", "read_testfile", "REPORT_COLUMNS"]

REPORT_COLUMNS = ("batch_index", "n", "path", "field", "wall_time_s",
                  "kappa", "rho", "delta", "eta", "backscale_skipped_count")

COMPARE_COLUMNS = ("batch_index", "n", "field", "wall_time_ptw_s",
                   "wall_time_vec_s", "speedup", "speedup_min",
                   "speedup_median", "speedup_max")

_VECS_PER_RECORD = {"real": 4, "complex": 8}


class DataError(Exception):
    """Malformed or inconsistent input data (exit code 2)."""


def random_finite(rng, count):
    """``count`` float64 values drawn as uniform 64-bit patterns.

    Non-finite patterns (one in 512) are redrawn in place, so the
    output is finite, covers the whole magnitude range including
    subnormals and both zero signs, and is reproducible from the
    generator state.
    """
    vals = rng.integers(0, 2 ** 64, size=count,
                        dtype=np.uint64).view(np.float64)
    bad = ~np.isfinite(vals)
    while bad.any():
        redraw = rng.integers(0, 2 ** 64, size=int(bad.sum()),
                              dtype=np.uint64).view(np.float64)
        vals[bad] = redraw
        bad = ~np.isfinite(vals)
    return vals


def generate(path, count, field, seed=None, entropy=False):
    """Write a test file of at least ``count`` random matrices.

    The count is rounded up to a whole number of 8-matrix records.
    With ``entropy`` the generator is seeded from the operating
    system; otherwise ``seed`` (default 0) makes the file
    reproducible.  Returns the number of matrices written.
    """
    if field not in _VECS_PER_RECORD:
        raise DataError("unknown field %r" % (field,))
    if count < 1:
        raise DataError("count must be positive")
    n = layout.padded_len(count)
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence() if entropy else (0 if seed is None else seed)))
    vecs = _VECS_PER_RECORD[field]
    vals = random_finite(rng, n * vecs).reshape(n // LANE_WIDTH,
                                                vecs, LANE_WIDTH)
    with open(path, "wb") as fh:
        vals.astype("<f8", copy=False).tofile(fh)
    return n


def read_testfile(path, field):
    """Load a test file into component trains.

    Returns ``(re, im)`` where ``re`` is a (4, n) float64 array in
    entry order and ``im`` is the matching imaginary array or None
    for a real file.  Raises :class:`DataError` on a missing file, a
    size that is not a whole number of records, or non-finite values.
    """
    if field not in _VECS_PER_RECORD:
        raise DataError("unknown field %r" % (field,))
    vecs = _VECS_PER_RECORD[field]
    record_bytes = vecs * LANE_WIDTH * 8
    try:
        raw = np.fromfile(path, dtype="<f8")
    except OSError as exc:
        raise DataError("cannot read %s: %s" % (path, exc))
    if raw.size == 0:
        raise DataError("%s is empty" % path)
    if (raw.size * 8) % record_bytes:
        raise DataError("%s is not a whole number of %d-byte %s records"
                        % (path, record_bytes, field))
    if not np.isfinite(raw).all():
        raise DataError("%s contains non-finite values" % path)
    recs = raw.reshape(-1, vecs, LANE_WIDTH)
    if field == "real":
        re = np.ascontiguousarray(
            recs.transpose(1, 0, 2).reshape(4, -1))
        return re, None
    re = np.ascontiguousarray(
        recs[:, 0::2, :].transpose(1, 0, 2).reshape(4, -1))
    im = np.ascontiguousarray(
        recs[:, 1::2, :].transpose(1, 0, 2).reshape(4, -1))
    return re, im


def _fmt_metric(x):
    if mpmath.isinf(x):
        return "inf"
    return mpmath.nstr(x, 22)


def run(path, field, path_kind="vectorized", batch_size=2 ** 20,
        threads=0, backscale_mode="none"):
    """Decompose a test file batch by batch.

    Yields one report row (dict keyed by :data:`REPORT_COLUMNS`) per
    batch.  ``backscale_skipped_count`` counts the genuine lanes
    whose reported singular values do not live in the original-matrix
    domain: every lane under mode "none", the refused lanes under
    "safe", and the lanes whose values came out non-finite under
    "unconditional".
    """
    if batch_size < 1:
        raise DataError("batch size must be positive")
    re, im = read_testfile(path, field)
    n_total = re.shape[1]
    cfg = RunConfig(field=field, path=path_kind, threads=threads,
                    backscale_mode=backscale_mode)
    for index, lo in enumerate(range(0, n_total, batch_size)):
        hi = min(lo + batch_size, n_total)
        batch = layout.from_trains(re[:, lo:hi],
                                   im[:, lo:hi] if im is not None else None)
        out, wall = run_batch(batch, cfg)
        m = metrics(batch, out)
        shift = out.shift[:batch.n]
        in_a_domain = (shift == 0.0) & np.signbit(shift)
        skipped = int(batch.n - np.count_nonzero(in_a_domain))
        if backscale_mode == "unconditional":
            skipped = m.rho_excluded_lanes
        yield {
            "batch_index": index,
            "n": batch.n,
            "path": path_kind,
            "field": field,
            "wall_time_s": "%.6f" % wall,
            "kappa": _fmt_metric(m.kappa),
            "rho": _fmt_metric(m.rho),
            "delta": _fmt_metric(m.delta),
            "eta": _fmt_metric(m.eta),
            "backscale_skipped_count": skipped,
        }


def _write_csv(rows, columns, stream):
    writer = csv.DictWriter(stream, fieldnames=list(columns))
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def _read_report(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise DataError("cannot read %s: %s" % (path, exc))
    if not rows:
        raise DataError("%s has no report rows" % path)
    for col in REPORT_COLUMNS:
        if col not in rows[0]:
            raise DataError("%s lacks column %r" % (path, col))
    return {row["batch_index"]: row for row in rows}


def compare(vec_report, ptw_report):
    """Join two reports of the same file into speedup rows.

    Batches are matched by index and must agree on n and field.
    Yields one row per batch plus a summary row carrying the min,
    median and max speedup.
    """
    vec = _read_report(vec_report)
    ptw = _read_report(ptw_report)
    if set(vec) != set(ptw):
        raise DataError("reports cover different batches")
    speedups = []
    rows = []
    for key in sorted(vec, key=lambda s: int(s)):
        a, b = vec[key], ptw[key]
        if a["n"] != b["n"] or a["field"] != b["field"]:
            raise DataError("batch %s differs between reports" % key)
        t_vec = float(a["wall_time_s"])
        t_ptw = float(b["wall_time_s"])
        if t_vec <= 0:
            raise DataError("non-positive vectorized wall time in batch %s"
                            % key)
        s = t_ptw / t_vec
        speedups.append(s)
        rows.append({
            "batch_index": key, "n": a["n"], "field": a["field"],
            "wall_time_ptw_s": "%.6f" % t_ptw,
            "wall_time_vec_s": "%.6f" % t_vec,
            "speedup": "%.9g" % s,
        })
    rows.append({
        "batch_index": "summary",
        "speedup_min": "%.9g" % min(speedups),
        "speedup_median": "%.9g" % float(np.median(speedups)),
        "speedup_max": "%.9g" % max(speedups),
    })
    return rows


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="lanesvd",
        description="Batched SVDs of 2x2 matrices: generate test files, "
                    "decompose them, compare run reports.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random test file")
    g.add_argument("--out", required=True, help="output file path")
    g.add_argument("--n", type=int, required=True,
                   help="matrix count (rounded up to whole records)")
    g.add_argument("--field", choices=("real", "complex"), default="real")
    seed_grp = g.add_mutually_exclusive_group()
    seed_grp.add_argument("--seed", type=int, default=None,
                          help="PRNG seed (default 0)")
    seed_grp.add_argument("--entropy", action="store_true",
                          help="seed from the operating system")

    r = sub.add_parser("run", help="decompose a test file and report")
    r.add_argument("--in", dest="infile", required=True)
    r.add_argument("--field", choices=("real", "complex"), default="real")
    r.add_argument("--path", choices=("vec", "ptw"), default="vec",
                   help="vectorized slabs or pointwise single lanes")
    r.add_argument("--batch-size", type=int, default=2 ** 20)
    r.add_argument("--threads", type=int, default=0,
                   help="worker threads (0 = all cores)")
    r.add_argument("--backscale", choices=("none", "safe", "unconditional"),
                   default="none")
    r.add_argument("--out", default=None, help="CSV path (default stdout)")

    c = sub.add_parser("compare", help="speedups from two run reports")
    c.add_argument("--vec", required=True, help="vectorized run CSV")
    c.add_argument("--ptw", required=True, help="pointwise run CSV")
    c.add_argument("--out", default=None, help="CSV path (default stdout)")
    return parser


def _emit(rows, columns, out_path):
    if out_path is None:
        _write_csv(rows, columns, sys.stdout)
    else:
        with open(out_path, "w", newline="") as fh:
            _write_csv(rows, columns, fh)


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses status 2 for usage errors; 1 is ours
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "generate":
            written = generate(args.out, args.n, args.field,
                               seed=args.seed, entropy=args.entropy)
            print("wrote %d %s matrices to %s"
                  % (written, args.field, args.out))
        elif args.command == "run":
            kind = "vectorized" if args.path == "vec" else "pointwise"
            rows = list(run(args.infile, args.field, path_kind=kind,
                            batch_size=args.batch_size, threads=args.threads,
                            backscale_mode=args.backscale))
            _emit(rows, REPORT_COLUMNS, args.out)
        else:
            rows = compare(args.vec, args.ptw)
            _emit(rows, COMPARE_COLUMNS, args.out)
    except DataError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
