"""Drive the command-line workflow end to end.

generate writes a binary test file of random finite matrices, run
decomposes it batch by batch into a CSV report with quality measures,
and compare joins a vectorized and a pointwise report into per-batch
speedups.  The same commands are available as `lanesvd generate`,
`lanesvd run` and `lanesvd compare` on an installed package.
"""

import pathlib
import tempfile

from lanesvd import cli

work = pathlib.Path(tempfile.mkdtemp(prefix="lanesvd-demo-"))
data = work / "matrices.bin"
vec_csv = work / "vec.csv"
ptw_csv = work / "ptw.csv"
cmp_csv = work / "compare.csv"

print("$ lanesvd generate --out %s --n 20000 --field real --seed 1" % data)
cli.main(["generate", "--out", str(data), "--n", "20000",
          "--field", "real", "--seed", "1"])
print("file size: %d bytes\n" % data.stat().st_size)

print("$ lanesvd run --in %s --path vec --batch-size 8192 --out %s"
      % (data, vec_csv))
cli.main(["run", "--in", str(data), "--path", "vec",
          "--batch-size", "8192", "--backscale", "safe",
          "--out", str(vec_csv)])
print(vec_csv.read_text())

print("$ lanesvd run --in %s --path ptw ... --out %s" % (data, ptw_csv))
cli.main(["run", "--in", str(data), "--path", "ptw",
          "--batch-size", "8192", "--backscale", "safe",
          "--out", str(ptw_csv)])

print("$ lanesvd compare --vec %s --ptw %s" % (vec_csv, ptw_csv))
cli.main(["compare", "--vec", str(vec_csv), "--ptw", str(ptw_csv),
          "--out", str(cmp_csv)])
print(cmp_csv.read_text())

print("exit code on a malformed file:",
      cli.main(["run", "--in", str(work / "missing.bin")]))
