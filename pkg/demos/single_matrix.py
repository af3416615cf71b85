"""Decompose one 2x2 matrix and check the factors by hand.

The library returns the scaled singular values together with the
power-of-two shift that was applied to the input, so nothing can
overflow on the way; backscale() undoes the shift when it is safe.
"""

import numpy as np

from lanesvd import svd2_single
from lanesvd.svd2 import backscale

a = np.array([[4.0, 2.0],
              [3.0, -1.0]])
res = svd2_single(a)

print("input:")
print(a)
print("shift (exponent of the exact scaling): %g" % res.shift)
print("scaled singular values: %.17g, %.17g" % (res.smax, res.smin))

smax, smin, shift = backscale(np.array([res.smax]), np.array([res.smin]),
                              np.array([res.shift]), mode="safe")
print("backscaled singular values: %.17g, %.17g" % (smax[0], smin[0]))

print("U =")
print(res.u)
print("V =")
print(res.v)

rec = res.u @ np.diag([smax[0], smin[0]]) @ res.v.T
print("U diag(sigma) V^T =")
print(rec)
print("max reconstruction error: %.3e" % np.abs(rec - a).max())

# the same call accepts complex input; factors become unitary
c = np.array([[1 + 2j, 0.5], [0, 3 - 1j]])
rc = svd2_single(c)
s = np.array([rc.smax, rc.smin]) * 2.0 ** -rc.shift
print("\ncomplex input singular values:", s)
print("U^H U =")
print(np.round(rc.u.conj().T @ rc.u, 15))
