"""h_Delta(z) = z + 12 Delta/Delta' commutes with the modular group; z + 1 does not.

Run:  python demos/equivariance.py
"""

import math

from modequiv import equivariant as eq, forms, moebius as mb

h = eq.h_delta()
rep = eq.check_equivariance(h, [mb.S, mb.T], n_samples=500, word_len=8, names=["S", "T"])
print(f"h_Delta: max chordal deviation {rep.max_dev:.2e} over {rep.n_samples} samples")

shift = eq.EquivariantFunction.custom(lambda z: z + 1, "z+1")
rep = eq.check_equivariance(shift, [mb.S, mb.T], n_samples=500, names=["S", "T"])
print(f"z + 1:   max deviation {rep.max_dev:.2e}, {rep.n_fail} failing samples")

# the quasi-form attached to h_Delta is (i pi / 6) E2
g = eq.hat(h)
z = 0.2 + 0.9j
print(f"hat(h_Delta)({z}) = {g(z):.12f}")
print(f"(i pi/6) E2({z})  = {(1j * math.pi / 6) * forms.get_form('E2')(z):.12f}")
