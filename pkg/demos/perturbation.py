"""Zeros of j' F'(j) + (i pi/6) E2 for a few choices of F.

F constant gives back the zeros of E2.  For F = exp the zeros crowd together
about 1/|j| apart as Im z decreases, so the scan stops after a couple of orbits.

Run:  python demos/perturbation.py
"""

from modequiv import identities

for rule in ("constant", "polynomial", "exp"):
    rep = identities.quasimodular_perturbation_demo(rule)
    print(f"F = {rule}: {rep['n_zeros']} zeros, {rep['orbit_count']} orbits, "
          f"complete scan: {rep['complete']}, "
          f"equivariance max dev {rep['equivariance']['max_dev']:.1e}")
    for x, y in rep["zeros"][:4]:
        print(f"    {x:+.10f} {y:+.10f}i")
