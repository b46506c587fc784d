"""Zeros of E2 in the strip, their orbits, and the matching critical points of Delta.

Run:  python demos/e2_zeros.py
"""

from modequiv import forms, zerofinder as zf

e2 = forms.get_form("E2", reduced=True)
delta = forms.get_form("Delta", reduced=True)

for im_min in (0.1, 0.05, 0.02):
    box = zf.SearchBox(-0.5, 0.5, im_min, 1.0)
    zeros = zf.find_zeros(e2, box)
    orbits = zf.classify_equivalence(zeros)
    print(f"Im >= {im_min}: {len(zeros)} zeros in {orbits.count} orbits")

print("\nzeros with Im >= 0.05, and whether E4 certifies them simple:")
box = zf.SearchBox(-0.5, 0.5, 0.05, 1.0)
partner = zf.ramanujan_partner("E2")
for r in zf.find_zeros(e2, box):
    simple = zf.simplicity_check(r, e2, partner)
    print(f"  {r.location.real:+.10f} {r.location.imag:+.10f}i  residual {r.residual:.1e}  simple={simple}")

# Delta'/Delta = 2 pi i E2, so the critical points of Delta are the zeros of E2
crit = zf.critical_points(delta, box)
print(f"\ncritical points of Delta in the same box: {len(crit)}")
