"""Classification, fixed points and iteration of a few Moebius maps.

Run:  python demos/moebius_tour.py
"""

from modequiv import moebius as mb
from modequiv.cli import format_complex

maps = {
    "T": mb.T,
    "S": mb.S,
    "P": mb.P,
    "diag(2, 1/2)": mb.mobius(2, 0, 0, 0.5),
    "diag(2i, -i/2)": mb.mobius(2j, 0, 0, -0.5j),
}
for name, g in maps.items():
    cls = mb.classify(g)
    fps = ", ".join(f"{format_complex(complex(f'{p.point:.4g}'))} ({p.nature})" for p in mb.fixed_points(g))
    print(f"{name:15s} {cls.tag:20s} trace {cls.trace_value.real:+.4g}  fixed: {fps}")

g = mb.mobius(2, 1, 1, 1)
print("\niterating (2,1;1,1) from 0.3+0.2i:", mb.iterate_limit(g, 0.3 + 0.2j, 60))
print("attracting fixed point:           ", mb.attracting_point(g))

z, word, letters = mb.reduce_to_fundamental_domain(0.37 + 0.02j, return_letters=True)
print(f"\n0.37+0.02i reduces to {z:.6f} via {mb.word_string(letters)}")
