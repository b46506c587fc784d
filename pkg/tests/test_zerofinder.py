import cmath
import math

import numpy as np
import pytest

from modequiv import forms as F
from modequiv import moebius as mb
from modequiv import zerofinder as zf
from modequiv.forms import get_form

Box = zf.SearchBox
E2_AXIS = 0.5235217000j
E2_EDGE = 0.5 + 0.1309190304j
E4P_ZERO = 0.5 + 0.4086818600j
E6P_ZERO = 0.5 + 0.6341269863j


class Poly:
    """(z - r1)(z - r2)... with an exact derivative."""

    def __init__(self, *roots):
        self.roots = roots

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return np.prod([z - r for r in self.roots], axis=0)

    def derivative(self, z, order=1):
        z = np.asarray(z, dtype=complex)
        total = np.zeros_like(z)
        for i in range(len(self.roots)):
            total += np.prod([z - r for j, r in enumerate(self.roots) if j != i], axis=0)
        return total


# --- search boxes -----------------------------------------------------------

def test_box_validation():
    with pytest.raises(ValueError):
        Box(0, 1, 0.001, 1)
    with pytest.raises(ValueError):
        Box(1, 0, 0.1, 1)
    assert Box.parse("-0.5,0.5,0.05,1.0") == Box(-0.5, 0.5, 0.05, 1.0)


def test_box_split_covers():
    b = Box(0, 1, 1, 3)
    kids = b.split(0.4)
    assert len(kids) == 4
    area = sum((k.re_max - k.re_min) * (k.im_max - k.im_min) for k in kids)
    assert area == pytest.approx(2.0)


# --- winding numbers ----------------------------------------------------------

def test_winding_examples():
    e2 = get_form("E2")
    assert zf.winding_count(e2, Box(-0.1, 0.1, 0.4, 0.65)) == 1
    assert zf.winding_count(e2, Box(0.2, 0.4, 1.5, 2.0)) == 0


@pytest.mark.parametrize("box", [Box(-0.5, 0.5, 0.3, 2), Box(-0.5, 0.5, 0.05, 0.3), Box(2, 3, 0.5, 1)])
def test_delta_has_no_zeros(box):
    assert zf.winding_count(get_form("Delta", reduced=True), box) == 0


def test_winding_counts_polynomial_roots():
    p = Poly(1j, 0.3 + 0.5j, -0.2 + 0.7j, 5j)
    assert zf.winding_count(p, Box(-1, 1, 0.2, 2)) == 3


def test_winding_additive_over_quadrants():
    e2 = get_form("E2", reduced=True)
    box = Box(-0.5, 0.5, 0.05, 1.0)
    whole = zf.winding_count(e2, box)
    parts = sum(zf.winding_count(e2, q) for q in box.split(0.4871))
    assert whole == parts == 4


def test_boundary_zero_is_jittered():
    # the zero sits on the left edge; jitter moves the box off it
    p = Poly(0.5j)
    assert zf.winding_count(p, Box(0.0, 1.0, 0.25, 1.0)) in (0, 1)


def test_circle_winding():
    p = Poly(1j, 1j + 0.2)
    assert zf.circle_winding(p, 1j, 0.1) == 1
    assert zf.circle_winding(p, 1j + 0.1, 0.2) == 2


# --- zero finding ----------------------------------------------------------------

def test_e2_zeros_on_strip():
    zs = zf.find_zeros(get_form("E2", reduced=True), Box(-0.5, 0.5, 0.05, 1.0))
    locs = [z.location for z in zs]
    assert min(abs(z - E2_AXIS) for z in locs) < 1e-6
    assert min(abs(z - E2_EDGE) for z in locs) < 1e-6
    assert [z.location for z in zs] == sorted(locs, key=lambda w: (w.imag, w.real))


def test_e4_prime_zero():
    (z,) = zf.find_zeros(zf.DerivativeOf(get_form("E4")), Box(0.45, 0.55, 0.3, 0.5))
    assert abs(z.location - E4P_ZERO) < 1e-6


def test_e6_prime_zero():
    (z,) = zf.find_zeros(zf.DerivativeOf(get_form("E6")), Box(0.45, 0.55, 0.55, 0.7))
    assert abs(z.location - E6P_ZERO) < 1e-6


def test_record_properties():
    f = get_form("E2", reduced=True)
    for rec in zf.find_zeros(f, Box(-0.5, 0.5, 0.05, 1.0)):
        fp = abs(complex(f.derivative(np.array([rec.location]), 1)[0]))
        assert rec.converged
        assert rec.residual < 1e-9 * max(1, fp)
        assert rec.winding_confirmed == rec.multiplicity_estimate == 1
        assert rec.newton_iters <= 60
        assert rec.derivative_agreement < 1e-6
        w, _ = mb.reduce_to_fundamental_domain(rec.location)
        assert abs(w - rec.fd_representative) < 1e-9


def test_polynomial_zeros_and_max():
    roots = (0.3 + 0.5j, -0.2 + 0.7j, 0.1 + 1.5j)
    zs = zf.find_zeros(Poly(*roots), Box(-1, 1, 0.2, 2))
    assert len(zs) == 3
    for r in roots:
        assert min(abs(z.location - r) for z in zs) < 1e-12
    assert len(zf.find_zeros(Poly(*roots), Box(-1, 1, 0.2, 2), max_zeros=1)) == 1


def test_axis_zeros_are_on_axes_and_e2_is_real_there():
    f = get_form("E2", reduced=True)
    for rec in zf.find_zeros(f, Box(-0.5, 0.5, 0.05, 1.0)):
        x = rec.location.real
        if abs(x) < 1e-6 or abs(abs(x) - 0.5) < 1e-6:
            assert abs(x) < 1e-9 or abs(abs(x) - 0.5) < 1e-9
    y = np.linspace(0.1, 2, 50)
    assert np.max(np.abs(f(1j * y).imag)) < 1e-10
    assert np.max(np.abs(f(0.5 + 1j * y).imag)) < 1e-10


def test_zero_count_grows_toward_axis():
    f = get_form("E2", reduced=True)
    counts = [len(zf.find_zeros(f, Box(-0.5, 0.5, y, 1.0))) for y in (0.1, 0.05, 0.02)]
    assert counts[0] < counts[1] < counts[2]


# --- critical points ---------------------------------------------------------------

def test_critical_points_of_delta_match_e2_zeros():
    box = Box(-0.5, 0.5, 0.05, 1.0)
    crit = zf.critical_points(get_form("Delta", reduced=True), box)
    zeros = zf.find_zeros(get_form("E2", reduced=True), box)
    assert len(crit) == len(zeros)
    for c in crit:
        assert min(abs(c.location - z.location) for z in zeros) < 1e-8


def test_critical_points_of_e4():
    crit = zf.critical_points(get_form("E4"), Box(0.45, 0.55, 0.3, 0.5))
    assert any(abs(c.location - E4P_ZERO) < 1e-6 for c in crit)


def test_exponential_has_no_critical_points():
    assert zf.critical_points(F.closed_form("exponential", rate=2j), Box(-1, 1, 0.2, 2)) == []


# --- orbits -------------------------------------------------------------------------

def test_classify_examples():
    part = zf.classify_equivalence([1j + 1, 1j, mb.apply(mb.S, 1j)])
    assert part.count == 1
    assert zf.classify_equivalence([E2_AXIS, E2_EDGE]).count == 2
    assert zf.classify_equivalence([]).count == 0


def test_classify_uses_boundary_identifications():
    rho = cmath.exp(2j * math.pi / 3)
    assert zf.classify_equivalence([rho, rho + 1, 0.5 + 3j, -0.5 + 3j]).count == 2


def test_classify_invariant_under_group():
    pts = [E2_AXIS, E2_EDGE, 0.3 + 0.8j, -0.1 + 0.25j, 0.2 + 2j]
    base = zf.classify_equivalence(pts).count
    for g in (mb.S, mb.T @ mb.S, mb.P @ mb.T @ mb.T, mb.mobius(2, 1, 1, 1)):
        moved = [complex(mb.apply(g, z)) for z in pts]
        assert zf.classify_equivalence(moved).count == base


# --- simplicity -----------------------------------------------------------------------

def test_simplicity_examples():
    assert zf.simplicity_check(E2_AXIS, get_form("E2"), zf.ramanujan_partner("E2"))
    assert zf.simplicity_check(E4P_ZERO, None, zf.ramanujan_partner("E4'"))
    assert zf.simplicity_check(E6P_ZERO, None, zf.ramanujan_partner("E6'"))
    assert not zf.simplicity_check(1j, Poly(1j, 1j))
    with pytest.raises(KeyError):
        zf.ramanujan_partner("Delta")


# --- failure modes -------------------------------------------------------------------

def test_negative_winding_means_poles():
    class Inverse:
        def __call__(self, z):
            return 1 / (np.asarray(z) - 1j)

        def derivative(self, z, order=1):
            return -1 / (np.asarray(z) - 1j) ** 2

    with pytest.raises(zf.WindingError):
        zf.find_zeros(Inverse(), Box(-1, 1, 0.5, 2))
