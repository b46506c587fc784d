import cmath
import math

import numpy as np
import pytest

from modequiv import equivariant as eq
from modequiv import forms as F
from modequiv import moebius as mb
from modequiv.forms import get_form

rng = np.random.default_rng(21)
Z50 = rng.uniform(-0.5, 0.5, 50) + 1j * rng.uniform(0.4, 2.0, 50)
RHO = cmath.exp(2j * math.pi / 3)
E2_ZEROS = (0.5235217000j, 0.5 + 0.1309190304j)


# --- h_f formulas ----------------------------------------------------------------

def test_h_delta_closed_formula():
    h = eq.h_delta()
    expected = Z50 + 6 / (math.pi * 1j * get_form("E2")(Z50))
    assert np.max(np.abs(h(Z50) - expected) / np.maximum(1, np.abs(expected))) < 1e-10


@pytest.mark.parametrize("k", [1.0, 12.0, -3.5])
def test_h_of_exponential_is_shift(k):
    r = 0.8 - 2j
    h = eq.make_h_f(F.closed_form("exponential", rate=r), k)
    assert np.max(np.abs(h(Z50) - (Z50 + k / r))) < 1e-12


@pytest.mark.parametrize("p,k", [(2.0, 1.0), (-1.5, 3.0), (0.5, -0.25)])
def test_h_of_power_is_scaling(p, k):
    h = eq.make_h_f(F.closed_form("power_of_z", exponent=p), k)
    assert np.max(np.abs(h(Z50) - Z50 * (1 + k / p))) < 1e-12


def test_make_h_f_rejects_zero_weight():
    with pytest.raises(ValueError):
        eq.make_h_f(get_form("Delta"), 0)


def test_h_fixes_zeros_of_f():
    h = eq.make_h_f(get_form("E4"), 4)
    assert abs(h(RHO) - RHO) < 1e-6


def test_h_fixes_double_zero():
    class Square:
        def __call__(self, z):
            return (np.asarray(z) - 1j) ** 2

        def derivative(self, z, order=1):
            return 2 * (np.asarray(z) - 1j)

    h = eq.make_h_f(Square(), 2)
    assert h(1j) == 1j
    assert abs(h(1j + 1e-3) - (1j + 2e-3)) < 1e-12  # z + 2 (z-i)/2


@pytest.mark.parametrize("z0", E2_ZEROS)
def test_e2_zeros_are_poles_of_h_delta(z0):
    h = eq.make_h_f(get_form("Delta", reduced=True), 12)
    assert abs(1 / h(z0 + 1e-9)) < 1e-5


# --- hat and unhat ----------------------------------------------------------------

def test_hat_of_h_delta_is_scaled_e2():
    g = eq.hat(eq.h_delta())
    expected = (1j * math.pi / 6) * get_form("E2")(Z50)
    assert np.max(np.abs(g(Z50) - expected)) < 1e-10


def test_hat_identity_is_infinity_and_back():
    g = eq.hat(eq.EquivariantFunction.identity_map())
    assert g.is_infinity and mb.is_inf(g(1j))
    h = eq.unhat(eq.QuasiForm21.constant_infinity())
    assert h.kind == "identity" and h(0.3 + 1j) == 0.3 + 1j


def test_round_trips():
    g = eq.e2_quasi()
    assert np.max(np.abs(eq.hat(eq.unhat(g))(Z50) - g(Z50))) < 1e-12
    h = eq.h_delta()
    back = eq.unhat(eq.hat(h))
    dev = mb.chordal_distance(back(Z50), h(Z50))
    assert np.max(dev) < 1e-10


def test_hat_maps_poles_to_zero():
    h = eq.EquivariantFunction.custom(lambda z: np.full(np.shape(z), mb.INF), "pole")
    assert eq.hat(h)(1j) == 0


# --- equivariance -------------------------------------------------------------------

def test_h_delta_equivariant():
    rep = eq.check_equivariance(eq.h_delta(), [mb.S, mb.T], n_samples=500, word_len=8)
    assert rep.n_samples == 500
    assert rep.max_dev < 1e-7 and rep.n_fail == 0


def test_identity_equivariance_exact():
    rep = eq.check_equivariance(eq.EquivariantFunction.identity_map(), [mb.S, mb.T, mb.P],
                                n_samples=100)
    assert rep.max_dev == 0.0


def test_translation_negative_control():
    shift = eq.EquivariantFunction.custom(lambda z: z + 1, "z+1")
    assert eq.check_equivariance(shift, [mb.T], n_samples=100).max_dev < 1e-12
    rep = eq.check_equivariance(shift, [mb.S, mb.T], n_samples=100)
    assert rep.max_dev > 1e-2 and rep.n_fail > 0
    # the single point z = i: S(i+1) versus S(i)+1
    assert mb.chordal_distance(mb.apply(mb.S, 1j + 1), mb.apply(mb.S, 1j) + 1) > 0.1


@pytest.mark.parametrize("name,k", [("E4", 4), ("E6", 6), ("eta", 0.5)])
def test_other_forms_equivariant(name, k):
    h = eq.make_h_f(get_form(name), k)
    rep = eq.check_equivariance(h, [mb.S, mb.T], n_samples=200, word_len=6,
                                min_image_im=0.3)
    assert rep.max_dev < 1e-7


def test_sampling_is_deterministic():
    a = eq.check_equivariance(eq.h_delta(), [mb.S, mb.T], n_samples=50).as_dict()
    b = eq.check_equivariance(eq.h_delta(), [mb.S, mb.T], n_samples=50).as_dict()
    assert a == b


def test_sampling_region():
    words, zs = eq.sample_pairs([mb.S, mb.T], 300, 8)
    assert np.all((zs.real >= -0.5) & (zs.real <= 0.5))
    assert np.all((zs.imag >= 0.3) & (zs.imag <= 3))
    assert all(1 <= len(label.split()) <= 8 for _, label in words)


# --- quasi law ------------------------------------------------------------------------

def test_quasi_law_e2():
    assert eq.quasi_law_check(eq.e2_quasi(), 1, [mb.S, mb.T], min_image_im=0.3).max_dev < 1e-8


def test_quasi_law_log_derivative_of_delta():
    d = get_form("Delta")
    L = eq.QuasiForm21(lambda z: F.logarithmic_derivative(d, z), "L_Delta")
    assert eq.quasi_law_check(L, 12, [mb.S, mb.T], min_image_im=0.3).max_dev < 1e-8


def test_quasi_law_negative_control_e4():
    e4 = eq.QuasiForm21(get_form("E4"), "E4")
    assert eq.quasi_law_check(e4, 1, [mb.S, mb.T]).max_dev > 1e-2
    # directly at z = i for S: E4(i) (i)^-2 - E4(i) - 1/i
    z = 1j
    resid = get_form("E4")(mb.apply(mb.S, z)) / z**2 - get_form("E4")(z) - 1 / z
    assert abs(resid) > 1
