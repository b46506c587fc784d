import cmath
import math

import mpmath
import numpy as np
import pytest

from modequiv import forms as F
from modequiv import moebius as mb
from modequiv.forms import get_form

mpmath.mp.dps = 30
rng = np.random.default_rng(11)
SAMPLE = rng.uniform(-0.5, 0.5, 100) + 1j * rng.uniform(0.4, 2.0, 100)


def mp_eta(z):
    z = mpmath.mpc(z)
    q = mpmath.exp(2j * mpmath.pi * z)
    return mpmath.exp(2j * mpmath.pi * z / 24) * mpmath.qp(q)


# --- registry ---------------------------------------------------------------

def test_registry_names():
    for name in F.FORM_NAMES:
        assert get_form(name).name == name
    with pytest.raises(KeyError):
        get_form("E8")


def test_ms_tables_unit_modulus():
    for name in F.FORM_NAMES:
        assert all(abs(abs(v) - 1) < 1e-12 for v in get_form(name).ms_table.values())
    with pytest.raises(ValueError):
        F.Form("bad", 1, lambda z: z, {"T": 2})


# --- independent oracles ------------------------------------------------------

@pytest.mark.parametrize("z", [0.1 + 0.9j, -0.37 + 0.5j, 0.25 + 1.7j])
def test_eta_against_mpmath(z):
    assert abs(get_form("eta")(z) - complex(mp_eta(z))) < 1e-13


@pytest.mark.parametrize("z", [0.1 + 0.9j, -0.37 + 0.5j, 0.45 + 0.3j])
def test_theta34_against_mpmath(z):
    q = mpmath.exp(2j * mpmath.pi * z)
    assert abs(get_form("theta3")(z) - complex(mpmath.jtheta(3, 0, q))) < 1e-12
    assert abs(get_form("theta4")(z) - complex(mpmath.jtheta(4, 0, q))) < 1e-12


def test_theta2_against_direct_sum():
    z = 0.3 + 0.6j
    direct = sum(cmath.exp(2j * math.pi * z * (n + 0.5) ** 2) for n in range(-40, 40))
    assert abs(get_form("theta2")(z) - direct) < 1e-13
    # real nome: no branch question for q^(1/4)
    q = mpmath.exp(-2 * mpmath.pi * 0.6)
    assert abs(get_form("theta2")(0.6j) - complex(mpmath.jtheta(2, 0, q))) < 1e-13


@pytest.mark.parametrize("z", [0.2 + 1.1j, -0.45 + 0.9j, 0.05 + 0.6j])
def test_j_against_mpmath(z):
    oracle = complex(1728 * mpmath.kleinj(mpmath.mpc(z)))
    assert abs(get_form("j")(z) - oracle) < 1e-9 * max(1, abs(oracle))


def test_eta24_is_delta():
    eta, delta = get_form("eta")(SAMPLE), get_form("Delta")(SAMPLE)
    assert np.max(np.abs(eta**24 - delta) / np.abs(delta)) < 1e-10


def test_theta_eta_relations():
    eta, t = get_form("eta"), {i: get_form(f"theta{i}") for i in (2, 3, 4)}
    z = SAMPLE
    rel = lambda a, b: np.max(np.abs(a - b) / np.maximum(1, np.abs(b)))  # noqa: E731
    assert rel(t[2](z), 2 * eta(4 * z) ** 2 / eta(2 * z)) < 1e-10
    assert rel(t[3](z), eta(2 * z) ** 5 / (eta(z) ** 2 * eta(4 * z) ** 2)) < 1e-10
    assert rel(t[4](z), eta(z) ** 2 / eta(2 * z)) < 1e-10
    # Delta and E4 pair with thetas at doubled argument in q = e^{2 pi i z}
    prod = 0.5 * t[2](z) * t[3](z) * t[4](z)
    assert rel(prod**8, get_form("Delta")(2 * z)) < 1e-10
    e8 = 0.5 * (t[2](z) ** 8 + t[3](z) ** 8 + t[4](z) ** 8)
    assert rel(e8, get_form("E4")(2 * z)) < 1e-10


# --- slash operator -------------------------------------------------------------

def test_slash_delta_t_and_s():
    d = get_form("Delta")
    z = 0.13 + 0.8j
    assert abs(F.slash(d, 12, mb.T, z) / d(z) - 1) < 1e-12
    assert abs(F.slash(d, 12, mb.S, 2j) / d(2j) - 1) < 1e-10


def test_slash_eta_t():
    e = get_form("eta")
    z = -0.2 + 0.7j
    assert abs(F.slash(e, 0.5, mb.T, z) / e(z) - cmath.exp(1j * math.pi / 12)) < 1e-13


def test_slash_rejects_lower_half_plane():
    with pytest.raises(ValueError):
        F.slash(get_form("E4"), 4, mb.S, 0.3 - 1j)


def test_slash_vectorized():
    d = get_form("Delta")
    out = F.slash(d, 12, mb.S, SAMPLE[:10])
    assert out.shape == (10,)
    assert np.allclose(out, d(SAMPLE[:10]), rtol=1e-9, atol=0)


def test_cocycle_modulus():
    eta = get_form("eta")
    gens = [mb.S, mb.T, mb.T.inverse()]
    for _ in range(50):
        g1 = gens[rng.integers(3)] @ gens[rng.integers(3)] @ gens[rng.integers(3)]
        g2 = gens[rng.integers(3)] @ gens[rng.integers(3)]
        z = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.8, 2))
        two_step = F.slash(lambda w: F.slash(eta, 0.5, g1, w), 0.5, g2, z)
        one_step = F.slash(eta, 0.5, g1 @ g2, z)
        assert abs(abs(two_step) - abs(one_step)) < 1e-9 * abs(one_step)


# --- multiplier systems --------------------------------------------------------

@pytest.mark.parametrize("gen,phase", [("T", 1 / 12), ("S", -1 / 4)])
def test_eta_multipliers_t_s(gen, phase):
    nu = F.multiplier_of(get_form("eta"), getattr(mb, gen))
    assert abs(nu - cmath.exp(1j * math.pi * phase)) < 1e-8


def test_eta_multiplier_p_against_high_precision_oracle():
    z = mpmath.mpc(0.17, 0.93)
    pz = -1 / (z + 1)  # P = ST
    oracle = complex(mp_eta(pz) / mp_eta(z) * (z + 1) ** mpmath.mpf(-0.5))
    nu = F.multiplier_of(get_form("eta"), mb.P)
    assert abs(nu - oracle) < 1e-10
    assert abs(nu - cmath.exp(-1j * math.pi / 6)) < 1e-10
    assert abs(nu**24 - 1) < 1e-9


def test_eta_table_matches_numerics():
    eta = get_form("eta")
    for name, g in eta.generators.items():
        assert abs(F.multiplier_of(eta, g) - eta.ms_table[name]) < 1e-8


@pytest.mark.parametrize("i", [2, 3, 4])
def test_theta_tables(i):
    f = get_form(f"theta{i}")
    for name, g in F.THETA_GENERATORS[i].items():
        assert abs(F.multiplier_of(f, g) - f.ms_table[name]) < 1e-8
    assert abs(F.multiplier_of(f, F.THETA_GENERATORS[i]["U" if i != 3 else "T"]) - 1) < 1e-8


def test_multiplier_rejects_non_invariant():
    with pytest.raises(F.MultiplierError):
        F.multiplier_of(get_form("E2"), mb.S)  # quasi-modular: ratio depends on z
    with pytest.raises(F.MultiplierError):
        F.multiplier_of(get_form("E4"), mb.S, weight=2)


# --- closed forms -------------------------------------------------------------------

def test_exponential_under_translation():
    r, b = 0.7j, 1.0
    f = F.closed_form("exponential", weight=3, rate=r)
    nu = F.multiplier_of(f, mb.translation(b))
    assert abs(nu - cmath.exp(r * b)) < 1e-12
    # real rate: ratio e^{rb} has modulus != 1
    with pytest.raises(F.MultiplierError):
        F.multiplier_of(F.closed_form("exponential", weight=3, rate=0.7), mb.translation(b))


@pytest.mark.parametrize("k", [1.0, 2.5, 4.0, 0.3])
def test_power_under_scaling_and_inversion(k):
    f = F.closed_form("power_of_z", weight=k, exponent=-k / 2)
    assert abs(F.multiplier_of(f, mb.scaling(3.7)) - 1) < 1e-12
    assert abs(F.multiplier_of(f, mb.S) - cmath.exp(-1j * math.pi * k / 2)) < 1e-12


def test_cayley_product_degenerate_is_one():
    f = F.ClosedForm.cayley_product(0, 0)
    assert np.allclose(f(SAMPLE[:10]), 1)


def test_closed_form_derivatives_match_finite_differences():
    h = 1e-6
    z = 0.3 + 0.8j
    for cf in (F.ClosedForm.power_of_z(-1.5), F.ClosedForm.exponential(2j),
               F.ClosedForm.cayley_product(2, 0.5)):
        fd = (cf(z + h) - cf(z - h)) / (2 * h)
        assert abs(cf.derivative(z, 1) - fd) < 1e-7 * max(1, abs(fd))
        fd2 = (cf.derivative(z + h, 1) - cf.derivative(z - h, 1)) / (2 * h)
        assert abs(cf.derivative(z, 2) - fd2) < 1e-6 * max(1, abs(fd2))


def test_unknown_closed_form_rule():
    with pytest.raises(ValueError):
        F.ClosedForm("sine")


# --- logarithmic derivatives ----------------------------------------------------

def test_log_derivative_of_delta_is_2pi_i_e2():
    L = F.logarithmic_derivative(get_form("Delta"), SAMPLE)
    assert np.max(np.abs(L - 2j * math.pi * get_form("E2")(SAMPLE))) < 1e-10


def test_log_derivative_of_exponential_is_rate():
    assert F.logarithmic_derivative(F.closed_form("exponential", rate=1.5 - 2j), 0.2 + 1j) == 1.5 - 2j


def test_log_derivative_quasi_law_at_s():
    d = get_form("Delta")
    z = 1 + 2j
    lhs = F.logarithmic_derivative(d, mb.apply(mb.S, z)) * z**-2 - F.logarithmic_derivative(d, z)
    assert abs(lhs - 12 / z) < 1e-10


def test_log_derivative_series_path_matches_lambert():
    # eta's registered Lambert log-derivative vs the generic f'/f route
    eta = get_form("eta")
    z = SAMPLE[:20]
    generic = eta.derivative(z, 1) / eta(z)
    assert np.max(np.abs(F.logarithmic_derivative(eta, z) - generic)) < 1e-11


def test_log_derivative_pole_error():
    f = F.Form("z", 0, F.ClosedForm.power_of_z(1, center=1j).__call__)
    f = F.Form("shifted", 0, type("E", (), {"__call__": lambda s, z: z - 1j,
                                           "derivative": lambda s, z, o=1: 1})())
    with pytest.raises(ZeroDivisionError):
        F.logarithmic_derivative(f, 1j)


# --- reduced evaluation ---------------------------------------------------------------

@pytest.mark.parametrize("name", ["E2", "E4", "E6", "Delta", "j"])
def test_reduced_matches_series(name):
    z = np.array([0.31 + 0.2j, -0.12 + 0.35j, 0.5 + 0.13j])
    direct, reduced = get_form(name), get_form(name, reduced=True)
    scale = np.maximum(1, np.abs(direct(z)))
    assert np.max(np.abs(direct(z) - reduced(z)) / scale) < 1e-9
    dscale = np.maximum(1, np.abs(direct.derivative(z, 1)))
    assert np.max(np.abs(direct.derivative(z, 1) - reduced.derivative(z, 1)) / dscale) < 1e-8


def test_fixed_truncation_context():
    e4 = get_form("E4")
    with F.fixed_truncation(2):
        crude = e4(0.5j)
    assert abs(crude - (1 + 240 * math.exp(-math.pi) + 2160 * math.exp(-2 * math.pi))) < 1e-12
    assert abs(e4(0.5j) - crude) > 1e-6
