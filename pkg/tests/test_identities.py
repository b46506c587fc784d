import json
import math

import numpy as np
import pytest

from modequiv import identities as I
from modequiv import zerofinder as zf

CATALOG = I.full_catalog()
NAMES = [c.name for c in CATALOG]
REQUIRED = {
    "log_div", "jacobi", "delta_theta", "e4_theta", "theta2_eta", "theta3_eta", "theta4_eta",
    "ram1", "ram2", "ram3", "theta2_logderiv", "theta3_logderiv", "theta4_logderiv",
    "j_definition",
}


def test_catalog_size_and_names():
    assert len(CATALOG) >= 13
    assert len(set(NAMES)) == len(NAMES)
    assert REQUIRED <= set(NAMES)


@pytest.mark.parametrize("check", CATALOG, ids=NAMES)
def test_catalog_entry_holds(check):
    rep = I.run_check(check)
    assert rep["n_points"] == 100 and not rep["failed_points"]
    assert rep["max_residual"] < 1e-9, rep
    assert rep["passed"]


def test_sample_region():
    z = CATALOG[0].sample()
    assert z.size == 100
    assert np.all(np.abs(z.real) <= 0.5)
    assert np.all((z.imag >= 0.4) & (z.imag <= 2.0))


def test_catalog_is_deterministic():
    a = json.dumps(I.run_catalog(CATALOG))
    b = json.dumps(I.run_catalog(I.full_catalog()))
    assert a == b


@pytest.mark.parametrize("check", CATALOG, ids=NAMES)
def test_residuals_shrink_when_truncation_doubles(check):
    floor = 1e-12
    prev = None
    for n in (4, 8, 16, 32, 64, 128):
        r = I.run_check(check, order=n)["max_residual"]
        if prev is not None:
            assert r <= prev or r < floor, (n, r, prev)
        prev = r
    assert prev < floor


def test_errors_are_recorded_per_point():
    def lhs(z):
        z = np.asarray(z)
        if np.any(z.imag > 1.5):
            raise ValueError("synthetic failure")
        return z

    check = I.IdentityCheck("partial", lhs, lambda z: np.asarray(z), n_points=20, seed=3)
    rep = I.run_check(check)
    n_bad = int(np.sum(check.sample().imag > 1.5))
    assert 0 < len(rep["failed_points"]) == n_bad
    assert not rep["passed"]


def test_residual_modes():
    big = I.IdentityCheck("abs", lambda z: 1000 * np.ones_like(z) + 1, lambda z: 1000 * np.ones_like(z),
                          residual_mode="absolute", n_points=5)
    rel = I.IdentityCheck("rel", big.lhs, big.rhs, n_points=5)
    assert I.run_check(big)["max_residual"] == pytest.approx(1.0)
    assert I.run_check(rel)["max_residual"] == pytest.approx(1e-3)
    with pytest.raises(ValueError):
        I.IdentityCheck("bad", big.lhs, big.rhs, residual_mode="squared")


# --- commonly quoted variants, asserted as stated ----------------------------------------

QUOTED = I.quoted_variant_checks()


@pytest.mark.parametrize("check", QUOTED, ids=[c.name for c in QUOTED])
def test_quoted_variant(check):
    """These assert the formulas exactly as quoted; they fail because the
    quoted prefactors (1/4 pi i, 24/pi i, 1/2 pi i) and the quoted j
    quotient do not hold.  The corrected forms are in the main catalog."""
    rep = I.run_check(check)
    assert rep["max_residual"] < 1e-9, rep


def test_quoted_j_quotient_is_constant():
    # documents why the quoted j quotient cannot be j: it is identically 1728
    rep = I.run_check(I.IdentityCheck(
        "quotient_1728",
        lambda z: (I._f("E4")(z) ** 3 - I._f("E6")(z) ** 2) / I._f("Delta")(z),
        lambda z: np.full(np.shape(z), 1728.0)))
    assert rep["max_residual"] < 1e-9


# --- perturbed quasi-form ---------------------------------------------------------

def test_perturbed_constant_matches_e2():
    rep = I.quasimodular_perturbation_demo("constant")
    assert rep["n_zeros"] >= 1
    for x, y in rep["zeros"]:
        assert zf.find_zeros(I._f("E2"), zf.SearchBox(x - 1e-3, x + 1e-3, y - 1e-3, y + 1e-3))
    assert min(abs(complex(x, y) - 0.5235217000j) for x, y in rep["zeros"]) < 1e-6


def test_perturbed_polynomial_report():
    rep = I.quasimodular_perturbation_demo("polynomial")
    assert rep["F_rule"] == "polynomial"
    assert rep["n_zeros"] >= 1 and rep["orbit_count"] >= 1
    assert set(rep) >= {"zeros", "orbit_count", "threshold", "equivariance", "complete"}


def test_perturbed_exponential():
    rep = I.quasimodular_perturbation_demo("exp")
    assert rep["n_zeros"] >= 1
    assert rep["meets_threshold"]
    assert rep["equivariance"]["max_dev"] < 1e-7


def test_perturbed_function_values_and_derivative():
    f = I.PerturbedQuasiForm("polynomial", coeffs=(0.0, 0.5, 1.0))  # F(w) = w/2 + w^2
    z = np.array([0.1 + 0.9j, -0.3 + 1.1j])
    h = 1e-6
    fd = (f(z + h) - f(z - h)) / (2 * h)
    assert np.max(np.abs(f.derivative(z, 1) - fd) / np.maximum(1, np.abs(fd))) < 1e-6
    e2, j = I._f("E2"), I._f("j")
    expected = j.derivative(z, 1) * (0.5 + 2 * j(z)) + (1j * math.pi / 6) * e2(z)
    assert np.max(np.abs(f(z) - expected) / np.maximum(1, np.abs(expected))) < 1e-10


def test_perturbed_rejects_unknown_rule():
    with pytest.raises(ValueError):
        I.PerturbedQuasiForm("sine")
