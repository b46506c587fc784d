"""Numerical verification of the classical identities between E2, E4, E6,
Delta, j, eta and the theta functions, plus the quasi-modular perturbation demo.

Each :class:`IdentityCheck` compares two evaluators on seeded random points of
the upper half-plane.  Residuals are relative to ``max(1, |rhs|)`` by default
so that points where the right-hand side is tiny do not dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import equivariant as eq
from . import forms
from . import moebius as mb
from . import zerofinder as zf

TWO_PI_I = 2j * math.pi
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: Callable
    rhs: Callable
    description: str = ""
    n_points: int = 100
    im_range: tuple = (0.4, 2.0)
    seed: int = 0
    residual_mode: str = "relative"

    def __post_init__(self):
        if self.residual_mode not in ("absolute", "relative"):
            raise ValueError(f"unknown residual mode {self.residual_mode!r}")

    def sample(self) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        x = rng.uniform(-0.5, 0.5, self.n_points)
        y = rng.uniform(*self.im_range, self.n_points)
        return x + 1j * y


def _residuals(c: IdentityCheck, z: np.ndarray) -> np.ndarray:
    lhs = np.asarray(c.lhs(z), dtype=complex)
    rhs = np.asarray(c.rhs(z), dtype=complex)
    res = np.abs(lhs - rhs)
    if c.residual_mode == "relative":
        res = res / np.maximum(1.0, np.abs(rhs))
    return res


def run_check(c: IdentityCheck, order: int | None = None, tol: float = DEFAULT_TOL) -> dict:
    """Evaluate one identity on its sample.  ``order`` pins the truncation of
    every q-series involved; a point that fails to evaluate is reported
    individually instead of aborting the check."""
    z = c.sample()
    errors = []
    with forms.fixed_truncation(order):
        try:
            res = _residuals(c, z)
        except (ValueError, ArithmeticError):
            res = np.empty(z.size)
            for i, zi in enumerate(z):
                try:
                    res[i] = _residuals(c, zi[None])[0]
                except (ValueError, ArithmeticError) as err:
                    res[i] = np.nan
                    errors.append({"z": [zi.real, zi.imag], "error": str(err)})
    finite = np.nan_to_num(res, nan=np.inf)
    worst = int(np.argmax(finite))
    max_res = float(finite[worst])
    return {
        "name": c.name,
        "description": c.description,
        "max_residual": max_res,
        "mean_residual": float(np.mean(finite)),
        "worst_point": [float(z[worst].real), float(z[worst].imag)],
        "n_points": int(z.size),
        "failed_points": errors,
        "tolerance": tol,
        "passed": bool(max_res < tol),
    }


def run_catalog(checks=None, order: int | None = None, tol: float = DEFAULT_TOL) -> list[dict]:
    return [run_check(c, order, tol) for c in (checks or full_catalog())]


# ---------------------------------------------------------------------------
# the catalog


def _f(name):
    return forms.get_form(name)


def _at(name, scale):
    f = _f(name)
    return lambda z: f(scale * np.asarray(z))


def _logd(name):
    f = _f(name)
    return lambda z: f.derivative(z, 1) / f(z)


def _theta_logderiv(i):
    # d/dz log theta_i, divided by pi i / 6
    ld = _logd(f"theta{i}")
    return lambda z: (6 / (math.pi * 1j)) * ld(z)


def full_catalog(n_points: int = 100, seed: int = 0, im_range=(0.4, 2.0)) -> list[IdentityCheck]:
    E2, E4, E6 = _f("E2"), _f("E4"), _f("E6")
    D, J, eta = _f("Delta"), _f("j"), _f("eta")
    th2, th3, th4 = _f("theta2"), _f("theta3"), _f("theta4")
    e2_2, e2_4 = _at("E2", 2), _at("E2", 4)
    eta1, eta2, eta4 = eta, _at("eta", 2), _at("eta", 4)

    entries = [
        ("log_div", lambda z: _logd("Delta")(z) / TWO_PI_I, E2,
         "E2 = (1/2 pi i) Delta'/Delta"),
        ("jacobi", lambda z: th2(z) ** 4 + th4(z) ** 4, lambda z: th3(z) ** 4,
         "theta2^4 + theta4^4 = theta3^4"),
        # with q = e^{2 pi i z} the theta functions live at twice the usual variable
        ("delta_theta", _at("Delta", 2), lambda z: (0.5 * th2(z) * th3(z) * th4(z)) ** 8,
         "Delta(2z) = (theta2 theta3 theta4 / 2)^8"),
        ("e4_theta", _at("E4", 2), lambda z: 0.5 * (th2(z) ** 8 + th3(z) ** 8 + th4(z) ** 8),
         "E4(2z) = (theta2^8 + theta3^8 + theta4^8) / 2"),
        ("theta2_eta", th2, lambda z: 2 * eta4(z) ** 2 / eta2(z),
         "theta2(z) = 2 eta(4z)^2 / eta(2z)"),
        ("theta3_eta", th3, lambda z: eta2(z) ** 5 / (eta1(z) ** 2 * eta4(z) ** 2),
         "theta3(z) = eta(2z)^5 / (eta(z)^2 eta(4z)^2)"),
        ("theta4_eta", th4, lambda z: eta1(z) ** 2 / eta2(z),
         "theta4(z) = eta(z)^2 / eta(2z)"),
        ("eta24_delta", lambda z: eta(z) ** 24, D, "eta^24 = Delta"),
        ("ram1", lambda z: (6 / (math.pi * 1j)) * E2.derivative(z, 1),
         lambda z: E2(z) ** 2 - E4(z), "(6/pi i) E2' = E2^2 - E4"),
        ("ram2", lambda z: (3 / TWO_PI_I) * E4.derivative(z, 1),
         lambda z: E4(z) * E2(z) - E6(z), "(3/2 pi i) E4' = E4 E2 - E6"),
        ("ram3", lambda z: (1 / (math.pi * 1j)) * E6.derivative(z, 1),
         lambda z: E6(z) * E2(z) - E4(z) ** 2, "(1/pi i) E6' = E6 E2 - E4^2"),
        ("theta2_logderiv", _theta_logderiv(2), lambda z: 4 * e2_4(z) - e2_2(z),
         "(6/pi i) theta2'/theta2 = 4 E2(4z) - E2(2z)"),
        ("theta3_logderiv", _theta_logderiv(3),
         lambda z: 5 * e2_2(z) - E2(z) - 4 * e2_4(z),
         "(6/pi i) theta3'/theta3 = 5 E2(2z) - E2(z) - 4 E2(4z)"),
        ("theta4_logderiv", _theta_logderiv(4), lambda z: E2(z) - e2_2(z),
         "(6/pi i) theta4'/theta4 = E2(z) - E2(2z)"),
        ("discriminant_1728", lambda z: E4(z) ** 3 - E6(z) ** 2, lambda z: 1728 * D(z),
         "E4^3 - E6^2 = 1728 Delta"),
        ("j_definition", J, lambda z: E4(z) ** 3 / D(z),
         "j (fundamental-domain evaluation) = E4^3/Delta"),
        ("j_1728", J, lambda z: 1728 * E4(z) ** 3 / (E4(z) ** 3 - E6(z) ** 2),
         "j = 1728 E4^3 / (E4^3 - E6^2)"),
    ]
    return [IdentityCheck(n, l, r, d, n_points, tuple(im_range), seed) for n, l, r, d in entries]


def quoted_variant_checks(n_points: int = 100, seed: int = 0) -> list[IdentityCheck]:
    """Commonly quoted variants that do not hold numerically: the theta
    log-derivative formulas with prefactors 1/(4 pi i), 24/(pi i) and
    1/(2 pi i) (all three should be 6/(pi i)), and j = (E4^3 - E6^2)/Delta,
    which is the constant 1728."""
    e2, e2_2, e2_4 = _f("E2"), _at("E2", 2), _at("E2", 4)
    l2, l3, l4 = _logd("theta2"), _logd("theta3"), _logd("theta4")
    E4, E6, D, J = _f("E4"), _f("E6"), _f("Delta"), _f("j")
    entries = [
        ("theta2_logderiv_quoted", lambda z: l2(z) / (4j * math.pi),
         lambda z: 4 * e2_4(z) - e2_2(z)),
        ("theta3_logderiv_quoted", lambda z: (24 / (math.pi * 1j)) * l3(z),
         lambda z: 5 * e2_2(z) - e2(z) - 4 * e2_4(z)),
        ("theta4_logderiv_quoted", lambda z: l4(z) / TWO_PI_I,
         lambda z: e2(z) - e2_2(z)),
        ("j_definition_quoted", J, lambda z: (E4(z) ** 3 - E6(z) ** 2) / D(z)),
    ]
    return [IdentityCheck(n, l, r, "quoted variant", n_points, (0.4, 2.0), seed)
            for n, l, r in entries]


# ---------------------------------------------------------------------------
# perturbation of (i pi / 6) E2 by j' F'(j)

_C = 1j * math.pi / 6


class PerturbedQuasiForm:
    """f(z) = j'(z) F'(j(z)) + (i pi/6) E2(z) for F = exp, a polynomial or a constant.

    ``F_rule="polynomial"`` takes ``coeffs`` (lowest degree first) of F; the
    default F(w) = w.  For F = exp the log-derivative is computed after
    dividing numerator and denominator by exp(max(Re j, 0)), so it stays finite
    where f itself overflows.
    """

    def __init__(self, F_rule: str = "exp", coeffs=(0.0, 1.0)):
        if F_rule not in ("exp", "polynomial", "constant"):
            raise ValueError(f"unknown F rule {F_rule!r}")
        self.F_rule = F_rule
        self.coeffs = np.asarray(coeffs, dtype=complex)
        self.name = f"f[{F_rule}]"
        self._j = forms.get_form("j", reduced=True)
        self._e2 = forms.get_form("E2", reduced=True)

    def _derivs_of_F(self, w, scale):
        """(F'(w), F''(w)) times exp(-scale)."""
        if self.F_rule == "constant":
            zero = np.zeros_like(w)
            return zero, zero
        if self.F_rule == "exp":
            e = np.exp(w - scale)
            return e, e
        p1 = np.polynomial.polynomial.polyder(self.coeffs)
        p2 = np.polynomial.polynomial.polyder(p1)
        k = np.exp(-scale)
        return (np.polynomial.polynomial.polyval(w, p1) * k,
                np.polynomial.polynomial.polyval(w, p2) * k)

    def _parts(self, z, need_derivative: bool, scaled: bool):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(self._j(z), dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            scale = np.maximum(w.real, 0.0) if (scaled and self.F_rule == "exp") else np.zeros(w.shape)
            F1, F2 = self._derivs_of_F(w, scale)
            j1 = np.asarray(self._j.derivative(z, 1), dtype=complex)
            k = np.exp(-scale)
            val = j1 * F1 + _C * np.asarray(self._e2(z), dtype=complex) * k
            if not need_derivative:
                return val, None
            j2 = np.asarray(self._j.derivative(z, 2), dtype=complex)
            der = j2 * F1 + j1**2 * F2 + _C * np.asarray(self._e2.derivative(z, 1)) * k
        return val, der

    def __call__(self, z):
        return self._parts(z, False, False)[0]

    def derivative(self, z, order: int = 1):
        if order != 1:
            raise ValueError("only the first derivative is available")
        return self._parts(z, True, False)[1]

    def logarithmic_derivative(self, z):
        val, der = self._parts(z, True, True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return der / val


def _tiles(box: zf.SearchBox, size: float):
    """Tiles of the box, top row first (where j is smallest), left to right."""
    nx = max(1, math.ceil((box.re_max - box.re_min) / size - 1e-9))
    ny = max(1, math.ceil((box.im_max - box.im_min) / size - 1e-9))
    xs = np.linspace(box.re_min, box.re_max, nx + 1)
    ys = np.linspace(box.im_min, box.im_max, ny + 1)
    for r in range(ny - 1, -1, -1):
        for c in range(nx):
            yield zf.SearchBox(xs[c], xs[c + 1], ys[r], ys[r + 1])


def quasimodular_perturbation_demo(F_rule: str = "exp", box=None, threshold: int = 2,
                                   coeffs=(0.0, 1.0), tile: float | None = None,
                                   n_samples: int = 200, seed: int = eq.DEFAULT_SEED) -> dict:
    """Zeros and orbit count of j' F'(j) + (i pi/6) E2 in ``box``, plus an
    equivariance report for h = z + 1/f.

    The box is scanned tile by tile from the top.  For F = exp the zeros are
    spaced roughly 1/|j| apart, so low in the box they cannot all be resolved;
    the scan stops once ``threshold`` orbits are found, and tiles whose
    argument integral fails are listed rather than fatal.
    """
    box = box or zf.SearchBox(-0.5, 0.5, 0.3, 1.2)
    if isinstance(box, str):
        box = zf.SearchBox.parse(box)
    f = PerturbedQuasiForm(F_rule, coeffs)
    tile = tile or (0.05 if F_rule == "exp" else 0.1)
    zeros: list[zf.ZeroRecord] = []
    unresolved = []
    stopped_early = False
    for t in _tiles(box, tile):
        try:
            with np.errstate(all="ignore"):
                found = zf.find_zeros(f, t, max_zeros=max(threshold, 1) if F_rule == "exp" else 1000)
        except (zf.WindingError, FloatingPointError, ValueError) as err:
            unresolved.append({"box": [t.re_min, t.re_max, t.im_min, t.im_max], "error": str(err)})
            continue
        for r in found:
            if r.converged and not any(abs(r.location - s.location) < 1e-9 for s in zeros):
                zeros.append(r)
        if F_rule == "exp" and zf.classify_equivalence(zeros).count >= threshold:
            stopped_early = True
            break
    zeros.sort(key=lambda r: (r.location.imag, r.location.real))
    orbits = zf.classify_equivalence(zeros)
    h = eq.unhat(eq.QuasiForm21(f, f.name))
    rep = eq.check_equivariance(h, [mb.S, mb.T], n_samples=n_samples, seed=seed,
                                names=["S", "T"], min_image_im=0.3)
    return {
        "F_rule": F_rule,
        "box": [box.re_min, box.re_max, box.im_min, box.im_max],
        "zeros": [[r.location.real, r.location.imag] for r in zeros],
        "n_zeros": len(zeros),
        "orbit_count": orbits.count,
        "threshold": threshold,
        "meets_threshold": orbits.count >= threshold,
        "complete": not unresolved and not stopped_early,
        "unresolved_tiles": unresolved,
        "equivariance": rep.as_dict(),
    }
