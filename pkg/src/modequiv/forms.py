"""Weighted forms, the slash operator and multiplier systems.

Every evaluator here is vectorized over numpy arrays of points and exposes
``derivative(z, order=1)``.  Forms given by q-expansions pick their truncation
order per call from the lowest point requested; the order can be pinned with
:func:`fixed_truncation` (used to study convergence).
"""

from __future__ import annotations

import cmath
import contextlib
import contextvars
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import moebius as mb
from . import qseries as qs

_ORDER_OVERRIDE: contextvars.ContextVar[int | None] = contextvars.ContextVar(
    "order_override", default=None
)
SERIES_TOL = 1e-13


@contextlib.contextmanager
def fixed_truncation(order: int | None):
    """Evaluate every series with exactly ``order`` terms inside the block."""
    token = _ORDER_OVERRIDE.set(order)
    try:
        yield
    finally:
        _ORDER_OVERRIDE.reset(token)


def _bucket(n: int) -> int:
    return 1 << max(4, (n - 1).bit_length())


class SeriesEvaluator:
    """Evaluates a family of truncated q-expansions ``generator(order)``."""

    def __init__(self, generator: Callable[[int], qs.PuiseuxSeries], name: str = ""):
        self.generator = generator
        self.name = name
        self._cache: dict[tuple[int, int], qs.PuiseuxSeries] = {}

    def series(self, order: int, derivative: int = 0) -> qs.PuiseuxSeries:
        key = (order, derivative)
        s = self._cache.get(key)
        if s is None:
            s = self.generator(order) if derivative == 0 else qs.differentiate(
                self.series(order, derivative - 1)
            )
            self._cache[key] = s
        return s

    def _eval(self, z, derivative: int):
        z = np.asarray(z, dtype=complex)
        override = _ORDER_OVERRIDE.get()
        if override is not None:
            s = self.series(override, derivative)
            return qs.evaluate(s, z, tol=None)[0]
        im_min = float(np.min(z.imag)) if z.size else 1.0
        if im_min < qs.Y_MIN:
            raise ValueError(f"Im z = {im_min:g} is below the evaluation floor {qs.Y_MIN:g}")
        if z.size <= 32:
            return self._eval_band(z, derivative, im_min)
        # points high in H need far fewer terms: evaluate by bands of equal order
        flat = z.ravel()
        orders = np.array([_bucket(qs.order_for(y)) for y in flat.imag])
        out = np.empty(flat.shape, dtype=complex)
        for o in np.unique(orders):
            sel = orders == o
            out[sel] = self._eval_band(flat[sel], derivative, float(flat[sel].imag.min()))
        return out.reshape(z.shape)

    def _eval_band(self, z, derivative, im_min):
        order = _bucket(qs.order_for(im_min))
        for _ in range(12):
            try:
                return qs.evaluate(self.series(order, derivative), z, tol=SERIES_TOL)[0]
            except qs.TruncationError as err:
                if order >= qs.MAX_ORDER:
                    raise
                order = min(qs.MAX_ORDER, _bucket(max(err.suggested_order, order + 1)))
        raise qs.TruncationError(f"{self.name}: no truncation order reached the tolerance")

    def __call__(self, z):
        return self._eval(z, 0)

    def derivative(self, z, order: int = 1):
        return self._eval(z, order)

    def value_and_bound(self, z, tol: float = 1e-9):
        z = np.asarray(z, dtype=complex)
        override = _ORDER_OVERRIDE.get()
        order = override or _bucket(qs.order_for(float(np.min(z.imag))))
        for _ in range(12):
            try:
                return qs.evaluate(self.series(order), z, tol=None if override else tol)
            except qs.TruncationError as err:
                order = min(qs.MAX_ORDER, _bucket(max(err.suggested_order, order + 1)))
        raise qs.TruncationError(f"{self.name}: no truncation order reached the tolerance")


class ReducedEvaluator:
    """Evaluate a level-one (quasi)modular series through the fundamental domain.

    For z near the real axis the q-expansion converges slowly and suffers from
    cancellation.  Writing w = gamma z with w in the fundamental domain,

        f(z) = (cz+d)^(-k) f(w) + kappa * c/(cz+d),

    where kappa = 0 for modular forms and kappa = -6/(pi i) for E_2.
    Derivatives up to order 2 follow from the chain rule.
    """

    def __init__(self, base: SeriesEvaluator, weight: int, kappa: complex = 0.0, name=""):
        self.base = base
        self.weight = weight
        self.kappa = kappa
        self.name = name

    def _reduce(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if np.any(z.imag <= 0):
            raise ValueError("point must lie in the upper half-plane")
        w, _, _, c, d = reduce_many(z)
        return z, w, c, d

    def _eval(self, z, order: int):
        scalar = np.ndim(z) == 0
        z, w, c, d = self._reduce(z)
        k = self.weight
        J = c * z + d
        F = self.base(w)
        u = J ** (-k)
        if order == 0:
            out = u * F + self.kappa * c / J
        else:
            F1 = self.base.derivative(w, 1)
            w1 = J ** -2.0
            u1 = -k * c * J ** (-k - 1)
            if order == 1:
                out = u1 * F + u * F1 * w1 - self.kappa * c**2 / J**2
            elif order == 2:
                F2 = self.base.derivative(w, 2)
                u2 = k * (k + 1) * c**2 * J ** (-k - 2)
                w2 = -2 * c * J ** -3.0
                out = (
                    u2 * F
                    + 2 * u1 * F1 * w1
                    + u * (F2 * w1**2 + F1 * w2)
                    + 2 * self.kappa * c**3 / J**3
                )
            else:
                raise NotImplementedError("reduced evaluation supports derivatives up to order 2")
        return complex(out[0]) if scalar else out

    def __call__(self, z):
        return self._eval(z, 0)

    def derivative(self, z, order: int = 1):
        return self._eval(z, order)

    def value_and_bound(self, z, tol: float = 1e-9):
        z, w, c, d = self._reduce(z)
        J = c * z + d
        v, bound = self.base.value_and_bound(w, tol)
        scale = np.abs(J) ** (-self.weight)
        return J ** (-self.weight) * v + self.kappa * c / J, bound * float(np.max(scale))


def reduce_many(z):
    """Vectorized fundamental-domain reduction.

    Returns ``(w, a, b, c, d)`` with w = (a z + b)/(c z + d) in the closed
    fundamental domain; unlike :func:`moebius.reduce_to_fundamental_domain`
    the boundary identifications are not applied.
    """
    w = np.array(z, dtype=complex)
    one = np.ones(w.shape)
    a, b, c, d = one.copy(), 0 * one, 0 * one, one.copy()
    for _ in range(10_000):
        n = np.floor(w.real + 0.5)
        w = w - n
        a, b = a - n * c, b - n * d
        inside = np.abs(w) ** 2 < 1 - 1e-15
        if not inside.any():
            return w, a, b, c, d
        w = np.where(inside, -1 / np.where(inside, w, 1), w)
        a, b, c, d = (np.where(inside, -c, a), np.where(inside, -d, b),
                      np.where(inside, a, c), np.where(inside, b, d))
    raise RuntimeError("reduction did not terminate")  # pragma: no cover


def _principal_power(x, p):
    x = np.asarray(x, dtype=complex)
    return np.exp(p * np.log(x))


@dataclass(frozen=True)
class ClosedForm:
    """Closed-form generators of the elementary-group form spaces.

    ``power_of_z``: (z - center)^exponent; ``exponential``: exp(rate z);
    ``cayley_product``: λ(z)^n_f (λ(z) - 1)^k.  Principal branches throughout.
    """

    rule: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rule not in ("power_of_z", "exponential", "cayley_product"):
            raise ValueError(f"unknown closed-form rule {self.rule!r}")

    @classmethod
    def power_of_z(cls, exponent, center=0.0):
        return cls("power_of_z", {"exponent": complex(exponent), "center": complex(center)})

    @classmethod
    def exponential(cls, rate):
        return cls("exponential", {"rate": complex(rate)})

    @classmethod
    def cayley_product(cls, n_f: int, k: float):
        return cls("cayley_product", {"n_f": int(n_f), "k": float(k)})

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        z = np.asarray(z, dtype=complex)
        p = self.params
        if self.rule == "power_of_z":
            out = _principal_power(z - p["center"], p["exponent"])
        elif self.rule == "exponential":
            out = np.exp(p["rate"] * z)
        else:
            lam = mb.cayley(z)
            out = _principal_power(lam, p["n_f"]) * _principal_power(lam - 1, p["k"])
        return complex(out) if scalar else out

    def logarithmic_derivative(self, z):
        scalar = np.ndim(z) == 0
        z = np.asarray(z, dtype=complex)
        p = self.params
        if self.rule == "power_of_z":
            out = p["exponent"] / (z - p["center"])
        elif self.rule == "exponential":
            out = np.full(z.shape, p["rate"], dtype=complex)
        else:
            lam = mb.cayley(z)
            dlam = 2j / (z + 1j) ** 2
            out = p["n_f"] * dlam / lam + p["k"] * dlam / (lam - 1)
        return complex(out) if scalar else out

    def derivative(self, z, order: int = 1):
        if order == 0:
            return self(z)
        if order == 1:
            return self(z) * self.logarithmic_derivative(z)
        if order == 2:
            # (f L)' = f (L^2 + L')
            L = self.logarithmic_derivative(z)
            p = self.params
            z = np.asarray(z, dtype=complex)
            if self.rule == "power_of_z":
                dL = -p["exponent"] / (z - p["center"]) ** 2
            elif self.rule == "exponential":
                dL = np.zeros(z.shape, dtype=complex)
            else:
                lam = mb.cayley(z)
                dlam = 2j / (z + 1j) ** 2
                d2lam = -4j / (z + 1j) ** 3
                dL = p["n_f"] * (d2lam / lam - (dlam / lam) ** 2) + p["k"] * (
                    d2lam / (lam - 1) - (dlam / (lam - 1)) ** 2
                )
            out = self(z) * (L**2 + dL)
            return complex(out) if np.ndim(out) == 0 else out
        raise NotImplementedError("closed forms support derivatives up to order 2")


def closed_form_eval(cf: ClosedForm, z):
    return cf(z)


@dataclass(frozen=True, eq=False)
class Form:
    """A function on H of some weight, with a multiplier table on generators."""

    name: str
    weight: float
    evaluator: object
    ms_table: dict = field(default_factory=dict)
    generators: dict = field(default_factory=dict)
    log_derivative: Callable | None = None

    def __post_init__(self):
        for g, v in self.ms_table.items():
            if abs(abs(v) - 1) > 1e-12:
                raise ValueError(f"multiplier for {g} is not of unit modulus")
        if not math.isfinite(self.weight):
            raise ValueError("weight must be finite")

    def __call__(self, z):
        return self.evaluator(z)

    def derivative(self, z, order: int = 1):
        return self.evaluator.derivative(z, order)

    def logarithmic_derivative(self, z):
        return logarithmic_derivative(self, z)

    def series(self, order: int) -> qs.PuiseuxSeries:
        ev = self.evaluator
        if isinstance(ev, ReducedEvaluator):
            ev = ev.base
        if not isinstance(ev, SeriesEvaluator):
            raise TypeError(f"{self.name} has no q-expansion")
        return ev.series(order)

    def reduced(self) -> Form:
        """Same form, evaluated through the fundamental domain (level one only)."""
        if isinstance(self.evaluator, ReducedEvaluator):
            return self
        kappa = _REDUCIBLE.get(self.name)
        if kappa is None or not isinstance(self.evaluator, SeriesEvaluator):
            raise ValueError(f"{self.name} has no fundamental-domain evaluation")
        ev = ReducedEvaluator(self.evaluator, int(self.weight), kappa, self.name)
        return Form(self.name, self.weight, ev, dict(self.ms_table), dict(self.generators),
                    self.log_derivative)


_REDUCIBLE = {"E2": -6 / (math.pi * 1j), "E4": 0.0, "E6": 0.0, "Delta": 0.0, "j": 0.0}


def slash(f, k: float, g: mb.MoebiusTransform, z):
    """(f|_k g)(z) = (cz+d)^(-k) f(gz), principal branch of the power."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag <= 0):
        raise ValueError("slash operator needs points of the upper half-plane")
    jz = g.c * z + g.d
    if np.any(jz == 0):
        raise ZeroDivisionError("cz + d vanishes")
    out = np.exp(-k * np.log(jz)) * f(mb.apply(g, z))
    return complex(out) if np.ndim(out) == 0 else out


DEFAULT_PROBES = (0.11 + 1.07j, -0.23 + 0.91j, 0.37 + 1.31j, -0.41 + 1.52j, 0.05 + 0.83j)


class MultiplierError(ValueError):
    pass


def multiplier_of(f, g: mb.MoebiusTransform, probes=DEFAULT_PROBES, weight=None, tol=1e-8):
    """nu(g) = (f|_k g)(z) / f(z), checked for unit modulus and probe independence."""
    k = f.weight if weight is None else weight
    probes = np.asarray(probes, dtype=complex)
    base = f(probes)
    if np.any(np.abs(base) < 1e-300):
        raise MultiplierError("form vanishes at a probe point")
    ratios = slash(f, k, g, probes) / base
    if np.max(np.abs(np.abs(ratios) - 1)) > tol:
        raise MultiplierError(f"multiplier not of unit modulus: {ratios}")
    spread = np.max(np.abs(ratios[:, None] - ratios[None, :]))
    if spread > tol:
        raise MultiplierError(f"multiplier depends on the probe point (spread {spread:.3g})")
    return complex(ratios[0])


def logarithmic_derivative(f, z):
    """L_f = f'/f."""
    if hasattr(f, "logarithmic_derivative") and not isinstance(f, Form):
        return f.logarithmic_derivative(z)
    if isinstance(f, Form) and f.log_derivative is not None:
        return f.log_derivative(z)
    ev = f.evaluator if isinstance(f, Form) else f
    if isinstance(ev, ClosedForm):
        return ev.logarithmic_derivative(z)
    val = f(z)
    if np.any(val == 0):
        raise ZeroDivisionError("logarithmic derivative has a pole at a zero of f")
    return f.derivative(z, 1) / val


def product_log_derivative(z, exponent: float = 1 / 24, power: int = 1):
    """d/dz log of q^exponent prod (1 - q^n)^power, as a Lambert series.

    Stable down to the evaluation floor, where the q-expansion of Delta
    itself has lost all relative accuracy.
    """
    scalar = np.ndim(z) == 0
    z = np.asarray(z, dtype=complex)
    im_min = float(np.min(z.imag))
    if im_min < qs.Y_MIN:
        raise ValueError(f"Im z = {im_min:g} is below the evaluation floor {qs.Y_MIN:g}")
    n_max = qs.order_for(im_min, 1e-20)
    q = np.exp(2j * math.pi * z)
    qn = np.ones_like(q)
    acc = np.zeros_like(q)
    for n in range(1, n_max + 1):
        qn = qn * q
        acc += n * qn / (1 - qn)
    out = 2j * math.pi * (exponent - power * acc)
    return complex(out) if scalar else out


# ---------------------------------------------------------------------------
# registry

_D = mb.scaling(2)  # z -> 2z: our q = e^{2 pi i z} halves the usual theta variable
_D_INV = _D.inverse()


def _conj(g):
    return _D_INV @ g @ _D


_P_INV = mb.P.inverse()
THETA_GENERATORS = {
    3: {"T": mb.T, "W": _conj(mb.S)},
    2: {"U": _conj(mb.P @ mb.T @ mb.T @ _P_INV), "W": _conj(mb.P @ mb.S @ _P_INV)},
    4: {
        "U": _conj(mb.P @ mb.P @ mb.T @ mb.T @ _P_INV @ _P_INV),
        "W": _conj(mb.P @ mb.P @ mb.S @ _P_INV @ _P_INV),
    },
}
_EIGHTH = cmath.exp(-1j * math.pi / 4)


def _j_series(order):
    # j = E4^3 / Delta; note E4^3 - E6^2 = 1728 Delta, so that quotient is constant
    e4 = qs.eisenstein_series(4, order + 1)
    return qs.divide(e4**3, qs.delta_series(order + 1))


def _build(name: str) -> Form:
    level_one = {"S": mb.S, "T": mb.T}
    if name in ("E2", "E4", "E6"):
        k = int(name[1])
        ev = SeriesEvaluator(lambda n, k=k: qs.eisenstein_series(k, n), name)
        ms = {} if k == 2 else {"S": 1, "T": 1}
        return Form(name, k, ev, ms, level_one)
    if name == "Delta":
        return Form(name, 12, SeriesEvaluator(qs.delta_series, name), {"S": 1, "T": 1},
                    level_one, lambda z: product_log_derivative(z, 1, 24))
    if name == "j":
        # coefficients grow like exp(4 pi sqrt n): summing near the real axis
        # cancels catastrophically, so j is always evaluated on the reduced point
        ev = ReducedEvaluator(SeriesEvaluator(_j_series, name), 0, 0.0, name)
        return Form(name, 0, ev, {"S": 1, "T": 1}, level_one)
    if name == "eta":
        ms = {
            "T": cmath.exp(1j * math.pi / 12),
            "S": cmath.exp(-1j * math.pi / 4),
            "P": cmath.exp(-1j * math.pi / 6),
        }
        gens = {"S": mb.S, "T": mb.T, "P": mb.P}
        return Form(name, 0.5, SeriesEvaluator(qs.eta_series, name), ms, gens,
                    product_log_derivative)
    if name in ("theta2", "theta3", "theta4"):
        i = int(name[-1])
        ev = SeriesEvaluator(lambda n, i=i: qs.theta_series(i, n), name)
        gens = THETA_GENERATORS[i]
        ms = {"T" if i == 3 else "U": 1, "W": _EIGHTH}
        return Form(name, 0.5, ev, ms, gens)
    raise KeyError(f"unknown form {name!r}")


FORM_NAMES = ("E2", "E4", "E6", "Delta", "j", "eta", "theta2", "theta3", "theta4")
_REGISTRY: dict[str, Form] = {}


def get_form(name: str, reduced: bool = False) -> Form:
    """Look up a registered form by name (E2, E4, E6, Delta, j, eta, theta2-4)."""
    if name not in _REGISTRY:
        _REGISTRY[name] = _build(name)
    form = _REGISTRY[name]
    return form.reduced() if reduced else form


def closed_form(rule: str, weight: float = 0.0, **params) -> Form:
    """Wrap a :class:`ClosedForm` as a Form, e.g. ``closed_form("exponential", rate=1j)``."""
    cf = getattr(ClosedForm, rule)(**params)
    return Form(f"{rule}({', '.join(f'{k}={v}' for k, v in params.items())})", weight, cf)

