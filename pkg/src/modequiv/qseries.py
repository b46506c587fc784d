"""Truncated q-expansions with exact coefficients.

A :class:`PuiseuxSeries` stands for ``q^e * sum_{n=0}^{N} a_n q^n`` with
``q = exp(2 pi i z)`` and a rational leading exponent ``e``.  Coefficients are
kept as Python ints or Fractions while that is possible, so that products and
quotients of the classical series stay exact; evaluation is done in double
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Number

import numpy as np

TWO_PI_I = 2j * math.pi
Y_MIN = 0.005
MAX_ORDER = 10**6


class TruncationError(ValueError):
    """The stored coefficients do not reach the requested accuracy."""

    def __init__(self, message, suggested_order=None):
        super().__init__(message)
        self.suggested_order = suggested_order


def _exact(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return int(x.numerator)
    return x


@dataclass(frozen=True, eq=False)
class PuiseuxSeries:
    leading_exponent: Fraction
    coefficients: tuple

    def __post_init__(self):
        e = Fraction(self.leading_exponent)
        if 24 % e.denominator:
            raise ValueError("leading exponent denominator must divide 24")
        object.__setattr__(self, "leading_exponent", e)
        object.__setattr__(self, "coefficients", tuple(_exact(c) for c in self.coefficients))
        if not self.coefficients:
            raise ValueError("series needs at least one coefficient")

    @property
    def truncation_order(self) -> int:
        return len(self.coefficients) - 1

    @property
    def precision(self) -> Fraction:
        """Exponent of q through which the series is known."""
        return self.leading_exponent + self.truncation_order

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, n):
        return self.coefficients[n]

    def __repr__(self):
        head = ", ".join(str(c) for c in self.coefficients[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"PuiseuxSeries(q^{self.leading_exponent} * [{head}{more}], N={self.truncation_order})"

    def coefficient(self, exponent) -> object:
        """Coefficient of q^exponent (absolute exponent)."""
        k = Fraction(exponent) - self.leading_exponent
        if k.denominator != 1 or k < 0:
            return 0
        k = int(k)
        if k > self.truncation_order:
            raise IndexError("exponent beyond truncation order")
        return self.coefficients[k]

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, (int, Fraction)) for c in self.coefficients)

    @property
    def float_coefficients(self) -> np.ndarray:
        return _float_coeffs(self)

    def truncate(self, order: int) -> PuiseuxSeries:
        return PuiseuxSeries(self.leading_exponent, self.coefficients[: order + 1])

    def normalized(self) -> PuiseuxSeries:
        """Move leading zero coefficients into the exponent."""
        k = 0
        while k < self.truncation_order and self.coefficients[k] == 0:
            k += 1
        if k == 0:
            return self
        return PuiseuxSeries(self.leading_exponent + k, self.coefficients[k:])

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __neg__(self):
        return scalar_mul(self, -1)

    def __sub__(self, other):
        return add(self, -other if isinstance(other, PuiseuxSeries) else -other)

    def __rsub__(self, other):
        return add(-self, other)

    def __mul__(self, other):
        if isinstance(other, PuiseuxSeries):
            return mul(self, other)
        return scalar_mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PuiseuxSeries):
            return divide(self, other)
        if isinstance(other, int):
            other = Fraction(other)
        return scalar_mul(self, 1 / other)

    def __pow__(self, n: int):
        return pow_int(self, n)


# Not an lru_cache on the method: frozen dataclass with eq=False hashes by id.
_FLOAT_CACHE: dict[int, tuple[PuiseuxSeries, np.ndarray]] = {}


def _float_coeffs(s: PuiseuxSeries) -> np.ndarray:
    hit = _FLOAT_CACHE.get(id(s))
    if hit is not None and hit[0] is s:
        return hit[1]
    arr = np.array([complex(c) for c in s.coefficients], dtype=complex)
    if len(_FLOAT_CACHE) > 256:
        _FLOAT_CACHE.clear()
    _FLOAT_CACHE[id(s)] = (s, arr)
    return arr


def constant(value, order: int) -> PuiseuxSeries:
    return PuiseuxSeries(Fraction(0), (value,) + (0,) * order)


def from_polynomial(coeffs, order: int | None = None, leading_exponent=0) -> PuiseuxSeries:
    coeffs = list(coeffs)
    if order is not None:
        coeffs = (coeffs + [0] * (order + 1))[: order + 1]
    return PuiseuxSeries(Fraction(leading_exponent), tuple(coeffs))


# ---------------------------------------------------------------------------
# coefficient generation


def divisor_sum(n: int, k: int) -> int:
    """sigma_k(n) = sum of d^k over the divisors d of n."""
    if n < 1:
        raise ValueError("divisor_sum needs n >= 1")
    total = 0
    d = 1
    while d * d <= n:
        if n % d == 0:
            total += d**k
            e = n // d
            if e != d:
                total += e**k
        d += 1
    return total


def divisor_sums(order: int, k: int) -> list[int]:
    """[sigma_k(0)=0, sigma_k(1), ..., sigma_k(order)] by a sieve."""
    out = [0] * (order + 1)
    for d in range(1, order + 1):
        p = d**k
        for m in range(d, order + 1, d):
            out[m] += p
    return out


@lru_cache(maxsize=None)
def bernoulli(k: int) -> Fraction:
    """Bernoulli number B_k (B_1 = -1/2 convention is irrelevant here)."""
    a = [Fraction(0)] * (k + 1)
    for m in range(k + 1):
        a[m] = Fraction(1, m + 1)
        for j in range(m, 0, -1):
            a[j - 1] = j * (a[j - 1] - a[j])
    return a[0]


@lru_cache(maxsize=64)
def eisenstein_series(k: int, order: int) -> PuiseuxSeries:
    """E_k = 1 - (2k/B_k) sum sigma_{k-1}(n) q^n for even k >= 2."""
    if k < 2 or k % 2:
        raise ValueError(f"unsupported Eisenstein weight {k}")
    factor = _exact(Fraction(-2 * k) / bernoulli(k))
    sig = divisor_sums(order, k - 1)
    return PuiseuxSeries(Fraction(0), (1,) + tuple(factor * s for s in sig[1:]))


def _euler_product(order: int) -> list[int]:
    # prod (1 - q^n) via the pentagonal number theorem
    out = [0] * (order + 1)
    out[0] = 1
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        if g1 > order:
            break
        sign = -1 if k % 2 else 1
        out[g1] += sign
        g2 = k * (3 * k + 1) // 2
        if g2 <= order:
            out[g2] += sign
        k += 1
    return out


def _power_series_pow(g: list, m: int, order: int) -> list:
    # f = g^m with g[0] = 1 (J. C. P. Miller recurrence), exact
    support = [k for k in range(1, min(len(g), order + 1)) if g[k]]
    f = [0] * (order + 1)
    f[0] = 1
    for n in range(1, order + 1):
        acc = 0
        for k in support:
            if k > n:
                break
            acc += ((m + 1) * k - n) * g[k] * f[n - k]
        f[n] = acc // n
    return f


@lru_cache(maxsize=64)
def eta_series(order: int) -> PuiseuxSeries:
    """q^{1/24} prod (1 - q^n)."""
    return PuiseuxSeries(Fraction(1, 24), tuple(_euler_product(order)))


@lru_cache(maxsize=64)
def delta_series(order: int) -> PuiseuxSeries:
    """q prod (1 - q^n)^24, stored with exponent 0 (a_0 = 0, a_1 = 1)."""
    if order < 1:
        raise ValueError("delta_series needs order >= 1")
    body = _power_series_pow(_euler_product(order - 1), 24, order - 1)
    return PuiseuxSeries(Fraction(0), (0,) + tuple(body))


@lru_cache(maxsize=64)
def theta_series(which: int, order: int) -> PuiseuxSeries:
    """Jacobi thetas in q = exp(2 pi i z): theta_2 carries the q^{1/4} factor."""
    out = [0] * (order + 1)
    if which == 2:
        n = 0
        while n * (n + 1) <= order:
            out[n * (n + 1)] = 2
            n += 1
        return PuiseuxSeries(Fraction(1, 4), tuple(out))
    if which not in (3, 4):
        raise ValueError("theta index must be 2, 3 or 4")
    out[0] = 1
    n = 1
    while n * n <= order:
        out[n * n] = 2 if which == 3 or n % 2 == 0 else -2
        n += 1
    return PuiseuxSeries(Fraction(0), tuple(out))


# ---------------------------------------------------------------------------
# arithmetic


def _as_series(x, like: PuiseuxSeries) -> PuiseuxSeries:
    if isinstance(x, PuiseuxSeries):
        return x
    if isinstance(x, Number):
        prec = like.precision
        if prec < 0:
            return PuiseuxSeries(Fraction(0), (x,))
        return PuiseuxSeries(Fraction(0), (x,) + (0,) * int(math.floor(prec)))
    raise TypeError(f"cannot combine series with {type(x).__name__}")


def add(s, t) -> PuiseuxSeries:
    s = _as_series(s, t) if not isinstance(s, PuiseuxSeries) else s
    t = _as_series(t, s)
    shift = s.leading_exponent - t.leading_exponent
    if shift.denominator != 1:
        raise ValueError("cannot add series whose exponents differ by a non-integer")
    e = min(s.leading_exponent, t.leading_exponent)
    prec = min(s.precision, t.precision)
    n = int(prec - e)
    out = [0] * (n + 1)
    for src in (s, t):
        off = int(src.leading_exponent - e)
        for i, c in enumerate(src.coefficients[: n + 1 - off]):
            out[i + off] += c
    return PuiseuxSeries(e, tuple(out))


def scalar_mul(s: PuiseuxSeries, c) -> PuiseuxSeries:
    return PuiseuxSeries(s.leading_exponent, tuple(c * a for a in s.coefficients))


def _coeff_array(s: PuiseuxSeries, n: int) -> np.ndarray:
    if s.is_exact:
        return np.array(s.coefficients[: n + 1], dtype=object)
    return np.array([complex(c) for c in s.coefficients[: n + 1]], dtype=complex)


def mul(s: PuiseuxSeries, t: PuiseuxSeries) -> PuiseuxSeries:
    n = min(s.truncation_order, t.truncation_order)
    a, b = _coeff_array(s, n), _coeff_array(t, n)
    if a.dtype != b.dtype:
        a, b = a.astype(complex), b.astype(complex)
    prod = np.convolve(a, b)[: n + 1]
    return PuiseuxSeries(s.leading_exponent + t.leading_exponent, tuple(prod.tolist()))


def reciprocal(s: PuiseuxSeries) -> PuiseuxSeries:
    s = s.normalized()
    a = s.coefficients
    if a[0] == 0:
        raise ZeroDivisionError("series has zero leading coefficient")
    n = s.truncation_order
    exact = s.is_exact
    a0 = Fraction(a[0]) if exact else complex(a[0])
    inv = [0] * (n + 1)
    inv[0] = 1 / a0
    for m in range(1, n + 1):
        acc = 0
        for k in range(1, m + 1):
            if a[k]:
                acc += a[k] * inv[m - k]
        inv[m] = -acc / a0
    return PuiseuxSeries(-s.leading_exponent, tuple(inv))


def divide(s: PuiseuxSeries, t: PuiseuxSeries) -> PuiseuxSeries:
    return mul(s.normalized(), reciprocal(t))


def pow_int(s: PuiseuxSeries, n: int) -> PuiseuxSeries:
    if n < 0:
        return pow_int(reciprocal(s), -n)
    result = constant(1, s.truncation_order)
    base = s
    while n:
        if n & 1:
            result = mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return result


def q_derivative(s: PuiseuxSeries) -> PuiseuxSeries:
    """q d/dq = (1/2 pi i) d/dz, exact on exact series."""
    e = s.leading_exponent
    return PuiseuxSeries(e, tuple(_exact((n + e) * a) for n, a in enumerate(s.coefficients)))


def differentiate(s: PuiseuxSeries) -> PuiseuxSeries:
    """d/dz, termwise: a_n -> 2 pi i (n + e) a_n."""
    e = s.leading_exponent
    return PuiseuxSeries(
        e, tuple(TWO_PI_I * float(n + e) * complex(a) for n, a in enumerate(s.coefficients))
    )


# ---------------------------------------------------------------------------
# evaluation


def order_for(im: float, tol: float = 1e-18) -> int:
    """Smallest N with exp(-2 pi Im(z) (N+1)) < tol."""
    if im <= 0:
        raise ValueError("point must lie in the upper half-plane")
    n = max(1, math.floor(-math.log(tol) / (2 * math.pi * im)))
    if n > MAX_ORDER:
        raise TruncationError(f"required order {n} exceeds cap {MAX_ORDER}", n)
    return n


def tail_bound(s: PuiseuxSeries, abs_q: float, order: int | None = None) -> float:
    """B |q|^(N+1) / (1 - |q|) with B the largest |a_n| among the top 10% of
    the coefficients used."""
    n = s.truncation_order if order is None else order
    coeffs = np.abs(s.float_coefficients[: n + 1])
    top = coeffs[int(0.9 * n) :]
    b = float(top.max()) if top.size else 0.0
    if b == 0.0:
        return 0.0
    with np.errstate(over="ignore", under="ignore"):
        return float(b * np.exp((n + 1) * np.log(abs_q)) / (1 - abs_q))


def suggest_order(s: PuiseuxSeries, abs_q: float, tol: float) -> int:
    n = s.truncation_order
    b = max(float(np.abs(s.float_coefficients[int(0.9 * n) :]).max()), 1.0)
    # allow polynomial growth of the coefficients: add a generous margin
    need = math.log(tol * (1 - abs_q) / b) / math.log(abs_q)
    return min(MAX_ORDER, max(2 * n, int(1.5 * need) + 1))


def horner(coeffs: np.ndarray, q):
    acc = np.zeros(np.shape(q), dtype=complex) + coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * q + c
    return acc


def evaluate(
    s: PuiseuxSeries,
    z,
    tol: float | None = 1e-12,
    order: int | None = None,
    y_min: float = Y_MIN,
):
    """Evaluate at z (scalar or array) in the upper half-plane.

    Returns ``(value, bound)`` where ``bound`` is the tail estimate at the
    lowest point.  With ``tol`` set, a bound above ``tol`` raises
    :class:`TruncationError` carrying a suggested order.
    """
    z = np.asarray(z, dtype=complex)
    im_min = float(np.min(z.imag)) if z.size else 1.0
    if im_min < y_min:
        raise ValueError(f"Im z = {im_min:g} is below the evaluation floor {y_min:g}")
    n = s.truncation_order if order is None else min(order, s.truncation_order)
    abs_q = math.exp(-2 * math.pi * im_min)
    bound = tail_bound(s, abs_q, n)
    if tol is not None and bound > tol:
        raise TruncationError(
            f"truncation insufficient: tail bound {bound:.3g} > {tol:.3g} at Im z = {im_min:g}",
            suggest_order(s, abs_q, tol),
        )
    q = np.exp(TWO_PI_I * z)
    value = horner(s.float_coefficients[: n + 1], q)
    e = s.leading_exponent
    if e != 0:
        value = value * np.exp(TWO_PI_I * float(e) * z)
    if value.ndim == 0:
        value = complex(value)
    return value, bound
