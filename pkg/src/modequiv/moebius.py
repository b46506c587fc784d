"""Moebius transformations of the Riemann sphere.

Points of the sphere are plain complex numbers; the point at infinity is
``INF`` (``complex(inf, 0)``).  Anything with an infinite component is treated
as infinity, so numpy arrays of extended points work too.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

INF = complex(math.inf, 0.0)

ENTRY_TOL = 1e-12
TRACE_TOL = 1e-12


def is_inf(z) -> bool:
    z = complex(z)
    return math.isinf(z.real) or math.isinf(z.imag)


def chordal_distance(z, w):
    """Chordal distance on the Riemann sphere (vectorized, total on C ∪ {∞})."""
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    zi = np.isinf(z)
    wi = np.isinf(w)
    zf = np.where(zi, 0.0, z)
    wf = np.where(wi, 0.0, w)
    with np.errstate(invalid="ignore", over="ignore"):
        finite = 2 * np.abs(zf - wf) / np.sqrt((1 + np.abs(zf) ** 2) * (1 + np.abs(wf) ** 2))
    d = np.where(zi & wi, 0.0, finite)
    d = np.where(zi & ~wi, 2 / np.sqrt(1 + np.abs(wf) ** 2), d)
    d = np.where(wi & ~zi, 2 / np.sqrt(1 + np.abs(zf) ** 2), d)
    return d if d.ndim else float(d)


def _canonical_sign(a, b, c, d):
    # user-built upper-triangular matrices get d > 0; products keep the sign
    # they come out with (half-integral weight multipliers depend on it)
    if abs(c) <= ENTRY_TOL and (d.real < 0 or (d.real == 0 and d.imag < 0)):
        return -a, -b, -c, -d
    return a, b, c, d


@dataclass(frozen=True, eq=False)
class MoebiusTransform:
    """z -> (az+b)/(cz+d), stored with det 1.

    Build instances with :meth:`from_entries` (or :func:`mobius`); the raw
    constructor assumes its arguments are already normalized.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def from_entries(cls, a, b, c, d, keep_sign: bool = False) -> MoebiusTransform:
        a, b, c, d = (complex(x) for x in (a, b, c, d))
        det = a * d - b * c
        if det == 0:
            raise ValueError("singular matrix does not define a Moebius transformation")
        s = cmath.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        a, b, c, d = (_clean(x) for x in (a, b, c, d))
        if keep_sign:
            return cls(a, b, c, d)
        return cls(*_canonical_sign(a, b, c, d))

    @classmethod
    def from_matrix(cls, m, keep_sign: bool = False) -> MoebiusTransform:
        m = np.asarray(m)
        return cls.from_entries(m[0, 0], m[0, 1], m[1, 0], m[1, 1], keep_sign)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def real_flag(self) -> bool:
        return all(abs(x.imag) <= ENTRY_TOL for x in (self.a, self.b, self.c, self.d))

    def __repr__(self):
        def fmt(x):
            if abs(x.imag) <= ENTRY_TOL:
                return f"{x.real:.12g}"
            return f"{x:.12g}"

        return f"MoebiusTransform({fmt(self.a)}, {fmt(self.b)}; {fmt(self.c)}, {fmt(self.d)})"

    def isclose(self, other: MoebiusTransform, tol: float = ENTRY_TOL) -> bool:
        m, n = self.matrix, other.matrix
        return bool(min(np.abs(m - n).max(), np.abs(m + n).max()) <= tol)

    def __eq__(self, other):
        if not isinstance(other, MoebiusTransform):
            return NotImplemented
        return self.isclose(other)

    __hash__ = None

    def __matmul__(self, other: MoebiusTransform) -> MoebiusTransform:
        return compose(self, other)

    def __call__(self, z):
        return apply(self, z)

    def inverse(self) -> MoebiusTransform:
        return MoebiusTransform.from_entries(self.d, -self.b, -self.c, self.a)

    def __pow__(self, n: int) -> MoebiusTransform:
        if n < 0:
            return self.inverse() ** (-n)
        return MoebiusTransform.from_matrix(_projective_power(self.matrix, n))

    def j(self, z):
        """Automorphy factor cz + d."""
        return self.c * np.asarray(z) + self.d

    def derivative(self, z):
        return 1 / (self.c * np.asarray(z) + self.d) ** 2


def _clean(x: complex) -> complex:
    re = 0.0 if abs(x.real) < 1e-15 else x.real
    im = 0.0 if abs(x.imag) < 1e-15 else x.imag
    return complex(re, im)


def mobius(a, b, c, d) -> MoebiusTransform:
    return MoebiusTransform.from_entries(a, b, c, d)


IDENTITY = mobius(1, 0, 0, 1)
T = mobius(1, 1, 0, 1)
S = mobius(0, -1, 1, 0)
P = mobius(0, -1, 1, 1)  # = ST


def scaling(k) -> MoebiusTransform:
    """The normal form m_k : z -> k z."""
    r = cmath.sqrt(k)
    return mobius(r, 0, 0, 1 / r)


def translation(b) -> MoebiusTransform:
    return mobius(1, b, 0, 1)


def compose(g: MoebiusTransform, h: MoebiusTransform) -> MoebiusTransform:
    """g ∘ h, as the literal matrix product renormalized to det 1."""
    return MoebiusTransform.from_matrix(g.matrix @ h.matrix, keep_sign=True)


def apply(g: MoebiusTransform, z):
    """Apply g to a point (or array of points) of the sphere."""
    if np.ndim(z) == 0:
        z = complex(z)
        if is_inf(z):
            return INF if g.c == 0 else g.a / g.c
        den = g.c * z + g.d
        if den == 0:
            return INF
        return (g.a * z + g.b) / den
    z = np.asarray(z, dtype=complex)
    zi = np.isinf(z)
    zf = np.where(zi, 0.0, z)
    den = g.c * zf + g.d
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (g.a * zf + g.b) / den
    out = np.where(den == 0, INF, out)
    at_inf = INF if g.c == 0 else g.a / g.c
    return np.where(zi, at_inf, out)


def trace_invariant(g: MoebiusTransform) -> complex:
    """Tr(g) = (a + d)^2, independent of the sign of the matrix."""
    return (g.a + g.d) ** 2


def is_identity(g: MoebiusTransform, tol: float = ENTRY_TOL) -> bool:
    return g.isclose(IDENTITY, tol)


@dataclass(frozen=True)
class TransformClass:
    tag: str
    trace_value: complex


def classify(g: MoebiusTransform) -> TransformClass:
    """Classify by the trace: parabolic iff Tr = 4, elliptic iff Tr in [0, 4),
    hyperbolic iff Tr in (4, inf), strictly loxodromic otherwise."""
    tr = trace_invariant(g)
    if is_identity(g):
        return TransformClass("identity", tr)
    if abs(tr.imag) <= TRACE_TOL:
        x = tr.real
        if abs(x - 4) <= TRACE_TOL:
            tag = "parabolic"
        elif -TRACE_TOL <= x < 4:
            tag = "elliptic"
        elif x > 4:
            tag = "hyperbolic"
        else:
            tag = "strictly_loxodromic"
    else:
        tag = "strictly_loxodromic"
    return TransformClass(tag, tr)


class FixedPoint(NamedTuple):
    point: complex
    nature: str  # "parabolic", "neutral", "attractive" or "repulsive"


def _multiplier_at(g: MoebiusTransform, p: complex) -> complex:
    if is_inf(p):
        # in the chart w = 1/z the map is w -> (c + d w)/(a + b w) near 0
        return g.d / g.a
    return 1 / (g.c * p + g.d) ** 2


def fixed_points(g: MoebiusTransform) -> list[FixedPoint]:
    """Fixed points on the sphere, labelled by their dynamical nature."""
    cls = classify(g)
    if cls.tag == "identity":
        raise ValueError("whole sphere fixed: identity has no isolated fixed points")
    a, b, c, d = g.a, g.b, g.c, g.d
    if cls.tag == "parabolic":
        pts = [INF if abs(c) <= ENTRY_TOL else (a - d) / (2 * c)]
    elif abs(c) <= ENTRY_TOL:
        pts = [b / (d - a), INF]
    else:
        disc = cmath.sqrt((a + d) ** 2 - 4)
        pts = [(a - d + disc) / (2 * c), (a - d - disc) / (2 * c)]
    if cls.tag == "parabolic":
        return [FixedPoint(pts[0], "parabolic")]
    out = []
    for p in pts:
        m = abs(_multiplier_at(g, p))
        if cls.tag == "elliptic" or abs(m - 1) <= 1e-12:
            nature = "neutral"
        else:
            nature = "attractive" if m < 1 else "repulsive"
        out.append(FixedPoint(p, nature))
    return out


def _projective_power(m: np.ndarray, n: int) -> np.ndarray:
    # square-and-multiply on the projective class; entries of a hyperbolic
    # element grow like |a|^(2^k), so rescale after every squaring
    result = np.eye(2, dtype=complex)
    base = np.array(m, dtype=complex)
    while n > 0:
        if n & 1:
            result = result @ base
            result /= np.abs(result).max()
        n >>= 1
        if n:
            base = base @ base
            base /= np.abs(base).max()
    return result


def iterate_limit(g: MoebiusTransform, z, n_max: int):
    """g^n(z) for n = n_max, by repeated squaring of the matrix."""
    tag = classify(g).tag
    if tag in ("identity", "elliptic"):
        raise ValueError(f"no attracting limit: {tag} transformation")
    m = _projective_power(g.matrix, n_max)
    if is_inf(z):
        return INF if abs(m[1, 0]) == 0 else m[0, 0] / m[1, 0]
    den = m[1, 0] * z + m[1, 1]
    if den == 0:
        return INF
    return (m[0, 0] * z + m[0, 1]) / den


def attracting_point(g: MoebiusTransform):
    for p in fixed_points(g):
        if p.nature in ("attractive", "parabolic"):
            return p.point
    raise ValueError("no attracting fixed point")


def _same_point_sets(xs, ys, tol) -> bool:
    if len(xs) != len(ys):
        return False
    remaining = list(ys)
    for x in xs:
        for i, y in enumerate(remaining):
            if chordal_distance(x, y) <= tol:
                del remaining[i]
                break
        else:
            return False
    return True


def commute_iff_same_fixed_set(g: MoebiusTransform, h: MoebiusTransform, tol: float = 1e-10):
    """Return (commutes, same_fixed_set) for two non-identity elements."""
    if is_identity(g) or is_identity(h):
        raise ValueError("identity element has no fixed-point set to compare")
    commutes = compose(g, h).isclose(compose(h, g), tol)
    same = _same_point_sets(
        [p.point for p in fixed_points(g)], [p.point for p in fixed_points(h)], tol
    )
    return commutes, same


CAYLEY = mobius(1, -1j, 1, 1j)
CAYLEY_INV = CAYLEY.inverse()


def cayley(z):
    """λ(z) = (z - i)/(z + i): upper half-plane -> unit disc."""
    return apply(CAYLEY, z)


def cayley_inverse(w):
    return apply(CAYLEY_INV, w)


def reduce_to_fundamental_domain(z, return_letters: bool = False):
    """Move z into the standard fundamental domain of PSL(2, Z).

    Returns ``(z_reduced, word)`` with ``word(z) == z_reduced``.  The output
    satisfies |Re| <= 1/2 and |z| >= 1, with the left boundary kept: Re = 1/2
    goes to -1/2 and points on the unit circle have Re <= 0.  With
    ``return_letters`` the word is also returned as a list of
    ``(letter, power)`` pairs in matrix-product order.
    """
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("point must lie in the upper half-plane")
    letters: list[tuple[str, int]] = []  # applied first is last

    def push(letter, k):
        if letters and letters[0][0] == letter:
            k += letters[0][1]
            letters.pop(0)
            if letter == "S":
                k %= 2
            if k == 0:
                return
        letters.insert(0, (letter, k))

    for _ in range(10_000):
        n = math.floor(z.real + 0.5)
        if n:
            z -= n
            push("T", -n)
        if abs(z) ** 2 < 1 - 1e-15:
            z = -1 / z
            push("S", 1)
        else:
            break
    else:  # pragma: no cover
        raise RuntimeError("reduction did not terminate")
    if abs(abs(z) ** 2 - 1) <= 1e-14 and z.real > 0:
        z = -1 / z
        push("S", 1)
    word = word_from_letters(letters)
    if return_letters:
        return z, word, letters
    return z, word


def word_from_letters(letters) -> MoebiusTransform:
    gens = {"S": S, "T": T, "P": P}
    m = IDENTITY
    for letter, k in letters:
        m = compose(m, gens[letter] ** k)
    return m


def word_string(letters) -> str:
    if not letters:
        return "I"
    return " ".join(name if k == 1 else f"{name}^{k}" for name, k in letters)
