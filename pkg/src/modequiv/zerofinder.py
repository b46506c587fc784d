"""Zeros of holomorphic functions on rectangles in H.

Zeros are counted with the argument principle, isolated by recursive
subdivision, polished with Newton's method and re-certified by a winding
number on a tiny circle.  :func:`classify_equivalence` then sorts them into
PSL(2, Z)-orbits.

Targets can be anything callable on numpy arrays.  A ``derivative(z, order)``
method is used when present (forms have series derivatives), a
``logarithmic_derivative(z)`` method is preferred for the argument integral,
and a central difference is the last resort.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from . import forms
from . import moebius as mb
from . import qseries as qs

log = logging.getLogger(__name__)

WINDING_TOL = 1e-3
SPLIT_RATIOS = (0.4871, 0.5317, 0.4538, 0.5629, 0.4213)
JITTER = 1e-6


class WindingError(RuntimeError):
    pass


class _BoundaryZero(Exception):
    pass


@dataclass(frozen=True)
class SearchBox:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError("empty search box")
        if self.im_min < qs.Y_MIN:
            raise ValueError(f"search box reaches below Im = {qs.Y_MIN}")

    @classmethod
    def parse(cls, text: str) -> SearchBox:
        return cls(*(float(x) for x in text.split(",")))

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    def contains(self, z, slack: float = 0.0) -> bool:
        return (self.re_min - slack <= z.real <= self.re_max + slack
                and self.im_min - slack <= z.imag <= self.im_max + slack)

    def shifted(self, delta: float) -> SearchBox:
        return SearchBox(self.re_min + delta, self.re_max + delta,
                         self.im_min + delta, self.im_max + delta)

    def split(self, ratio: float) -> list[SearchBox]:
        xm = self.re_min + ratio * (self.re_max - self.re_min)
        ym = self.im_min + ratio * (self.im_max - self.im_min)
        return [
            SearchBox(self.re_min, xm, self.im_min, ym),
            SearchBox(xm, self.re_max, self.im_min, ym),
            SearchBox(self.re_min, xm, ym, self.im_max),
            SearchBox(xm, self.re_max, ym, self.im_max),
        ]


@dataclass
class ZeroRecord:
    location: complex
    residual: float
    winding_confirmed: int
    newton_iters: int
    fd_representative: complex
    multiplicity_estimate: int
    derivative_agreement: float = float("nan")
    converged: bool = True

    def as_dict(self):
        out = asdict(self)
        for key in ("location", "fd_representative"):
            out[key] = [out[key].real, out[key].imag]
        return out


class _Target:
    """Uniform access to f, f' and f'/f for a user-supplied function."""

    def __init__(self, f):
        self.f = f
        self.has_derivative = hasattr(f, "derivative")

    def value(self, z):
        return np.asarray(self.f(z), dtype=complex)

    def derivative(self, z):
        if self.has_derivative:
            return np.asarray(self.f.derivative(z, 1), dtype=complex)
        return self.fd_derivative(z)

    def fd_derivative(self, z, h=1e-6):
        z = np.asarray(z, dtype=complex)
        return (self.value(z + h) - self.value(z - h)) / (2 * h)

    def logderiv(self, z):
        f = self.f
        if isinstance(f, forms.Form):
            if f.log_derivative is not None:
                return np.asarray(f.log_derivative(z), dtype=complex)
            if isinstance(f.evaluator, forms.ClosedForm):
                return np.asarray(f.evaluator.logarithmic_derivative(z), dtype=complex)
        elif hasattr(f, "logarithmic_derivative"):
            return np.asarray(f.logarithmic_derivative(z), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.derivative(z) / self.value(z)


class DerivativeOf:
    """f' as a target in its own right (critical points of f)."""

    def __init__(self, f):
        self.f = f
        self.name = f"{getattr(f, 'name', 'f')}'"

    def __call__(self, z):
        return self.f.derivative(z, 1)

    def derivative(self, z, order: int = 1):
        return self.f.derivative(z, order + 1)


# ---------------------------------------------------------------------------
# argument principle


_GL_LO = np.polynomial.legendre.leggauss(8)
_GL_HI = np.polynomial.legendre.leggauss(16)


def _initial_segments(a: complex, b: complex) -> int:
    # enough panels to resolve the q^N oscillation along the side
    n_terms = qs.order_for(max(min(a.imag, b.imag), qs.Y_MIN), 1e-16)
    return int(min(4096, max(8, math.ceil(abs(b - a) * n_terms / 4))))


MAX_PANELS = 1 << 15


def _contour_integral(logderiv, sides, tol: float, near: float = 0.0, max_depth: int = 60):
    """Adaptive Gauss-Legendre (8 vs 16 nodes) over the polygon, all panels of a
    level evaluated in one vectorized call.  Returns (integral, min 1/|L|)."""
    panels = []
    for a, b in sides:
        n = _initial_segments(a, b)
        edges = a + (b - a) * np.linspace(0.0, 1.0, n + 1)
        panels.extend(zip(edges[:-1], edges[1:]))
    total_len = sum(abs(b - a) for a, b in sides)
    lo_x, lo_w = _GL_LO
    hi_x, hi_w = _GL_HI
    total = 0j
    closest = np.inf
    for _ in range(max_depth):
        if not panels:
            return total, closest
        if len(panels) > MAX_PANELS:
            raise _BoundaryZero("integrand too oscillatory for the panel budget")
        p0 = np.array([p[0] for p in panels])
        p1 = np.array([p[1] for p in panels])
        mid, half = 0.5 * (p0 + p1), 0.5 * (p1 - p0)
        z_lo = mid[:, None] + half[:, None] * lo_x[None, :]
        z_hi = mid[:, None] + half[:, None] * hi_x[None, :]
        vals = np.asarray(logderiv(np.concatenate([z_lo.ravel(), z_hi.ravel()])), dtype=complex)
        if not np.all(np.isfinite(vals)):
            raise _BoundaryZero("zero on the contour")
        with np.errstate(divide="ignore"):
            closest = min(closest, float(np.min(1 / np.abs(vals))))
        # 1/|f'/f| estimates the distance to the nearest simple zero
        if closest < near:
            raise _BoundaryZero("zero too close to the contour")
        v_lo = vals[: z_lo.size].reshape(z_lo.shape)
        v_hi = vals[z_lo.size :].reshape(z_hi.shape)
        i_lo = half * (v_lo @ lo_w)
        i_hi = half * (v_hi @ hi_w)
        err = np.abs(i_hi - i_lo)
        ok = err <= tol * np.abs(2 * half) / total_len
        total += i_hi[ok].sum()
        bad = np.nonzero(~ok)[0]
        if bad.size and np.min(np.abs(half[bad])) < 1e-13 * total_len:
            raise _BoundaryZero("zero on the contour")
        panels = [q for i in bad for q in ((p0[i], mid[i]), (mid[i], p1[i]))]
    raise _BoundaryZero("argument integral did not converge")


def _winding_exact_box(target: _Target, box: SearchBox) -> int:
    corners = [complex(box.re_min, box.im_min), complex(box.re_max, box.im_min),
               complex(box.re_max, box.im_max), complex(box.re_min, box.im_max)]
    sides = list(zip(corners, corners[1:] + corners[:1]))
    integral, _ = _contour_integral(target.logderiv, sides, 2 * math.pi * WINDING_TOL,
                                    near=1e-9 * box.diameter)
    cur = integral / (2j * math.pi)
    w = cur.real
    if abs(w - round(w)) > 0.25 or abs(cur.imag) > 0.25:
        raise _BoundaryZero(f"non-integral winding {cur:.4f}")
    return int(round(w))


def _winding_with_jitter(target: _Target, box: SearchBox):
    last = None
    for attempt in range(4):
        b = box if attempt == 0 else box.shifted(JITTER * attempt)
        try:
            return _winding_exact_box(target, b), b
        except _BoundaryZero as err:
            last = err
            log.debug("jittering %s: %s", b, err)
    raise WindingError(f"boundary zero persists after 3 jitters: {last}")


def winding_count(f, box: SearchBox) -> int:
    """(1/2 pi i) * contour integral of f'/f around the box."""
    return _winding_with_jitter(_Target(f), box)[0]


def circle_winding(f, center: complex, radius: float, nodes: int = 64) -> int:
    target = f if isinstance(f, _Target) else _Target(f)
    theta = 2 * math.pi * np.arange(nodes) / nodes
    dz = 1j * radius * np.exp(1j * theta)
    L = target.logderiv(center + radius * np.exp(1j * theta))
    val = (L * dz).sum() * (2 * math.pi / nodes) / (2j * math.pi)
    return int(round(val.real))


# ---------------------------------------------------------------------------
# isolation and refinement


def _newton(target: _Target, z0: complex, max_iter: int = 60, tol: float = 1e-13):
    z = complex(z0)
    for it in range(1, max_iter + 1):
        L = complex(target.logderiv(np.array([z]))[0])
        if not np.isfinite(L):  # landed exactly on the zero
            return z, it, True
        if L == 0:
            return z, it, False
        step = 1 / L
        z -= step
        if z.imag <= qs.Y_MIN or not np.isfinite(z):
            return z, it, False
        if abs(step) < tol * max(1.0, abs(z)):
            return z, it, True
    return z, max_iter, False


def _minimize_modulus(target: _Target, box: SearchBox) -> complex:
    def obj(p):
        z = complex(p[0], p[1])
        if not box.contains(z, slack=box.diameter):
            return 1e300
        return float(np.abs(target.value(np.array([z]))[0]))

    c = box.center
    res = optimize.minimize(obj, [c.real, c.imag], method="Nelder-Mead",
                            options={"xatol": 1e-14, "fatol": 0, "maxiter": 2000})
    return complex(res.x[0], res.x[1])


def _child_with_zero(target: _Target, box: SearchBox):
    for ratio in SPLIT_RATIOS:
        try:
            for c in box.split(ratio):
                if _winding_exact_box(target, c) > 0:
                    return c
        except _BoundaryZero:
            continue
    return None


def _refine(target: _Target, box: SearchBox, multiplicity: int) -> ZeroRecord:
    leaf = box
    z, iters, ok = _newton(target, box.center)
    # the leaf holds exactly `multiplicity` zeros; Newton may wander to a neighbour,
    # in which case shrink the leaf around its zero and start again
    for _ in range(30):
        if ok and box.contains(z, 0.01 * box.diameter + 2 * JITTER):
            break
        child = _child_with_zero(target, box)
        if child is None:
            break
        box = child
        z, more, ok = _newton(target, box.center)
        iters += more
    if not ok or not box.contains(z, 0.01 * box.diameter + 2 * JITTER):
        z0 = _minimize_modulus(target, box)
        z, more, ok = _newton(target, z0)
        iters += more
        ok = ok and leaf.contains(z, 0.01 * leaf.diameter + 2 * JITTER)
    val = complex(target.value(np.array([z]))[0])
    d_series = complex(target.derivative(np.array([z]))[0])
    agreement = float("nan")
    if target.has_derivative and d_series != 0:
        d_fd = complex(target.fd_derivative(np.array([z]), h=1e-6 * max(z.imag, 1e-3))[0])
        agreement = abs(d_fd - d_series) / abs(d_series)
    try:
        w = circle_winding(target, z, 1e-6)
    except (FloatingPointError, ValueError):
        w = 0
    rep = mb.reduce_to_fundamental_domain(z)[0] if z.imag > 0 else z
    ok = ok and abs(val) < 1e-9 * max(1.0, abs(d_series)) and w >= 1
    return ZeroRecord(
        location=z,
        residual=abs(val),
        winding_confirmed=w,
        newton_iters=iters,
        fd_representative=rep,
        multiplicity_estimate=w if w >= 1 else multiplicity,
        derivative_agreement=agreement,
        converged=ok,
    )


def _isolate(target: _Target, box: SearchBox, count: int, min_diameter: float):
    """Split until every box holds one zero and is small; yields (box, count)
    leaves depth first, so a caller can stop early."""
    stack = [(box, count)]
    while stack:
        b, w = stack.pop()
        if w == 0:
            continue
        if (w == 1 and b.diameter < min_diameter) or b.diameter < 1e-9:
            yield b, w
            continue
        for ratio in SPLIT_RATIOS:
            try:
                children = [(c, _winding_exact_box(target, c)) for c in b.split(ratio)]
            except _BoundaryZero:
                continue
            if sum(cw for _, cw in children) == w:
                break
            log.debug("winding mismatch on %s with ratio %s", b, ratio)
        else:
            log.warning("could not subdivide %s cleanly; refining from its center", b)
            yield b, w
            continue
        stack.extend(children)


def find_zeros(f, box: SearchBox, max_zeros: int = 1000, min_diameter: float = 1e-3,
               dedupe_tol: float = 1e-9) -> list[ZeroRecord]:
    """All zeros of f inside the box, sorted by (Im, Re)."""
    target = _Target(f)
    total, box = _winding_with_jitter(target, box)
    if total < 0:
        raise WindingError(f"negative winding {total}: f has poles in the box")
    records: list[ZeroRecord] = []
    for leaf, w in _isolate(target, box, total, min_diameter):
        rec = _refine(target, leaf, w)
        if any(abs(rec.location - r.location) < dedupe_tol for r in records):
            continue
        records.append(rec)
        if len(records) >= max_zeros:
            break
    records.sort(key=lambda r: (r.location.imag, r.location.real))
    return records


def critical_points(f, box: SearchBox, **kwargs) -> list[ZeroRecord]:
    """Zeros of f' in the box."""
    return find_zeros(DerivativeOf(f), box, **kwargs)


# ---------------------------------------------------------------------------
# orbits and simplicity


@dataclass
class OrbitPartition:
    representatives: list
    orbits: list  # lists of indices into the input

    @property
    def count(self) -> int:
        return len(self.orbits)

    def as_dict(self):
        return {
            "orbit_count": self.count,
            "representatives": [[r.real, r.imag] for r in self.representatives],
            "orbits": self.orbits,
        }


def _same_orbit_rep(r: complex, s: complex, tol: float) -> bool:
    # boundary identifications of the fundamental domain: Re = +-1/2 and the unit circle
    cands = (s, s + 1, s - 1, -s.conjugate())
    return any(abs(r - c) <= tol for c in cands)


def classify_equivalence(zeros, tol: float = 1e-8) -> OrbitPartition:
    """Group zeros (records or plain points) into PSL(2, Z)-orbits."""
    reps: list[complex] = []
    orbits: list[list[int]] = []
    for i, zr in enumerate(zeros):
        z = zr.location if isinstance(zr, ZeroRecord) else complex(zr)
        r = mb.reduce_to_fundamental_domain(z)[0]
        for k, s in enumerate(reps):
            if _same_orbit_rep(r, s, tol):
                orbits[k].append(i)
                break
        else:
            reps.append(r)
            orbits.append([i])
    return OrbitPartition(reps, orbits)


def simplicity_check(zero, f, partner=None, threshold: float = 1e-4) -> bool:
    """True when the zero is certified simple.

    With a ``partner`` (the Ramanujan-relation companion: E4 for zeros of E2,
    E6 for zeros of E4', E4^2 for zeros of E6') the test is |partner| >
    threshold at the zero, which forces f' != 0 there.  Without one, |f'| is
    tested directly.  False means simple-ness could not be certified.
    """
    z = zero.location if isinstance(zero, ZeroRecord) else complex(zero)
    if partner is not None:
        return bool(abs(complex(np.asarray(partner(np.array([z])))[0])) > threshold)
    return bool(abs(complex(_Target(f).derivative(np.array([z]))[0])) > threshold)


def ramanujan_partner(name: str):
    """Companion whose non-vanishing certifies simple zeros of E2, E4' or E6'."""
    if name == "E2":
        return forms.get_form("E4")
    if name == "E4'":
        return forms.get_form("E6")
    if name == "E6'":
        e4 = forms.get_form("E4")
        return lambda z: e4(z) ** 2
    raise KeyError(f"no Ramanujan partner registered for {name!r}")
