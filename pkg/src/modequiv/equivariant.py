"""Equivariant functions h_f = z + k f/f' and weight-2 depth-1 quasi-forms.

Values of equivariant functions live on the Riemann sphere; poles come back as
``moebius.INF`` and comparisons use the chordal metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import forms
from . import moebius as mb

POLE_TOL = 1e-13
DEFAULT_SEED = 0x5EED


def _scalarize(out):
    return complex(out) if np.ndim(out) == 0 else out


class EquivariantFunction:
    """A meromorphic map h on H, built from a form, a quasi-form or the identity."""

    def __init__(self, kind: str, form=None, weight: float | None = None, quasi=None,
                 func: Callable | None = None, name: str = ""):
        if kind not in ("rational", "from_quasi", "identity", "custom"):
            raise ValueError(f"unknown source kind {kind!r}")
        self.kind = kind
        self.form = form
        self.weight = weight
        self.quasi = quasi
        self.func = func
        self.name = name or kind

    def __repr__(self):
        return f"EquivariantFunction({self.name})"

    @classmethod
    def identity_map(cls) -> EquivariantFunction:
        return cls("identity", name="h0")

    @classmethod
    def custom(cls, func: Callable, name: str = "custom") -> EquivariantFunction:
        return cls("custom", func=func, name=name)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "identity":
            return _scalarize(z.copy())
        if self.kind == "custom":
            return _scalarize(np.asarray(self.func(z), dtype=complex))
        if self.kind == "rational":
            return _scalarize(self._rational(z))
        g = np.asarray(self.quasi(z), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = z + 1 / g
        out = np.where(np.isinf(g), z, out)
        out = np.where(np.abs(g) < POLE_TOL, mb.INF, out)
        return _scalarize(out)

    def _rational(self, z):
        if getattr(self.form, "log_derivative", None) is not None:
            L = np.asarray(self.form.log_derivative(z), dtype=complex)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = z + self.weight / L
            return np.where(np.abs(L) < POLE_TOL, mb.INF, out)
        f = np.asarray(self.form(z), dtype=complex)
        df = np.asarray(self.form.derivative(z, 1), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = f / df
            out = z + self.weight * ratio
        # zero of f (of any order): f/f' -> 0, so h fixes the point
        at_zero = (np.abs(f) < POLE_TOL) & ((df == 0) | (np.abs(ratio) < POLE_TOL))
        pole = (np.abs(df) < POLE_TOL * np.maximum(1.0, np.abs(f))) & ~at_zero
        out = np.where(pole, mb.INF, out)
        return np.where(at_zero, z, out)


def make_h_f(f, k: float) -> EquivariantFunction:
    """h_f(z) = z + k f(z)/f'(z)."""
    if k == 0:
        raise ValueError("weight must be nonzero")
    name = getattr(f, "name", "f")
    return EquivariantFunction("rational", form=f, weight=k, name=f"h_{name}")


@dataclass
class QuasiForm21:
    """A function expected to satisfy (cz+d)^-2 g(gz) = g(z) + c/(cz+d)."""

    evaluator: Callable
    description: str = ""
    is_infinity: bool = field(default=False)

    @classmethod
    def constant_infinity(cls) -> QuasiForm21:
        return cls(lambda z: np.full(np.shape(z), mb.INF, dtype=complex), "g0 = inf", True)

    def __call__(self, z):
        return _scalarize(np.asarray(self.evaluator(z), dtype=complex))


def hat(h: EquivariantFunction) -> QuasiForm21:
    """h -> 1/(h - h0)."""
    if h.kind == "identity":
        return QuasiForm21.constant_infinity()
    if h.kind == "from_quasi":
        return h.quasi

    def g(z):
        z = np.asarray(z, dtype=complex)
        hz = np.asarray(h(z), dtype=complex)
        diff = hz - z
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 1 / diff
        out = np.where(np.isinf(hz), 0, out)
        return np.where(np.abs(diff) < POLE_TOL, mb.INF, out)

    return QuasiForm21(g, f"hat({h.name})")


def unhat(g: QuasiForm21) -> EquivariantFunction:
    """g -> h0 + 1/g."""
    if g.is_infinity:
        return EquivariantFunction.identity_map()
    return EquivariantFunction("from_quasi", quasi=g, name=f"unhat({g.description})")


# ---------------------------------------------------------------------------
# randomized checks


@dataclass
class Report:
    max_dev: float
    mean_dev: float
    n_fail: int
    n_samples: int
    worst_sample: dict
    failures: list = field(default_factory=list)

    def as_dict(self):
        return {
            "max_dev": self.max_dev,
            "mean_dev": self.mean_dev,
            "n_fail": self.n_fail,
            "n_samples": self.n_samples,
            "worst_sample": self.worst_sample,
        }


def random_words(gens: Sequence[mb.MoebiusTransform], n: int, word_len: int, rng,
                 names: Sequence[str] | None = None):
    """n random words of length 1..word_len in the generators and their inverses."""
    names = list(names) if names else [f"g{i}" for i in range(len(gens))]
    alphabet = [(g, nm) for g, nm in zip(gens, names)]
    alphabet += [(g.inverse(), f"{nm}^-1") for g, nm in zip(gens, names)]
    out = []
    for _ in range(n):
        length = int(rng.integers(1, word_len + 1))
        m = mb.IDENTITY
        letters = []
        for i in rng.integers(0, len(alphabet), size=length):
            g, nm = alphabet[i]
            m = m @ g
            letters.append(nm)
        out.append((m, " ".join(letters)))
    return out


def sample_pairs(gens, n_samples, word_len, seed=DEFAULT_SEED, names=None,
                 re_range=(-0.5, 0.5), im_range=(0.3, 3.0), min_image_im=0.005):
    """Draw (word, z) pairs; pairs whose image gamma z drops below
    ``min_image_im`` are redrawn so both points stay evaluable."""
    rng = np.random.default_rng(seed)
    words, zs = [], []
    while len(zs) < n_samples:
        need = n_samples - len(zs)
        batch = random_words(gens, need, word_len, rng, names)
        x = rng.uniform(*re_range, size=need)
        y = rng.uniform(*im_range, size=need)
        for (g, label), z in zip(batch, x + 1j * y):
            if complex(mb.apply(g, z)).imag >= min_image_im:
                words.append((g, label))
                zs.append(z)
    return words, np.array(zs)


def check_equivariance(h, group_gens, n_samples: int = 500, word_len: int = 8,
                       seed: int = DEFAULT_SEED, tol: float = 1e-7, names=None,
                       min_image_im: float = 0.005) -> Report:
    """Compare h(gamma z) with gamma h(z) in the chordal metric."""
    words, zs = sample_pairs(group_gens, n_samples, word_len, seed, names,
                             min_image_im=min_image_im)
    gz = np.array([complex(mb.apply(g, z)) for (g, _), z in zip(words, zs)])
    h_gz = np.atleast_1d(np.asarray(h(gz), dtype=complex))
    h_z = np.atleast_1d(np.asarray(h(zs), dtype=complex))
    g_hz = np.array([complex(mb.apply(g, w)) for (g, _), w in zip(words, h_z)])
    dev = np.asarray(mb.chordal_distance(h_gz, g_hz))
    return _report(dev, words, zs, tol)


def _report(dev, words, zs, tol) -> Report:
    dev = np.nan_to_num(dev, nan=np.inf)
    worst = int(np.argmax(dev))
    fails = np.nonzero(dev > tol)[0]
    failures = [
        {"word": words[i][1], "z": [zs[i].real, zs[i].imag], "dev": float(dev[i])} for i in fails
    ]
    return Report(
        max_dev=float(dev.max()),
        mean_dev=float(dev.mean()),
        n_fail=int(fails.size),
        n_samples=int(dev.size),
        worst_sample={"word": words[worst][1], "z": [zs[worst].real, zs[worst].imag],
                      "dev": float(dev[worst])},
        failures=failures,
    )


def quasi_law_check(g, scale: float, group_gens, n_samples: int = 200, word_len: int = 8,
                    seed: int = DEFAULT_SEED, tol: float = 1e-8, names=None,
                    min_image_im: float = 0.005) -> Report:
    """Residual of (cz+d)^-2 g(gamma z) - g(z) - scale c/(cz+d), relative to max(1, |g(z)|).

    ``scale`` is the weight k for a logarithmic derivative L_f, and 1 for the
    image of an equivariant function under :func:`hat`.
    """
    words, zs = sample_pairs(group_gens, n_samples, word_len, seed, names,
                             min_image_im=min_image_im)
    gz = np.array([complex(mb.apply(gm, z)) for (gm, _), z in zip(words, zs)])
    c = np.array([gm.c for gm, _ in words])
    d = np.array([gm.d for gm, _ in words])
    J = c * zs + d
    lhs = np.asarray(g(gz), dtype=complex) / J**2
    gzs = np.asarray(g(zs), dtype=complex)
    resid = np.abs(lhs - gzs - scale * c / J) / np.maximum(1.0, np.abs(gzs))
    return _report(resid, words, zs, tol)


def h_delta() -> EquivariantFunction:
    """h_Delta = z + 12 Delta/Delta'."""
    return make_h_f(forms.get_form("Delta"), 12)


def e2_quasi() -> QuasiForm21:
    """(i pi/6) E_2, the image of h_Delta under hat."""
    e2 = forms.get_form("E2")
    return QuasiForm21(lambda z: (1j * np.pi / 6) * e2(z), "(i pi/6) E2")
