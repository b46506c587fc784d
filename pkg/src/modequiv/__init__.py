"""Möbius transformations, q-series, modular forms with multiplier systems,
equivariant functions and certified zero search in the upper half-plane."""

from . import equivariant, forms, identities, moebius, qseries, zerofinder
from .equivariant import check_equivariance, hat, make_h_f, unhat
from .forms import get_form, slash
from .moebius import INF, MoebiusTransform, classify, mobius, reduce_to_fundamental_domain
from .zerofinder import SearchBox, classify_equivalence, critical_points, find_zeros

__all__ = [
    "INF", "MoebiusTransform", "SearchBox", "check_equivariance", "classify",
    "classify_equivalence", "critical_points", "equivariant", "find_zeros", "forms",
    "get_form", "hat", "identities", "make_h_f", "mobius", "moebius", "qseries",
    "reduce_to_fundamental_domain", "slash", "unhat", "zerofinder",
]
__version__ = "0.1.0"
