"""Archimedean places, normalized absolute values, and the Weil height.

Heights are computed through the Mahler measure of the characteristic
polynomial, which avoids any ideal factorization and is exact up to the
certified root radii.  Every real-valued result is recomputed at twice the
working precision; a disagreement raises instead of returning quietly.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp

from .errors import PrecisionError
from .number_field import FieldElement, FieldTower, char_poly
from .rational_core import poly_complex_roots, primitive_part, squarefree_part

__all__ = ["Place", "PlaceFiber", "archimedean_places", "place_fibers",
           "log_abs", "weil_height", "archimedean_log_vector"]


@dataclass(frozen=True)
class Place:
    """One archimedean place: a real embedding or a conjugate pair."""

    field_tag: str
    index: int
    is_real: bool
    d_w: int
    d: int
    embedding_index: int
    embedding_indices: tuple


@dataclass(frozen=True)
class PlaceFiber:
    """The places of l lying over one place v of k."""

    v: Place
    members: tuple


def archimedean_places(tower: FieldTower, field_tag: str):
    """One place per real embedding plus one per conjugate pair."""
    key = ("places", field_tag)
    if key in tower._cache:
        return tower._cache[key]
    embeds = tower.embeddings_l if field_tag == "l" else tower.embeddings_k
    d = tower.degree(field_tag)
    places = []
    i = 0
    while i < len(embeds):
        if embeds[i].is_real:
            places.append(Place(field_tag, len(places), True, 1, d, i, (i,)))
            i += 1
        else:
            places.append(Place(field_tag, len(places), False, 2, d, i, (i, i + 1)))
            i += 2
    assert sum(p.d_w for p in places) == d
    tower._cache[key] = tuple(places)
    return tower._cache[key]


def place_fibers(tower: FieldTower):
    """Group the places of l by the place of k their embeddings restrict to."""
    key = ("fibers",)
    if key in tower._cache:
        return tower._cache[key]
    places_k = archimedean_places(tower, "k")
    places_l = archimedean_places(tower, "l")
    k_place_of_embedding = {}
    for p in places_k:
        for idx in p.embedding_indices:
            k_place_of_embedding[idx] = p.index
    members = {p.index: [] for p in places_k}
    for w in places_l:
        below = {k_place_of_embedding[tower.fiber_of_l_embedding[idx]]
                 for idx in w.embedding_indices}
        if len(below) != 1:
            raise PrecisionError("embedding fibration is not conjugation-stable")
        members[below.pop()].append(w)
    fibers = tuple(PlaceFiber(v, tuple(members[v.index])) for v in places_k)
    assert all(f.members for f in fibers)
    assert sum(len(f.members) for f in fibers) == len(places_l)
    tower._cache[key] = fibers
    return fibers


def _log_abs_at(alpha: FieldElement, place: Place, hi: bool):
    prec = alpha.tower.precision_bits * (2 if hi else 1)
    value = alpha.embed_numeric(place.embedding_index, hi=hi)
    with mp.workprec(prec + 16):
        mag = abs(value)
        if mag == 0:
            raise PrecisionError("embedding value underflowed to zero")
        return mpmath.mpf(place.d_w) / place.d * mpmath.log(mag)


def log_abs(alpha: FieldElement, place: Place) -> float:
    """log |alpha|_w with the local-degree normalization (d_w/d) log ||.||."""
    if alpha.owner != place.field_tag:
        raise ValueError("place belongs to a different field level")
    if alpha.is_zero:
        raise ValueError("log of zero")
    lo = _log_abs_at(alpha, place, hi=False)
    hi = _log_abs_at(alpha, place, hi=True)
    if abs(lo - hi) > mpmath.mpf(2) ** (-alpha.tower.precision_bits // 4):
        raise PrecisionError("log re-evaluation disagreed; raise precision")
    return float(hi)


def archimedean_log_vector(alpha: FieldElement):
    """The vector (log |alpha|_w) over the archimedean places of l."""
    if alpha.owner != "l":
        raise ValueError("archimedean_log_vector expects an l-element")
    if alpha.is_zero:
        raise ValueError("log of zero")
    return tuple(log_abs(alpha, w) for w in archimedean_places(alpha.tower, "l"))


def _mahler_height(alpha: FieldElement, prec: int):
    minpoly = squarefree_part(char_poly(alpha))
    _, q = primitive_part(minpoly)
    roots = poly_complex_roots(q, prec)
    with mp.workprec(prec + 16):
        total = mpmath.log(int(q.lead))
        for root in roots:
            mag = abs(root.to_mpc())
            if abs(mag - 1) <= root.error_radius:
                continue  # a root certified on the unit circle contributes 0
            if mag > 1:
                total += mpmath.log(mag)
        return total / minpoly.degree


def weil_height(alpha: FieldElement) -> float:
    """Weil height via the Mahler measure of the minimal polynomial.

    Degree normalization makes the value independent of the field the
    element is viewed in, and the unit-circle clamp makes the height of a
    root of unity exactly zero.
    """
    if alpha.is_zero:
        raise ValueError("height of zero")
    prec = alpha.tower.precision_bits
    lo = _mahler_height(alpha, prec)
    hi = _mahler_height(alpha, 2 * prec)
    if abs(lo - hi) > mpmath.mpf(2) ** (-prec // 4):
        raise PrecisionError("height re-evaluation disagreed; raise precision")
    return float(hi)
