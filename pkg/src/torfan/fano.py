"""Fano test and the anticanonical polytope {m : <m, u> >= -1}."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import lattice
from .fan import Fan
from .intersection import Wall, picard_rank, walls

Point = tuple[Fraction, ...]


class PolytopeError(ValueError):
    pass


@dataclass(frozen=True)
class FanoReport:
    is_fano: bool
    min_degree: int
    witness_wall: Wall

    def to_json(self) -> dict:
        return {"is_fano": self.is_fano, "min_degree": self.min_degree,
                "witness_wall": self.witness_wall.to_json()}


@dataclass(frozen=True)
class Polytope:
    normals: tuple[tuple[int, ...], ...]
    vertices: tuple[Point, ...]

    @property
    def dim(self) -> int:
        return len(self.normals[0]) if self.normals else 0

    def value(self, m: Sequence, k: int) -> Fraction:
        return sum((Fraction(a) * b for a, b in zip(m, self.normals[k])), Fraction(0))

    def contains(self, m: Sequence, strict: bool = False) -> bool:
        if strict:
            return all(self.value(m, k) > -1 for k in range(len(self.normals)))
        return all(self.value(m, k) >= -1 for k in range(len(self.normals)))

    def facet_vertices(self, k: int) -> list[Point]:
        return [v for v in self.vertices if self.value(v, k) == -1]

    def to_json(self) -> dict:
        return {"normals": [list(u) for u in self.normals],
                "vertices": [[_num(x) for x in v] for v in self.vertices]}


def _num(x: Fraction):
    return x.numerator if x.denominator == 1 else str(x)


def anticanonical_degree_curve(f: Fan, w: Wall) -> int:
    """-K . C for the invariant curve of ``w``: the sum of its relation."""
    return sum(w.relation)


def is_fano(f: Fan) -> FanoReport:
    ws = walls(f)
    witness = min(ws, key=lambda w: (anticanonical_degree_curve(f, w), w.ray_indices))
    deg = anticanonical_degree_curve(f, witness)
    return FanoReport(deg >= 1, deg, witness)


def anticanonical_polytope(f: Fan) -> Polytope:
    if not is_fano(f).is_fano:
        raise PolytopeError("polytope may be unbounded/degenerate: fan is not Fano")
    n = f.dim
    found = set()
    for subset in itertools.combinations(range(f.nrays), n):
        m = lattice.solve([f.rays[i] for i in subset], [-1] * n)
        if m is None:
            continue
        if all(sum(a * b for a, b in zip(m, u)) >= -1 for u in f.rays):
            found.add(m)
    return Polytope(f.rays, tuple(sorted(found)))


def _affine_rank(points: Sequence[Point]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    diffs = [[x - y for x, y in zip(p, base)] for p in points[1:]]
    # clear denominators so lattice.rank stays in integers
    den = math.lcm(*(x.denominator for row in diffs for x in row))
    return lattice.rank([[int(x * den) for x in row] for row in diffs])


def _triangulate(points: list[Point], normals: Sequence[Sequence[int]], dim: int) -> list[list[Point]]:
    """Pulling triangulation of the face ``conv(points)`` of affine dimension ``dim``."""
    if dim == 0:
        return [[points[0]]]
    apex = min(points)
    simplices = []
    seen = set()
    for u in normals:
        vals = [sum(a * b for a, b in zip(p, u)) for p in points]
        lo = min(vals)
        sub = [p for p, v in zip(points, vals) if v == lo]
        key = frozenset(sub)
        if apex in key or key in seen or len(sub) < dim or _affine_rank(sub) != dim - 1:
            continue
        seen.add(key)
        for s in _triangulate(sorted(sub), normals, dim - 1):
            simplices.append([apex] + s)
    return simplices


def normalized_volume(p: Polytope) -> Fraction:
    """``n! * vol(P)``: cone from the origin over a triangulation of each facet."""
    n = p.dim
    total = Fraction(0)
    for k in range(len(p.normals)):
        facet = sorted(p.facet_vertices(k))
        if len(facet) < n or _affine_rank(facet) != n - 1:
            continue
        # faces of a facet are cut out by the other facet normals
        for simplex in _triangulate(facet, p.normals, n - 1):
            mat = [[Fraction(x) for x in v] for v in simplex]
            total += abs(_det_fraction(mat))
    return total


def _det_fraction(m: list[list[Fraction]]) -> Fraction:
    n = len(m)
    a = [row[:] for row in m]
    d = Fraction(1)
    for c in range(n):
        piv = next((i for i in range(c, n) if a[i][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            a[c], a[piv] = a[piv], a[c]
            d = -d
        d *= a[c][c]
        for i in range(c + 1, n):
            if a[i][c]:
                f = a[i][c] / a[c][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return d


def anticanonical_degree_top(f: Fan) -> Fraction:
    """(-K)^n = n! vol(P)."""
    vol = normalized_volume(anticanonical_polytope(f))
    if vol.denominator != 1:
        raise PolytopeError(f"non-integral anticanonical degree {vol} for a smooth Fano fan")
    return vol


def cone_counts(f: Fan) -> list[int]:
    counts = [0] * (f.dim + 1)
    for c in f.all_cones:
        counts[len(c)] += 1
    return counts


def invariants_summary(f: Fan) -> dict:
    fano = is_fano(f).is_fano
    out = {"dim": f.dim, "picard_rank": picard_rank(f), "ray_count": f.nrays,
           "cone_counts": cone_counts(f), "is_fano": fano}
    if fano:
        out["anticanonical_degree"] = int(anticanonical_degree_top(f))
    return out


def fingerprint(f: Fan) -> tuple:
    s = invariants_summary(f)
    return (s["dim"], s["picard_rank"], s["ray_count"], tuple(s["cone_counts"]),
            s["is_fano"], s.get("anticanonical_degree"))
