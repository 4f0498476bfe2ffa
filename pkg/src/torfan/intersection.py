"""Walls, wall relations and invariant curve classes."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import lattice
from .fan import Cone, Fan, orbit_closure_fan
from .lattice import IntVector


@dataclass(frozen=True)
class Wall:
    """A codimension-one cone and the relation among the rays around it.

    ``relation`` has one entry per ray of the fan; it is supported on the
    ``n + 1`` rays of the two adjacent maximal cones and has coefficient 1 on
    the two rays ``opposite`` the wall.
    """

    ray_indices: Cone
    adjacent: tuple[int, int]
    opposite: tuple[int, int]
    relation: IntVector

    @property
    def involved(self) -> tuple[int, ...]:
        return tuple(sorted(self.ray_indices + self.opposite))

    def to_json(self) -> dict:
        return {"rays": list(self.ray_indices), "adjacent": list(self.adjacent),
                "opposite": list(self.opposite), "relation": list(self.relation)}


@dataclass(frozen=True)
class CurveClass:
    """Intersection numbers ``D_rho . C`` against every invariant divisor."""

    intersections: IntVector

    def to_json(self) -> list:
        return list(self.intersections)


@lru_cache(maxsize=4096)
def walls(f: Fan) -> tuple[Wall, ...]:
    """All walls of a smooth complete fan, sorted by ray indices."""
    out = []
    for facet, owners in sorted(f.facet_map.items()):
        if len(owners) != 2:
            raise ValueError(f"walls undefined: face {list(facet)} lies in {len(owners)} max cones")
        s, t = (f.max_cones[k] for k in owners)
        (a,) = set(s) - set(facet)
        (b,) = set(t) - set(facet)
        involved = sorted(facet + (a, b))
        ker = lattice.kernel_basis(lattice.columns_to_matrix([f.rays[i] for i in involved], f.dim))
        if len(ker) != 1:
            raise ValueError(f"walls undefined: rays around {list(facet)} are not in general position")
        vec = dict(zip(involved, ker[0]))
        scale = vec[a]
        if scale < 0:
            vec = {i: -x for i, x in vec.items()}
            scale = -scale
        if scale == 0 or any(x % scale for x in vec.values()) or vec[b] != scale:
            raise ValueError(f"walls undefined: non-smooth wall {list(facet)}")
        relation = [0] * f.nrays
        for i, x in vec.items():
            relation[i] = x // scale
        out.append(Wall(facet, tuple(owners), (a, b), tuple(relation)))
    return tuple(out)


def curve_class(f: Fan, w: Wall) -> CurveClass:
    return CurveClass(w.relation)


def picard_rank(f: Fan) -> int:
    return f.nrays - f.dim


def n1_span_of_divisor(f: Fan, ray: int) -> int:
    """Dimension of the span in N_1(X) of the invariant curves inside ``V(ray)``."""
    if not 0 <= ray < f.nrays:
        raise IndexError(f"ray index {ray} out of range")
    classes = [w.relation for w in walls(f) if ray in w.ray_indices]
    return lattice.rank(classes) if classes else 0


def divisor_picard_rank(f: Fan, ray: int) -> int:
    return picard_rank(orbit_closure_fan(f, (ray,)))
