"""Extremal contractions read off wall relations, and the two we can execute."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional

from . import lattice
from .fan import Cone, Fan, validate
from .intersection import CurveClass, Wall, walls
from .lattice import IntMatrix, IntVector

log = logging.getLogger(__name__)


class ContractionError(ValueError):
    pass


class Kind(str, enum.Enum):
    FIBER_TYPE = "fiber-type"
    DIVISORIAL = "divisorial"
    SMALL = "small"


@dataclass(frozen=True)
class WallClassification:
    alpha: int
    zeros: int
    positives: int
    kind: Kind
    exc_dim: int
    image_dim: int

    @property
    def type_pair(self) -> tuple[int, int]:
        return (self.exc_dim, self.image_dim)

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "zeros": self.zeros, "positives": self.positives,
                "kind": self.kind.value, "exc_dim": self.exc_dim, "image_dim": self.image_dim}


@dataclass(frozen=True)
class ExtremalClass:
    curve_class: CurveClass
    walls: tuple[Wall, ...]
    classification: WallClassification

    @property
    def relation(self) -> IntVector:
        return self.curve_class.intersections

    def to_json(self) -> dict:
        return {"class": self.curve_class.to_json(),
                "walls": [list(w.ray_indices) for w in self.walls],
                **self.classification.to_json()}


@dataclass(frozen=True)
class ToricMorphism:
    """Lattice map ``source -> target`` compatible with the fans.

    Blow-downs keep the lattice (identity matrix); fiber quotients project
    along ``kernel``.  ``exceptional`` and ``center`` are ray vectors, set on
    blow-downs.
    """

    matrix: IntMatrix
    source: Fan
    target: Fan
    kind: str
    kernel: Optional[IntVector] = None
    exceptional: Optional[IntVector] = None
    center: Optional[tuple[IntVector, IntVector]] = None
    center_cone: Optional[Cone] = field(default=None, compare=False)

    def image(self, v) -> tuple:
        return lattice.mat_vec(self.matrix, v)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "matrix": [list(r) for r in self.matrix],
               "target": self.target.to_json()}
        if self.kernel is not None:
            out["kernel"] = list(self.kernel)
        if self.exceptional is not None:
            out["exceptional_ray"] = list(self.exceptional)
            out["center"] = [list(v) for v in self.center]
        return out


def classify_wall(f: Fan, w: Wall) -> WallClassification:
    coeffs = [w.relation[i] for i in w.involved]
    alpha = sum(1 for b in coeffs if b < 0)
    zeros = sum(1 for b in coeffs if b == 0)
    positives = len(coeffs) - alpha - zeros
    kind = Kind.FIBER_TYPE if alpha == 0 else Kind.DIVISORIAL if alpha == 1 else Kind.SMALL
    return WallClassification(alpha, zeros, positives, kind, f.dim - alpha, zeros)


def _proportional(u: IntVector, v: IntVector) -> bool:
    return lattice.rank([u, v]) == 1 and all(a * b >= 0 for a, b in zip(u, v))


def wall_classes(f: Fan) -> list[ExtremalClass]:
    """Walls grouped by curve class, in order of first appearance, extremal or not."""
    groups: dict[IntVector, list[Wall]] = {}
    for w in walls(f):
        groups.setdefault(w.relation, []).append(w)
    out = []
    for rel, ws in groups.items():
        kinds = {classify_wall(f, w) for w in ws}
        if len(kinds) != 1:
            raise ContractionError("fan not Fano-like; extremal grouping invalid")
        out.append(ExtremalClass(CurveClass(rel), tuple(ws), kinds.pop()))
    return out


def extremal_rays(f: Fan) -> list[ExtremalClass]:
    """Wall classes spanning extremal rays of the cone of curves.

    A class is kept when it is not a nonnegative combination of the wall
    classes off its ray; invariant curves generate the cone of curves.
    """
    classes = wall_classes(f)
    rels = [c.relation for c in classes]
    out = [c for c in classes
           if not lattice.in_cone([r for r in rels if not _proportional(r, c.relation)], c.relation)]
    if any(sum(c.relation) <= 0 for c in out):
        log.warning("fan is not Fano; extremal classes computed from invariant curves only")
    return out


def blowdown_shape(cls: ExtremalClass) -> Optional[tuple[int, int, int]]:
    """``(exceptional, a, b)`` if the relation reads ``u_a + u_b - u_e = 0``."""
    rel = cls.relation
    neg = [i for i, b in enumerate(rel) if b < 0]
    pos = [i for i, b in enumerate(rel) if b > 0]
    if len(neg) != 1 or rel[neg[0]] != -1 or len(pos) != 2 or any(rel[i] != 1 for i in pos):
        return None
    return neg[0], pos[0], pos[1]


def fiber_pair(cls: ExtremalClass) -> Optional[tuple[int, int]]:
    """``(a, b)`` if the relation reads ``u_a + u_b = 0``."""
    support = [i for i, b in enumerate(cls.relation) if b]
    if len(support) != 2 or any(cls.relation[i] != 1 for i in support):
        return None
    return support[0], support[1]


def blow_down(f: Fan, cls: ExtremalClass) -> tuple[Fan, Cone, ToricMorphism]:
    """Undo a star subdivision: remove the exceptional ray and merge its star."""
    shape = blowdown_shape(cls)
    if shape is None:
        raise ContractionError("unsupported divisorial contraction: relation is not u_a + u_b - u_e = 0")
    e, a, b = shape
    if tuple(x + y for x, y in zip(f.rays[a], f.rays[b])) != f.rays[e]:
        raise ContractionError("unsupported divisorial contraction: exceptional ray is not u_a + u_b")
    with_a, with_b, rest = {}, {}, []
    for c in f.max_cones:
        if e not in c:
            if a in c and b in c:
                raise ContractionError("unsupported divisorial contraction: center already a cone")
            rest.append(c)
            continue
        has_a, has_b = a in c, b in c
        if has_a == has_b:
            raise ContractionError("unsupported divisorial contraction: star of the exceptional ray is not a subdivision")
        key = tuple(i for i in c if i not in (e, a, b))
        (with_a if has_a else with_b)[key] = c
    if set(with_a) != set(with_b):
        raise ContractionError("unsupported divisorial contraction: star cones do not pair up")
    cones = [list(c) for c in rest] + [sorted(k + (a, b)) for k in with_a]
    reindex = {i: (i if i < e else i - 1) for i in range(f.nrays) if i != e}
    rays = [r for i, r in enumerate(f.rays) if i != e]
    target = Fan(f.dim, rays, [[reindex[i] for i in c] for c in cones])
    center = (reindex[a], reindex[b])
    morphism = ToricMorphism(lattice.identity(f.dim), f, target, "blowdown",
                             exceptional=f.rays[e], center=(f.rays[a], f.rays[b]),
                             center_cone=center)
    return target, center, morphism


def blowdown_class_for_ray(f: Fan, ray: int, center: Optional[tuple[int, int]] = None) -> ExtremalClass:
    """Extremal class contracting ``V(ray)`` onto ``V(center)``.

    A ray can be ``u_a + u_b`` for several cones; without ``center`` the first
    such class in wall order is returned.
    """
    for cls in extremal_rays(f):
        shape = blowdown_shape(cls)
        if shape is None or shape[0] != ray:
            continue
        if center is None or sorted(center) == list(shape[1:]):
            return cls
    where = "" if center is None else f" onto the cone {tuple(center)}"
    raise ContractionError(f"unsupported divisorial contraction: ray {ray} is not a smooth exceptional divisor{where}")


def fiber_class_for_pair(f: Fan, a: int, b: int) -> ExtremalClass:
    for cls in extremal_rays(f):
        if fiber_pair(cls) == tuple(sorted((a, b))):
            return cls
    raise ContractionError(f"not an elementary P^1-bundle direction: no wall relation u_{a} + u_{b} = 0")


def contract_fiber_type(f: Fan, cls: ExtremalClass) -> ToricMorphism:
    """Quotient by the line spanned by a pair of opposite rays."""
    pair = fiber_pair(cls)
    c = cls.classification
    if pair is None or c.kind is not Kind.FIBER_TYPE or c.type_pair != (f.dim, f.dim - 1):
        raise ContractionError("not an elementary P^1-bundle direction")
    a, b = pair
    if any((a in cone) == (b in cone) for cone in f.max_cones):
        raise ContractionError("not an elementary P^1-bundle direction: some max cone misses the fiber pair")
    proj = lattice.quotient_projection([f.rays[a]], f.dim)
    keep = [i for i in range(f.nrays) if i not in (a, b)]
    images = []
    for i in keep:
        v = lattice.mat_vec(proj, f.rays[i])
        if not any(v):
            raise ContractionError("not an elementary P^1-bundle direction: a base ray maps to zero")
        images.append(lattice.primitive_part(v))
    if len(set(images)) != len(images):
        raise ContractionError("not an elementary P^1-bundle direction: base rays collide")
    idx = {i: k for k, i in enumerate(keep)}
    cones = sorted({tuple(sorted(idx[i] for i in cone if i not in (a, b))) for cone in f.max_cones})
    target = Fan(f.dim - 1, images, cones)
    return ToricMorphism(proj, f, target, "fiber-quotient", kernel=f.rays[a])


def compose(first: ToricMorphism, second: ToricMorphism) -> ToricMorphism:
    """``second . first``."""
    if first.target != second.source:
        raise ContractionError("morphisms are not composable")
    matrix = lattice.mat_mul(second.matrix, first.matrix)
    return ToricMorphism(matrix, first.source, second.target, "composite",
                         kernel=second.kernel if second.kernel is not None else first.kernel)


def check_target(m: ToricMorphism) -> bool:
    return validate(m.target).ok
