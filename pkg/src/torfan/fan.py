"""Smooth complete fans: the data structure, validation and basic operations."""
from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Sequence

from . import lattice
from .lattice import IntMatrix, IntVector

Cone = tuple[int, ...]


class MalformedFanError(ValueError):
    pass


class FanFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Fan:
    """A simplicial fan given by primitive ray generators and maximal cones.

    Ray order is preserved as given (so ``u_1, u_2, ...`` labels stay valid);
    each cone is stored as a sorted tuple of ray indices and the cone list is
    kept sorted.  Use :meth:`normalized` for the canonical lexicographic form.
    """

    dim: int
    rays: tuple[IntVector, ...]
    max_cones: tuple[Cone, ...]
    name: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        rays = tuple(tuple(int(x) for x in r) for r in self.rays)
        cones = tuple(sorted(tuple(sorted(int(i) for i in c)) for c in self.max_cones))
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "max_cones", cones)
        for k, r in enumerate(rays):
            if len(r) != self.dim:
                raise MalformedFanError(f"malformed fan: ray {k} has length {len(r)}, expected {self.dim}")
        for c in cones:
            if any(not 0 <= i < len(rays) for i in c):
                raise MalformedFanError(f"malformed fan: cone {list(c)} has an out-of-range ray index")
            if len(set(c)) != len(c):
                raise MalformedFanError(f"malformed fan: cone {list(c)} repeats a ray")

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Fan{label} dim={self.dim} rays={len(self.rays)} cones={len(self.max_cones)}>"

    @property
    def nrays(self) -> int:
        return len(self.rays)

    @cached_property
    def ray_index(self) -> dict[IntVector, int]:
        return {r: i for i, r in enumerate(self.rays)}

    @cached_property
    def cone_set(self) -> frozenset[Cone]:
        return frozenset(self.max_cones)

    @cached_property
    def all_cones(self) -> tuple[Cone, ...]:
        """Every face of every maximal cone, the zero cone included."""
        faces = set()
        for c in self.max_cones:
            for k in range(len(c) + 1):
                faces.update(itertools.combinations(c, k))
        return tuple(sorted(faces, key=lambda c: (len(c), c)))

    @cached_property
    def facet_map(self) -> dict[Cone, list[int]]:
        """Codimension-one faces of maximal cones -> indices of maximal cones."""
        out: dict[Cone, list[int]] = defaultdict(list)
        for k, c in enumerate(self.max_cones):
            for i in range(len(c)):
                out[c[:i] + c[i + 1:]].append(k)
        return dict(out)

    def has_cone(self, cone: Iterable[int]) -> bool:
        s = set(cone)
        return any(s.issubset(c) for c in self.max_cones)

    def cone_matrix(self, cone: Cone) -> IntMatrix:
        """Square matrix whose columns are the rays of ``cone``."""
        return lattice.columns_to_matrix([self.rays[i] for i in cone], self.dim)

    def with_name(self, name: Optional[str]) -> "Fan":
        return Fan(self.dim, self.rays, self.max_cones, name=name)

    def normalized(self) -> "Fan":
        """Rays sorted lexicographically, cones re-indexed and sorted."""
        order = sorted(range(self.nrays), key=lambda i: self.rays[i])
        new = {old: k for k, old in enumerate(order)}
        return Fan(self.dim, [self.rays[i] for i in order],
                   [[new[i] for i in c] for c in self.max_cones], name=self.name)

    def to_json(self) -> dict:
        out = {"dim": self.dim, "rays": [list(r) for r in self.rays],
               "max_cones": [list(c) for c in self.max_cones]}
        if self.name is not None:
            out["name"] = self.name
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "Fan":
        return fan_from_json(doc)


def fan_from_json(doc: dict, context: str = "fan") -> Fan:
    if not isinstance(doc, dict):
        raise FanFormatError(f"{context}: expected a JSON object")
    missing = [k for k in ("dim", "rays", "max_cones") if k not in doc]
    if missing:
        raise FanFormatError(f"{context}: missing keys {missing}")
    dim = doc["dim"]
    if not isinstance(dim, int) or dim < 0:
        raise FanFormatError(f"{context}: 'dim' must be a non-negative integer")
    rays = doc["rays"]
    if not isinstance(rays, list) or any(not isinstance(r, list) for r in rays):
        raise FanFormatError(f"{context}: 'rays' must be a list of integer lists")
    for k, r in enumerate(rays):
        if len(r) != dim or any(not isinstance(x, int) or isinstance(x, bool) for x in r):
            raise FanFormatError(f"{context}: ray {k} must be a list of {dim} integers")
        if not lattice.is_primitive(r):
            raise FanFormatError(f"{context}: ray {k} = {r} is not primitive")
    cones = doc["max_cones"]
    if not isinstance(cones, list) or any(not isinstance(c, list) for c in cones):
        raise FanFormatError(f"{context}: 'max_cones' must be a list of index lists")
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise FanFormatError(f"{context}: 'name' must be a string")
    try:
        return Fan(dim, rays, cones, name=name)
    except MalformedFanError as exc:
        raise FanFormatError(f"{context}: {exc}") from exc


def load_fan(path: str | Path) -> Fan:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise FanFormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return fan_from_json(doc, context=str(path))


# --- validation ------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    is_simplicial: bool
    is_smooth: bool
    is_complete: bool
    proper_intersections: bool
    failures: tuple[str, ...] = ()
    projectivity: str = "assumed"

    @property
    def ok(self) -> bool:
        return self.is_simplicial and self.is_smooth and self.is_complete and self.proper_intersections

    def to_json(self) -> dict:
        return {"is_simplicial": self.is_simplicial, "is_smooth": self.is_smooth,
                "is_complete": self.is_complete, "proper_intersections": self.proper_intersections,
                "failures": list(self.failures), "projectivity": self.projectivity}


def _nonneg_solution_exists(m: Sequence[Sequence]) -> bool:
    """Is there lambda >= 0, lambda != 0 with m @ lambda >= 0?  (m square, small)"""
    k = len(m)
    if k == 0:
        return False
    cols = lattice.transpose(m)
    if any(all(x >= 0 for x in col) for col in cols):
        return True
    if any(all(x < 0 for x in row) for row in m):
        return False
    # scale rows to integers; then ask for m lambda - mu = 0, sum lambda = 1
    rows = [[int(x * math.lcm(*(Fraction(y).denominator for y in r))) for x in r] for r in m]
    gens = [tuple(rows[i][j] for i in range(k)) + (1,) for j in range(k)]
    gens += [tuple(-int(i == j) for i in range(k)) + (0,) for j in range(k)]
    return lattice.in_cone(gens, (0,) * k + (1,))


def _integral(m):
    if all(Fraction(x).denominator == 1 for row in m for x in row):
        return tuple(tuple(int(x) for x in row) for row in m)
    return m


def _meet_properly(f: Fan, s: Cone, t: Cone, t_inv) -> bool:
    common = set(s) & set(t)
    ns = [i for i in s if i not in common]
    nt = [j for j in t if j not in common]
    if not ns:
        return True
    pos = {j: p for p, j in enumerate(t)}
    # coordinates of the rays of s \ t in the basis of t, restricted to t \ s
    coords = {i: lattice.mat_vec(t_inv, f.rays[i]) for i in ns}
    m = [[coords[i][pos[j]] for i in ns] for j in nt]
    return not _nonneg_solution_exists(m)


def validate(f: Fan) -> ValidationReport:
    failures: list[str] = []
    n = f.dim
    simplicial = smooth = complete = proper = True

    for k, r in enumerate(f.rays):
        if not any(r):
            failures.append(f"ray {k} is zero")
            smooth = False
        elif not lattice.is_primitive(r):
            failures.append(f"ray {k} = {list(r)} is not primitive")
            smooth = False
    if len(set(f.rays)) != len(f.rays):
        failures.append("rays are not distinct")
        proper = False
    used = {i for c in f.max_cones for i in c}
    unused = sorted(set(range(f.nrays)) - used)
    if unused:
        failures.append(f"rays {unused} lie in no maximal cone")
        complete = False
    if not f.max_cones:
        failures.append("fan has no maximal cones")
        complete = False

    dets = {}
    for k, c in enumerate(f.max_cones):
        if len(c) != n:
            failures.append(f"max cone {k} {list(c)} has {len(c)} rays, expected {n}")
            simplicial = False
            continue
        d = lattice.det(f.cone_matrix(c))
        dets[c] = d
        if d == 0:
            failures.append(f"max cone {k} {list(c)} is degenerate (det 0)")
            simplicial = False
        elif abs(d) != 1:
            failures.append(f"max cone {k} {list(c)} has |det| = {abs(d)}")
            smooth = False
    if not simplicial:
        smooth = False
        failures.append("completeness and intersection checks skipped: fan not simplicial")
        return ValidationReport(False, False, False, False, tuple(failures))

    for facet, owners in sorted(f.facet_map.items()):
        if len(owners) != 2:
            failures.append(f"wall {list(facet)} lies in {len(owners)} max cones {owners}")
            complete = False
    # connectivity of the adjacency graph
    if f.max_cones:
        adj = defaultdict(set)
        for owners in f.facet_map.values():
            for a, b in itertools.combinations(owners, 2):
                adj[a].add(b)
                adj[b].add(a)
        seen, stack = {0}, [0]
        while stack:
            for b in adj[stack.pop()]:
                if b not in seen:
                    seen.add(b)
                    stack.append(b)
        if len(seen) != len(f.max_cones):
            failures.append(f"max-cone adjacency graph is disconnected ({len(seen)} of {len(f.max_cones)} reachable)")
            complete = False

    inverses = {c: _integral(lattice.inverse(f.cone_matrix(c))) for c in f.max_cones}
    for a, b in itertools.combinations(range(len(f.max_cones)), 2):
        s, t = f.max_cones[a], f.max_cones[b]
        if not _meet_properly(f, s, t, inverses[t]):
            failures.append(f"max cones {a} {list(s)} and {b} {list(t)} overlap improperly")
            proper = False
    return ValidationReport(simplicial, smooth, complete, proper, tuple(failures))


# --- constructions ---------------------------------------------------------

def star_subdivide(f: Fan, center: Sequence[int]) -> tuple[Fan, int]:
    """Blow up ``V(u_a, u_b)``: insert ``u_a + u_b`` and split the star of the center."""
    center = tuple(sorted(set(center)))
    if len(center) != 2:
        raise ValueError("center must be a 2-dimensional cone")
    if not f.has_cone(center):
        raise ValueError(f"center not in fan: {list(center)}")
    a, b = center
    new_ray = lattice.primitive_part([x + y for x, y in zip(f.rays[a], f.rays[b])])
    if new_ray in f.ray_index:
        raise ValueError(f"center not in fan: {list(new_ray)} is already a ray")
    new = f.nrays
    cones = []
    for c in f.max_cones:
        if a in c and b in c:
            cones.append([i for i in c if i != a] + [new])
            cones.append([i for i in c if i != b] + [new])
        else:
            cones.append(list(c))
    return Fan(f.dim, list(f.rays) + [new_ray], cones), new


def product(*fans: Fan, name: Optional[str] = None) -> Fan:
    """Fan of the product variety (direct sum of fans)."""
    dim = sum(g.dim for g in fans)
    rays: list[IntVector] = []
    offsets = []
    shift = 0
    for g in fans:
        offsets.append(len(rays))
        for r in g.rays:
            rays.append((0,) * shift + r + (0,) * (dim - shift - g.dim))
        shift += g.dim
    cones = []
    for combo in itertools.product(*(g.max_cones for g in fans)):
        cones.append([i + off for c, off in zip(combo, offsets) for i in c])
    return Fan(dim, rays, cones, name=name)


def orbit_closure_fan(f: Fan, sigma: Sequence[int]) -> Fan:
    """Fan of ``V(sigma)`` in the quotient lattice ``N / span(sigma)``."""
    sigma = tuple(sorted(set(sigma)))
    if not f.has_cone(sigma):
        raise ValueError(f"not a cone of the fan: {list(sigma)}")
    if not sigma:
        return f
    proj = lattice.quotient_projection([f.rays[i] for i in sigma], f.dim)
    star = [c for c in f.max_cones if set(sigma).issubset(c)]
    star_rays = sorted({i for c in star for i in c} - set(sigma))
    new = {i: k for k, i in enumerate(star_rays)}
    rays = [lattice.primitive_part(lattice.mat_vec(proj, f.rays[i])) for i in star_rays]
    cones = [[new[i] for i in c if i not in sigma] for c in star]
    return Fan(f.dim - len(sigma), rays, cones)


def fan_isomorphic(f1: Fan, f2: Fan) -> Optional[IntMatrix]:
    """Unimodular matrix carrying ``f1`` onto ``f2``, or None.

    The matrix is pinned down by where one maximal cone of ``f1`` goes, so we
    try every maximal cone of ``f2`` in every ray order and verify globally.
    """
    if f1.dim != f2.dim or f1.nrays != f2.nrays or len(f1.max_cones) != len(f2.max_cones):
        return None
    if f1.dim == 0:
        return ()
    deg1 = [0] * f1.nrays
    deg2 = [0] * f2.nrays
    for c in f1.max_cones:
        for i in c:
            deg1[i] += 1
    for c in f2.max_cones:
        for i in c:
            deg2[i] += 1
    if sorted(deg1) != sorted(deg2):
        return None
    anchor = f1.max_cones[0]
    b1 = f1.cone_matrix(anchor)
    if lattice.det(b1) == 0:
        return None
    b1_inv = lattice.inverse(b1)
    targets = f2.cone_set
    for t in f2.max_cones:
        for perm in itertools.permutations(t):
            if any(deg1[i] != deg2[j] for i, j in zip(anchor, perm)):
                continue
            a = lattice.mat_mul(f2.cone_matrix(perm), b1_inv)
            if any(x.denominator != 1 for row in a for x in row):
                continue
            a = tuple(tuple(int(x) for x in row) for row in a)
            image = []
            for r in f1.rays:
                j = f2.ray_index.get(lattice.mat_vec(a, r))
                if j is None:
                    break
                image.append(j)
            else:
                if len(set(image)) != f2.nrays:
                    continue
                if all(tuple(sorted(image[i] for i in c)) in targets for c in f1.max_cones):
                    if abs(lattice.det(a)) == 1:
                        return a
    return None


def _factor_from_group(f: Fan, group: Sequence[int]) -> Optional[Fan]:
    """The fan spanned by ``group`` if ``f`` splits as group (+) complement."""
    gset = set(group)
    rest = [i for i in range(f.nrays) if i not in gset]
    parts_g, parts_r = set(), set()
    k = None
    for c in f.max_cones:
        cg = tuple(i for i in c if i in gset)
        if k is None:
            k = len(cg)
        elif len(cg) != k:
            return None
        parts_g.add(cg)
        parts_r.add(tuple(i for i in c if i not in gset))
    if k in (0, f.dim) or len(parts_g) * len(parts_r) != len(f.max_cones):
        return None
    if any(tuple(sorted(a + b)) not in f.cone_set for a in parts_g for b in parts_r):
        return None
    if lattice.rank([f.rays[i] for i in group]) != k or lattice.rank([f.rays[i] for i in rest]) != f.dim - k:
        return None
    full = f.max_cones[0]
    basis_g = [i for i in full if i in gset]
    order = basis_g + [i for i in full if i not in gset]
    inv = lattice.inverse_unimodular(f.cone_matrix(tuple(order)))
    group = sorted(group)
    idx = {i: p for p, i in enumerate(group)}
    rays = [lattice.mat_vec(inv, f.rays[i])[:k] for i in group]
    cones = [[idx[i] for i in c] for c in sorted(parts_g)]
    return Fan(k, rays, cones).normalized()


def _split(f: Fan) -> Optional[tuple[list[int], list[int]]]:
    others = list(range(1, f.nrays))
    for size in range(1, f.nrays - 1):
        for extra in itertools.combinations(others, size):
            group = [0, *extra]
            if _factor_from_group(f, group) is not None:
                rest = [i for i in range(f.nrays) if i not in set(group)]
                return group, rest
    return None


def _sub_fan(f: Fan, group: Sequence[int]) -> Fan:
    sub = _factor_from_group(f, group)
    assert sub is not None
    return sub


def product_decompose(f: Fan) -> list[Fan]:
    """Finest decomposition of ``f`` as a direct sum of fans."""
    split = _split(f) if f.nrays > 3 else None
    if split is None:
        return [f.normalized().with_name(f.name)]
    g, r = split
    factors = product_decompose(_sub_fan(f, g)) + product_decompose(_sub_fan(f, r))
    return sorted(factors, key=lambda h: (h.dim, h.nrays, len(h.max_cones), h.rays, h.max_cones))
