"""Named fans: the worked examples, reference varieties, external databases."""
from __future__ import annotations

import functools
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import lattice
from .fan import Fan, FanFormatError, fan_from_json, fan_isomorphic, product, star_subdivide, validate
from .fano import fingerprint, invariants_summary
from .lattice import IntMatrix, IntVector

log = logging.getLogger(__name__)


class CatalogError(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class DatabaseError(ValueError):
    pass


@dataclass
class CatalogEntry:
    name: str
    fan: Fan
    provenance: str  # builtin | constructed | external
    description: str = ""
    _invariants: Optional[dict] = field(default=None, repr=False)

    @property
    def invariants(self) -> dict:
        if self._invariants is None:
            self._invariants = invariants_summary(self.fan)
        return self._invariants

    @property
    def fingerprint(self) -> tuple:
        s = self.invariants
        return (s["dim"], s["picard_rank"], s["ray_count"], tuple(s["cone_counts"]),
                s["is_fano"], s.get("anticanonical_degree"))

    def to_json(self) -> dict:
        doc = self.fan.to_json()
        doc["name"] = self.name
        return doc


# --- building blocks -------------------------------------------------------

def projective_space(n: int) -> Fan:
    rays = [tuple(int(i == j) for j in range(n)) for i in range(n)] + [(-1,) * n]
    return Fan(n, rays, list(itertools.combinations(range(n + 1), n)))


def hirzebruch(a: int) -> Fan:
    return Fan(2, [(1, 0), (0, 1), (-1, a), (0, -1)], [(0, 1), (1, 2), (2, 3), (0, 3)])


def projective_bundle(base: Fan, twist: Sequence[int]) -> Fan:
    """Fan of P(O + O(D)) over ``base``, D = sum twist_i D_i."""
    rays = [r + (t,) for r, t in zip(base.rays, twist)]
    up, down = len(rays), len(rays) + 1
    rays += [(0,) * base.dim + (1,), (0,) * base.dim + (-1,)]
    cones = [list(c) + [fib] for c in base.max_cones for fib in (up, down)]
    return Fan(base.dim + 1, rays, cones)


def _angular_key(v: IntVector):
    x, y = v
    half = 0 if (y > 0 or (y == 0 and x > 0)) else 1
    return half, v


def _complete_2d(vectors: Sequence[IntVector]) -> list[tuple[int, int]]:
    """Cones between angularly consecutive rays of a complete 2-dimensional fan."""
    order = sorted(range(len(vectors)), key=lambda i: _angular_key(vectors[i]))

    def cross(a, b):
        return a[0] * b[1] - a[1] * b[0]

    # stable angular sort: refine within each half plane by cross products
    for half in (0, 1):
        idx = [i for i in order if _angular_key(vectors[i])[0] == half]
        idx.sort(key=functools.cmp_to_key(lambda i, j: -cross(vectors[i], vectors[j])))
        pos = [k for k, i in enumerate(order) if _angular_key(vectors[i])[0] == half]
        for k, i in zip(pos, idx):
            order[k] = i
    return [tuple(sorted((order[k], order[(k + 1) % len(order)]))) for k in range(len(order))]


def tower_fan(rays: Sequence[Sequence[int]], pairs: Sequence[tuple[int, int]]) -> list[tuple[int, ...]]:
    """Maximal cones of an iterated P^1-bundle from its printed rays.

    ``pairs`` lists the fiber pairs (0-based ray indices) from the top of the
    tower down; each pair must be opposite in the quotient by the pairs above
    it.  The rays left over form a complete fan of dimension 1 or 2.  Every
    maximal cone is a base cone lifted with one ray from each pair.
    """
    rays = [tuple(r) for r in rays]
    n = len(rays[0])
    images = {i: rays[i] for i in range(len(rays))}
    used: list[int] = []
    for p, q in pairs:
        if any(images[p][k] + images[q][k] for k in range(len(images[p]))):
            raise ValueError(f"rays {p} and {q} are not opposite in the quotient")
        proj = lattice.quotient_projection([images[p]])
        used += [p, q]
        images = {i: lattice.mat_vec(proj, v) for i, v in images.items() if i not in used}
        if any(not any(v) for v in images.values()):
            raise ValueError("a base ray collapses in the tower quotient")
    base_idx = sorted(images)
    base_dim = n - len(pairs)
    vecs = [lattice.primitive_part(images[i]) for i in base_idx]
    if base_dim == 1:
        if sorted(vecs) != [(-1,), (1,)]:
            raise ValueError("1-dimensional base is not P^1")
        base_cones = [(0,), (1,)]
    elif base_dim == 2:
        base_cones = _complete_2d(vecs)
    else:
        raise ValueError("tower base must have dimension 1 or 2")
    cones = []
    for bc in base_cones:
        for choice in itertools.product(*pairs):
            cones.append(tuple(sorted([base_idx[i] for i in bc] + list(choice))))
    return cones


def _e(i: int, n: int = 4, s: int = 1) -> IntVector:
    return tuple(s * int(k == i - 1) for k in range(n))


def _v(*xs: int) -> IntVector:
    return tuple(xs)


e1, e2, e3, e4 = (_e(i) for i in range(1, 5))
m1, m2, m3, m4 = (_e(i, s=-1) for i in range(1, 5))


@dataclass(frozen=True)
class WorkedExample:
    """A fan X_2 printed with its rays, its elementary conic bundle and blow-up centers.

    Indices are 1-based as printed.
    """

    name: str
    description: str
    rays: tuple[IntVector, ...]
    pairs: tuple[tuple[int, int], ...]
    centers: tuple[tuple[int, int], tuple[int, int]]
    kernel: IntVector
    target: str
    chain: tuple[str, str]           # names of Bl_{first}(X_2) and Bl_{A_1, A_2}(X_2)
    first: int = 0                   # which center is blown up first (0 = A_1)


WORKED_EXAMPLES: dict[str, WorkedExample] = {p.name: p for p in [
    WorkedExample("D5", "P^1 x P_{P^2}(O + O(2))",
                  (e1, e2, _v(-1, -1, 2, 0), e3, m3, e4, m4), ((6, 7), (4, 5)),
                  ((4, 6), (5, 7)), e3, "P1xP2", ("H3", "K1")),
    WorkedExample("D3", "P_Y(E), Y = P_{P^2}(O + O(1))",
                  (e1, e2, _v(-1, -1, 1, 1), e3, _v(0, 0, -1, 1), e4, m4), ((6, 7), (4, 5)),
                  ((4, 7), (5, 7)), e4, "PP2-O-O1", ("H2", "K2")),
    WorkedExample("D16", "P_Y(E), Y = P_{P^2}(O + O(2))",
                  (e1, e2, _v(-1, -1, 1, -1), e3, _v(0, 0, -1, 1), e4, m4), ((6, 7), (4, 5)),
                  ((4, 7), (5, 7)), e4, "PP2-O-O2", ("H5", "K3")),
    WorkedExample("L1", "P_{P^1 x P^1 x P^1}(O + O(1,1,1))",
                  (e1, e2, _v(1, -1, 0, 0), e3, _v(1, 0, -1, 0), e4, _v(1, 0, 0, -1), m1),
                  ((1, 8), (2, 3), (4, 5)), ((2, 8), (3, 8)), e1, "P1xP1xP1", ("Q3", "U1"), first=1),
    WorkedExample("L2", "P_Y(E), Y = P_{P^1 x P^1}(O(-1,-1) + O)",
                  (e1, e2, _v(1, -1, 0, 0), e3, _v(1, -1, -1, 0), e4, _v(1, -1, 0, -1), m1),
                  ((1, 8), (2, 3), (4, 5)), ((2, 8), (3, 8)), e1, "PP1xP1-Om1m1-O", ("Q13", "U1")),
    WorkedExample("L3", "P_Y(E), Y = F_1 x P^1",
                  (e1, e2, _v(1, -1, 0, 0), e3, _v(1, 0, -1, 0), e4, _v(0, 0, 1, -1), m1),
                  ((1, 8), (2, 3)), ((2, 8), (3, 8)), e1, "F1xP1", ("Q5", "U2")),
    WorkedExample("L11", "P^1 x P_{P^1 x P^1}(O(0,-1) + O(-1,0))",
                  (e1, e2, m2, e3, _v(0, -1, -1, 0), e4, _v(0, 1, 0, -1), m1),
                  ((1, 8), (2, 3)), ((1, 3), (2, 8)), e1, "PP1xP1-O0m1-Om10", ("Q16", "U8")),
]}

# Targets admitted for drop-3 conic bundles of Fano 4-folds, by Picard rank of the source.
ADMISSIBLE_TARGETS = {
    5: ("P1xP2", "PP2-O-O1", "PP2-O-O2"),
    6: ("P1xP1xP1", "F1xP1", "PP1xP1-Om1m1-O", "PP1xP1-O0m1-Om10"),
}


def example_fan(name: str) -> Fan:
    p = WORKED_EXAMPLES[name]
    pairs = [(a - 1, b - 1) for a, b in p.pairs]
    return Fan(4, p.rays, tower_fan(p.rays, pairs), name=name)


def example_centers(name: str) -> list[tuple[int, int]]:
    """0-based centers A_1, A_2 of an example, in the order they are blown up."""
    p = WORKED_EXAMPLES[name]
    cs = [(a - 1, b - 1) for a, b in p.centers]
    return cs if p.first == 0 else cs[::-1]


def blowup_chain(name: str) -> list[Fan]:
    """[X_2, X_1, X] for a worked example."""
    fans = [example_fan(name)]
    for c in example_centers(name):
        fans.append(star_subdivide(fans[-1], c)[0])
    return fans


def _bl_p2(points: int) -> Fan:
    f = projective_space(2)
    for c in [(0, 1), (1, 2), (0, 2)][:points]:
        f, _ = star_subdivide(f, c)
    return f


def _reference_builders() -> dict[str, tuple[str, callable]]:
    P1, P2 = (lambda: projective_space(1)), (lambda: projective_space(2))
    return {
        "P1": ("projective line", P1),
        "P2": ("projective plane", P2),
        "P3": ("projective 3-space", lambda: projective_space(3)),
        "P4": ("projective 4-space", lambda: projective_space(4)),
        "F1": ("Hirzebruch surface F_1 = Bl_p P^2", lambda: hirzebruch(1)),
        "F2": ("Hirzebruch surface F_2 (not Fano)", lambda: hirzebruch(2)),
        "P1xP1": ("P^1 x P^1", lambda: product(P1(), P1())),
        "Bl2P2": ("blow-up of P^2 in two points", lambda: _bl_p2(2)),
        "Bl3P2": ("blow-up of P^2 in three points", lambda: _bl_p2(3)),
        "P1xP2": ("P^1 x P^2", lambda: product(P1(), P2())),
        "P1xP3": ("P^1 x P^3", lambda: product(P1(), projective_space(3))),
        "P2xP2": ("P^2 x P^2", lambda: product(P2(), P2())),
        "P1xP1xP1": ("P^1 x P^1 x P^1", lambda: product(P1(), P1(), P1())),
        "F1xP1": ("F_1 x P^1", lambda: product(hirzebruch(1), P1())),
        "PP2-O-O1": ("P_{P^2}(O + O(1))", lambda: projective_bundle(P2(), (0, 0, 1))),
        "PP2-O-O2": ("P_{P^2}(O + O(2))", lambda: projective_bundle(P2(), (0, 0, 2))),
        "PP1xP1-Om1m1-O": ("P_{P^1 x P^1}(O(-1,-1) + O)",
                           lambda: projective_bundle(product(P1(), P1()), (0, 1, 0, 1))),
        "PP1xP1-O0m1-Om10": ("P_{P^1 x P^1}(O(0,-1) + O(-1,0))",
                             lambda: projective_bundle(product(P1(), P1()), (0, 1, 0, -1))),
        "PF1-O-OH": ("P_{F_1}(O + O(H)), H the pull-back of a line",
                     lambda: projective_bundle(hirzebruch(1), (0, 0, 0, 1))),
        "F1xP2": ("F_1 x P^2", lambda: product(hirzebruch(1), P2())),
        "Bl2P2xP2": ("Bl_{p1,p2}(P^2) x P^2", lambda: product(_bl_p2(2), P2())),
        "K4": ("Bl_{p1,p2,p3}(P^2) x P^2", lambda: product(_bl_p2(3), P2())),
        "Bl3P2xP1xP1": ("Bl_{p1,p2,p3}(P^2) x P^1 x P^1", lambda: product(_bl_p2(3), P1(), P1())),
    }


def _derived_builders() -> dict[str, tuple[str, callable]]:
    out = {}
    for base, p in WORKED_EXAMPLES.items():
        mid, top = p.chain
        if mid not in out:
            out[mid] = (f"blow-up of {base} along one center", lambda b=base: blowup_chain(b)[1])
        if top not in out:
            out[top] = (f"blow-up of {base} along both centers", lambda b=base: blowup_chain(b)[2])
    return out


EXAMPLE_NAMES = tuple(WORKED_EXAMPLES)
DERIVED_NAMES = ("H2", "H3", "H5", "K1", "K2", "K3", "K4", "Q3", "Q5", "Q13", "Q16", "U1", "U2", "U8")


def builtin_names() -> list[str]:
    return list(EXAMPLE_NAMES) + [n for n in _derived_builders() if n not in EXAMPLE_NAMES] + \
        [n for n in _reference_builders() if n not in _derived_builders()]


@functools.lru_cache(maxsize=None)
def builtin(name: str) -> CatalogEntry:
    if name in WORKED_EXAMPLES:
        p = WORKED_EXAMPLES[name]
        return CatalogEntry(name, example_fan(name), "builtin", p.description)
    for table in (_derived_builders(), _reference_builders()):
        if name in table:
            desc, build = table[name]
            return CatalogEntry(name, build().with_name(name), "constructed", desc)
    raise CatalogError(f"unknown catalog entry {name!r}; available: {', '.join(builtin_names())}")


def builtin_entries() -> list[CatalogEntry]:
    return [builtin(n) for n in builtin_names()]


# --- external databases ----------------------------------------------------

@dataclass
class DatabaseReport:
    entries: list[CatalogEntry]
    rejected: list[str]
    duplicates: list[tuple[str, str]]


def read_database(path: str | Path) -> DatabaseReport:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatabaseError(f"{path}: cannot read database: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DatabaseError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("entries"), list):
        raise DatabaseError(f"{path}: expected an object with an 'entries' list")
    entries, rejected = [], []
    for k, raw in enumerate(doc["entries"]):
        label = raw.get("name") if isinstance(raw, dict) and isinstance(raw.get("name"), str) else f"#{k}"
        context = f"{path}: entry {k} ({label})"
        try:
            f = fan_from_json(raw, context=context)
        except FanFormatError as exc:
            rejected.append(str(exc))
            continue
        report = validate(f)
        if not (report.is_smooth and report.is_complete and report.proper_intersections):
            rejected.append(f"{context}: not smooth and complete: {'; '.join(report.failures)}")
            continue
        entries.append(CatalogEntry(label, f.with_name(label), "external"))
    duplicates = []
    by_print: dict[tuple, list[CatalogEntry]] = {}
    for entry in entries:
        by_print.setdefault(entry.fingerprint, []).append(entry)
    for group in by_print.values():
        for a, b in itertools.combinations(group, 2):
            if fan_isomorphic(a.fan, b.fan) is not None:
                duplicates.append((a.name, b.name))
    for msg in rejected:
        log.warning("rejected %s", msg)
    for a, b in duplicates:
        log.warning("duplicate entries %s and %s are isomorphic", a, b)
    return DatabaseReport(entries, rejected, duplicates)


def load_database(path: str | Path) -> list[CatalogEntry]:
    return read_database(path).entries


def dump(entries: Sequence[CatalogEntry]) -> dict:
    return {"entries": [e.to_json() for e in entries]}


# --- identification --------------------------------------------------------

@dataclass(frozen=True)
class Match:
    name: str
    matrix: IntMatrix

    def to_json(self) -> dict:
        return {"name": self.name, "matrix": [list(r) for r in self.matrix]}


def _check(args):
    f, entry_fan = args
    return fan_isomorphic(f, entry_fan)


def identify(f: Fan, db: Optional[Sequence[CatalogEntry]] = None, workers: int = 1) -> list[Match]:
    """Entries of ``db`` isomorphic to ``f``: fingerprint filter, then explicit isomorphism."""
    db = builtin_entries() if db is None else db
    key = fingerprint(f)
    candidates = [e for e in db if e.fan.dim == f.dim and e.fingerprint == key]
    if workers > 1 and len(candidates) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            mats = list(pool.map(_check, [(f, e.fan) for e in candidates]))
    else:
        mats = [fan_isomorphic(f, e.fan) for e in candidates]
    return [Match(e.name, m) for e, m in zip(candidates, mats) if m is not None]
