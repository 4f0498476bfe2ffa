"""Conic bundles between toric varieties, their discriminants and the Lefschetz defect."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

from . import lattice
from .contraction import (ContractionError, Kind, ToricMorphism, blow_down,
                          blowdown_shape, contract_fiber_type, fiber_pair, wall_classes)
from .fan import Cone, Fan, fan_isomorphic, orbit_closure_fan, product, product_decompose, validate
from .fano import anticanonical_degree_curve, is_fano
from .intersection import n1_span_of_divisor, picard_rank, walls
from .lattice import IntMatrix, IntVector

log = logging.getLogger(__name__)


class ConicBundleError(ValueError):
    pass


class CertificationError(ValueError):
    def __init__(self, message: str, certificate: "LefschetzCertificate"):
        super().__init__(message)
        self.certificate = certificate


# --- fibers ----------------------------------------------------------------

def _cone_coordinates(tgt: Fan):
    out = {}
    for c in tgt.max_cones:
        inv = lattice.inverse(tgt.cone_matrix(c))
        # unimodular cones have integral inverses; plain ints keep this loop fast
        if all(x.denominator == 1 for row in inv for x in row):
            inv = tuple(tuple(int(x) for x in row) for row in inv)
        out[c] = inv
    return out


def _containing_cone(tgt: Fan, coords, images: Sequence[IntVector], cache=None) -> Optional[Cone]:
    """Smallest cone of ``tgt`` containing all ``images``, or None."""
    cache = {} if cache is None else cache
    for c, inv in coords.items():
        support = set()
        for v in images:
            x = cache.get((c, v))
            if x is None:
                x = cache[(c, v)] = lattice.mat_vec(inv, v)
            if any(t < 0 for t in x):
                break
            support.update(c[k] for k, t in enumerate(x) if t > 0)
        else:
            return tuple(sorted(support))
    return None


def fiber_dimensions(m: ToricMorphism) -> list[tuple[Cone, int]]:
    """Largest fiber dimension over the distinguished point of each hit target cone."""
    src, tgt = m.source, m.target
    coords, cache = _cone_coordinates(tgt), {}
    images = [m.image(u) for u in src.rays]
    best: dict[Cone, int] = {}
    for sigma in src.all_cones:
        tau = _containing_cone(tgt, coords, [images[i] for i in sigma], cache)
        if tau is None:
            raise ConicBundleError(f"not a toric morphism: cone {list(sigma)} maps into no target cone")
        d = (src.dim - len(sigma)) - (tgt.dim - len(tau))
        best[tau] = max(best.get(tau, d), d)
    return sorted(best.items())


def is_lattice_surjective(matrix: IntMatrix, target_dim: int) -> bool:
    if target_dim == 0:
        return True
    cols = lattice.transpose(matrix)
    h, _ = lattice.hermite_normal_form(cols)
    nonzero = [row for row in h if any(row)]
    return tuple(nonzero) == lattice.identity(target_dim)


@dataclass(frozen=True)
class ConicBundleReport:
    is_conic_bundle: bool
    is_K_negative: bool
    relative_drop: int
    contracted_walls: tuple[Cone, ...]
    contracted_classes: tuple[IntVector, ...]
    max_fiber_dim: int
    surjective: bool

    def to_json(self) -> dict:
        return {"is_conic_bundle": self.is_conic_bundle, "is_K_negative": self.is_K_negative,
                "relative_drop": self.relative_drop,
                "contracted_walls": [list(w) for w in self.contracted_walls],
                "contracted_classes": [list(c) for c in self.contracted_classes],
                "max_fiber_dim": self.max_fiber_dim, "surjective": self.surjective}


def verify_conic_bundle(m: ToricMorphism) -> ConicBundleReport:
    src, tgt = m.source, m.target
    surjective = is_lattice_surjective(m.matrix, tgt.dim)
    try:
        dims = fiber_dimensions(m)
        max_fiber = max(d for _, d in dims)
    except ConicBundleError:
        dims, max_fiber = None, src.dim
    coords, cache = _cone_coordinates(tgt), {}
    images = [m.image(u) for u in src.rays]
    contracted = []
    for w in walls(src):
        rays = set(src.max_cones[w.adjacent[0]]) | set(src.max_cones[w.adjacent[1]])
        if _containing_cone(tgt, coords, [images[i] for i in rays], cache) is not None:
            contracted.append(w)
    k_negative = all(anticanonical_degree_curve(src, w) > 0 for w in contracted)
    ok = dims is not None and surjective and tgt.dim == src.dim - 1 and max_fiber <= 1
    classes = tuple(sorted({w.relation for w in contracted}))
    return ConicBundleReport(ok, k_negative, picard_rank(src) - picard_rank(tgt),
                             tuple(w.ray_indices for w in contracted), classes, max_fiber, surjective)


# --- factorizations --------------------------------------------------------

@dataclass(frozen=True)
class ConicBundleFactorization:
    steps: tuple[ToricMorphism, ...]
    elementary: ToricMorphism
    composite_map: IntMatrix
    source: Fan
    target: Fan
    relative_drop: int
    contracted_classes: tuple[IntVector, ...] = ()
    fano_intermediates: bool = True

    @property
    def composite(self) -> ToricMorphism:
        return ToricMorphism(self.composite_map, self.source, self.target, "composite",
                             kernel=self.elementary.kernel)

    @property
    def intermediates(self) -> list[Fan]:
        return [s.target for s in self.steps]

    def to_json(self) -> dict:
        steps = [{"exceptional_ray": list(s.exceptional), "center": [list(v) for v in s.center],
                  "target": s.target.to_json()} for s in self.steps]
        return {"relative_drop": self.relative_drop, "steps": steps,
                "elementary": {"kernel": list(self.elementary.kernel),
                               "matrix": [list(r) for r in self.elementary.matrix]},
                "composite_map": [list(r) for r in self.composite_map],
                "target": self.target.to_json(), "fano_intermediates": self.fano_intermediates}


def _elementary_candidates(f: Fan):
    for cls in wall_classes(f):
        if fiber_pair(cls) is None or cls.classification.kind is not Kind.FIBER_TYPE:
            continue
        try:
            g = contract_fiber_type(f, cls)
        except ContractionError:
            continue
        if validate(g.target).ok:
            yield g


def _blowdown_candidates(f: Fan):
    for cls in wall_classes(f):
        if blowdown_shape(cls) is None:
            continue
        try:
            _, _, mor = blow_down(f, cls)
        except ContractionError:
            continue
        # merging the two halves of a star keeps support and unimodularity, so no re-validation
        yield mor


def search_conic_bundles(f: Fan, r: int) -> list[ConicBundleFactorization]:
    """Blow-down sequences of length ``r - 1`` followed by an elementary P^1-bundle quotient.

    Every order of blow-downs is explored.  Two factorizations are the same
    when they contract the same wall classes of ``f`` onto isomorphic targets;
    among duplicates we keep one whose intermediate varieties are Fano.
    """
    if r < 1:
        raise ValueError("relative drop must be a positive integer")
    found: list[ConicBundleFactorization] = []

    def record(steps: list[ToricMorphism], g: ToricMorphism) -> None:
        composite = ToricMorphism(g.matrix, f, g.target, "composite", kernel=g.kernel)
        report = verify_conic_bundle(composite)
        if not (report.is_conic_bundle and report.is_K_negative and report.relative_drop == r):
            return
        fano_mid = all(is_fano(s.target).is_fano for s in steps)
        cb = ConicBundleFactorization(tuple(steps), g, g.matrix, f, g.target, r,
                                      report.contracted_classes, fano_mid)
        for k, old in enumerate(found):
            if old.contracted_classes == cb.contracted_classes and fan_isomorphic(old.target, cb.target) is not None:
                if fano_mid and not old.fano_intermediates:
                    found[k] = cb
                return
        found.append(cb)

    def dfs(current: Fan, steps: list[ToricMorphism]) -> None:
        if len(steps) == r - 1:
            for g in _elementary_candidates(current):
                record(steps, g)
            return
        for mor in _blowdown_candidates(current):
            dfs(mor.target, steps + [mor])

    dfs(f, [])
    return found


def elementary_wrapper(g: ToricMorphism) -> ConicBundleFactorization:
    """A single elementary quotient viewed as a factorization with no blow-downs."""
    report = verify_conic_bundle(g)
    return ConicBundleFactorization((), g, g.matrix, g.source, g.target, 1, report.contracted_classes)


# --- discriminant ----------------------------------------------------------

@dataclass(frozen=True)
class DiscriminantComponent:
    target_ray: int
    orbit_fan: Fan
    exceptional: int
    exceptional_hat: int
    pullback: tuple[tuple[int, int], ...]   # (source ray, multiplicity) over A_i

    def to_json(self) -> dict:
        return {"A": self.target_ray, "orbit_fan": self.orbit_fan.to_json(),
                "E": self.exceptional, "E_hat": self.exceptional_hat,
                "pullback": [list(p) for p in self.pullback]}


@dataclass(frozen=True)
class DiscriminantData:
    components: tuple[DiscriminantComponent, ...]
    pairwise_disjoint: bool

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components],
                "pairwise_disjoint": self.pairwise_disjoint}


def _dominating(matrix: IntMatrix, src: Fan, target_ray: IntVector) -> list[tuple[int, int]]:
    """Source rays whose image is a positive multiple of ``target_ray``."""
    out = []
    for i, u in enumerate(src.rays):
        v = lattice.mat_vec(matrix, u)
        if not any(v):
            continue
        g = lattice.vec_gcd(v)
        if tuple(x // g for x in v) == target_ray:
            out.append((i, g))
    return out


def discriminant(cb: ConicBundleFactorization) -> DiscriminantData:
    g = cb.elementary
    gsrc = g.source
    if g.kernel is None:
        raise ConicBundleError("non-smooth elementary part unsupported")
    pair = [i for i, u in enumerate(gsrc.rays)
            if u == g.kernel or u == tuple(-x for x in g.kernel)]
    if len(pair) != 2 or any((pair[0] in c) == (pair[1] in c) for c in gsrc.max_cones):
        raise ConicBundleError("non-smooth elementary part unsupported")
    X, Y = cb.source, cb.target
    comps = []
    for step in cb.steps:
        images = [lattice.mat_vec(cb.composite_map, v) for v in step.center]
        nonzero = [v for v in images if any(v)]
        if len(nonzero) != 1:
            raise ConicBundleError("blow-up center does not map onto a divisor of the target")
        a_vec = lattice.primitive_part(nonzero[0])
        if a_vec not in Y.ray_index:
            raise ConicBundleError("blow-up center does not map onto a divisor of the target")
        a = Y.ray_index[a_vec]
        e = X.ray_index[step.exceptional]
        pullback = _dominating(cb.composite_map, X, a_vec)
        others = [i for i, _ in pullback if i != e]
        if e not in dict(pullback) or len(others) != 1:
            raise ConicBundleError(f"pullback of target ray {a} is not E + E_hat: {pullback}")
        comps.append(DiscriminantComponent(a, orbit_closure_fan(Y, (a,)), e, others[0], tuple(pullback)))
    rays = [c.target_ray for c in comps]
    disjoint = len(set(rays)) == len(rays) and not any(
        Y.has_cone((p, q)) for p, q in itertools.combinations(rays, 2))
    return DiscriminantData(tuple(comps), disjoint)


# --- Lefschetz defect ------------------------------------------------------

@dataclass(frozen=True)
class LefschetzCertificate:
    lower: int
    upper: Optional[int]        # None: no upper bound available
    value: Optional[int]
    rule: Optional[str]
    witness_ray: int

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "value": self.value,
                "rule": self.rule, "witness_ray": self.witness_ray}


def surface_product_split(f: Fan) -> Optional[tuple[Fan, Fan]]:
    """``(S_1, S_2)`` if ``f`` is a product of two surfaces."""
    if f.dim != 4:
        return None
    factors = product_decompose(f)
    if len(factors) == 1:
        return None
    for k in range(1, len(factors)):
        for group in itertools.combinations(range(len(factors)), k):
            if sum(factors[i].dim for i in group) == 2:
                rest = [i for i in range(len(factors)) if i not in group]
                s1 = product(*(factors[i] for i in group))
                s2 = product(*(factors[i] for i in rest))
                return s1, s2
    return None


def lefschetz_defect(f: Fan) -> LefschetzCertificate:
    rho = picard_rank(f)
    codims = [rho - n1_span_of_divisor(f, i) for i in range(f.nrays)]
    lower = max(codims)
    witness = codims.index(lower)
    if f.dim != 4:
        raise CertificationError("certification rules are 4-fold specific",
                                 LefschetzCertificate(lower, None, None, None, witness))
    split = surface_product_split(f)
    if split is not None:
        value = max(picard_rank(s) - 1 for s in split)
        if lower > value:
            log.warning("invariant lower bound %d exceeds product formula %d", lower, value)
        return LefschetzCertificate(lower, value, value, "product-formula", witness)
    if lower > 3:
        # a non-product with delta >= 4 cannot exist; report the bound and leave it open
        return LefschetzCertificate(lower, None, None, None, witness)
    if rho - 1 < 3:
        upper, rule = rho - 1, "bounds-match"
    else:
        upper, rule = 3, "thm2.5-cap"
    return LefschetzCertificate(lower, upper, lower if lower == upper else None, rule, witness)


# --- instance checks -------------------------------------------------------

@dataclass(frozen=True)
class TheoremReport:
    is_product_of_surfaces: bool
    delta: LefschetzCertificate
    has_drop3_conic_bundle: bool
    consistent: bool
    targets: tuple[tuple[str, ...], ...]
    divisor_with_span_rho_minus_3: Optional[int]
    notes: tuple[str, ...]

    def to_json(self) -> dict:
        return {"is_product_of_surfaces": self.is_product_of_surfaces,
                "delta": self.delta.to_json(),
                "has_drop3_conic_bundle": self.has_drop3_conic_bundle,
                "consistent": self.consistent,
                "targets": [list(t) for t in self.targets],
                "divisor_with_span_rho_minus_3": self.divisor_with_span_rho_minus_3,
                "notes": list(self.notes)}


def admissible_target(x: Fan, y: Fan) -> tuple[bool, tuple[str, ...]]:
    """Whether ``y`` is an allowed target of a drop-3 conic bundle from ``x``, and its names."""
    from . import catalog

    rho = picard_rank(x)
    names = tuple(m.name for m in catalog.identify(y))
    if rho in catalog.ADMISSIBLE_TARGETS:
        allowed = catalog.ADMISSIBLE_TARGETS[rho]
        return any(n in allowed for n in names), names
    if rho >= 7:
        has_line = any(g.dim == 1 for g in product_decompose(y))
        return surface_product_split(x) is not None and has_line, names
    return False, names


def main_theorem_report(f: Fan, bundles: Optional[list[ConicBundleFactorization]] = None) -> TheoremReport:
    notes = []
    delta = lefschetz_defect(f)
    is_product = surface_product_split(f) is not None
    if bundles is None:
        bundles = search_conic_bundles(f, 3)
    has = bool(bundles)
    consistent = True
    if not is_product and delta.value is not None and (delta.value == 3) != has:
        consistent = False
        notes.append(f"delta = {delta.value} but drop-3 conic bundle {'found' if has else 'not found'}")
    rho = picard_rank(f)
    targets = []
    for cb in bundles:
        ok, names = admissible_target(f, cb.target)
        targets.append(names)
        if not ok:
            consistent = False
            notes.append(f"target {list(names) or 'unidentified'} not admissible for rho = {rho}")
    if has and not 5 <= rho <= 13:
        consistent = False
        notes.append(f"rho = {rho} outside [5, 13]")
    span_witness = next((i for i in range(f.nrays) if n1_span_of_divisor(f, i) == rho - 3), None)
    if has and span_witness is None:
        consistent = False
        notes.append("no invariant divisor with N_1 span rho - 3")
    return TheoremReport(is_product, delta, has, consistent, tuple(targets), span_witness, tuple(notes))
