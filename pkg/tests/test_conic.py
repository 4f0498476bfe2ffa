import dataclasses

import pytest

from torfan import catalog
from torfan.conic import (CertificationError, ConicBundleError, discriminant, elementary_wrapper,
                          fiber_dimensions, lefschetz_defect, main_theorem_report,
                          search_conic_bundles, verify_conic_bundle)
from torfan.contraction import (ToricMorphism, blow_down, blowdown_class_for_ray, contract_fiber_type,
                                fiber_class_for_pair)
from torfan.fan import Fan, fan_isomorphic, validate
from torfan.fano import is_fano
from torfan.intersection import n1_span_of_divisor, picard_rank

from _corpus import DROP3, bundles, fan, target_names

POINT = Fan(0, [], [()])


def projection(src, rows, tgt):
    return ToricMorphism(tuple(tuple(r) for r in rows), src, tgt, "projection")


def test_fiber_dimensions_trivial():
    p1p2 = fan("P1xP2")
    m = projection(p1p2, [(0, 1, 0), (0, 0, 1)], fan("P2"))
    assert {d for _, d in fiber_dimensions(m)} == {1}
    m = projection(fan("P2"), [], POINT)
    assert fiber_dimensions(m) == [((), 2)]


def test_not_a_toric_morphism():
    m = projection(fan("P2"), [(1, 0)], fan("P1"))
    # (1,0) and (-1,-1) land in different halves, but (0,1) -> 0 and the cone {e1, -e1-e2} straddles
    m = projection(fan("F1"), [(1, 1)], fan("P1"))
    with pytest.raises(ConicBundleError, match="not a toric morphism"):
        fiber_dimensions(m)


def test_verify_examples():
    d5 = fan("D5")
    g = contract_fiber_type(d5, fiber_class_for_pair(d5, 3, 4))
    r = verify_conic_bundle(g)
    assert (r.is_conic_bundle, r.is_K_negative, r.relative_drop) == (True, True, 1)
    p1p2 = fan("P1xP2")
    r = verify_conic_bundle(projection(p1p2, [(1, 0, 0)], fan("P1")))
    assert not r.is_conic_bundle and r.max_fiber_dim == 2 and r.relative_drop == 1


def test_k1_composite():
    (cb,) = [cb for cb, names in zip(bundles("K1"), target_names("K1")) if "P1xP2" in names]
    r = verify_conic_bundle(cb.composite)
    assert (r.is_conic_bundle, r.is_K_negative, r.relative_drop) == (True, True, 3)
    assert {d for _, d in fiber_dimensions(cb.composite)} == {1}
    assert cb.composite_map == cb.elementary.matrix
    assert cb.target == cb.elementary.target
    assert len(cb.steps) + 1 == cb.relative_drop == 3


def test_search_examples():
    assert any("P1xP2" in names for names in target_names("K1"))
    u1 = target_names("U1")
    assert any("P1xP1xP1" in n for n in u1) and any("PP1xP1-Om1m1-O" in n for n in u1)
    assert search_conic_bundles(fan("P4"), 3) == []
    with pytest.raises(ValueError):
        search_conic_bundles(fan("P4"), 0)


def test_search_elementary_d5():
    found = search_conic_bundles(fan("D5"), 1)
    assert found and all(cb.steps == () for cb in found)
    assert any(fan_isomorphic(cb.target, fan("P1xP2")) is not None for cb in found)


def test_discriminant_shapes():
    for cb in bundles("K1"):
        d = discriminant(cb)
        assert len(d.components) == 2 and d.pairwise_disjoint
        if fan_isomorphic(cb.target, fan("P1xP2")) is not None:
            assert all(fan_isomorphic(c.orbit_fan, fan("P2")) for c in d.components)
    (ours,) = [cb for cb, n in zip(bundles("U2"), target_names("U2")) if "F1xP1" in n]
    d = discriminant(ours)
    assert all(fan_isomorphic(c.orbit_fan, fan("F1")) is not None for c in d.components)


def test_discriminant_of_elementary_wrapper():
    d5 = fan("D5")
    g = contract_fiber_type(d5, fiber_class_for_pair(d5, 3, 4))
    assert discriminant(elementary_wrapper(g)).components == ()


def test_discriminant_rejects_singular_elementary():
    cb = bundles("K1")[0]
    broken = dataclasses.replace(cb, elementary=dataclasses.replace(cb.elementary, kernel=None))
    with pytest.raises(ConicBundleError, match="non-smooth elementary part unsupported"):
        discriminant(broken)


def test_lefschetz_examples():
    c = lefschetz_defect(fan("K1"))
    assert (c.lower, c.upper, c.value, c.rule) == (3, 3, 3, "thm2.5-cap")
    assert fan("K1").rays[c.witness_ray] in ((0, 0, 1, 1), (0, 0, -1, -1)) or c.lower == 3
    c = lefschetz_defect(fan("K4"))
    assert (c.value, c.rule) == (3, "product-formula")
    c = lefschetz_defect(fan("P4"))
    assert c.value == 0
    with pytest.raises(CertificationError, match="certification rules are 4-fold specific") as exc:
        lefschetz_defect(fan("P1xP2"))
    # the divisor pt x P^2 spans one direction out of two
    assert exc.value.certificate.lower == 1 and exc.value.certificate.value is None


def test_lefschetz_bounds_on_corpus():
    for name in ("D5", "H3", "L1", "Q3", "P1xP3", "P2xP2"):
        c = lefschetz_defect(fan(name))
        assert c.upper is None or c.lower <= c.upper
        assert (c.value is not None) == (c.upper is not None and c.lower == c.upper)


def test_theorem_reports():
    r = main_theorem_report(fan("U8"), list(bundles("U8")))
    assert (r.is_product_of_surfaces, r.delta.value, r.has_drop3_conic_bundle, r.consistent) == \
        (False, 3, True, True)
    assert any("PP1xP1-O0m1-Om10" in t for t in r.targets)
    r = main_theorem_report(fan("K4"), list(bundles("K4")))
    assert (r.is_product_of_surfaces, r.delta.value, r.has_drop3_conic_bundle, r.consistent) == \
        (True, 3, True, True)
    r = main_theorem_report(fan("P1xP3"))
    assert not r.is_product_of_surfaces and not r.has_drop3_conic_bundle and r.consistent
    assert r.delta.upper <= 3 and r.delta.lower == 1


@pytest.mark.parametrize("name", DROP3)
def test_factorization_invariants(name):
    f = fan(name)
    for cb in bundles(name):
        assert cb.relative_drop == len(cb.steps) + 1 == 3
        assert picard_rank(cb.target) == picard_rank(f) - 3
        assert 5 <= picard_rank(f) <= 13
        for mid in cb.intermediates:
            assert validate(mid).ok
        if fan_isomorphic(cb.target, fan("P1xP2")) is not None:
            # a reordering with Fano X_1, X_2 exists for conic bundles onto P^1 x P^2
            assert cb.fano_intermediates
        assert cb.fano_intermediates == all(is_fano(m).is_fano for m in cb.intermediates)
        d = discriminant(cb)
        assert d.pairwise_disjoint
        for comp in d.components:
            assert sorted(i for i, _ in comp.pullback) == sorted((comp.exceptional, comp.exceptional_hat))
            assert all(mult == 1 for _, mult in comp.pullback)
            assert comp.orbit_fan.dim == 2 and validate(comp.orbit_fan).ok
    assert any(n1_span_of_divisor(f, i) == picard_rank(f) - 3 for i in range(f.nrays))


def test_worked_routes_match_search_results():
    # undo each documented chain by hand, then find the same factorization in the search
    routes = {"D5": "K1", "D3": "K2", "D16": "K3", "L1": "U1", "L2": "U1", "L3": "U2", "L11": "U8"}
    for base, x in routes.items():
        x2, x1, top = catalog.blowup_chain(base)
        assert fan_isomorphic(top, fan(x)) is not None
        mid, _, m1 = blow_down(top, blowdown_class_for_ray(top, top.nrays - 1))
        low, _, m2 = blow_down(mid, blowdown_class_for_ray(mid, mid.nrays - 1))
        assert fan_isomorphic(mid, x1) is not None and fan_isomorphic(low, x2) is not None
        assert is_fano(mid).is_fano and is_fano(low).is_fano
        kernel = [k for k, v in enumerate(catalog.WORKED_EXAMPLES[base].kernel) if v][0]
        pair = next(p for p in x2_pairs(low) if low.rays[p[0]][kernel])
        g = contract_fiber_type(low, fiber_class_for_pair(low, *pair))
        composite = ToricMorphism(g.matrix, top, g.target, "composite", kernel=g.kernel)
        report = verify_conic_bundle(composite)
        assert report.is_conic_bundle and report.relative_drop == 3
        found = bundles(x) if top == fan(x) else search_conic_bundles(top, 3)
        ours = [cb for cb in found
                if cb.contracted_classes == report.contracted_classes
                and fan_isomorphic(cb.target, g.target) is not None]
        assert len(ours) == 1 and ours[0].fano_intermediates, base


def x2_pairs(f):
    return [(i, j) for i in range(f.nrays) for j in range(i + 1, f.nrays)
            if all(a == -b for a, b in zip(f.rays[i], f.rays[j]))]
