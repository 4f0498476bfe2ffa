"""Acceptance suite: one PASS/FAIL line per criterion, printed past the capture."""
import math
import random

import pytest

from torfan import catalog
from torfan.conic import discriminant, lefschetz_defect
from torfan.contraction import blow_down, blowdown_class_for_ray, contract_fiber_type, fiber_class_for_pair
from torfan.fan import fan_isomorphic, product, star_subdivide, validate
from torfan.fano import anticanonical_degree_top, is_fano
from torfan.intersection import n1_span_of_divisor, picard_rank

from _corpus import CHAINS, DROP3, EXAMPLES, bundles, fan, target_names
from test_properties import BASES, check_relations, two_cones


@pytest.fixture
def verdict(capsys):
    results = []

    def record(number, title, check):
        try:
            check()
        except AssertionError as exc:
            results.append(exc)
            status = "FAIL"
        else:
            status = "PASS"
        with capsys.disabled():
            print(f"\nacceptance {number}: {status}: {title}")
        if results:
            raise results[0]

    return record


def corpus_construction():
    for name in EXAMPLES:
        f = fan(name)
        assert tuple(f.rays) == catalog.WORKED_EXAMPLES[name].rays, name
        assert validate(f).ok, name
        assert is_fano(f).is_fano, name
        cones = {frozenset(c) for c in f.all_cones}
        for c in catalog.example_centers(name):
            assert frozenset(c) in cones, (name, c)


def fano_chains():
    for name in EXAMPLES:
        x2, x1, x = catalog.blowup_chain(name)
        mid, top = CHAINS[name]
        assert is_fano(x1).is_fano and is_fano(x).is_fano, name
        assert fan_isomorphic(x1, fan(mid)) is not None and fan_isomorphic(x, fan(top)) is not None, name


def conic_search():
    bad = []
    for x in DROP3:
        assert bundles(x), x
        allowed = set(catalog.ADMISSIBLE_TARGETS[picard_rank(fan(x))])
        for names in target_names(x):
            if not set(names) & allowed:
                bad.append((x, names))
    u1 = [cb.target for cb in bundles("U1")]
    assert any(fan_isomorphic(a, b) is None for a in u1 for b in u1)
    assert not bad, f"targets outside the admissible lists: {bad}"


def picard_arithmetic():
    for x in ("K1", "K2", "K3", "K4"):
        assert picard_rank(fan(x)) == 5, x
    for x in ("U1", "U2", "U8"):
        assert picard_rank(fan(x)) == 6, x
    for x in DROP3:
        rho = picard_rank(fan(x))
        assert 5 <= rho <= 13
        for cb in bundles(x):
            assert rho - picard_rank(cb.target) == 3 == cb.relative_drop


def discriminant_shapes():
    for x, surface in (("K1", "P2"), ("U2", "F1")):
        for cb in bundles(x):
            d = discriminant(cb)
            assert d.pairwise_disjoint and len(d.components) == 2, x
            for comp in d.components:
                assert fan_isomorphic(comp.orbit_fan, fan(surface)) is not None, (x, surface)


def lefschetz_values():
    for x in ("K1", "K2", "K3", "U1", "U2", "U8"):
        cert = lefschetz_defect(fan(x))
        assert cert.lower == cert.upper == cert.value == 3, x
    cert = lefschetz_defect(fan("K4"))
    assert cert.value == 3 and cert.rule == "product-formula"
    assert lefschetz_defect(fan("P4")).value == 0


def _multinomial(n, parts):
    out = math.factorial(n)
    for k in parts:
        out //= math.factorial(k)
    return out


def anticanonical_degrees():
    assert anticanonical_degree_top(fan("P2")) == 9
    assert anticanonical_degree_top(fan("P4")) == 625
    # (-K)^4 on P1 x P3 = (2a + 4b)^4 with a^2 = 0, b^4 = 0, a b^3 = 1
    assert anticanonical_degree_top(fan("P1xP3")) == _multinomial(4, (1, 3)) * 2 * 4 ** 3 == 512
    for a, b in (("P1", "P2"), ("F1", "P2"), ("Bl2P2", "P1xP1")):
        n, m = fan(a).dim, fan(b).dim
        lhs = anticanonical_degree_top(product(fan(a), fan(b)))
        assert lhs == math.comb(n + m, n) * anticanonical_degree_top(fan(a)) * anticanonical_degree_top(fan(b))
    for name in EXAMPLES:
        degrees = [anticanonical_degree_top(g) for g in catalog.blowup_chain(name)]
        assert degrees[0] > degrees[1] > degrees[2], name
        assert all(d.denominator == 1 for d in degrees)


def property_suites():
    rng = random.Random(20261016)
    for _ in range(100):
        f = fan(rng.choice(BASES))
        for _ in range(rng.randint(0, 2)):
            f, _ = star_subdivide(f, rng.choice(two_cones(f)))
        check_relations(f)
        center = rng.choice(two_cones(f))
        g, new = star_subdivide(f, center)
        cls = blowdown_class_for_ray(g, new, center)
        assert cls.classification.type_pair == (g.dim - 1, g.dim - 2)
        assert fan_isomorphic(blow_down(g, cls)[0], f) is not None
        if f.dim == 2:
            twist = [rng.randint(-2, 2) for _ in f.rays]
            h = catalog.projective_bundle(f, twist)
            check_relations(h)
            fiber = fiber_class_for_pair(h, h.nrays - 2, h.nrays - 1)
            assert fiber.classification.type_pair == (h.dim, h.dim - 1)
            assert fan_isomorphic(contract_fiber_type(h, fiber).target, f) is not None
    for name in catalog.builtin_names():
        check_relations(fan(name))


def divisor_span():
    for x in DROP3:
        f = fan(x)
        assert bundles(x)
        assert any(n1_span_of_divisor(f, i) == picard_rank(f) - 3 for i in range(f.nrays)), x


def test_criterion_1_corpus_construction(verdict):
    verdict(1, "corpus fans validate, are Fano, stated centers are cones", corpus_construction)


def test_criterion_2_fano_chains(verdict):
    verdict(2, "blow-up chains are Fano and match their labels", fano_chains)


def test_criterion_3_conic_search(verdict):
    verdict(3, "drop-3 conic bundles found with admissible targets", conic_search)


def test_criterion_4_picard_arithmetic(verdict):
    verdict(4, "Picard ranks and relative drops", picard_arithmetic)


def test_criterion_5_discriminant_shapes(verdict):
    verdict(5, "discriminant components for K1 and U2", discriminant_shapes)


def test_criterion_6_lefschetz_defect(verdict):
    verdict(6, "Lefschetz defect certificates", lefschetz_values)


def test_criterion_7_anticanonical_degrees(verdict):
    verdict(7, "anticanonical degrees and their decrease along chains", anticanonical_degrees)


def test_criterion_8_property_suites(verdict):
    verdict(8, "randomized and corpus property suites", property_suites)


def test_criterion_9_divisor_span(verdict):
    verdict(9, "a divisor with N_1 span of dimension rho - 3", divisor_span)
