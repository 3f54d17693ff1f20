import random
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from qsv.ncalg import (
    ALL_VARIANTS,
    DEFAULT_VARIANT,
    NCElement,
    UnsupportedOperation,
    Variant,
    conjugate_element,
    euclid_momentum,
    euclid_position,
    gate_check,
    gate_report,
    generators,
    grade_scaling,
    is_central,
    line_momentum,
    line_position,
    mirror_algebra,
    normal_order,
    p_squared,
    parse_element,
    power_expand_p2,
    resolve_variant,
    star_multiply,
    theta_minus,
)
from qsv.qcombi import cq_closed
from qsv.qfield import I, ONE, QScalar, lam, lamp, q, qpow

VARIANT = resolve_variant()
MOM = euclid_momentum(VARIANT)
POS = euclid_position(VARIANT)


def rewrite_oracle(alg, word, rng):
    """Normal form by plain string rewriting, contracting a randomly chosen out-of-order pair each step."""
    rel = alg.relations()
    todo = {tuple(word): ONE}
    done = {}
    while todo:
        w, c = todo.popitem()
        bad = [i for i in range(len(w) - 1) if w[i] > w[i + 1]]
        if not bad:
            done[w] = done.get(w, QScalar(0)) + c
            continue
        i = rng.choice(bad)
        s, extra = rel[(w[i], w[i + 1])]
        outs = [(w[:i] + (w[i + 1], w[i]) + w[i + 2:], c * s)]
        outs += [(w[:i] + tuple(r) + w[i + 2:], c * cr) for r, cr in extra.items()]
        for nw, nc in outs:
            todo[nw] = todo.get(nw, QScalar(0)) + nc
    acc = {}
    for w, c in done.items():
        if c:
            e = [0] * alg.width
            for g in w:
                e[g] += 1
            acc[tuple(e)] = acc.get(tuple(e), QScalar(0)) + c
    return NCElement(alg, acc)


@st.composite
def elements(draw, alg, max_deg=2, max_terms=3):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        e = [0] * alg.width
        for _ in range(draw(st.integers(0, max_deg))):
            e[draw(st.integers(0, alg.ngens - 1))] += 1
        c = QScalar(draw(st.integers(-3, 3))) + QScalar(draw(st.integers(-1, 1))) * q
        terms[tuple(e)] = terms.get(tuple(e), QScalar(0)) + c
    return NCElement(alg, terms)


def line_el(alg, cs):
    return sum((NCElement.gen(alg, alg.gens[0], n).scale(c) for n, c in cs.items()), NCElement(alg))


def test_gate_resolves_a_unique_variant():
    report = gate_report()
    assert sum(report.values()) == 1
    assert report[VARIANT.vid]
    assert not gate_check(DEFAULT_VARIANT)
    assert VARIANT.vid == "ipd"
    assert Variant.from_id(VARIANT.vid) == VARIANT
    assert len(ALL_VARIANTS) == 8


def test_normal_order_examples():
    p_plus_p_minus = normal_order(MOM, ["p+", "p-"])
    assert p_plus_p_minus == normal_order(MOM, ["p-", "p+"]) + normal_order(MOM, ["p3", "p3"]).scale(lam)
    assert normal_order(MOM, ["p-", "p3", "p+"]) == NCElement.monomial(MOM, (1, 1, 1, 0, 0, 0))
    x = NCElement.gen(line_position(), "x1")
    assert normal_order(line_position(), ["x1", "x1"]) == x * x


@pytest.mark.parametrize("alg", [MOM, POS], ids=["momentum", "position"])
def test_rewriting_is_confluent_on_length_three_words(alg):
    rng = random.Random(7)
    for word in product(range(3), repeat=3):
        want = normal_order(alg, [alg.gens[i] for i in word])
        for _ in range(4):
            assert rewrite_oracle(alg, word, rng) == want


def test_rewriting_oracle_on_longer_words():
    rng = random.Random(11)
    for _ in range(20):
        word = tuple(rng.randrange(3) for _ in range(5))
        assert rewrite_oracle(MOM, word, rng) == normal_order(MOM, [MOM.gens[i] for i in word])


@settings(max_examples=25, deadline=None)
@given(elements(MOM), elements(MOM), elements(MOM))
def test_star_product_associative(a, b, c):
    assert star_multiply(star_multiply(a, b), c) == star_multiply(a, star_multiply(b, c))


@settings(max_examples=25, deadline=None)
@given(elements(MOM))
def test_star_product_unit_and_grading(a):
    one = NCElement.scalar(MOM)
    assert star_multiply(one, a) == a == star_multiply(a, one)
    for g in generators(MOM):
        prod = a * g
        for m in prod.terms:
            assert sum(m[:3]) - 1 in {sum(k[:3]) for k in a.terms}


def test_line_products():
    x = NCElement.gen(line_position(), "x1")
    assert star_multiply(x ** 2, x ** 3) == x ** 5
    assert x ** -2 * x ** 2 == NCElement.scalar(line_position())


def test_p_squared_coefficients():
    p2 = p_squared(MOM)
    assert p2.coeff((1, 0, 1, 0, 0, 0)) == -lamp
    assert p2.coeff((0, 2, 0, 0, 0, 0)) == qpow(-2)
    assert len(p2.terms) == 2
    lp = line_momentum()
    assert p_squared(lp) == NCElement.gen(lp, "p1", 2)


def test_power_expansion_matches_closed_form():
    assert power_expand_p2(0, MOM) == {0: ONE}
    assert power_expand_p2(1, MOM) == {0: -lamp, 1: qpow(-2)}
    for n in range(7):
        tab = power_expand_p2(n, MOM)
        assert tab == {k: cq_closed(n, k) for k in range(n + 1)}


def test_centrality():
    assert is_central(p_squared(MOM))
    assert not is_central(NCElement.gen(MOM, "p+"))
    assert is_central(NCElement.scalar(MOM, 3 * q))


def test_conjugation_on_the_line():
    lx = line_position()
    x = NCElement.gen(lx, "x1")
    assert conjugate_element(x.scale(I)) == x.scale(-I)
    lp = line_momentum()
    kin = NCElement.gen(lp, "p1", 2) * NCElement.gen(lp, "(2m)", -1)
    assert conjugate_element(kin) == kin
    with pytest.raises(UnsupportedOperation):
        conjugate_element(NCElement.gen(MOM, "p3"))


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.integers(-3, 4), st.integers(-3, 3), min_size=1, max_size=4),
       st.dictionaries(st.integers(-3, 4), st.integers(-3, 3), min_size=1, max_size=4),
       st.integers(-2, 2))
def test_line_conjugation_involution_and_reversal(cs1, cs2, k):
    alg = line_position()
    a = line_el(alg, {n: QScalar(c) * I * qpow(k) for n, c in cs1.items()})
    b = line_el(alg, {n: QScalar(c) + I for n, c in cs2.items()})
    assert conjugate_element(conjugate_element(a)) == a
    assert conjugate_element(a * b) == conjugate_element(b) * conjugate_element(a)


def test_grade_scaling():
    lp = line_momentum()
    p3 = NCElement.gen(lp, "p1", 3)
    assert grade_scaling(p3, {"p1": qpow(2)}) == p3.scale(qpow(6))
    assert grade_scaling(p3, {}) == p3
    e = p_squared(MOM) + NCElement.gen(MOM, "p+")
    once = grade_scaling(grade_scaling(e, {"p+": q, "p3": 2}), {"p+": q, "p-": 3})
    assert once == grade_scaling(e, {"p+": q ** 2, "p3": 2, "p-": 3})
    with pytest.raises(ValueError):
        grade_scaling(e, {"p3": 0})


def test_theta_minus():
    lp = line_momentum()
    p = NCElement.gen(lp, "p1")
    assert theta_minus(p * p, "L") == (p * p).scale(q.inv())
    assert theta_minus(NCElement.scalar(lp), "L") == NCElement.scalar(lp)
    for n in range(7):
        assert theta_minus(theta_minus(p ** n, "L"), "R") == p ** n
    with pytest.raises(UnsupportedOperation):
        theta_minus(NCElement.gen(MOM, "p3"))


def test_mirror_is_an_involution():
    assert mirror_algebra(mirror_algebra(MOM)) == MOM
    m = mirror_algebra(MOM)
    assert normal_order(m, ["p3", "p-"]) != normal_order(MOM, ["p3", "p-"])


def test_parse_element_round_trip():
    e = p_squared(MOM) + NCElement.gen(MOM, "p3").scale(I * q)
    assert parse_element(MOM, str(e)) == e
