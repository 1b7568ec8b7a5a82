import random

import pytest

from lazycasp.model import (
    NEG_INF,
    POS_INF,
    TAUT_FALSE,
    TAUT_TRUE,
    ContractViolation,
    DomainSet,
    EmptyDomainError,
    Lit,
    OrdAtom,
    View,
    assigned_bounds,
    make_nogood,
    minkowski_sum,
    order_lit,
    tau,
    view_bounds,
    view_ge,
    view_le,
    view_step,
)


def dom(*ranges):
    return DomainSet(ranges)


def lit_holds(lit, value):
    """Truth of an order literal under the single assignment var=value."""
    if lit == TAUT_TRUE:
        return True
    if lit == TAUT_FALSE:
        return False
    sat = value <= lit.atom.d
    return sat if lit.sign else not sat


class TestDomainSet:
    def test_normalization_merges_adjacent(self):
        d = DomainSet([(4, 6), (1, 3), (9, 9)])
        assert d.ranges == ((1, 6), (9, 9))

    def test_size_and_membership(self):
        d = dom((1, 3), (7, 9))
        assert d.size == 6
        assert 2 in d and 7 in d
        assert 5 not in d and 0 not in d

    def test_select_rank_roundtrip(self):
        d = dom((1, 3), (7, 9))
        values = list(d.values())
        assert values == [1, 2, 3, 7, 8, 9]
        for k, v in enumerate(values):
            assert d.select(k) == v
            assert d.rank(v) == k

    def test_next_prev_value(self):
        d = dom((1, 3), (7, 9))
        assert d.next_value(3) == 7
        assert d.next_value(9) is None
        assert d.prev_value(7) == 3
        assert d.prev_value(1) is None

    def test_scale_pointwise(self):
        d = dom((1, 3)).scale(-2)
        assert d == DomainSet.from_values([-6, -4, -2])
        assert d.ranges == ((-6, -6), (-4, -4), (-2, -2))

    def test_scale_preserves_size(self):
        rng = random.Random(7)
        for _ in range(200):
            vals = rng.sample(range(-30, 30), rng.randint(1, 12))
            a = rng.choice([x for x in range(-5, 6) if x])
            d = DomainSet.from_values(vals)
            assert d.scale(a).size == d.size

    def test_intersect(self):
        assert dom((1, 10)).intersect(dom((5, 20))) == dom((5, 10))
        assert dom((1, 3)).intersect(dom((5, 6))).size == 0

    def test_intersect_matches_set_semantics(self):
        rng = random.Random(11)
        for _ in range(200):
            a = set(rng.sample(range(0, 25), rng.randint(0, 10)))
            b = set(rng.sample(range(0, 25), rng.randint(0, 10)))
            da, db = DomainSet.from_values(a), DomainSet.from_values(b)
            assert set(da.intersect(db).values()) == a & b
            assert set(da.union(db).values()) == a | b

    def test_remove_above_below(self):
        d = dom((1, 3), (7, 9))
        assert d.remove_above(7) == dom((1, 3), (7, 7))
        assert d.remove_below(3) == dom((3, 3), (7, 9))

    def test_empty_domain(self):
        d = DomainSet()
        assert not d
        assert d.size == 0
        with pytest.raises(EmptyDomainError):
            d.min


class TestViewAlgebra:
    def test_bounds_plain_variable(self):
        domains = [dom((1, 10))]
        assert view_bounds(View(1, 0, 0), domains) == (1, 10)

    def test_bounds_negative_coefficient(self):
        # image of -5v+7 over 1..5 is {-18,-13,-8,-3,2}
        domains = [dom((1, 5))]
        assert view_bounds(View(-5, 0, 7), domains) == (-18, 2)

    def test_bounds_singleton(self):
        domains = [dom((5, 5))]
        assert view_bounds(View(1, 0, 0), domains) == (5, 5)

    def test_bounds_empty_domain(self):
        with pytest.raises(EmptyDomainError):
            view_bounds(View(1, 0, 0), [DomainSet()])

    def test_step_examples(self):
        domains = [dom((1, 10))]
        assert view_step(17, View(2, 0, 3), domains, "prev") == 15
        assert view_step(5, View(1, 0, 0), domains, "prev") == 4
        assert view_step(0, View(1, 0, 0), domains, "prev") is NEG_INF
        assert view_step(6, View(1, 0, 0), domains, "next") == 7
        assert view_step(10, View(1, 0, 0), domains, "next") is POS_INF

    def test_step_against_enumeration(self):
        rng = random.Random(3)
        for _ in range(400):
            vals = sorted(rng.sample(range(-12, 13), rng.randint(1, 8)))
            a = rng.choice([x for x in range(-4, 5) if x])
            b = rng.randint(-9, 9)
            domains = [DomainSet.from_values(vals)]
            view = View(a, 0, b)
            img = sorted(a * v + b for v in vals)
            for d in range(min(img) - 2, max(img) + 3):
                below = [x for x in img if x < d]
                above = [x for x in img if x > d]
                want_prev = below[-1] if below else NEG_INF
                want_next = above[0] if above else POS_INF
                assert view_step(d, view, domains, "prev") is want_prev or (
                    view_step(d, view, domains, "prev") == want_prev
                )
                assert view_step(d, view, domains, "next") is want_next or (
                    view_step(d, view, domains, "next") == want_next
                )

    def test_step_roundtrip_never_overshoots(self):
        rng = random.Random(5)
        for _ in range(300):
            vals = sorted(rng.sample(range(-15, 16), rng.randint(2, 9)))
            a = rng.choice([x for x in range(-3, 4) if x])
            domains = [DomainSet.from_values(vals)]
            view = View(a, 0, rng.randint(-4, 4))
            for d in range(a * -20, a * 20, max(1, abs(a))):
                nxt = view_step(d, view, domains, "next")
                if isinstance(nxt, int):
                    back = view_step(nxt, view, domains, "prev")
                    if isinstance(back, int):
                        assert back <= d


class TestTau:
    def test_positive_coefficient(self):
        domains = [dom((1, 10))]
        assert tau(1, 0, -6, domains) == Lit(True, OrdAtom(0, 6))

    def test_negative_coefficient_complements(self):
        domains = [dom((1, 10))]
        assert tau(-1, 0, 7, domains) == Lit(False, OrdAtom(0, 6))

    def test_taut_markers(self):
        domains = [dom((1, 10))]
        assert view_le(View(1, 0, 0), 10, domains) is TAUT_TRUE
        assert view_le(View(1, 0, 0), 0, domains) is TAUT_FALSE

    def test_snap_to_prev_in_hole(self):
        domains = [dom((1, 3), (7, 9))]
        assert view_le(View(1, 0, 0), 5, domains) == Lit(True, OrdAtom(0, 3))

    def test_view_table_row(self):
        # order literals of -5v+7 over 1..5, per image value
        domains = [dom((1, 5))]
        view = View(-5, 0, 7)
        got = [view_le(view, d, domains) for d in (-18, -13, -8, -3, 2)]
        assert got == [
            Lit(False, OrdAtom(0, 4)),
            Lit(False, OrdAtom(0, 3)),
            Lit(False, OrdAtom(0, 2)),
            Lit(False, OrdAtom(0, 1)),
            TAUT_TRUE,
        ]

    def test_tau_agrees_with_bruteforce(self):
        rng = random.Random(17)
        for _ in range(600):
            vals = sorted(rng.sample(range(-10, 11), rng.randint(1, 7)))
            a = rng.choice([x for x in range(-6, 7) if x])
            b = rng.randint(-25, 25)
            domains = [DomainSet.from_values(vals)]
            lit = tau(a, 0, b, domains)
            for d in vals:
                assert (a * d + b <= 0) == lit_holds(lit, d), (a, b, vals, d)

    def test_view_ge_agrees_with_bruteforce(self):
        rng = random.Random(23)
        for _ in range(400):
            vals = sorted(rng.sample(range(-10, 11), rng.randint(1, 7)))
            a = rng.choice([x for x in range(-4, 5) if x])
            c = rng.randint(-6, 6)
            bound = rng.randint(-40, 40)
            domains = [DomainSet.from_values(vals)]
            lit = view_ge(View(a, 0, c), bound, domains)
            for d in vals:
                assert (a * d + c >= bound) == lit_holds(lit, d)


class TestAssignedBounds:
    def test_upper_literal(self):
        domains = [dom((1, 10))]
        x = View(1, 0, 0)
        assert assigned_bounds([Lit(True, OrdAtom(0, 6))], x, domains) == (1, 6)

    def test_lower_literal(self):
        domains = [dom((1, 10))]
        x = View(1, 0, 0)
        assert assigned_bounds([Lit(False, OrdAtom(0, 6))], x, domains) == (7, 10)

    def test_empty_assignment(self):
        domains = [dom((1, 10))]
        assert assigned_bounds([], View(1, 0, 0), domains) == (1, 10)

    def test_inconsistent_assignment(self):
        domains = [dom((1, 10))]
        lits = [Lit(True, OrdAtom(0, 3)), Lit(False, OrdAtom(0, 6))]
        with pytest.raises(ContractViolation):
            assigned_bounds(lits, View(1, 0, 0), domains)

    def test_negative_view(self):
        domains = [dom((1, 5))]
        w = View(-5, 0, 7)
        # v <= 2 bounds the view to [-3, 2]
        assert assigned_bounds([Lit(True, OrdAtom(0, 2))], w, domains) == (-3, 2)


class TestNogood:
    def test_taut_true_stripped(self):
        ng = make_nogood([TAUT_TRUE, Lit(True, OrdAtom(0, 1))])
        assert ng is not None and len(ng) == 1

    def test_taut_false_discards(self):
        assert make_nogood([TAUT_FALSE, Lit(True, OrdAtom(0, 1))]) is None

    def test_complementary_pair_discards(self):
        a = Lit(True, OrdAtom(0, 1))
        assert make_nogood([a, a.neg()]) is None


def test_minkowski_exact_and_capped():
    x = DomainSet.from_values([0, 42])
    z = DomainSet.from_values([0, 1337])
    assert minkowski_sum([x, z], 10000) == DomainSet.from_values([0, 42, 1337, 1379])
    assert minkowski_sum([x, z], 0) is None
