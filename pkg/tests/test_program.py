import itertools
import random

from lazycasp.model import (
    BodyAtom,
    ConAtom,
    DomainSet,
    Lit,
    Nogood,
    RegAtom,
    VariableTable,
    View,
)
from lazycasp.program import (
    CompletionState,
    LinearConstraint,
    Rule,
    completion_nogoods,
    desugar_choice,
    detect_dont_care,
    tightness_check,
)

from helpers import casp_models, stable_models

a, b, c = RegAtom("a"), RegAtom("b"), RegAtom("c")
T, F = True, False


def lit(sign, atom):
    return Lit(sign, atom)


class TestCompletion:
    def test_atom_nogoods_with_body_atoms(self):
        # a :- not b.   (body atoms not inlined, to match the raw shapes)
        rules = [Rule(a, (lit(F, b),))]
        nogoods, nbodies = completion_nogoods(
            rules, {"a", "b"}, inline_single=False
        )
        assert nbodies == 1
        body = BodyAtom(0)
        assert Nogood([lit(T, a), lit(F, body)]) in nogoods
        assert Nogood([lit(F, a), lit(T, body)]) in nogoods

    def test_body_nogoods(self):
        rules = [Rule(a, (lit(F, b),))]
        nogoods, _ = completion_nogoods(rules, {"a", "b"}, inline_single=False)
        body = BodyAtom(0)
        assert Nogood([lit(F, body), lit(F, b)]) in nogoods
        assert Nogood([lit(T, body), lit(T, b)]) in nogoods

    def test_constraint_atom_exempt_from_support(self):
        # a constraint atom with no defining rule must not be forced false
        catom = ConAtom(0)
        rules = [Rule(c, (lit(T, a), lit(T, catom)))]
        nogoods, _ = completion_nogoods(rules, {"a", "c"})
        assert Nogood([lit(T, catom)]) not in nogoods
        # while an undefined regular atom is closed-world false
        assert Nogood([lit(T, a)]) in nogoods

    def test_fact_becomes_unit(self):
        rules = [Rule(a, ())]
        nogoods, _ = completion_nogoods(rules, {"a"})
        assert Nogood([lit(F, a)]) in nogoods

    def test_single_bodies_inlined_by_default(self):
        rules = [Rule(a, (lit(F, b),))]
        _, nbodies = completion_nogoods(rules, {"a", "b"})
        assert nbodies == 0

    def test_multi_shot_extension_chains_markers(self):
        state = CompletionState(multi_shot=True)
        n1, m1, d1 = state.add_part([Rule(a, (lit(F, b),))], {"a", "b"}, set())
        assert len(m1) == 2 and not d1  # markers for a and b
        n2, m2, d2 = state.add_part([Rule(a, (lit(T, c),))], {"a", "c"}, set())
        # the old marker of a is now defined and a new one issued
        assert len(d2) == 1 and d2[0] in m1
        assert any(mk not in m1 for mk in m2)
        marker = RegAtom(d2[0])
        assert Nogood([lit(F, a), lit(T, marker)]) in n2


class TestChoice:
    def test_expansion_shape(self):
        fresh = lambda name: "\x01cho_" + name
        rules = desugar_choice([a], [], fresh)
        assert rules == [
            Rule(a, (lit(F, RegAtom("\x01cho_a")),)),
            Rule(RegAtom("\x01cho_a"), (lit(F, a),)),
        ]

    def test_guarded_expansion(self):
        fresh = lambda name: "\x01cho_" + name
        rules = desugar_choice([a, b], [lit(T, c)], fresh)
        assert len(rules) == 4
        assert all(lit(T, c) in r.body for r in rules)

    def test_matches_choice_semantics_bruteforce(self):
        # over <= 3 chooseable atoms guarded by a plain fact
        rng = random.Random(1)
        names = ["a", "b", "c"]
        for trial in range(30):
            chosen = rng.sample(names, rng.randint(1, 3))
            counter = itertools.count()
            fresh = lambda name: "\x01cho%d_%s" % (next(counter), name)
            rules = desugar_choice([RegAtom(n) for n in chosen], [], fresh)
            models = stable_models(rules)
            projected = {frozenset(m & set(chosen)) for m in models}
            expected = {
                frozenset(subset)
                for k in range(len(chosen) + 1)
                for subset in itertools.combinations(chosen, k)
            }
            assert projected == expected


class TestTightness:
    def test_tight_program(self):
        rules = [
            Rule(a, (lit(F, b),)),
            Rule(b, (lit(F, a),)),
            Rule(c, (lit(T, a), lit(T, ConAtom(0)))),
        ]
        tight, sccs = tightness_check(rules)
        assert tight and sccs == []

    def test_positive_loop(self):
        rules = [Rule(a, (lit(T, b),)), Rule(b, (lit(T, a),))]
        tight, sccs = tightness_check(rules)
        assert not tight
        assert sccs == [["a", "b"]]

    def test_self_loop(self):
        rules = [Rule(a, (lit(T, a),))]
        tight, sccs = tightness_check(rules)
        assert not tight and sccs == [["a"]]

    def test_against_reachability_oracle(self):
        rng = random.Random(9)
        names = ["p%d" % i for i in range(5)]
        for _ in range(150):
            rules = []
            for _ in range(rng.randint(1, 8)):
                h = rng.choice(names)
                body = [
                    lit(True, RegAtom(rng.choice(names)))
                    for _ in range(rng.randint(0, 2))
                ]
                rules.append(Rule(RegAtom(h), tuple(body)))
            tight, _ = tightness_check(rules)
            # Floyd-Warshall reachability over positive edges
            reach = {(x, y): False for x in names for y in names}
            for r in rules:
                for l in r.body:
                    reach[(r.head.name, l.atom.name)] = True
            for k in names:
                for i in names:
                    for j in names:
                        if reach[(i, k)] and reach[(k, j)]:
                            reach[(i, j)] = True
            cyclic = any(reach[(x, x)] for x in names)
            assert tight == (not cyclic)


class TestDontCare:
    def _vars_xy(self):
        table = VariableTable()
        x = table.add("x", DomainSet.interval(1, 10))
        return table, x

    def test_table_like_rewrite(self):
        # {a}.  :- a, not (x>7).   with dom x = 1..10
        table, x = self._vars_xy()
        gamma = {0: LinearConstraint((View(-1, x, 0),), -8)}  # x > 7
        catom = ConAtom(0)
        counter = itertools.count()
        fresh = lambda base: "\x01%s_%d" % (base, next(counter))
        choice = desugar_choice([a], [], fresh)
        rules = choice + [Rule(None, (lit(T, a), lit(F, catom)))]
        guards, modes, reports = detect_dont_care(rules, {0}, fresh)
        assert modes == {0: "T"}
        assert len(guards) == 1
        assert guards[0].head is None
        assert set(guards[0].body) == {lit(T, catom), lit(F, a)}
        assert reports[0].cid == 0

    def test_non_integrity_occurrence_blocks(self):
        catom = ConAtom(0)
        rules = [
            Rule(c, (lit(T, catom),)),
            Rule(None, (lit(T, a), lit(F, catom))),
        ]
        guards, modes, _ = detect_dont_care(rules, {0}, lambda s: "\x01" + s)
        assert modes == {} and guards == []

    def test_mixed_polarity_blocks(self):
        catom = ConAtom(0)
        rules = [
            Rule(None, (lit(T, a), lit(F, catom))),
            Rule(None, (lit(T, b), lit(T, catom))),
        ]
        _, modes, _ = detect_dont_care(rules, {0}, lambda s: "\x01" + s)
        assert modes == {}

    def test_projection_preserved_on_random_programs(self):
        rng = random.Random(42)
        for trial in range(200):
            table = VariableTable()
            x = table.add("x", DomainSet.interval(1, rng.randint(2, 4)))
            gamma = {
                0: LinearConstraint((View(1, x, 0),), rng.randint(1, 3)),
                1: LinearConstraint((View(-1, x, 0),), -rng.randint(1, 3)),
            }
            names = [a, b]
            counter = itertools.count()
            fresh = lambda base: "\x01%s_%d" % (base, next(counter))
            rules = list(desugar_choice(names, [], fresh))
            for _ in range(rng.randint(1, 3)):
                body = []
                for atom in rng.sample(names, rng.randint(0, 2)):
                    body.append(lit(rng.random() < 0.5, atom))
                cid = rng.randint(0, 1)
                body.append(lit(rng.random() < 0.5, ConAtom(cid)))
                rules.append(Rule(None, tuple(body)))
            guards, modes, _ = detect_dont_care(rules, {0, 1}, fresh)
            before = casp_models(rules, gamma, table, project={"a", "b"})
            after = casp_models(
                rules + guards, gamma, table, modes=modes, project={"a", "b"}
            )
            assert before == after, (trial, modes)
