"""Objectives over views and lexicographic branch-and-bound.

An objective is evaluated per priority level as a constant base plus a
sum of weighted order literals; higher levels are more significant.
Branch-and-bound repeatedly solves for one model and then adds the
lexicographic-improvement requirement (strictly better at some level,
equal above it) as fresh constraints, terminating when the tightened
program becomes unsatisfiable: the last model is optimal.
"""

from __future__ import annotations

from typing import NamedTuple

from . import model
from .model import Lit, View


class ObjectiveLevel(NamedTuple):
    level: int
    base: int
    literals: tuple  # ((Lit, weight)...) with strictly positive weights


class Objective(NamedTuple):
    levels: tuple  # ObjectiveLevel, descending by level

    def evaluate(self, assignment):
        """Level sums for an integer assignment keyed by variable id."""
        out = []
        for lv in self.levels:
            total = lv.base
            for lit, weight in lv.literals:
                if _lit_true(lit, assignment):
                    total += weight
            out.append((lv.level, total))
        return out


def _lit_true(lit, assignment):
    if lit == model.TAUT_TRUE:
        return True
    if lit == model.TAUT_FALSE:
        return False
    sat = assignment[lit.atom.var] <= lit.atom.d
    return sat if lit.sign else not sat


def build_objective(view_levels, domains, consts=None, size_cap=100000):
    """Weighted-literal objective for views to minimize at priority levels.

    view_levels: iterable of (View, level); consts optionally maps level
    to an added constant.  Per view the base collects lb(view); every
    other image value d contributes the literal for view >= d with
    weight d - prev(d, view), literals merged by atom with weights
    summed.
    """
    by_level = {}
    consts = consts or {}
    for view, level in view_levels:
        entry = by_level.setdefault(level, [0, {}])
        lits = entry[1]
        lb, ub = model.view_bounds(view, domains)
        entry[0] += lb
        if domains[view.var].size > size_cap:
            raise model.ContractViolation("objective domain too large to unfold")
        d = lb
        while True:
            nxt = model.view_step(d, view, domains, "next")
            if not isinstance(nxt, int) or nxt > ub:
                break
            lit = model.view_ge(view, nxt, domains)
            weight = nxt - d
            lits[lit] = lits.get(lit, 0) + weight
            d = nxt
    levels = []
    for level in sorted(by_level, reverse=True):
        base, lits = by_level[level]
        base += consts.get(level, 0)
        merged = tuple(sorted(lits.items(), key=lambda kv: repr(kv[0])))
        levels.append(ObjectiveLevel(level, base, merged))
    return Objective(tuple(levels))


def branch_and_bound(session, assumptions, on_model, n_report):
    """Drive repeated solve calls towards the lexicographic optimum.

    Reports every improving model through the callback; returns a
    SolveResult with status OPTIMUM when optimality was proved by the
    final unsatisfiable call, SAT if interrupted, UNSAT if no model
    exists.
    """
    from .parser import Fragment
    from .session import SolveResult

    best = None
    best_vector = None
    reported = []
    while True:
        res = session._solve_enumerate(assumptions, 1, None)
        if res.status == "UNKNOWN":
            return SolveResult("SAT" if best else "UNKNOWN", reported)
        if res.status == "UNSAT":
            if best is None:
                return SolveResult("UNSAT", [], exhausted=True)
            return SolveResult("OPTIMUM", reported, exhausted=True)
        m = res.models[0]
        vector = session.objective_vector(m)
        m.objective = vector
        if best_vector is not None:
            assert [v for _, v in vector] < [v for _, v in best_vector], (
                "branch and bound must improve lexicographically"
            )
        best, best_vector = m, vector
        reported.append(m)
        if on_model is not None:
            on_model(m)
        _add_improvement(session, vector)


def _add_improvement(session, vector):
    """Require the next model to be lexicographically better than `vector`."""
    from .parser import Fragment

    frag = Fragment(name="\x01bound")
    ok_atom = session.fresh_name("ok")
    eq_names = []
    for idx, (level, value) in enumerate(vector):
        const, views = session.objectives[level]
        terms = [(v.a, session.variables.names[v.var]) for v in views]
        better = session.fresh_name("lt%d" % idx)
        frag.sums.append((better, list(terms), "<=", value - const - 1))
        eq_hi = session.fresh_name("eqa%d" % idx)
        frag.sums.append((eq_hi, list(terms), "<=", value - const))
        eq_lo = session.fresh_name("eqb%d" % idx)
        frag.sums.append((eq_lo, [(-c, n) for c, n in terms], "<=", -(value - const)))
        body = []
        for j in range(idx):
            body.extend(eq_names[j])
        body.append((True, better))
        frag.rules.append((ok_atom, body))
        eq_names.append([(True, eq_hi), (True, eq_lo)])
    frag.rules.append((None, [(False, ok_atom)]))
    session._add_fragment(frag, internal=True)
