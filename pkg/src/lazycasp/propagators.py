"""Lazy nogood generation: order consistency, linear bounds, reification,
and unfounded-set propagation.

The linear propagators are written against a narrow `ctx` protocol so
they can be exercised directly on hand-built bound states:

    ctx.lb(view) / ctx.ub(view)    assigned bounds of a view
    ctx.lb_reason(view)            literal that established lb, or None
    ctx.gt_lit(view, d)            literal for 'view > d' (may create atoms)
    ctx.ge_lit(view, d)            literal for 'view >= d'
    ctx.next_img(view, d)          smallest image value above d

Literals are opaque to the algorithms except for the TAUT_TRUE /
TAUT_FALSE markers, which are simplified away exactly like in the eager
translation.
"""

from __future__ import annotations

from .model import TAUT_FALSE, TAUT_TRUE


def _push(nogood, lit):
    """Append a literal, simplifying taut markers; False kills the nogood."""
    if lit == TAUT_TRUE or lit is None:
        return True
    if lit == TAUT_FALSE:
        return False
    nogood.append(lit)
    return True


def propagate_bounds(ctx, seed, terms, bound, ps):
    """Nogoods for an active half-reified constraint seed => sum(terms) <= bound.

    Exact bounds propagation: a trivially satisfied constraint yields
    nothing; at strength <= 2 only the lower-bound conflict nogood is
    produced; at strength >= 3 one nogood per term propagates the term's
    new upper bound, returning early when the bound conflicts with the
    term's lower bound.
    """
    n = len(terms)
    lbs = [ctx.lb(t) for t in terms]
    ub_sum = sum(ctx.ub(t) for t in terms)
    if ub_sum <= bound:
        return []
    lb_sum = sum(lbs)
    if ps <= 2:
        if lb_sum > bound:
            ng = []
            _push(ng, seed)
            for t in terms:
                _push(ng, ctx.lb_reason(t))
            return [ng]
        return []
    out = []
    for i in range(n):
        cur = bound - (lb_sum - lbs[i])
        if cur < ctx.ub(terms[i]):
            ng = []
            _push(ng, seed)
            ok = _push(ng, ctx.gt_lit(terms[i], cur))
            for j in range(n):
                if j != i:
                    _push(ng, ctx.lb_reason(terms[j]))
            if ok:
                out.append(ng)
            if cur < lbs[i]:
                return out
    return out


def propagate_reification(ctx, seed, terms, bound, ps):
    """Nogood forcing the seed false when sum(terms) <= bound became impossible.

    Only called while the seed literal is unassigned.  At strength 1 the
    propagator is mute; below 4 the nogood uses the current lower bounds,
    at 4 it uses a minimal sum of image values just violating the bound.
    """
    if ps == 1:
        return []
    lbs = [ctx.lb(t) for t in terms]
    low = sum(lbs)
    if low <= bound:
        return []
    ng = []
    _push(ng, seed)
    if ps < 4:
        for t in terms:
            _push(ng, ctx.lb_reason(t))
    else:
        for j, t in enumerate(terms):
            low2 = low - lbs[j]
            cur = ctx.next_img(t, bound - low2)
            if not _push(ng, ctx.ge_lit(t, cur)):
                return []
            low = low2 + cur
        assert low > bound
    return [ng]


def order_propagate(vars_to_check, state):
    """Unit-or-violated nogoods over already created order atoms.

    For each variable with a true upper-bound literal, every created
    atom above the bound that is not yet true yields
    {T(v<=ub), F(v<=x)}; symmetrically below the falsified lower-bound
    threshold.  Never creates atoms.  `state` provides:

        state.ub_lit(var)/.lb_lit(var)   bound literals (None if static)
        state.ub_threshold(var)/.lb_threshold(var)
        state.atoms_above(var, d)/.atoms_below(var, d)
            [(aid, truth)] for created atoms strictly beyond d
    """
    out = []
    for var in vars_to_check:
        ub_lit = state.ub_lit(var)
        if ub_lit is not None:
            for aid, truth in state.atoms_above(var, state.ub_threshold(var)):
                if truth is not True:
                    out.append([ub_lit, aid * 2 + 1])
        lb_lit = state.lb_lit(var)
        if lb_lit is not None:
            for aid, truth in state.atoms_below(var, state.lb_threshold(var)):
                if truth is not False:
                    out.append([aid * 2, lb_lit])
    return out


class UfsChecker:
    """Unfounded-set detection over the recursive SCCs of a program.

    Works with a naive per-SCC fixpoint: start from all non-false atoms
    of the SCC and repeatedly remove atoms with a rule whose body is not
    false and has no positive link into the remaining set.  Sound and
    complete at the scale this solver targets; cascades across SCCs are
    resolved by the surrounding propagation loop.
    """

    def __init__(self):
        self.sccs = []  # list of (atom aids, rules) ; rules: (head aid, body_false_lit, pos-in-scc aids, ext lits)

    def rebuild(self, sccs):
        self.sccs = sccs

    def check(self, value_of):
        """Loop nogoods (lists of int literals) for the current assignment.

        value_of(atom) -> True/False/None.  Returns the nogoods of the
        first SCC containing an unfounded set.
        """
        for atoms, rules_by_head in self.sccs:
            unfounded = {a for a in atoms if value_of(a) is not False}
            changed = True
            while changed:
                changed = False
                for a in sorted(unfounded):
                    for body_lit, pos_in_scc in rules_by_head.get(a, ()):
                        if any(p in unfounded for p in pos_in_scc):
                            continue
                        v = value_of(body_lit >> 1)
                        body_false = v is not None and (v is True) == bool(
                            body_lit & 1
                        )
                        if not body_false:
                            unfounded.discard(a)
                            changed = True
                            break
                    if a not in unfounded:
                        continue
            if not unfounded:
                continue
            out = []
            for a in sorted(unfounded):
                if value_of(a) is False:
                    continue
                ng = [a * 2]
                for b in sorted(unfounded):
                    for body_lit, pos_in_scc in rules_by_head.get(b, ()):
                        if not any(p in unfounded for p in pos_in_scc):
                            # external body: its falsity is the reason
                            ng.append(body_lit ^ 1)
                out.append(sorted(set(ng)))
            if out:
                return out
        return []
