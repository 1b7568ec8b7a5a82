"""Naive reference semantics used as test oracles.

Everything here favours obviousness over speed: stable models are found
by enumerating candidate sets and checking the reduct fixpoint, and
constraint stable models by enumerating every integer assignment.
"""

import itertools

from lazycasp.model import ConAtom, RegAtom
from lazycasp.program import AUX


def regular_atoms_of(rules):
    atoms = set()
    for r in rules:
        if r.head is not None:
            atoms.add(r.head.name)
        for lit in r.body:
            if isinstance(lit.atom, RegAtom):
                atoms.add(lit.atom.name)
    return sorted(atoms)


def _reduce_rules(rules, catom_truth):
    """Resolve constraint-atom literals against a fixed truth table."""
    out = []
    for r in rules:
        body = []
        dead = False
        for lit in r.body:
            if isinstance(lit.atom, ConAtom):
                if catom_truth[lit.atom.cid] != lit.sign:
                    dead = True
                    break
            else:
                body.append(lit)
        if not dead:
            out.append((r.head.name if r.head else None, body))
    return out


def _is_stable(reduced, atoms, candidate):
    for head, body in reduced:
        holds = all(
            (lit.atom.name in candidate) == lit.sign for lit in body
        )
        if head is None and holds:
            return False
    # least model of the reduct
    active = []
    for head, body in reduced:
        if head is None:
            continue
        if any(not lit.sign and lit.atom.name in candidate for lit in body):
            continue
        active.append((head, [l.atom.name for l in body if l.sign]))
    model = set()
    changed = True
    while changed:
        changed = False
        for head, pos in active:
            if head not in model and all(p in model for p in pos):
                model.add(head)
                changed = True
    return model == candidate


def stable_models(rules, extra_atoms=()):
    """All stable models of a program over regular atoms only."""
    atoms = sorted(set(regular_atoms_of(rules)) | set(extra_atoms))
    reduced = _reduce_rules(rules, {})
    out = []
    for bits in itertools.product([False, True], repeat=len(atoms)):
        candidate = {a for a, b in zip(atoms, bits) if b}
        if _is_stable(reduced, atoms, candidate):
            out.append(frozenset(candidate))
    return out


def eval_constraint(payload, assignment):
    """Truth of a constraint payload under a full integer assignment."""
    from lazycasp.program import (
        DistinctConstraint,
        DomainConstraint,
        LinearConstraint,
        SumConstraint,
        TrivialConstraint,
    )

    if isinstance(payload, TrivialConstraint):
        return payload.truth
    if isinstance(payload, LinearConstraint):
        return sum(t.apply(assignment[t.var]) for t in payload.terms) <= payload.bound
    if isinstance(payload, SumConstraint):
        s = sum(t.apply(assignment[t.var]) for t in payload.terms)
        return {
            "<=": s <= payload.bound,
            "<": s < payload.bound,
            ">=": s >= payload.bound,
            ">": s > payload.bound,
            "=": s == payload.bound,
            "!=": s != payload.bound,
        }[payload.rel]
    if isinstance(payload, DistinctConstraint):
        vals = [v.apply(assignment[v.var]) for v in payload.views]
        return len(set(vals)) == len(vals)
    if isinstance(payload, DomainConstraint):
        return payload.view.apply(assignment[payload.view.var]) in payload.dset
    raise TypeError(payload)


def casp_models(rules, gamma, variables, modes=None, project=None):
    """Constraint stable models by full enumeration.

    Returns a set of (frozenset(regular atoms), tuple(values)) pairs,
    values listed in variable-id order for live variables.  `modes` maps
    cid -> 'T'/'F' for half-reified atoms (default: full reification).
    `project` optionally restricts the reported atoms.
    """
    modes = modes or {}
    atoms = regular_atoms_of(rules)
    cids = sorted(gamma)
    live = variables.live_variables()
    models = set()
    for values in itertools.product(
        *[list(variables.domain(v).values()) for v in live]
    ):
        assignment = dict(zip(live, values))
        for v in range(len(variables.names)):
            if v not in assignment:
                assignment[v] = variables.reconstruct(v, assignment)
        options = []
        for cid in cids:
            sat = eval_constraint(gamma[cid], assignment)
            mode = modes.get(cid)
            if mode is None:
                options.append((sat,))
            elif mode == "T":  # truth implies sat
                options.append((False, True) if sat else (False,))
            else:  # 'F': falsity implies unsat
                options.append((True,) if sat else (False, True))
        for combo in itertools.product(*options):
            truth = dict(zip(cids, combo))
            reduced = _reduce_rules(rules, truth)
            for bits in itertools.product([False, True], repeat=len(atoms)):
                cand = {a for a, b in zip(atoms, bits) if b}
                if _is_stable(reduced, atoms, cand):
                    shown = {
                        a for a in cand if not a.startswith(AUX)
                    }
                    if project is not None:
                        shown &= set(project)
                    models.add((frozenset(shown), values))
    return models
