"""Ground constraint logic programs and their Boolean skeleton.

A program is a set of normal rules over regular atoms and constraint
atoms, a table mapping constraint atoms to their constraints, integer
variable declarations, objectives, and show/external lists.

This module turns rules into completion nogoods (with constraint atoms
exempted from support), detects don't-care constraint atoms, expands
choice heads, and computes the positive dependency graph for the
unfounded-set propagator.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from .model import (
    ConAtom,
    DomainSet,
    Lit,
    Nogood,
    RegAtom,
    VariableTable,
    View,
    make_nogood,
)

# Reserved name prefix for atoms invented by the system; the parser
# rejects user atoms starting with '_ '.
AUX = "\x01"


class Rule(NamedTuple):
    """head is a RegAtom or None for an integrity constraint."""

    head: Optional[RegAtom]
    body: tuple


def rule(head, *body):
    return Rule(head, tuple(body))


class SumConstraint(NamedTuple):
    """Raw linear constraint before normalization: sum(terms) rel bound."""

    terms: tuple  # of View
    rel: str  # one of <=, =, >=, <, >, !=
    bound: int


class LinearConstraint(NamedTuple):
    """Normalized linear constraint sum(terms) <= bound, one term per var."""

    terms: tuple  # of View
    bound: int

    def complement(self):
        return LinearConstraint(tuple(t.negate() for t in self.terms), -self.bound - 1)


class DistinctConstraint(NamedTuple):
    views: tuple


class DomainConstraint(NamedTuple):
    view: View
    dset: DomainSet


class TrivialConstraint(NamedTuple):
    truth: bool


class GroundProgram:
    """Accumulated ground program: rules, gamma, variables, directives."""

    def __init__(self):
        self.variables = VariableTable()
        self.rules = []
        self.gamma = {}  # cid -> constraint payload
        self.con_names = {}  # cid -> surface name
        self.objectives = []  # (View, level, const)
        self.show_atoms = []
        self.show_variables = []
        self.externals = set()  # RegAtom
        self.user_atoms = set()  # RegAtom names written by the user

    def new_constraint(self, payload, name=None):
        cid = len(self.gamma)
        self.gamma[cid] = payload
        self.con_names[cid] = name if name is not None else AUX + "c%d" % cid
        return cid


# ---------------------------------------------------------------------------
# Choice heads
# ---------------------------------------------------------------------------

def desugar_choice(choice_head, body, fresh):
    """Expand `{a1;...;an} :- B` into pairs of normal rules.

    `fresh` maps an atom name to a new helper atom name.  Stable models
    projected onto the original atoms match choice semantics.
    """
    out = []
    for atom in choice_head:
        prime = RegAtom(fresh(atom.name))
        out.append(Rule(atom, tuple(body) + (Lit(False, prime),)))
        out.append(Rule(prime, tuple(body) + (Lit(False, atom),)))
    return out


# ---------------------------------------------------------------------------
# Completion
# ---------------------------------------------------------------------------

class CompletionState:
    """Incremental Clark completion with constraint atoms exempted.

    Bodies are hash-consed: every distinct rule body gets exactly one body
    atom; bodies of size one are inlined.  In multi-shot mode every
    regular atom's support nogood carries an extra 'future bodies' marker
    literal so that later program parts can extend the atom's definition
    without retracting nogoods.  Markers are regular atoms held false by
    per-call assumptions until they get defined by an extension.
    """

    def __init__(self, multi_shot=False, inline_single=True):
        self.multi_shot = multi_shot
        self.inline_single = inline_single
        self.body_ids = {}  # frozenset(lits) -> bid
        self.body_lits = []  # bid -> tuple(lits)
        self.supported = {}  # atom name -> current marker name (or None)
        self.facts = set()  # atom names forced by facts
        self.seen_bodies = set()  # bids whose definition nogoods were emitted
        self._marker_no = 0

    def body_atom(self, bid):
        from .model import BodyAtom

        return BodyAtom(bid)

    def _body_handle(self, body):
        """Return ('lit', lit) for singleton bodies, else ('body', bid)."""
        body = tuple(body)
        if len(body) == 1 and self.inline_single:
            return ("lit", body[0])
        key = frozenset(body)
        bid = self.body_ids.get(key)
        if bid is None:
            bid = len(self.body_lits)
            self.body_ids[key] = bid
            self.body_lits.append(tuple(body))
        return ("body", bid)

    def _handle_true_lit(self, handle):
        if handle[0] == "lit":
            return handle[1]
        return Lit(True, self.body_atom(handle[1]))

    def _new_marker(self):
        self._marker_no += 1
        return AUX + "sup%d" % self._marker_no

    def add_part(self, rules, atoms_in_part, externals):
        """Integrate new rules; return (nogoods, new_markers, defined_markers).

        `atoms_in_part` lists every regular atom occurring in the part
        (atoms never defined get closed-world support nogoods),
        `externals` the atom names currently declared external.
        """
        nogoods = []
        new_markers = []
        defined_markers = []

        by_head = {}
        for r in rules:
            if r.head is not None:
                by_head.setdefault(r.head.name, []).append(r.body)
            else:
                # integrity constraint: its body must not hold
                handle = self._body_handle(r.body) if r.body else None
                if handle is None:
                    nogoods.append(Nogood(frozenset()))  # empty ic: unsat
                    continue
                nogoods.extend(self._define_body(handle))
                ng = make_nogood([self._handle_true_lit(handle)])
                if ng is not None:
                    nogoods.append(ng)

        for name in sorted(by_head):
            bodies = by_head[name]
            atom = RegAtom(name)
            if name in self.facts:
                continue
            handles = []
            has_fact = False
            for body in bodies:
                if not body:
                    has_fact = True
                    break
                handles.append(self._body_handle(body))
            if has_fact:
                self.facts.add(name)
                nogoods.append(Nogood(frozenset([Lit(False, atom)])))
                if self.supported.get(name) is not None:
                    # a previously supported atom became a fact: satisfy its
                    # support nogood permanently through the marker chain
                    marker = self.supported[name]
                    defined_markers.append(marker)
                    nxt = self._new_marker()
                    new_markers.append(nxt)
                    self.supported[name] = nxt
                    nogoods.append(
                        Nogood(frozenset([Lit(False, RegAtom(marker))]))
                    )
                continue
            for h in handles:
                nogoods.extend(self._define_body(h))
                # body true forces the head
                ng = make_nogood([Lit(False, atom), self._handle_true_lit(h)])
                if ng is not None:
                    nogoods.append(ng)
            if name in self.supported:
                # extend an already supported atom through its marker chain
                marker = self.supported[name]
                assert marker is not None, "extension needs multi-shot mode"
                defined_markers.append(marker)
                nxt = self._new_marker()
                new_markers.append(nxt)
                self.supported[name] = nxt
                m_atom = RegAtom(marker)
                support = [Lit(True, m_atom)]
                for h in handles:
                    support.append(self._handle_true_lit(h).neg())
                    ng = make_nogood(
                        [Lit(False, m_atom), self._handle_true_lit(h)]
                    )
                    if ng is not None:
                        nogoods.append(ng)
                support.append(Lit(True, RegAtom(nxt)).neg())
                ng = make_nogood(support)
                if ng is not None:
                    nogoods.append(ng)
                # the marker supports the original atom
                nogoods.append(
                    Nogood(frozenset([Lit(False, atom), Lit(True, m_atom)]))
                )
            else:
                self._emit_support(atom, handles, nogoods, new_markers)

        # closed-world support for atoms that occur but have no rules
        for name in sorted(atoms_in_part):
            if (
                name not in self.supported
                and name not in self.facts
                and name not in externals
            ):
                self._emit_support(RegAtom(name), [], nogoods, new_markers)

        return nogoods, new_markers, defined_markers

    def _emit_support(self, atom, handles, nogoods, new_markers):
        support = [Lit(True, atom)]
        for h in handles:
            support.append(self._handle_true_lit(h).neg())
        if self.multi_shot:
            marker = self._new_marker()
            new_markers.append(marker)
            self.supported[atom.name] = marker
            support.append(Lit(True, RegAtom(marker)).neg())
        else:
            self.supported[atom.name] = None
        ng = make_nogood(support)
        if ng is not None:
            nogoods.append(ng)

    def _define_body(self, handle):
        """Nogoods tying a body atom to its literals (once per body)."""
        if handle[0] == "lit":
            return []
        bid = handle[1]
        if bid in self.seen_bodies:
            return []
        self.seen_bodies.add(bid)
        lits = self.body_lits[bid]
        b = self.body_atom(bid)
        out = [Nogood(frozenset([Lit(False, b)] + [l for l in lits]))]
        for l in lits:
            out.append(Nogood(frozenset([Lit(True, b), l.neg()])))
        return out


def completion_nogoods(rules, atoms, externals=(), inline_single=True):
    """One-shot completion; returns (nogoods, body atom count)."""
    state = CompletionState(multi_shot=False, inline_single=inline_single)
    nogoods, _, _ = state.add_part(rules, atoms, set(externals))
    return nogoods, len(state.body_lits)


# ---------------------------------------------------------------------------
# Don't-care analysis
# ---------------------------------------------------------------------------

class DontCareReport(NamedTuple):
    cid: int
    kept_half: str  # 'T' (T c => gamma) or 'F' (F c => complement)
    guards: int


def detect_dont_care(rules, eligible_cids, fresh):
    """Weaken the reification of don't-care constraint atoms.

    A constraint atom is don't care when it occurs only in integrity
    constraints and with a single polarity program-wide.  Its reification
    is reduced to the needed half and guard rules fix the atom's truth
    whenever every integrity constraint containing it is deactivated.

    Returns (guard_rules, reify_modes, reports) where reify_modes maps
    cid -> 'T'/'F'.
    """
    occ = {}
    for ri, r in enumerate(rules):
        for lit in r.body:
            if isinstance(lit.atom, ConAtom):
                occ.setdefault(lit.atom.cid, []).append((ri, lit.sign, r.head is None))

    guard_rules = []
    modes = {}
    reports = []
    for cid in sorted(occ):
        if cid not in eligible_cids:
            continue
        entries = occ[cid]
        signs = {sign for _, sign, _ in entries}
        if len(signs) != 1 or not all(is_ic for _, _, is_ic in entries):
            continue
        positive = signs.pop()
        # unnegated occurrence: the atom matters only when forced false,
        # keep F c => complement and pin the atom true when unused;
        # negated occurrence: keep T c => gamma and pin false when unused.
        modes[cid] = "F" if positive else "T"
        catom = ConAtom(cid)
        guard_body = [Lit(not positive, catom)]
        dead = False
        for ri, sign, _ in entries:
            rest = [l for l in rules[ri].body if l.atom != catom]
            if not rest:
                # an unconditional integrity constraint: the atom is
                # always relevant, no guard needed
                dead = True
                break
            if len(rest) == 1:
                guard_body.append(rest[0].neg())
            else:
                act = RegAtom(fresh("act%d" % cid))
                guard_rules.append(Rule(act, tuple(rest)))
                guard_body.append(Lit(False, act))
        if dead:
            reports.append(DontCareReport(cid, modes[cid], 0))
            continue
        guard_rules.append(Rule(None, tuple(guard_body)))
        reports.append(DontCareReport(cid, modes[cid], len(entries)))
    return guard_rules, modes, reports


# ---------------------------------------------------------------------------
# Positive dependency graph
# ---------------------------------------------------------------------------

def tightness_check(rules):
    """(tight, sccs): SCCs of the positive dependency graph over regular atoms.

    Only SCCs that are recursive (size > 1, or with a self loop) are
    returned; the program is tight iff there are none.
    """
    edges = {}
    self_loop = set()
    for r in rules:
        if r.head is None:
            continue
        h = r.head.name
        edges.setdefault(h, [])
        for lit in r.body:
            if lit.sign and isinstance(lit.atom, RegAtom):
                edges.setdefault(lit.atom.name, [])
                edges[h].append(lit.atom.name)
                if lit.atom.name == h:
                    self_loop.add(h)

    sccs = _tarjan(edges)
    recursive = [
        sorted(c) for c in sccs if len(c) > 1 or (len(c) == 1 and c[0] in self_loop)
    ]
    recursive.sort()
    return not recursive, recursive


def _tarjan(edges):
    """Iterative Tarjan SCC over a dict adjacency (deterministic order)."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = [0]

    for start in sorted(edges):
        if start in index:
            continue
        work = [(start, iter(sorted(edges[start])))]
        index[start] = low[start] = counter[0]
        counter[0] += 1
        stack.append(start)
        on_stack.add(start)
        while work:
            node, it = work[-1]
            advanced = False
            for nxt in it:
                if nxt not in index:
                    index[nxt] = low[nxt] = counter[0]
                    counter[0] += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(sorted(edges[nxt]))))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                sccs.append(comp)
    return sccs
