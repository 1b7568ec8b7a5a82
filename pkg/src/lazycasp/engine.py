"""Extended CDCL engine: search loop, conflict analysis, lazy atom growth.

The engine owns the propagation kernel, the atom space (mapping symbolic
atoms to kernel ids), per-variable bound state derived from assigned
order literals, and the constraint watches used by the lazy linear
propagators.  Program construction lives in the session; the engine only
sees nogoods, constraint entries and variables.
"""

from __future__ import annotations

import heapq

from . import model
from .core import (
    STATUS_CONFLICT,
    STATUS_DISCARDED,
    UNASSIGNED,
    VFALSE,
    VTRUE,
    Kernel,
)
from .model import ConAtom, Lit, OrdAtom, TAUT_FALSE, TAUT_TRUE
from .propagators import (
    UfsChecker,
    order_propagate,
    propagate_bounds,
    propagate_reification,
)
from .translate import OrderAtomPool

VAR_DECAY = 0.95
NG_DECAY = 0.999
RESTART_UNIT = 64


class SearchLimit(Exception):
    """Raised internally when the conflict budget is exhausted."""


class AtomSpace:
    """Symbolic atom <-> kernel id mapping with default phases."""

    def __init__(self, kernel):
        self.kernel = kernel
        self.syms = [None]
        self.ids = {}

    def register(self, sym):
        if sym in self.ids:
            raise model.ContractViolation("atom registered twice: %r" % (sym,))
        aid = self.kernel.add_atoms(1)
        self.syms.append(sym)
        self.ids[sym] = aid
        return aid

    def intern(self, sym):
        aid = self.ids.get(sym)
        return aid if aid is not None else self.register(sym)

    def aid(self, sym):
        return self.ids.get(sym)

    def lit(self, sym_lit):
        aid = self.intern(sym_lit.atom)
        return aid * 2 if sym_lit.sign else aid * 2 + 1

    @property
    def count(self):
        return len(self.syms) - 1


class ConstraintEntry:
    """One untranslated reified constraint for the lazy propagators."""

    __slots__ = (
        "cid",
        "seed",
        "terms_t",
        "bound_t",
        "terms_f",
        "bound_f",
        "mode",
        "dirty",
    )

    def __init__(self, cid, seed, terms_t, bound_t, mode):
        self.cid = cid
        self.seed = seed  # constraint atom id, or None when structurally true
        self.terms_t = terms_t
        self.bound_t = bound_t
        self.terms_f = tuple(t.negate() for t in terms_t)
        self.bound_f = -bound_t - 1
        self.mode = mode  # 'full', 'T' (T c => gamma) or 'F' (F c => compl)
        self.dirty = True


class Stats:
    def __init__(self):
        self.choices = 0
        self.conflicts = 0
        self.restarts = 0
        self.static_nogoods = 0
        self.dynamic_nogoods = 0
        self.order_atoms = 0
        self.splits = 0
        self.models = 0

    def snapshot(self):
        return dict(self.__dict__)


class Engine:
    def __init__(self, domains, prop_strength=4, learn_nogoods=True):
        self.kernel = Kernel()
        self.space = AtomSpace(self.kernel)
        self.pool = OrderAtomPool(self._register_order_atom)
        self.domains = domains  # shared, session-owned list of DomainSet
        self.ps = prop_strength
        self.learn_nogoods = learn_nogoods
        self.stats = Stats()

        # variable bound state (grows with self.domains)
        self.vb_lb = []
        self.vb_ub = []
        self.vb_lb_lit = []
        self.vb_ub_lit = []
        self.vb_lb_thr = []
        self.vb_undo = []  # (trail_pos, var, side, value, lit, thr)
        self.synced = 0

        self.entries = []  # ConstraintEntry list, ascending cid
        self.by_catom = {}  # seed aid -> entry index
        self.by_var = {}  # var -> [entry index]
        self.rr = 0  # round-robin resume pointer
        self.order_dirty = {}

        self.ufs = UfsChecker()
        self.tight = True

        self.act = [0.0, 0.0]
        self.act_inc = 1.0
        self.heap = []
        self.ng_act = {}
        self.learned = []
        self.side = []  # reduced-learning nogood store
        self.side_promoted = {}
        self.volatile = []  # per-call nogoods (enumeration blockers)
        self.permanently_unsat = False
        self.root_level = 0
        self.max_conflicts = None

    # -- atom management ----------------------------------------------------

    def grow_variables(self):
        while len(self.vb_lb) < len(self.domains):
            self.vb_lb.append(None)
            self.vb_ub.append(None)
            self.vb_lb_lit.append(None)
            self.vb_ub_lit.append(None)
            self.vb_lb_thr.append(None)

    def _register_order_atom(self, sym):
        aid = self.space.register(sym)
        self.act.append(0.0)
        heapq.heappush(self.heap, (0.0, aid))
        self.stats.order_atoms += 1
        self.order_dirty[sym.var] = True
        return aid

    def register_atom(self, sym):
        """Register a non-order atom (order atoms go through the pool)."""
        aid = self.space.register(sym)
        self.act.append(0.0)
        heapq.heappush(self.heap, (0.0, aid))
        return aid

    def intern_atom(self, sym):
        aid = self.space.aid(sym)
        return aid if aid is not None else self.register_atom(sym)

    def lit_of(self, sym_lit):
        atom = sym_lit.atom
        if isinstance(atom, OrdAtom):
            aid = self.pool.ensure(atom.var, atom.d)
        else:
            aid = self.intern_atom(atom)
        return aid * 2 if sym_lit.sign else aid * 2 + 1

    # -- static program integration -----------------------------------------

    def add_static(self, nogood):
        """Add a permanent nogood (symbolic); returns False on root conflict."""
        lits = [self.lit_of(l) for l in nogood]
        ng, status = self.kernel.add_nogood(lits, learned=False)
        if status == STATUS_DISCARDED:
            return True
        self.stats.static_nogoods += 1
        if status == STATUS_CONFLICT and self.kernel.level() == 0:
            self.permanently_unsat = True
            return False
        return True

    def add_constraint_entry(self, cid, seed_aid, terms, bound, mode):
        idx = len(self.entries)
        entry = ConstraintEntry(cid, seed_aid, tuple(terms), bound, mode)
        self.entries.append(entry)
        if seed_aid is not None:
            self.by_catom[seed_aid] = idx
        for t in terms:
            self.by_var.setdefault(t.var, []).append(idx)
        return idx

    def set_ufs(self, tight, sccs):
        self.tight = tight
        self.ufs.rebuild(sccs)

    # -- bounds bookkeeping ---------------------------------------------------

    def _reset_bounds(self):
        self.grow_variables()
        for v in range(len(self.domains)):
            dom = self.domains[v]
            if dom:
                self.vb_lb[v] = dom.min
                self.vb_ub[v] = dom.max
            else:
                self.vb_lb[v] = 0
                self.vb_ub[v] = -1
            self.vb_lb_lit[v] = None
            self.vb_ub_lit[v] = None
            self.vb_lb_thr[v] = None
        self.vb_undo = []
        self.synced = 0
        for v in self.pool.vars():
            self.order_dirty[v] = True
        for i, e in enumerate(self.entries):
            e.dirty = True
        self.rr = 0

    def _sync_trail(self):
        """Fold new trail entries into bound state and dirty sets."""
        kernel = self.kernel
        n = kernel.trail_size()
        while self.synced < n:
            pos = self.synced
            lit = kernel.trail_get(pos)
            self.synced += 1
            sym = self.space.syms[lit >> 1]
            if isinstance(sym, OrdAtom):
                var, d = sym.var, sym.d
                if lit & 1 == 0:  # T(v <= d): upper bound candidate
                    if d < self.vb_ub[var]:
                        self.vb_undo.append(
                            (pos, var, 1, self.vb_ub[var], self.vb_ub_lit[var], None)
                        )
                        self.vb_ub[var] = d
                        self.vb_ub_lit[var] = lit
                        self._mark_var_dirty(var)
                else:  # F(v <= d): lower bound candidate
                    nxt = self.domains[var].next_value(d)
                    if nxt is not None and nxt > self.vb_lb[var]:
                        self.vb_undo.append(
                            (
                                pos,
                                var,
                                0,
                                self.vb_lb[var],
                                self.vb_lb_lit[var],
                                self.vb_lb_thr[var],
                            )
                        )
                        self.vb_lb[var] = nxt
                        self.vb_lb_lit[var] = lit
                        self.vb_lb_thr[var] = d
                        self._mark_var_dirty(var)
            elif isinstance(sym, ConAtom):
                idx = self.by_catom.get(lit >> 1)
                if idx is not None:
                    self.entries[idx].dirty = True

    def _mark_var_dirty(self, var):
        self.order_dirty[var] = True
        for idx in self.by_var.get(var, ()):
            self.entries[idx].dirty = True

    def backjump(self, level):
        kernel = self.kernel
        if level >= kernel.level():
            return
        target = kernel.level_start(level)
        undo = self.vb_undo
        while undo and undo[-1][0] >= target:
            pos, var, side, value, lit, thr = undo.pop()
            if side == 1:
                self.vb_ub[var] = value
                self.vb_ub_lit[var] = lit
            else:
                self.vb_lb[var] = value
                self.vb_lb_lit[var] = lit
                self.vb_lb_thr[var] = thr
            self._mark_var_dirty(var)
        for i in range(target, kernel.trail_size()):
            atom = kernel.trail_get(i) >> 1
            sym = self.space.syms[atom]
            if isinstance(sym, ConAtom):
                idx = self.by_catom.get(atom)
                if idx is not None:
                    self.entries[idx].dirty = True
            heapq.heappush(self.heap, (-self.act[atom], atom))
        kernel.backjump(level)
        self.synced = min(self.synced, target)

    # -- view bounds for the propagator ctx -----------------------------------

    def view_lb(self, view):
        if view.a > 0:
            return view.a * self.vb_lb[view.var] + view.b
        return view.a * self.vb_ub[view.var] + view.b

    def view_ub(self, view):
        if view.a > 0:
            return view.a * self.vb_ub[view.var] + view.b
        return view.a * self.vb_lb[view.var] + view.b

    # ctx protocol
    lb = view_lb
    ub = view_ub

    def lb_reason(self, view):
        if view.a > 0:
            return self.vb_lb_lit[view.var]
        return self.vb_ub_lit[view.var]

    def gt_lit(self, view, d):
        lit = model.view_gt(view, d, self.domains)
        if is_marker(lit):
            return lit
        return self.lit_of(lit)

    def ge_lit(self, view, d):
        lit = model.view_ge(view, d, self.domains)
        if is_marker(lit):
            return lit
        return self.lit_of(lit)

    def next_img(self, view, d):
        nxt = model.view_step(d, view, self.domains, "next")
        assert isinstance(nxt, int)
        return nxt

    # order_propagate protocol
    def ub_lit(self, var):
        return self.vb_ub_lit[var]

    def lb_lit(self, var):
        return self.vb_lb_lit[var]

    def ub_threshold(self, var):
        return self.vb_ub[var]

    def lb_threshold(self, var):
        return self.vb_lb_thr[var]

    def atoms_above(self, var, d):
        kernel, pool = self.kernel, self.pool
        out = []
        for t in pool.var_thresholds(var):
            if t > d:
                aid = pool.ids[(var, t)]
                v = kernel.value(aid)
                out.append((aid, True if v == VTRUE else False if v == VFALSE else None))
        return out

    def atoms_below(self, var, d):
        kernel, pool = self.kernel, self.pool
        out = []
        for t in pool.var_thresholds(var):
            if t >= d:
                break
            aid = pool.ids[(var, t)]
            v = kernel.value(aid)
            out.append((aid, True if v == VTRUE else False if v == VFALSE else None))
        return out

    # -- propagation ----------------------------------------------------------

    def _csp_propagate(self):
        """Algorithm: order consistency first, then reified linear constraints."""
        dirty_vars = sorted(self.order_dirty)
        self.order_dirty.clear()
        out = order_propagate(dirty_vars, self)
        if out:
            return out
        n = len(self.entries)
        if n == 0:
            return []
        kernel = self.kernel
        for k in range(n):
            idx = (self.rr + k) % n
            e = self.entries[idx]
            if not e.dirty:
                continue
            e.dirty = False
            out = self._propagate_entry(e)
            if out:
                self.rr = (idx + 1) % n
                return out
        return []

    def _propagate_entry(self, e):
        kernel = self.kernel
        if e.seed is None:
            return propagate_bounds(self, None, e.terms_t, e.bound_t, self.ps)
        v = kernel.value(e.seed)
        if v == VTRUE:
            if e.mode in ("full", "T"):
                return propagate_bounds(
                    self, e.seed * 2, e.terms_t, e.bound_t, self.ps
                )
            return []
        if v == VFALSE:
            if e.mode in ("full", "F"):
                return propagate_bounds(
                    self, e.seed * 2 + 1, e.terms_f, e.bound_f, self.ps
                )
            return []
        out = []
        if e.mode in ("full", "T"):
            out += propagate_reification(
                self, e.seed * 2, e.terms_t, e.bound_t, self.ps
            )
        if e.mode in ("full", "F"):
            out += propagate_reification(
                self, e.seed * 2 + 1, e.terms_f, e.bound_f, self.ps
            )
        return out

    def _integrate_dynamic(self, nogoods):
        conflict = -1
        kernel = self.kernel
        for lits in nogoods:
            self.stats.dynamic_nogoods += 1
            if self.learn_nogoods:
                ng, status = kernel.add_nogood(list(lits), learned=True)
                if ng >= 0:
                    self.learned.append(ng)
                    self.ng_act[ng] = self.act_inc
                if status == STATUS_CONFLICT and conflict == -1:
                    conflict = ng
            else:
                sid = len(self.side)
                self.side.append(list(lits))
                rid = -(sid + 10)
                holding = sum(1 for l in lits if kernel.holds(l))
                if holding == len(lits):
                    if conflict == -1:
                        conflict = rid
                elif holding == len(lits) - 1:
                    rest = [l for l in lits if not kernel.holds(l)][0]
                    if kernel.free(rest >> 1):
                        kernel.enqueue(rest ^ 1, rid)
        return conflict

    def propagate_fixpoint(self):
        """Unit propagation interleaved with unfounded-set and CSP propagation."""
        kernel = self.kernel
        while True:
            conflict = kernel.propagate()
            if conflict != -1:
                self._sync_trail()
                return conflict
            self._sync_trail()
            if not self.tight:
                ngs = self.ufs.check(self._ufs_value)
                if ngs:
                    conflict = self._integrate_dynamic(ngs)
                    if conflict != -1:
                        return conflict
                    continue
            ngs = self._csp_propagate()
            if ngs:
                conflict = self._integrate_dynamic(ngs)
                if conflict != -1:
                    return conflict
                continue
            return -1

    def _ufs_value(self, atom):
        v = self.kernel.value(atom)
        return True if v == VTRUE else False if v == VFALSE else None

    # -- conflict analysis ------------------------------------------------------

    def _lits_of(self, rid):
        if rid >= 0:
            return self.kernel.nogood_lits(rid)
        return self.side[-rid - 10]

    def _use_reason(self, rid):
        """Bump and, for side-store reasons, promote into the learned store."""
        if rid >= 0:
            self.ng_act[rid] = self.ng_act.get(rid, 0.0) + self.act_inc
            return self.kernel.nogood_lits(rid)
        sid = -rid - 10
        lits = self.side[sid]
        if sid not in self.side_promoted:
            ng, _ = self.kernel.add_nogood(list(lits), learned=True)
            if ng >= 0:
                self.side_promoted[sid] = ng
                self.learned.append(ng)
                self.ng_act[ng] = self.act_inc
        return lits

    def _bump_atom(self, atom):
        self.act[atom] += self.act_inc
        if self.act[atom] > 1e100:
            for i in range(len(self.act)):
                self.act[i] *= 1e-100
            self.act_inc *= 1e-100
        heapq.heappush(self.heap, (-self.act[atom], atom))

    def analyze(self, conflict):
        """First-UIP resolution; returns (learned lits, backjump level)."""
        kernel = self.kernel
        cur = kernel.level()
        lits = self._use_reason(conflict)
        seen = set()
        counter = 0
        out = []
        ti = kernel.trail_size() - 1
        while True:
            for l in lits:
                a = l >> 1
                lvl = kernel.atom_level(a)
                if a in seen or lvl == 0:
                    continue
                seen.add(a)
                self._bump_atom(a)
                if lvl == cur:
                    counter += 1
                else:
                    out.append(l)
            while kernel.trail_get(ti) >> 1 not in seen:
                ti -= 1
            lit_t = kernel.trail_get(ti)
            ti -= 1
            counter -= 1
            if counter == 0:
                out.append(lit_t)
                break
            reason = kernel.reason(lit_t >> 1)
            lits = [l for l in self._use_reason(reason) if (l >> 1) != (lit_t >> 1)]
        bj = 0
        for l in out[:-1]:
            bj = max(bj, kernel.atom_level(l >> 1))
        self.act_inc /= VAR_DECAY
        return out, bj

    def _handle_conflict(self, conflict):
        """Returns True to continue searching, False when the call is UNSAT."""
        kernel = self.kernel
        self.stats.conflicts += 1
        if self.max_conflicts is not None and self.stats.conflicts > self.max_conflicts:
            raise SearchLimit()
        lits = self._lits_of(conflict)
        clevel = max((kernel.atom_level(l >> 1) for l in lits), default=0)
        if clevel <= self.root_level:
            if self.root_level == 0:
                self.permanently_unsat = True
            return False
        if clevel < kernel.level():
            self.backjump(clevel)
        learned, bj = self.analyze(conflict)
        bj = max(bj, self.root_level)
        self.backjump(bj)
        ng, status = kernel.add_nogood(learned, learned=True)
        if ng >= 0 and len(learned) > 1:
            self.learned.append(ng)
            self.ng_act[ng] = self.act_inc
        if status == STATUS_CONFLICT:
            # asserting at the backjump level failed: conflict below root
            return self._handle_conflict(ng) if kernel.level() > self.root_level else False
        return True

    # -- search -------------------------------------------------------------

    def _decide(self):
        kernel = self.kernel
        while self.heap:
            negact, atom = heapq.heappop(self.heap)
            if kernel.value(atom) == UNASSIGNED and -negact == self.act[atom]:
                phase = kernel.phase(atom)
                lit = atom * 2 if phase == VTRUE else atom * 2 + 1
                kernel.decide(lit)
                self.stats.choices += 1
                return True
        # heap exhausted: fall back to a scan (stale entries were dropped)
        for atom in range(1, len(self.space.syms)):
            if kernel.value(atom) == UNASSIGNED:
                phase = kernel.phase(atom)
                kernel.decide(atom * 2 if phase == VTRUE else atom * 2 + 1)
                self.stats.choices += 1
                return True
        return False

    def split_largest_domain(self, live_vars):
        """Create the median order atom for the largest unresolved variable."""
        best = None
        for v in live_vars:
            dom = self.domains[v]
            lo, hi = self.vb_lb[v], self.vb_ub[v]
            if lo >= hi:
                continue
            count = dom.rank(hi + 1) - dom.rank(lo)
            if count >= 2 and (best is None or count > best[0]):
                best = (count, v, lo)
        if best is None:
            return None
        count, var, lo = best
        dom = self.domains[var]
        m = dom.select(dom.rank(lo) + (count - 1) // 2)
        self.stats.splits += 1
        return self.pool.ensure(var, m)

    def start_call(self, assumptions):
        """Reset the assignment, replay permanent units, push assumptions.

        Returns -1 on success or a conflict id; assumptions are int
        literals asserted as pseudo-decisions below the search.
        """
        kernel = self.kernel
        self.backjump(0)
        conflict = kernel.reset()
        self._reset_bounds()
        self.heap = [(-self.act[a], a) for a in range(1, len(self.space.syms))]
        heapq.heapify(self.heap)
        self.volatile = []
        self.root_level = 0
        if self.permanently_unsat or conflict != -1:
            self.permanently_unsat = True
            return -2
        conflict = self.propagate_fixpoint()
        if conflict != -1:
            self.permanently_unsat = True
            return conflict
        for lit in assumptions:
            if kernel.holds(lit):
                continue
            if kernel.anti(lit):
                return -3
            kernel.decide(lit)
            conflict = self.propagate_fixpoint()
            if conflict != -1:
                return conflict
        self.root_level = kernel.level()
        return -1

    def end_call(self):
        for ng in self.volatile:
            self.kernel.detach(ng)
        self.volatile = []

    def search(self, live_vars, on_model, max_models=1):
        """Run CDCL until enough models were found or the space is exhausted.

        Returns ('SAT'|'UNSAT', exhausted).  Models are enumerated by
        blocking their decision sets.
        """
        kernel = self.kernel
        found = 0
        luby_idx = 1
        conflicts_at_restart = self.stats.conflicts
        while True:
            conflict = self.propagate_fixpoint()
            if conflict != -1:
                if not self._handle_conflict(conflict):
                    return ("SAT" if found else "UNSAT", True)
                continue
            if kernel.num_assigned() == self.space.count:
                unresolved = self.split_largest_domain(live_vars)
                if unresolved is None:
                    found += 1
                    self.stats.models += 1
                    if on_model is not None:
                        on_model(self)
                    if max_models and found >= max_models:
                        return ("SAT", False)
                    decisions = [
                        kernel.trail_get(kernel.level_start(l))
                        for l in range(self.root_level, kernel.level())
                    ]
                    if not decisions:
                        return ("SAT", True)
                    self.backjump(self.root_level)
                    # pad with the never-holding constant literal so the
                    # blocker is watched (and detachable), never a unit
                    decisions.append(1)
                    ng, status = kernel.add_nogood(decisions, learned=False)
                    if ng >= 0:
                        self.volatile.append(ng)
                    if status == STATUS_CONFLICT:
                        return ("SAT", True)
                    continue
                # a fresh split atom was registered; decide on it next
                continue
            # deletion and restarts
            if len(self.learned) > max(4 * self.stats.static_nogoods, 2000):
                self._reduce_learned()
            if (
                self.stats.conflicts - conflicts_at_restart
                >= RESTART_UNIT * _luby(luby_idx)
            ):
                luby_idx += 1
                conflicts_at_restart = self.stats.conflicts
                self.stats.restarts += 1
                self.backjump(self.root_level)
                continue
            if not self._decide():
                # all atoms assigned is handled above; defensive
                return ("SAT" if found else "UNSAT", True)

    def _reduce_learned(self):
        kernel = self.kernel
        live = [ng for ng in self.learned if kernel.nogood_lits(ng) is not None]
        live.sort(key=lambda ng: (self.ng_act.get(ng, 0.0), -ng))
        cut = len(live) // 2
        kept = []
        for i, ng in enumerate(live):
            if i < cut and not kernel.is_locked(ng) and len(kernel.nogood_lits(ng)) > 1:
                kernel.detach(ng)
                self.ng_act.pop(ng, None)
            else:
                kept.append(ng)
        self.learned = kept

    # -- model extraction -----------------------------------------------------

    def var_value(self, var):
        assert self.vb_lb[var] == self.vb_ub[var]
        return self.vb_lb[var]


def is_marker(lit):
    return lit == TAUT_TRUE or lit == TAUT_FALSE


def _luby(i):
    """Luby restart sequence 1,1,2,1,1,2,4,... (1-based index)."""
    k = 1
    while (1 << (k + 1)) - 1 <= i:
        k += 1
    while i != (1 << k) - 1:
        i -= (1 << k) - 1
        k = 1
        while (1 << (k + 1)) - 1 <= i:
            k += 1
    return 1 << (k - 1)
