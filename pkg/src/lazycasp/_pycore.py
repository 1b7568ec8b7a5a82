"""Pure-Python propagation kernel: trail, watched pairs, unit propagation.

This is the hot loop of the solver.  A compiled twin with the same
interface lives in _ckern.pyx; lazycasp.core picks whichever is
available.

Atoms are integers 1..n (0 is a reserved constant-true atom).  A literal
encodes an atom together with the polarity it asserts:

    lit = atom * 2        "atom is true"
    lit = atom * 2 + 1    "atom is false"

A nogood is a list of literals that must not all hold.  Every nogood of
length >= 2 watches two of its literals (kept at positions 0 and 1);
shorter nogoods are recorded as permanent units.
"""

UNASSIGNED = 0
VTRUE = 1
VFALSE = 2

STATUS_OK = 0
STATUS_UNIT = 1
STATUS_CONFLICT = 2
STATUS_DISCARDED = 3


class Kernel:
    def __init__(self):
        self.values = [VTRUE]  # atom 0 is constant true
        self.levels = [0]
        self.reasons = [-1]
        self.phases = [VTRUE]
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.nogoods = []  # list of lists (None when detached)
        self.learned_flag = []
        self.lock_count = []
        self.watches = [[], [], [], []]  # per literal
        self.units = []  # permanent unit literals to assert at level 0
        self.unsat = False  # an empty nogood was added

    # -- atoms ------------------------------------------------------------

    def num_atoms(self):
        return len(self.values) - 1

    def add_atoms(self, count):
        first = len(self.values)
        for _ in range(count):
            self.values.append(UNASSIGNED)
            self.levels.append(0)
            self.reasons.append(-1)
            self.phases.append(VFALSE)
            self.watches.append([])
            self.watches.append([])
        return first

    def value(self, atom):
        return self.values[atom]

    def holds(self, lit):
        v = self.values[lit >> 1]
        return v != UNASSIGNED and (v == VTRUE) == (lit & 1 == 0)

    def anti(self, lit):
        v = self.values[lit >> 1]
        return v != UNASSIGNED and (v == VTRUE) == (lit & 1 == 1)

    def free(self, atom):
        return self.values[atom] == UNASSIGNED

    def atom_level(self, atom):
        return self.levels[atom]

    def reason(self, atom):
        return self.reasons[atom]

    def set_phase(self, atom, value):
        self.phases[atom] = value

    def phase(self, atom):
        return self.phases[atom]

    # -- trail ------------------------------------------------------------

    def level(self):
        return len(self.trail_lim)

    def trail_size(self):
        return len(self.trail)

    def trail_get(self, i):
        return self.trail[i]

    def level_start(self, level):
        return self.trail_lim[level]

    def num_assigned(self):
        return len(self.trail)

    def _assign(self, lit, reason):
        atom = lit >> 1
        self.values[atom] = VTRUE if lit & 1 == 0 else VFALSE
        self.levels[atom] = len(self.trail_lim)
        self.reasons[atom] = reason
        if reason >= 0:
            self.lock_count[reason] += 1
        self.trail.append(lit)

    def decide(self, lit):
        assert self.values[lit >> 1] == UNASSIGNED
        self.trail_lim.append(len(self.trail))
        self._assign(lit, -1)

    def enqueue(self, lit, reason):
        """Make `lit` hold; returns False if its complement already holds."""
        v = self.values[lit >> 1]
        if v != UNASSIGNED:
            return (v == VTRUE) == (lit & 1 == 0)
        self._assign(lit, reason)
        return True

    def backjump(self, level):
        if level >= len(self.trail_lim):
            return
        target = self.trail_lim[level]
        while len(self.trail) > target:
            lit = self.trail.pop()
            atom = lit >> 1
            self.phases[atom] = self.values[atom]
            self.values[atom] = UNASSIGNED
            r = self.reasons[atom]
            if r >= 0:
                self.lock_count[r] -= 1
            self.reasons[atom] = -1
        del self.trail_lim[level:]
        self.qhead = min(self.qhead, target)

    def reset(self):
        """Unassign everything (also level 0) and re-assert permanent units."""
        while self.trail:
            lit = self.trail.pop()
            atom = lit >> 1
            self.phases[atom] = self.values[atom]
            self.values[atom] = UNASSIGNED
            r = self.reasons[atom]
            if r >= 0:
                self.lock_count[r] -= 1
            self.reasons[atom] = -1
        del self.trail_lim[:]
        self.qhead = 0
        conflict = -1
        for lit, ng in self.units:
            if not self.enqueue(lit, ng):
                conflict = ng
        return conflict

    # -- nogoods ----------------------------------------------------------

    def nogood_lits(self, ng):
        return self.nogoods[ng]

    def is_learned(self, ng):
        return self.learned_flag[ng]

    def is_locked(self, ng):
        return self.lock_count[ng] > 0

    def live_nogoods(self):
        return sum(1 for lits in self.nogoods if lits is not None)

    def add_nogood(self, lits, learned=False):
        """Attach a nogood; returns (id, status).

        status: STATUS_OK, STATUS_UNIT (the unit-resulting literal was
        enqueued), STATUS_CONFLICT (violated under the current
        assignment), or STATUS_DISCARDED (tautological).
        """
        seen = set()
        out = []
        for lit in lits:
            if lit ^ 1 in seen:
                return -1, STATUS_DISCARDED
            if lit not in seen:
                seen.add(lit)
                out.append(lit)
        lits = out
        if not lits:
            self.unsat = True
            return -2, STATUS_CONFLICT

        ng = len(self.nogoods)
        if len(lits) == 1:
            # permanent unit: the complement must always hold
            self.nogoods.append(lits)
            self.learned_flag.append(learned)
            self.lock_count.append(0)
            self.units.append((lits[0] ^ 1, ng))
            if self.holds(lits[0]):
                return ng, STATUS_CONFLICT
            if self.free(lits[0] >> 1):
                self.enqueue(lits[0] ^ 1, ng)
                return ng, STATUS_UNIT
            return ng, STATUS_OK

        # order watches: prefer non-holding literals, then highest level
        def watch_key(lit):
            atom = lit >> 1
            if self.values[atom] == UNASSIGNED or self.anti(lit):
                return (0, 0)
            return (1, -self.levels[atom])

        lits.sort(key=watch_key)
        self.nogoods.append(lits)
        self.learned_flag.append(learned)
        self.lock_count.append(0)
        self.watches[lits[0]].append(ng)
        self.watches[lits[1]].append(ng)

        holding = [l for l in lits if self.holds(l)]
        if len(holding) == len(lits):
            return ng, STATUS_CONFLICT
        if len(holding) == len(lits) - 1:
            rest = [l for l in lits if not self.holds(l)][0]
            if self.free(rest >> 1):
                self.enqueue(rest ^ 1, ng)
                return ng, STATUS_UNIT
        return ng, STATUS_OK

    def detach(self, ng):
        lits = self.nogoods[ng]
        if lits is None:
            return
        for w in (lits[0], lits[1]):
            try:
                self.watches[w].remove(ng)
            except ValueError:
                pass
        self.nogoods[ng] = None

    # -- unit propagation ---------------------------------------------------

    def propagate(self):
        """Run unit propagation to fixpoint; return conflict id or -1."""
        if self.unsat:
            return -2
        trail = self.trail
        values = self.values
        nogoods = self.nogoods
        watches = self.watches
        while self.qhead < len(trail):
            lit = trail[self.qhead]
            self.qhead += 1
            wl = watches[lit]
            i = 0
            j = 0
            n = len(wl)
            while i < n:
                ng = wl[i]
                i += 1
                lits = nogoods[ng]
                if lits is None:
                    continue
                # normalize: the triggered literal sits at position 1
                if lits[0] == lit:
                    lits[0] = lits[1]
                    lits[1] = lit
                other = lits[0]
                v = values[other >> 1]
                other_holds = v != UNASSIGNED and (v == VTRUE) == (other & 1 == 0)
                other_anti = v != UNASSIGNED and not other_holds
                if other_anti:
                    wl[j] = ng
                    j += 1
                    continue
                # search a replacement watch that does not hold
                moved = False
                for k in range(2, len(lits)):
                    lk = lits[k]
                    vk = values[lk >> 1]
                    if vk == UNASSIGNED or (vk == VTRUE) != (lk & 1 == 0):
                        lits[1] = lk
                        lits[k] = lit
                        watches[lk].append(ng)
                        moved = True
                        break
                if moved:
                    continue
                wl[j] = ng
                j += 1
                if other_holds:
                    # every literal holds: violated
                    while i < n:
                        wl[j] = wl[i]
                        j += 1
                        i += 1
                    del wl[j:]
                    return ng
                self._assign(other ^ 1, ng)
            del wl[j:]
        return -1

    def check_watch_invariants(self):
        """Debugging aid: every live nogood is inert, unit-handled or violated."""
        for ng, lits in enumerate(self.nogoods):
            if lits is None or len(lits) < 2:
                continue
            nonholding = [l for l in lits if not self.holds(l)]
            if not nonholding:
                return False  # undetected violation
            if len(nonholding) == 1 and self.free(nonholding[0] >> 1):
                return False  # undetected unit
        return True
