"""Eager order-encoding of linear constraints and order-atom management.

translate_constraint unfolds one half-reified linear constraint into
order-encoding nogoods by recursive descent over the sorted terms: at
each level it walks the image of the leading view starting from the
smallest value that can still violate the constraint, recursing while
the remaining terms can compensate and emitting a stop nogood once they
cannot.  Tautological literals are simplified away on the fly.
"""

from __future__ import annotations

from typing import NamedTuple

from . import model
from .model import NEG_INF, POS_INF, OrdAtom, TAUT_FALSE, TAUT_TRUE, is_taut

ESTIMATE_CAP = 2**62


class TranslateConfig(NamedTuple):
    translate_threshold: int = 10000  # -1: all, 0: nothing
    min_lits_per_var: int = 1000  # -1: all
    explicit_binary_order: bool = False
    redundant_nogood_check: bool = True


class OrderAtomPool:
    """Per-variable ordered index of created order atoms.

    Thresholds are kept strictly increasing per variable; every threshold
    is a domain value below the domain maximum.  Atom ids are assigned by
    the allocator callback passed at construction.
    """

    def __init__(self, alloc):
        self._alloc = alloc
        self.thresholds = {}  # var -> sorted list of d
        self.ids = {}  # (var, d) -> atom id
        self.created = 0

    def lookup(self, var, d):
        return self.ids.get((var, d))

    def ensure(self, var, d):
        aid = self.ids.get((var, d))
        if aid is None:
            aid = self._alloc(OrdAtom(var, d))
            self.ids[(var, d)] = aid
            lst = self.thresholds.setdefault(var, [])
            _insort(lst, d)
            self.created += 1
        return aid

    def var_thresholds(self, var):
        return self.thresholds.get(var, ())

    def vars(self):
        return self.thresholds.keys()


def _insort(lst, d):
    lo, hi = 0, len(lst)
    while lo < hi:
        mid = (lo + hi) // 2
        if lst[mid] < d:
            lo = mid + 1
        else:
            hi = mid
    lst.insert(lo, d)


def estimate_nogoods(terms, domains):
    """Product of the image sizes of all terms but the last, saturating."""
    est = 1
    for t in terms[:-1]:
        est *= domains[t.var].size
        if est >= ESTIMATE_CAP:
            return ESTIMATE_CAP
    return est


class RedundancyFilter:
    """Drops translation nogoods dominated by their emission neighbour.

    A nogood is stronger than another one when, per view, its 'view > d'
    thresholds are pairwise at most the other's.  Emission order is the
    depth-first order of the translation, so comparing against the
    previously kept nogood is meaningful.
    """

    def __init__(self, enabled=True):
        self.enabled = enabled
        self.kept = []  # (thresholds dict, nogood lits)
        self.emitted = 0
        self.removed = 0

    def offer(self, thresholds, lits):
        self.emitted += 1
        if self.enabled and self.kept:
            prev_t, _ = self.kept[-1]
            if _stronger(prev_t, thresholds):
                self.removed += 1
                return
            if _stronger(thresholds, prev_t):
                self.removed += 1
                self.kept.pop()
        self.kept.append((thresholds, lits))

    def result(self):
        return [lits for _, lits in self.kept]


def _stronger(ta, tb):
    """True when every 'view > d' in ta has a weaker counterpart in tb."""
    for key, d in ta.items():
        if key not in tb or d > tb[key]:
            return False
    return True


def translate_constraint(
    seed, terms, bound, domains, pool, redundant_check=True, on_atom=None
):
    """Nogoods for `seed => sum(terms) <= bound` (seed: iterable of Lit).

    Returns (nogoods, emitted, removed) where each nogood is a list of
    symbolic literals; every order atom appearing in a kept nogood is
    registered in the pool.
    """
    filt = RedundancyFilter(redundant_check)
    seed = list(seed)
    n = len(terms)
    lbs = [model.view_bounds(t, domains)[0] for t in terms]
    ubs = [model.view_bounds(t, domains)[1] for t in terms]
    lb_suffix = [0] * (n + 1)
    ub_suffix = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        lb_suffix[i] = lb_suffix[i + 1] + lbs[i]
        ub_suffix[i] = ub_suffix[i + 1] + ubs[i]

    def rec(prefix, thresholds, i, b):
        t = terms[i]
        d = model.view_step(b - ub_suffix[i + 1], t, domains, "next")
        while d is not POS_INF and d <= ubs[i]:
            lit = model.view_ge(t, d, domains)
            entry = None if lit == TAUT_TRUE else lit
            new_thresholds = thresholds
            if entry is not None:
                new_thresholds = dict(thresholds)
                new_thresholds[i] = d - 1  # tau[t >= d] is tau[t > d-1]
            new_prefix = prefix if entry is None else prefix + [entry]
            if d + lb_suffix[i + 1] <= b:
                rec(new_prefix, new_thresholds, i + 1, b - d)
            else:
                filt.offer(new_thresholds, seed + new_prefix)
                return
            d = model.view_step(d, t, domains, "next")

    if n == 0:
        if bound < 0:
            filt.offer({}, list(seed))
    else:
        rec([], {}, 0, bound)

    nogoods = []
    for lits in filt.result():
        ng = model.make_nogood(lits)
        if ng is None:
            continue
        for lit in ng:
            if isinstance(lit.atom, OrdAtom):
                aid = pool.ensure(lit.atom.var, lit.atom.d)
                if on_atom is not None:
                    on_atom(lit.atom, aid)
        nogoods.append(ng)
    return nogoods, filt.emitted, filt.removed


def seed_order_atoms(var, n, domains, pool):
    """Create up to n order atoms evenly spread over the domain by rank."""
    dom = domains[var]
    if n == 0 or dom.size <= 1:
        return []
    k = dom.size - 1 if n < 0 else min(n, dom.size - 1)
    step = dom.size // k
    start = step // 2
    created = []
    for i in range(k):
        d = dom.select(start + i * step)
        created.append(pool.ensure(var, d))
    return created


def emit_binary_order_nogoods(pool, domains, emitted_pairs):
    """Chained nogoods {T(v<=x_i), F(v<=x_{i+1})} for created atoms.

    `emitted_pairs` records pairs already generated so repeated calls
    (after more atoms were created) only add the missing links.
    """
    from .model import Lit, Nogood

    out = []
    for var in sorted(pool.vars()):
        ts = pool.var_thresholds(var)
        for lo, hi in zip(ts, ts[1:]):
            if (var, lo, hi) in emitted_pairs:
                continue
            emitted_pairs.add((var, lo, hi))
            out.append(
                Nogood(
                    [
                        Lit(True, OrdAtom(var, lo)),
                        Lit(False, OrdAtom(var, hi)),
                    ]
                )
            )
    return out
