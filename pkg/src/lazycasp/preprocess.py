"""CSP preprocessing: normalization, equality processing, distinct
lowering, splitting, domain propagation and objective flattening.

The passes work on lightweight work items; rule emission and atom
creation go through a builder facade provided by the session so that the
transformations stay testable in isolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from . import model
from .model import (
    ContractViolation,
    DomainSet,
    INT64_MAX,
    Substitution,
    View,
    check64,
    minkowski_sum,
)

MATERIALIZE_CAP = 10**6


@dataclass
class PreprocessConfig:
    equality_processing: bool = True
    distinct_to_card: bool = False
    distinct_pigeon: bool = True
    distinct_permutation: bool = False
    sort_coefficient: bool = False
    sort_descend_coefficient: bool = True
    sort_descend_domain: bool = False
    split_size: int = -1  # alpha; -1 disables splitting
    max_nogoods_size: int = 1024  # beta
    break_symmetries: bool = True
    domain_size: int = 10000  # domain propagation threshold; -1 unlimited, 0 off
    flatten_optimization: bool = True
    dont_care_propagation: bool = True


class ConsWork:
    """A linear constraint in flight: kind 'le', 'eq', 'neq' or 'trivial'."""

    __slots__ = ("name", "kind", "terms", "bound", "forced", "internal", "truth", "cid")

    def __init__(self, name, kind, terms, bound, forced=None, internal=False):
        self.name = name
        self.kind = kind
        self.terms = terms  # list of (coef, var)
        self.bound = bound
        self.forced = forced  # True / False / None (undecided)
        self.internal = internal
        self.truth = None  # for kind 'trivial'
        self.cid = None  # constraint atom id once assigned

    def __repr__(self):
        return "ConsWork(%s:%s %s <= %s)" % (self.name, self.kind, self.terms, self.bound)


def normalize_sum(raw_terms, rel, rhs, name=None, forced=None):
    """Merge like terms, fold constants, orient the relation.

    raw_terms: iterable of (coef, var or None for a constant).
    Returns a ConsWork of kind 'le', 'eq', 'neq' or 'trivial'.
    """
    merged = {}
    const = 0
    for coef, var in raw_terms:
        if var is None:
            const += coef
        elif coef != 0:
            merged[var] = merged.get(var, 0) + coef
    terms = [(c, v) for v, c in merged.items() if c != 0]
    bound = rhs - const
    if rel == "<":
        rel, bound = "<=", bound - 1
    elif rel == ">":
        rel, bound = ">=", bound + 1
    if rel == ">=":
        rel, terms, bound = "<=", [(-c, v) for c, v in terms], -bound
    if not terms:
        w = ConsWork(name, "trivial", [], 0, forced)
        w.truth = {"<=": 0 <= bound, "=": bound == 0, "!=": bound != 0}[rel]
        return w
    g = 0
    for c, _ in terms:
        g = math.gcd(g, abs(c))
    if g > 1:
        if rel == "<=":
            terms = [(c // g, v) for c, v in terms]
            bound = bound // g  # floor division tightens correctly
        elif bound % g == 0:
            terms = [(c // g, v) for c, v in terms]
            bound //= g
        elif rel == "=":
            w = ConsWork(name, "trivial", [], 0, forced)
            w.truth = False
            return w
        else:  # '!=' with indivisible bound always holds
            w = ConsWork(name, "trivial", [], 0, forced)
            w.truth = True
            return w
    kind = {"<=": "le", "=": "eq", "!=": "neq"}[rel]
    for c, _ in terms:
        check64(c, "coefficient")
    check64(bound, "bound")
    return ConsWork(name, kind, terms, bound, forced)


def sort_terms(terms, domains, cfg):
    """Stable sort of (coef, var) terms by domain size and |coefficient|.

    Default: smallest image first, ties broken by larger coefficient.
    sort_coefficient swaps the priority of the two keys; the descend
    flags invert the respective orders.
    """

    def key(term):
        coef, var = term
        ck = -abs(coef) if cfg.sort_descend_coefficient else abs(coef)
        dk = domains[var].size
        if cfg.sort_descend_domain:
            dk = -dk
        return (ck, dk) if cfg.sort_coefficient else (dk, ck)

    return sorted(terms, key=key)


# ---------------------------------------------------------------------------
# Equality processing
# ---------------------------------------------------------------------------

class EqualityResult(NamedTuple):
    eliminated: list  # (var, Substitution)
    consumed: list  # names of equality atoms that became facts
    unsat: bool
    warnings: list


def process_equalities(work, variables, protected_vars=()):
    """Eliminate variables through decided two-variable equalities.

    `work` is the mutable list of ConsWork items; eliminated equalities
    are removed in place and every other constraint mentioning the
    eliminated variable is rewritten.  Variables in `protected_vars`
    (objective/directive occurrences) are never eliminated.
    """
    eliminated = []
    consumed = []
    warnings = []
    protected = set(protected_vars)

    while True:
        pick = None
        for i, w in enumerate(work):
            if w.kind == "eq" and w.forced is True and len(w.terms) == 2:
                pick = i
                break
            if w.kind == "neq" and w.forced is False and len(w.terms) == 2:
                pick = i
                break
            if w.kind == "eq" and w.forced is True and len(w.terms) == 1:
                # single-variable equality: a*x = b pins the domain
                a, x = w.terms[0]
                if w.bound % a:
                    return EqualityResult(eliminated, consumed, True, warnings)
                val = w.bound // a
                newdom = variables.domain(x).intersect(DomainSet.interval(val, val))
                variables.set_domain(x, newdom)
                if not newdom:
                    return EqualityResult(eliminated, consumed, True, warnings)
                consumed.append(w.name)
                del work[i]
                pick = -1
                break
        if pick is None:
            return EqualityResult(eliminated, consumed, False, warnings)
        if pick == -1:
            continue
        w = work.pop(pick)
        (a1, x1), (a2, x2) = w.terms
        if x1 > x2:
            (a1, x1), (a2, x2) = (a2, x2), (a1, x1)
        # a1*x1 = b*x2 + c with x1 the kept (smaller) variable
        x, y = x1, x2
        a, b, c = a1, -a2, w.bound
        if y in protected:
            warnings.append("equality on protected variable %d kept" % y)
            w.kind = "eq" if w.kind == "eq" else w.kind
            work.append(_demote(w))
            continue
        dom_x = variables.domain(x)
        dom_y = variables.domain(y)
        if dom_x.size > MATERIALIZE_CAP:
            warnings.append("domain of kept variable too large; equality kept")
            work.append(_demote(w))
            continue
        if not _rewrite_fits(work, y, b):
            warnings.append("coefficient overflow; equality kept")
            work.append(_demote(w))
            continue
        vals = [
            d
            for d in dom_x.values()
            if (a * d - c) % b == 0 and (a * d - c) // b in dom_y
        ]
        newdom = DomainSet.from_values(vals)
        variables.set_domain(x, newdom)
        if not newdom:
            return EqualityResult(eliminated, consumed, True, warnings)
        s = 1 if b > 0 else -1
        for other in work:
            if other.kind == "trivial":
                continue
            qs = [q for q, v in other.terms if v == y]
            if not qs:
                continue
            scale = abs(b)
            terms = []
            for q, v in other.terms:
                if v == y:
                    continue
                terms.append((q * scale, v))
            bound = other.bound * scale
            for q in qs:
                terms.append((q * s * a, x))
                bound += q * s * c
            rel = {"le": "<=", "eq": "=", "neq": "!="}[other.kind]
            redone = normalize_sum(
                [(cf, v) for cf, v in terms], rel, bound, other.name, other.forced
            )
            other.kind = redone.kind
            other.terms = redone.terms
            other.bound = redone.bound
            other.truth = redone.truth
        sub = Substitution(a, x, -c, b)
        variables.eliminate(y, sub)
        eliminated.append((y, sub))
        if w.name is not None:
            consumed.append(w.name)


def _demote(w):
    """Mark an equality as not eligible for elimination, keeping its truth."""
    w.forced = "kept_true" if w.forced is True else "kept_false"
    return w


def _rewrite_fits(work, y, b):
    scale = abs(b)
    for other in work:
        if other.kind == "trivial" or not any(v == y for _, v in other.terms):
            continue
        for q, _ in other.terms:
            if abs(q * scale) > INT64_MAX:
                return False
        if abs(other.bound * scale) > INT64_MAX:
            return False
    return True


def apply_substitution_to_terms(terms, bound, variables):
    """Rewrite (coef, var) terms so no eliminated variable remains.

    Used for constraints arriving in later program parts; multiplies the
    constraint through by the substitution divisors.  The substitution
    record means var = (a * base + c) / div.
    """
    while True:
        target = None
        for _, var in terms:
            if var in variables.substitutions:
                target = var
                break
        if target is None:
            return terms, bound
        a, base, c, div = variables.substitutions[target]
        s = 1 if div > 0 else -1
        scale = abs(div)
        qs = [q for q, v in terms if v == target]
        terms = [(q * scale, v) for q, v in terms if v != target]
        bound *= scale
        for q in qs:
            terms.append((q * s * a, base))
            bound -= q * s * c


# ---------------------------------------------------------------------------
# Splitting and domain propagation
# ---------------------------------------------------------------------------

def propagate_domains(terms, domains, threshold):
    """Domain for a fresh variable defined as sum(terms).

    Exact value set when it stays within `threshold` values (-1:
    unlimited, 0: always the bound interval), else [sum lb, sum ub].
    """
    if threshold != 0:
        limit = threshold if threshold >= 0 else -1
        images = []
        ok = True
        for coef, var in terms:
            dom = domains[var]
            if abs(coef) > 1 and dom.size > MATERIALIZE_CAP:
                ok = False
                break
            try:
                images.append(dom.scale(coef))
            except ContractViolation:
                ok = False
                break
        if ok:
            s = minkowski_sum(images, limit)
            if s is not None:
                return s
    lo = hi = 0
    for coef, var in terms:
        vlo, vhi = model.view_bounds(View(coef, var, 0), domains)
        lo += vlo
        hi += vhi
    return DomainSet.interval(lo, hi)


def split_constraint(terms, cfg, domains, fresh_var, emit_definition):
    """Split sorted (coef, var) terms into alpha-sized chunks.

    fresh_var(domain) -> new variable id; emit_definition(chunk_terms,
    chunk_var) records the structural constraint sum(chunk) = chunk_var.
    Returns the replacement term list (length <= alpha).
    """
    alpha = cfg.split_size

    def rec(ts):
        if len(ts) <= alpha:
            return ts
        n = len(ts)
        base, rem = divmod(n, alpha)
        groups = []
        i = 0
        for g in range(alpha):
            size = base + (1 if g < rem else 0)
            groups.append(ts[i : i + size])
            i += size
        out = []
        for g in groups:
            if len(g) <= 1:
                out.extend(g)
                continue
            inner = rec(g) if len(g) > alpha else g
            dom = propagate_domains(inner, domains, cfg.domain_size)
            v = fresh_var(dom)
            emit_definition(inner, v)
            out.append((1, v))
        return out

    return rec(list(terms))


def should_split(terms, cfg, domains):
    from .translate import estimate_nogoods

    if cfg.split_size < 2 or len(terms) <= cfg.split_size:
        return False
    views = [View(c, v, 0) for c, v in terms]
    return estimate_nogoods(views, domains) > cfg.max_nogoods_size


# ---------------------------------------------------------------------------
# Objective flattening
# ---------------------------------------------------------------------------

def flatten_objective(obj_terms, defs):
    """Replace defined objective variables by their defining sums.

    obj_terms: list of (coef, var, const, level); defs: var -> (sign,
    bound, [(coef, var)]) taken from decided-true equalities where the
    variable occurs with coefficient +-1.  Returns the flattened list.
    """
    out = []
    for coef, var, const, level in obj_terms:
        seen = set()
        queue = [(coef, var)]
        acc = []
        total_const = const
        while queue:
            w, v = queue.pop()
            if v in defs and v not in seen:
                seen.add(v)
                sign, bound, rest = defs[v]
                # v = sign*(bound - sum(rest))
                total_const += w * sign * bound
                for (rc, rv) in rest:
                    queue.append((-w * sign * rc, rv))
            else:
                acc.append((w, v))
        out.append((acc, total_const, level))
    return out


def extract_definitions(work):
    """var -> (sign, bound, rest terms) from decided-true equalities."""
    defs = {}
    for w in work:
        if w.kind != "eq" or w.forced not in (True, "kept_true"):
            continue
        for coef, var in w.terms:
            if abs(coef) == 1 and var not in defs:
                rest = [(c, v) for c, v in w.terms if v != var]
                defs[var] = (coef, w.bound, rest)
                break
    return defs
