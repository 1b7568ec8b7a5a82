"""Core value types: integer domains, views, signed literals and nogoods.

Everything in here is an immutable value.  Domains are kept as sorted lists
of closed integer ranges so that very large (and non-contiguous) domains can
be handled without materializing their elements; all queries run on the
range representation.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple, Optional


INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1


class _Infinity:
    """Sentinel for the +/- infinity results of prev/next at the boundary.

    Deliberately not an int so it can never leak into domains or bounds.
    """

    __slots__ = ("_sign",)

    def __init__(self, sign):
        self._sign = sign

    def __repr__(self):
        return "+inf" if self._sign > 0 else "-inf"

    def __lt__(self, other):
        if isinstance(other, _Infinity):
            return self._sign < other._sign
        return self._sign < 0

    def __gt__(self, other):
        if isinstance(other, _Infinity):
            return self._sign > other._sign
        return self._sign > 0

    def __le__(self, other):
        return not self.__gt__(other)

    def __ge__(self, other):
        return not self.__lt__(other)


POS_INF = _Infinity(1)
NEG_INF = _Infinity(-1)


class EmptyDomainError(Exception):
    """Raised when bounds of an empty domain are requested."""


class ContractViolation(Exception):
    """Raised when an operation is used outside its contract."""


class OverflowDiagnostic(Exception):
    """Raised at load time when a value leaves the 64-bit range."""


def check64(value, what="value"):
    if not (INT64_MIN <= value <= INT64_MAX):
        raise OverflowDiagnostic("%s %d exceeds 64-bit signed range" % (what, value))
    return value


class DomainSet:
    """A set of integers stored as sorted, disjoint, non-adjacent ranges.

    `ranges` is a tuple of (lo, hi) pairs with lo <= hi, sorted ascending,
    and hi_i + 1 < lo_{i+1} (adjacent ranges are merged on construction).
    The empty set is representable and signals an unsatisfiable variable.
    """

    __slots__ = ("ranges", "_cum")

    def __init__(self, ranges=()):
        norm = []
        for lo, hi in sorted(ranges):
            if lo > hi:
                raise ValueError("bad range [%d,%d]" % (lo, hi))
            if norm and lo <= norm[-1][1] + 1:
                norm[-1] = (norm[-1][0], max(norm[-1][1], hi))
            else:
                norm.append((lo, hi))
        self.ranges = tuple(norm)
        cum = []
        total = 0
        for lo, hi in self.ranges:
            total += hi - lo + 1
            cum.append(total)
        self._cum = tuple(cum)

    @classmethod
    def interval(cls, lo, hi):
        if lo > hi:
            return cls(())
        return cls(((lo, hi),))

    @classmethod
    def from_values(cls, values):
        vals = sorted(set(values))
        ranges = []
        for v in vals:
            if ranges and v == ranges[-1][1] + 1:
                ranges[-1] = (ranges[-1][0], v)
            else:
                ranges.append((v, v))
        return cls(ranges)

    def __bool__(self):
        return bool(self.ranges)

    def __eq__(self, other):
        return isinstance(other, DomainSet) and self.ranges == other.ranges

    def __hash__(self):
        return hash(self.ranges)

    def __repr__(self):
        return "DomainSet(%s)" % (
            ",".join(
                "%d" % lo if lo == hi else "%d..%d" % (lo, hi)
                for lo, hi in self.ranges
            )
        )

    @property
    def size(self):
        return self._cum[-1] if self._cum else 0

    @property
    def min(self):
        if not self.ranges:
            raise EmptyDomainError("empty domain has no minimum")
        return self.ranges[0][0]

    @property
    def max(self):
        if not self.ranges:
            raise EmptyDomainError("empty domain has no maximum")
        return self.ranges[-1][1]

    def _locate(self, d):
        """Index of the first range with hi >= d (binary search)."""
        lo, hi = 0, len(self.ranges)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.ranges[mid][1] < d:
                lo = mid + 1
            else:
                hi = mid
        return lo

    def __contains__(self, d):
        i = self._locate(d)
        return i < len(self.ranges) and self.ranges[i][0] <= d

    def rank(self, d):
        """Number of elements strictly below d."""
        i = self._locate(d)
        if i == len(self.ranges):
            return self.size
        before = self._cum[i - 1] if i else 0
        lo, _ = self.ranges[i]
        if d > lo:
            before += d - lo
        return before

    def select(self, k):
        """The k-th smallest element (0-based)."""
        if not (0 <= k < self.size):
            raise IndexError(k)
        lo_i, hi_i = 0, len(self.ranges) - 1
        while lo_i < hi_i:
            mid = (lo_i + hi_i) // 2
            if self._cum[mid] <= k:
                lo_i = mid + 1
            else:
                hi_i = mid
        before = self._cum[lo_i - 1] if lo_i else 0
        return self.ranges[lo_i][0] + (k - before)

    def next_value(self, d):
        """Smallest element strictly above d, or None."""
        i = self._locate(d + 1)
        if i == len(self.ranges):
            return None
        lo, _ = self.ranges[i]
        return max(lo, d + 1)

    def prev_value(self, d):
        """Largest element strictly below d, or None."""
        r = self.rank(d)
        if r == 0:
            return None
        return self.select(r - 1)

    def intersect(self, other):
        out = []
        a, b = self.ranges, other.ranges
        i = j = 0
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return DomainSet(out)

    def union(self, other):
        return DomainSet(self.ranges + other.ranges)

    def shift(self, b):
        return DomainSet(tuple((lo + b, hi + b) for lo, hi in self.ranges))

    def scale(self, a):
        """Pointwise multiplication by a non-zero integer."""
        if a == 0:
            raise ContractViolation("scale factor must be non-zero")
        if a == 1:
            return self
        if a == -1:
            return DomainSet(tuple((-hi, -lo) for lo, hi in self.ranges))
        # |a| > 1 tears every range into singletons
        if self.size > 10**6:
            raise ContractViolation("refusing to materialize a huge scaled domain")
        out = []
        for lo, hi in self.ranges:
            for v in range(lo, hi + 1):
                out.append((a * v, a * v))
        return DomainSet(out)

    def values(self):
        for lo, hi in self.ranges:
            for v in range(lo, hi + 1):
                yield v

    def remove_above(self, d):
        out = []
        for lo, hi in self.ranges:
            if lo > d:
                break
            out.append((lo, min(hi, d)))
        return DomainSet(out)

    def remove_below(self, d):
        out = []
        for lo, hi in self.ranges:
            if hi < d:
                continue
            out.append((max(lo, d), hi))
        return DomainSet(out)


class View(NamedTuple):
    """Integer-affine expression a*var + b over one variable; a != 0."""

    a: int
    var: int
    b: int

    def apply(self, d):
        return self.a * d + self.b

    def negate(self):
        return View(-self.a, self.var, -self.b)

    def scaled(self, k):
        if k == 0:
            raise ContractViolation("view scale must be non-zero")
        return View(self.a * k, self.var, self.b * k)


def make_view(a, var, b=0):
    if a == 0:
        raise ContractViolation("view coefficient must be non-zero")
    return View(a, var, b)


class Substitution(NamedTuple):
    """Record for a variable eliminated by equality processing.

    The eliminated variable's value is (a * var + c) / div.
    """

    a: int
    var: int
    c: int
    div: int


class VariableTable:
    """Mapping from variable id to name and domain, plus elimination records."""

    def __init__(self):
        self.names = []
        self.domains = []
        self._by_name = {}
        self.substitutions = {}

    def add(self, name, domain):
        if name in self._by_name:
            raise ContractViolation("variable %r declared twice" % name)
        vid = len(self.names)
        self.names.append(name)
        self.domains.append(domain)
        self._by_name[name] = vid
        return vid

    def lookup(self, name):
        return self._by_name.get(name)

    def __len__(self):
        return len(self.names)

    def domain(self, var):
        return self.domains[var]

    def set_domain(self, var, domain):
        self.domains[var] = domain

    def eliminate(self, var, subst):
        self.substitutions[var] = subst

    def is_eliminated(self, var):
        return var in self.substitutions

    def live_variables(self):
        return [v for v in range(len(self.names)) if v not in self.substitutions]

    def reconstruct(self, var, assignment):
        """Value of `var` given values for live variables in `assignment`."""
        if var not in self.substitutions:
            return assignment[var]
        a, base, c, div = self.substitutions[var]
        val = a * self.reconstruct(base, assignment) + c
        if val % div:
            raise ContractViolation("non-integral reconstruction for variable")
        return val // div


# ---------------------------------------------------------------------------
# Atoms and literals
# ---------------------------------------------------------------------------

class RegAtom(NamedTuple):
    name: str


class ConAtom(NamedTuple):
    cid: int


class OrdAtom(NamedTuple):
    var: int
    d: int


class BodyAtom(NamedTuple):
    bid: int


class _Taut(NamedTuple):
    tag: str


_TAUT = _Taut("taut")


class Lit(NamedTuple):
    """Signed literal: sign True stands for 'atom is true'."""

    sign: bool
    atom: object

    def neg(self):
        return Lit(not self.sign, self.atom)


TAUT_TRUE = Lit(True, _TAUT)
TAUT_FALSE = Lit(False, _TAUT)


def is_taut(lit):
    return lit.atom is _TAUT


class Nogood:
    """A set of signed literals no solution may contain entirely."""

    __slots__ = ("lits",)

    def __init__(self, lits):
        self.lits = frozenset(lits)

    def __eq__(self, other):
        return isinstance(other, Nogood) and self.lits == other.lits

    def __hash__(self):
        return hash(self.lits)

    def __iter__(self):
        return iter(self.lits)

    def __len__(self):
        return len(self.lits)

    def __repr__(self):
        return "Nogood{%s}" % ", ".join(sorted(map(repr, self.lits)))


def make_nogood(lits) -> Optional[Nogood]:
    """Build a nogood, simplifying taut markers.

    TautTrue literals are dropped (they are always in the assignment),
    a TautFalse literal or a complementary pair makes the nogood
    unviolatable, in which case None is returned.
    """
    out = set()
    for lit in lits:
        if lit == TAUT_TRUE:
            continue
        if lit == TAUT_FALSE:
            return None
        if lit.neg() in out:
            return None
        out.add(lit)
    return Nogood(out)


# ---------------------------------------------------------------------------
# View algebra: bounds, prev/next, order-literal mapping
# ---------------------------------------------------------------------------

def view_bounds(view, domains):
    """(lb, ub) of the view's image; min comes from ub(var) for a < 0."""
    dom = domains[view.var]
    if not dom:
        raise EmptyDomainError("variable %d has empty domain" % view.var)
    if view.a > 0:
        return (view.a * dom.min + view.b, view.a * dom.max + view.b)
    return (view.a * dom.max + view.b, view.a * dom.min + view.b)


def view_size(view, domains):
    return domains[view.var].size


def view_step(d, view, domains, direction):
    """Largest image element below d (prev) / smallest above (next).

    Returns NEG_INF / POS_INF at the boundary.
    """
    if direction not in ("prev", "next"):
        raise ContractViolation("direction must be 'prev' or 'next'")
    dom = domains[view.var]
    if not dom:
        raise EmptyDomainError("variable %d has empty domain" % view.var)
    a, b = view.a, view.b
    t = d - b
    # The image is monotone in x; whether we need a larger or smaller x
    # depends on the sign of a.
    if (a > 0) == (direction == "next"):
        x0 = _floor_div(t, a) + 1  # smallest integer x with a*x > t resp. < t
        x = dom.next_value(x0 - 1)
    else:
        x0 = _ceil_div(t, a) - 1  # largest integer x on the other side
        x = dom.prev_value(x0 + 1)
    if x is None:
        return POS_INF if direction == "next" else NEG_INF
    return a * x + b


def _floor_div(p, q):
    return p // q


def _ceil_div(p, q):
    return -((-p) // q)


def order_lit(var, d, domains):
    """The signed order literal for 'var <= d' over the variable's domain.

    TautTrue if d >= ub, TautFalse if d < lb; threshold snapped down to the
    previous domain value when d is not in the domain.
    """
    dom = domains[var]
    if not dom:
        raise EmptyDomainError("variable %d has empty domain" % var)
    if d >= dom.max:
        return TAUT_TRUE
    if d < dom.min:
        return TAUT_FALSE
    if d not in dom:
        d = dom.prev_value(d)
    return Lit(True, OrdAtom(var, d))


def tau(a, var, b, domains):
    """Order literal for the constraint a*var + b <= 0 (a != 0)."""
    if a == 0:
        raise ContractViolation("tau needs a non-zero coefficient")
    if a > 0:
        return order_lit(var, _floor_div(-b, a), domains)
    return order_lit(var, _ceil_div(-b, a) - 1, domains).neg()


def view_le(view, d, domains):
    """Literal for view <= d."""
    return tau(view.a, view.var, view.b - d, domains)


def view_ge(view, d, domains):
    """Literal for view >= d."""
    return tau(-view.a, view.var, d - view.b, domains)


def view_gt(view, d, domains):
    """Literal for view > d."""
    return view_ge(view, d + 1, domains)


def view_lt(view, d, domains):
    return view_le(view, d - 1, domains)


def assigned_bounds(assignment, view, domains):
    """lb/ub of a view under a set of signed order literals.

    `assignment` is any container of Lit over OrdAtom.  Raises
    ContractViolation when the assignment is order-inconsistent for the
    view's variable.
    """
    dom = domains[view.var]
    if not dom:
        raise EmptyDomainError("variable %d has empty domain" % view.var)
    lo, hi = dom.min, dom.max
    for lit in assignment:
        if not isinstance(lit.atom, OrdAtom) or lit.atom.var != view.var:
            continue
        d = lit.atom.d
        if lit.sign:
            hi = min(hi, d)
        else:
            nxt = dom.next_value(d)
            if nxt is not None:
                lo = max(lo, nxt)
            else:
                raise ContractViolation("F(v<=max) is inconsistent")
    if lo > hi:
        raise ContractViolation("order-inconsistent assignment for variable")
    if view.a > 0:
        return (view.a * lo + view.b, view.a * hi + view.b)
    return (view.a * hi + view.b, view.a * lo + view.b)


def minkowski_sum(sets, limit):
    """Exact value set of a sum of DomainSets, or None past `limit` values.

    limit < 0 means unlimited (still refused for very large inputs, since
    the computation materializes values).
    """
    hard_cap = limit if limit >= 0 else 10**6
    acc = {0}
    for ds in sets:
        if ds.size > hard_cap + 1:
            return None
        new = set()
        for v in ds.values():
            for base in acc:
                new.add(base + v)
            if len(new) > hard_cap:
                return None
        acc = new
    return DomainSet.from_values(acc)
