"""Line-oriented text format for ground constraint logic programs.

Grammar (one directive per line, '%' starts a comment):

    var IDENT ranges                      ranges: range ("," range)*
                                          range:  INT (".." INT)?
    rule [head] ":-" lit ("," lit)* "."   lit: ["not"] IDENT
    rule head "."                         (fact)
    con sum IDENT ":=" sumexpr REL INT    REL: <= = >= < > !=
    con dom IDENT ":=" IDENT "in" ranges
    con distinct IDENT ":=" view (";" view)*
    minimize view "@" INT ("," view "@" INT)*
    show IDENT
    external IDENT [true|false|release]
    part IDENT

A sumexpr is a sequence of terms joined by '+'/'-'; a term is INT, INT
"*" IDENT, or IDENT.  A view is [INT "*"] IDENT [("+"|"-") INT] or a
plain INT offsetless variable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import DomainSet


class ParseError(Exception):
    def __init__(self, line_no, message):
        super().__init__("line %d: %s" % (line_no, message))
        self.line_no = line_no


IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_()]*")
INT_RE = re.compile(r"-?\d+")


@dataclass
class Fragment:
    """One program part in surface syntax, name-based."""

    name: str = "base"
    var_decls: list = field(default_factory=list)  # (name, DomainSet)
    rules: list = field(default_factory=list)  # (head or None, [(sign, name)])
    sums: list = field(default_factory=list)  # (name, [(coef, var or None)], rel, rhs)
    doms: list = field(default_factory=list)  # (name, (coef, var, off), DomainSet)
    distincts: list = field(default_factory=list)  # (name, [(coef, var, off)])
    minimizes: list = field(default_factory=list)  # ((coef, var, off), level)
    shows: list = field(default_factory=list)  # names (atoms or variables)
    externals: list = field(default_factory=list)  # (name, True|False|'release'|None)


class _Cursor:
    def __init__(self, text, line_no):
        self.text = text
        self.pos = 0
        self.line_no = line_no

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def eof(self):
        self.skip_ws()
        return self.pos >= len(self.text)

    def peek(self, s):
        self.skip_ws()
        return self.text.startswith(s, self.pos)

    def take(self, s):
        if self.peek(s):
            self.pos += len(s)
            return True
        return False

    def expect(self, s):
        if not self.take(s):
            self.fail("expected %r" % s)

    def ident(self):
        self.skip_ws()
        m = IDENT_RE.match(self.text, self.pos)
        if not m:
            self.fail("expected identifier")
        self.pos = m.end()
        return m.group(0)

    def integer(self):
        self.skip_ws()
        m = INT_RE.match(self.text, self.pos)
        if not m:
            self.fail("expected integer")
        self.pos = m.end()
        return int(m.group(0))

    def fail(self, message):
        raise ParseError(self.line_no, message + " at column %d" % (self.pos + 1))


def _parse_ranges(cur):
    ranges = []
    while True:
        lo = cur.integer()
        if cur.take(".."):
            hi = cur.integer()
        else:
            hi = lo
        if lo > hi:
            cur.fail("empty range %d..%d" % (lo, hi))
        ranges.append((lo, hi))
        if not cur.take(","):
            break
    return DomainSet(ranges)


def _parse_view(cur):
    """[INT *] IDENT [+/- INT] -> (coef, name, offset)."""
    cur.skip_ws()
    coef = 1
    m = INT_RE.match(cur.text, cur.pos)
    if m:
        save = cur.pos
        cur.pos = m.end()
        if cur.take("*"):
            coef = int(m.group(0))
        else:
            cur.pos = save
            cur.fail("expected view of form [INT*]IDENT[+-INT]")
    name = cur.ident()
    off = 0
    cur.skip_ws()
    if cur.peek("+") or (cur.peek("-") and not cur.peek("->")):
        sign = 1 if cur.take("+") else (-1 if cur.take("-") else 0)
        off = sign * cur.integer()
    return (coef, name, off)


def _parse_sum_terms(cur):
    """term (+|- term)* -> list of (coef, name or None)."""
    terms = []
    sign = 1
    if cur.take("-"):
        sign = -1
    while True:
        cur.skip_ws()
        m = INT_RE.match(cur.text, cur.pos)
        if m:
            cur.pos = m.end()
            val = int(m.group(0))
            if cur.take("*"):
                terms.append((sign * val, cur.ident()))
            else:
                terms.append((sign * val, None))
        else:
            terms.append((sign, cur.ident()))
        cur.skip_ws()
        if cur.take("+"):
            sign = 1
        elif cur.peek("-") and not cur.peek("->"):
            cur.take("-")
            sign = -1
        else:
            return terms


_RELS = ("<=", ">=", "!=", "<", ">", "=")


def parse_instance(text):
    """Parse a whole instance; returns the list of Fragments (parts)."""
    parts = [Fragment("base")]
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        cur = _Cursor(line, line_no)
        frag = parts[-1]
        word = cur.ident()
        if word == "part":
            name = cur.ident()
            parts.append(Fragment(name))
        elif word == "var":
            name = cur.ident()
            _check_user_name(cur, name)
            frag.var_decls.append((name, _parse_ranges(cur)))
        elif word == "rule":
            _parse_rule(cur, frag)
        elif word == "con":
            kind = cur.ident()
            name = cur.ident()
            _check_user_name(cur, name)
            cur.expect(":=")
            if kind == "sum":
                terms = _parse_sum_terms(cur)
                rel = None
                for r in _RELS:
                    if cur.take(r):
                        rel = r
                        break
                if rel is None:
                    cur.fail("expected relation")
                rhs = cur.integer()
                frag.sums.append((name, terms, rel, rhs))
            elif kind == "dom":
                var = cur.ident()
                cur.skip_ws()
                if not cur.take("in"):
                    cur.fail("expected 'in'")
                frag.doms.append((name, (1, var, 0), _parse_ranges(cur)))
            elif kind == "distinct":
                views = [_parse_view(cur)]
                while cur.take(";"):
                    views.append(_parse_view(cur))
                frag.distincts.append((name, views))
            else:
                cur.fail("unknown constraint kind %r" % kind)
        elif word == "minimize":
            while True:
                view = _parse_view(cur)
                cur.expect("@")
                level = cur.integer()
                frag.minimizes.append((view, level))
                if not cur.take(","):
                    break
        elif word == "show":
            frag.shows.append(cur.ident())
        elif word == "external":
            name = cur.ident()
            _check_user_name(cur, name)
            value = None
            if not cur.eof():
                token = cur.ident()
                if token == "true":
                    value = True
                elif token == "false":
                    value = False
                elif token == "release":
                    value = "release"
                else:
                    cur.fail("expected true, false or release")
            frag.externals.append((name, value))
        else:
            cur.fail("unknown directive %r" % word)
        if not cur.eof() and word != "rule":
            cur.fail("trailing input")
    return parts


def _check_user_name(cur, name):
    if name.startswith("_ ") or name.startswith("\x01"):
        cur.fail("reserved name %r" % name)


def _parse_rule(cur, frag):
    head = None
    cur.skip_ws()
    if not cur.peek(":-"):
        head = cur.ident()
    body = []
    if cur.take(":-"):
        if not cur.peek("."):
            while True:
                neg = False
                cur.skip_ws()
                if cur.text.startswith("not ", cur.pos):
                    cur.pos += 4
                    neg = True
                body.append((not neg, cur.ident()))
                if not cur.take(","):
                    break
    cur.expect(".")
    if not cur.eof():
        cur.fail("trailing input after rule")
    if head is None and not body:
        cur.fail("empty rule")
    seen = set()
    dedup = []
    for lit in body:
        if lit not in seen:
            seen.add(lit)
            dedup.append(lit)
    frag.rules.append((head, dedup))


# ---------------------------------------------------------------------------
# Printing (canonical form; parse -> print -> parse is the identity)
# ---------------------------------------------------------------------------

def format_ranges(dset):
    return ",".join(
        "%d" % lo if lo == hi else "%d..%d" % (lo, hi) for lo, hi in dset.ranges
    )


def format_view(view):
    coef, name, off = view
    out = "%d*%s" % (coef, name)
    if off:
        out += "+%d" % off if off > 0 else "%d" % off
    return out


def format_fragment(frag, include_part=False):
    lines = []
    if include_part:
        lines.append("part %s" % frag.name)
    for name, dset in frag.var_decls:
        lines.append("var %s %s" % (name, format_ranges(dset)))
    for name, value in frag.externals:
        suffix = {True: " true", False: " false", "release": " release", None: ""}[value]
        lines.append("external %s%s" % (name, suffix))
    for name, view, dset in frag.doms:
        lines.append("con dom %s := %s in %s" % (name, view[1], format_ranges(dset)))
    for name, terms, rel, rhs in frag.sums:
        body = " + ".join(
            "%d" % c if v is None else "%d*%s" % (c, v) for c, v in terms
        )
        lines.append("con sum %s := %s %s %d" % (name, body, rel, rhs))
    for name, views in frag.distincts:
        lines.append(
            "con distinct %s := %s" % (name, "; ".join(format_view(v) for v in views))
        )
    for head, body in frag.rules:
        lits = ", ".join(("%s" if sign else "not %s") % name for sign, name in body)
        if head is None:
            lines.append("rule :- %s." % lits)
        elif not body:
            lines.append("rule %s." % head)
        else:
            lines.append("rule %s :- %s." % (head, lits))
    for view, level in frag.minimizes:
        lines.append("minimize %s@%d" % (format_view(view), level))
    for name in frag.shows:
        lines.append("show %s" % name)
    return lines


def format_instance(parts):
    lines = []
    for i, frag in enumerate(parts):
        lines.extend(format_fragment(frag, include_part=i > 0))
    return "\n".join(lines) + "\n"
