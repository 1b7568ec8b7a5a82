"""Multi-shot solving facade.

A Session accumulates ground program parts, routes constraints through
the preprocessing and translation pipeline, owns the engine, manages
external atoms and statistics, and drives enumeration and optimization.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from . import optimize as optimize_mod
from . import parser as parser_mod
from . import preprocess as pp
from .core import VTRUE
from .engine import Engine, SearchLimit
from .model import (
    ConAtom,
    DomainSet,
    Lit,
    Nogood,
    RegAtom,
    VariableTable,
    View,
    check64,
)
from .program import AUX, CompletionState, Rule, detect_dont_care, tightness_check
from .translate import (
    TranslateConfig,
    emit_binary_order_nogoods,
    estimate_nogoods,
    seed_order_atoms,
    translate_constraint,
)


class SessionError(Exception):
    pass


@dataclass
class SolverConfig:
    """All solver options; the defaults are the standard configuration."""

    equality_processing: bool = True
    distinct_to_card: bool = False
    distinct_pigeon: bool = True
    distinct_permutation: bool = False
    sort_coefficient: bool = False
    sort_descend_coefficient: bool = True
    sort_descend_domain: bool = False
    split_size: int = -1
    max_nogoods_size: int = 1024
    break_symmetries: bool = True
    domain_size: int = 10000
    redundant_nogood_check: bool = True
    dont_care_propagation: bool = True
    flatten_optimization: bool = True
    translate_constraints: int = 10000
    min_lits_per_var: int = 1000
    explicit_binary_order: bool = False
    prop_strength: int = 4
    learn_nogoods: bool = True
    max_conflicts: int = 0  # 0: unlimited

    def preprocess(self):
        return pp.PreprocessConfig(
            equality_processing=self.equality_processing,
            distinct_to_card=self.distinct_to_card,
            distinct_pigeon=self.distinct_pigeon,
            distinct_permutation=self.distinct_permutation,
            sort_coefficient=self.sort_coefficient,
            sort_descend_coefficient=self.sort_descend_coefficient,
            sort_descend_domain=self.sort_descend_domain,
            split_size=self.split_size,
            max_nogoods_size=self.max_nogoods_size,
            break_symmetries=self.break_symmetries,
            domain_size=self.domain_size,
            flatten_optimization=self.flatten_optimization,
            dont_care_propagation=self.dont_care_propagation,
        )

    def translate(self):
        return TranslateConfig(
            translate_threshold=self.translate_constraints,
            min_lits_per_var=self.min_lits_per_var,
            explicit_binary_order=self.explicit_binary_order,
            redundant_nogood_check=self.redundant_nogood_check,
        )


@dataclass
class Statistics:
    calls: int = 0
    choices: int = 0
    conflicts: int = 0
    restarts: int = 0
    static_nogoods: int = 0
    dynamic_nogoods: int = 0
    order_atoms: int = 0
    variables: int = 0
    translated_constraints: int = 0
    translation_emitted: int = 0
    translation_removed: int = 0
    models: int = 0
    time: float = 0.0

    def lines(self):
        return [
            ("Choices", self.choices),
            ("Conflicts", self.conflicts),
            ("Restarts", self.restarts),
            ("Static Nogoods", self.static_nogoods),
            ("Dynamic Nogoods", self.dynamic_nogoods),
            ("Order Atoms", self.order_atoms),
            ("Variables", self.variables),
        ]


class Model:
    """One reported constraint stable model."""

    __slots__ = ("atoms", "values", "objective", "number")

    def __init__(self, atoms, values, objective=None, number=0):
        self.atoms = atoms  # sorted tuple of true user atoms
        self.values = values  # user variable name -> int
        self.objective = objective  # [(level, sum)] for optimization runs
        self.number = number

    def projected(self, var_order):
        return (frozenset(self.atoms), tuple(self.values[v] for v in var_order))

    def __repr__(self):
        parts = list(self.atoms) + [
            "%s=%d" % (n, v) for n, v in sorted(self.values.items())
        ]
        return " ".join(parts)


class SolveResult:
    def __init__(self, status, models, exhausted=False):
        self.status = status  # SAT, UNSAT, OPTIMUM, UNKNOWN
        self.models = models
        self.exhausted = exhausted

    def __repr__(self):
        return "SolveResult(%s, %d models)" % (self.status, len(self.models))


class Session:
    def __init__(self, config=None, multi_shot=True):
        self.config = config or SolverConfig()
        self.multi_shot = multi_shot
        self.variables = VariableTable()
        self.engine = Engine(
            self.variables.domains,
            prop_strength=self.config.prop_strength,
            learn_nogoods=self.config.learn_nogoods,
        )
        self.completion = CompletionState(multi_shot=multi_shot)
        self.gamma = {}  # cid -> ('le', views, bound) | ('trivial', truth)
        self.con_names = {}
        self.names = {}  # surface name -> ('reg'|'con'|'dom'|'var', ref)
        self.all_rules = []
        self.user_atoms = set()
        self.show_atoms = []
        self.show_vars = []
        self.has_shows = False
        self.externals = {}  # name -> bool; released externals are removed
        self.live_markers = set()
        self.defs = {}
        self.objectives = {}  # level -> [const, [View]]
        self.forced_true = set()
        self.forced_false = set()
        self.translated = set()
        self.chunk_cache = {}
        self.eq_atom_cache = {}
        self.single_con_cache = {}
        self.chain_pairs = set()
        self._seeded_vars = set()
        self.load_unsat = False
        self.parts = 0
        self.fragments = []
        self.stats = Statistics()
        self._fresh = 0
        self._scc_dirty = True
        self._var_is_user = []

    # -- small helpers -------------------------------------------------------

    def fresh_name(self, base):
        self._fresh += 1
        return "%s%s_%d" % (AUX, base, self._fresh)

    def fresh_var(self, domain, base="v"):
        name = self.fresh_name(base)
        vid = self.variables.add(name, domain)
        self._var_is_user.append(False)
        self.names[name] = ("var", vid)
        self.engine.grow_variables()
        return vid

    def new_catom(self, name=None):
        cid = len(self.gamma)
        self.gamma[cid] = None
        self.con_names[cid] = name if name is not None else self.fresh_name("c")
        return cid

    def _resolve_atom(self, name):
        entry = self.names.get(name)
        if entry is None:
            self.names[name] = ("reg", None)
            return RegAtom(name)
        kind, ref = entry
        if kind == "con":
            return ConAtom(ref)
        if kind in ("dom", "var"):
            raise SessionError("%r names a %s, not an atom" % (name, kind))
        return RegAtom(name)

    def _var_id(self, name):
        entry = self.names.get(name)
        if entry is None or entry[0] != "var":
            raise SessionError("unknown variable %r" % name)
        return entry[1]

    def _resolve_view(self, spec):
        coef, name, off = spec
        if coef == 0:
            raise SessionError("zero coefficient in view on %r" % name)
        vid = self._var_id(name)
        sub = self.variables.substitutions.get(vid)
        if sub is not None:
            a, base, c, div = sub
            if (coef * a) % div or (coef * c) % div:
                raise SessionError(
                    "view on eliminated variable %r is not integral" % name
                )
            return View(coef * a // div, base, off + coef * c // div)
        return View(coef, vid, off)

    # -- program growth --------------------------------------------------------

    def add_text(self, text):
        for frag in parser_mod.parse_instance(text):
            self.add_part(frag)

    def add_part(self, fragment):
        if not self.multi_shot and self.parts >= 1:
            raise SessionError("single-shot session cannot grow")
        self._add_fragment(fragment, internal=False)

    def _add_fragment(self, fragment, internal):
        cfg = self.config.preprocess()
        tcfg = self.config.translate()
        self.parts += 1
        if not internal:
            self.fragments.append(fragment)

        # variables
        for name, dset in fragment.var_decls:
            if name in self.names:
                raise SessionError("name %r already in use" % name)
            if dset:
                check64(dset.min, "domain bound")
                check64(dset.max, "domain bound")
            vid = self.variables.add(name, dset)
            self._var_is_user.append(not internal)
            self.names[name] = ("var", vid)
        self.engine.grow_variables()

        # externals
        for name, value in fragment.externals:
            entry = self.names.get(name)
            if entry is not None and entry[0] != "reg":
                raise SessionError("external %r clashes with a %s" % (name, entry[0]))
            self.names[name] = ("reg", None)
            self.user_atoms.add(name)
            if value == "release":
                self.externals.setdefault(name, False)
                self.set_external(name, "release")
            elif value is not None:
                self.externals[name] = value
            else:
                self.externals.setdefault(name, False)

        # dom directives: load-time domain restrictions
        for name, (coef, varname, off), dset in fragment.doms:
            if name in self.names:
                raise SessionError("name %r already in use" % name)
            self.names[name] = ("dom", None)
            vid = self._var_id(varname)
            pre = _preimage(dset, coef, off)
            self.variables.set_domain(vid, self.variables.domain(vid).intersect(pre))

        # sum directives: bind names, normalize
        work = []
        for name, raw_terms, rel, rhs in fragment.sums:
            if name is not None and name in self.names:
                raise SessionError("name %r already in use" % name)
            terms = [
                (coef, None if var is None else self._var_id(var))
                for coef, var in raw_terms
            ]
            w = pp.normalize_sum(terms, rel, rhs, name=name)
            w.internal = internal
            if rel in ("=", "!="):
                if name is not None:
                    self.names[name] = ("reg", None)
                    self.user_atoms.add(name)
            else:
                cid = self.new_catom(name)
                if name is not None:
                    self.names[name] = ("con", cid)
                w.cid = cid
            work.append(w)

        # rules
        rules = []
        for head, body in fragment.rules:
            head_atom = None
            if head is not None:
                atom = self._resolve_atom(head)
                if isinstance(atom, ConAtom):
                    raise SessionError(
                        "constraint atom %r must not occur in a rule head" % head
                    )
                head_atom = atom
                if not head.startswith(AUX):
                    self.user_atoms.add(head)
            lits = []
            for sign, name in body:
                atom = self._resolve_atom(name)
                if isinstance(atom, RegAtom) and not name.startswith(AUX):
                    self.user_atoms.add(name)
                lits.append(Lit(sign, atom))
            rules.append(Rule(head_atom, tuple(lits)))

        # decided atoms: singleton integrity constraints
        forced_names = {}
        for r in rules:
            if r.head is None and len(r.body) == 1:
                lit = r.body[0]
                if isinstance(lit.atom, ConAtom):
                    (self.forced_false if lit.sign else self.forced_true).add(
                        lit.atom.cid
                    )
                elif isinstance(lit.atom, RegAtom):
                    forced_names[lit.atom.name] = not lit.sign
        for w in work:
            if w.cid is not None:
                if w.cid in self.forced_true:
                    w.forced = True
                elif w.cid in self.forced_false:
                    w.forced = False
            elif w.name in forced_names:
                w.forced = forced_names[w.name]

        # substitutions from earlier equality processing
        for w in work:
            if w.kind == "trivial":
                continue
            if any(v in self.variables.substitutions for _, v in w.terms):
                terms, bound = pp.apply_substitution_to_terms(
                    list(w.terms), w.bound, self.variables
                )
                rel = {"le": "<=", "eq": "=", "neq": "!="}[w.kind]
                redone = pp.normalize_sum(terms, rel, bound, w.name, w.forced)
                w.kind, w.terms, w.bound, w.truth = (
                    redone.kind,
                    redone.terms,
                    redone.bound,
                    redone.truth,
                )
        distincts = [
            (name, [self._resolve_view(v) for v in views])
            for name, views in fragment.distincts
        ]
        minimizes = [(self._resolve_view(v), level) for v, level in fragment.minimizes]

        # equality processing: first part only, since eliminating a variable
        # already woven into translated nogoods would not be sound
        if cfg.equality_processing and self.parts == 1:
            protected = set()
            for _, views in distincts:
                protected.update(v.var for v in views)
            for view, _ in minimizes:
                protected.add(view.var)
            res = pp.process_equalities(work, self.variables, protected)
            if res.unsat:
                self.load_unsat = True
            for name in res.consumed:
                if name is not None:
                    rules.append(Rule(RegAtom(name), ()))

        # record definitions for objective flattening, then glue '='/'!='
        self.defs.update(pp.extract_definitions(work))
        glue = []
        for w in list(work):
            if w.kind == "trivial" and w.cid is None:
                if w.name is not None and w.truth:
                    rules.append(Rule(RegAtom(w.name), ()))
                work.remove(w)
                continue
            if w.kind not in ("eq", "neq"):
                continue
            work.remove(w)
            c1 = self.new_catom()
            c2 = self.new_catom()
            w1 = pp.ConsWork(None, "le", list(w.terms), w.bound, internal=True)
            w1.cid = c1
            w2 = pp.ConsWork(
                None, "le", [(-c, v) for c, v in w.terms], -w.bound, internal=True
            )
            w2.cid = c2
            if w.forced in (True, "kept_true") and w.kind == "eq":
                self.forced_true.update((c1, c2))
            if w.forced in (False,) and w.kind == "neq":
                self.forced_true.update((c1, c2))
            glue.extend((w1, w2))
            atom = RegAtom(w.name) if w.name else RegAtom(self.fresh_name("eq"))
            if w.kind == "eq":
                rules.append(
                    Rule(atom, (Lit(True, ConAtom(c1)), Lit(True, ConAtom(c2))))
                )
            else:
                rules.append(Rule(atom, (Lit(False, ConAtom(c1)),)))
                rules.append(Rule(atom, (Lit(False, ConAtom(c2)),)))
        work.extend(glue)

        # distinct lowering
        for name, views in distincts:
            if name in self.names:
                raise SessionError("name %r already in use" % name)
            self.names[name] = ("reg", None)
            self.user_atoms.add(name)
            self._lower_distinct(name, views, cfg, rules, work)

        # don't-care analysis over the new rules
        modes = {}
        if cfg.dont_care_propagation:
            eligible = {
                w.cid for w in work if not w.internal and w.cid is not None
            }
            guards, modes, _ = detect_dont_care(rules, eligible, self.fresh_name)
            rules.extend(guards)

        # sort and split
        structural = []

        for w in work:
            if w.kind != "le":
                continue
            w.terms = pp.sort_terms(w.terms, self.variables.domains, cfg)
            if pp.should_split(w.terms, cfg, self.variables.domains):
                w.terms = self._split(w, cfg, structural)
                w.terms = pp.sort_terms(w.terms, self.variables.domains, cfg)

        # objectives
        obj_terms = [(view.a, view.var, view.b, level) for view, level in minimizes]
        if cfg.flatten_optimization and obj_terms:
            flattened = pp.flatten_objective(obj_terms, self.defs)
        else:
            flattened = [([(a, v)], b, level) for a, v, b, level in obj_terms]
        for terms, const, level in flattened:
            bucket = self.objectives.setdefault(level, [0, []])
            bucket[0] += const
            for coef, var in terms:
                bucket[1].append(View(coef, var, 0))

        # shows
        for name in fragment.shows:
            self.has_shows = True
            entry = self.names.get(name)
            if entry and entry[0] == "var":
                self.show_vars.append(name)
            else:
                self.user_atoms.add(name)
                self.names.setdefault(name, ("reg", None))
                self.show_atoms.append(name)

        # completion
        atoms_in_part = set()
        for r in rules:
            if r.head is not None:
                atoms_in_part.add(r.head.name)
            for lit in r.body:
                if isinstance(lit.atom, RegAtom):
                    atoms_in_part.add(lit.atom.name)
        nogoods, new_markers, defined_markers = self.completion.add_part(
            rules, atoms_in_part, set(self.externals)
        )
        self.live_markers.update(new_markers)
        self.live_markers.difference_update(defined_markers)
        for ng in nogoods:
            if not self.engine.add_static(ng):
                self.load_unsat = True
        self.all_rules.extend(rules)
        self._scc_dirty = True

        # finalize payloads; translate or watch
        for w in work:
            cid = w.cid
            if w.kind == "trivial":
                self.gamma[cid] = ("trivial", w.truth)
                lit = Lit(False, ConAtom(cid)) if w.truth else Lit(True, ConAtom(cid))
                if not self.engine.add_static(Nogood([lit])):
                    self.load_unsat = True
                continue
            views = tuple(View(c, v, 0) for c, v in w.terms)
            self.gamma[cid] = ("le", views, w.bound)
            mode = modes.get(cid, "full")
            self._route_constraint(cid, views, w.bound, mode, tcfg)
        for terms, bound in structural:
            views = tuple(
                View(c, v, 0)
                for c, v in pp.sort_terms(terms, self.variables.domains, cfg)
            )
            self._route_structural(views, bound, tcfg)

        # order-atom seeding and explicit binary order nogoods
        for vid in range(len(self.variables.domains)):
            if vid in self.variables.substitutions or vid in self._seeded_vars:
                continue
            self._seeded_vars.add(vid)
            if self.variables.domains[vid]:
                seed_order_atoms(
                    vid,
                    tcfg.min_lits_per_var,
                    self.variables.domains,
                    self.engine.pool,
                )
        if tcfg.explicit_binary_order:
            for ng in emit_binary_order_nogoods(
                self.engine.pool, self.variables.domains, self.chain_pairs
            ):
                if not self.engine.add_static(ng):
                    self.load_unsat = True

        for vid in range(len(self.variables.domains)):
            if (
                vid not in self.variables.substitutions
                and not self.variables.domains[vid]
            ):
                self.load_unsat = True

    # -- distinct lowering ----------------------------------------------------

    def _single_var_catom(self, var, rel, value, work_sink):
        """Hash-consed constraint atom for var <= value / var >= value."""
        key = (var, rel, value)
        cid = self.single_con_cache.get(key)
        if cid is None:
            cid = self.new_catom()
            self.single_con_cache[key] = cid
            if rel == "le":
                w = pp.ConsWork(None, "le", [(1, var)], value, internal=True)
            else:
                w = pp.ConsWork(None, "le", [(-1, var)], -value, internal=True)
            w.cid = cid
            work_sink.append(w)
        return ConAtom(cid)

    def _eq_atom(self, var, value, rules, work_sink):
        """Regular atom for var = value, shared across distinct constraints."""
        key = (var, value)
        atom = self.eq_atom_cache.get(key)
        if atom is None:
            atom = RegAtom(self.fresh_name("eq"))
            self.eq_atom_cache[key] = atom
            le = self._single_var_catom(var, "le", value, work_sink)
            ge = self._single_var_catom(var, "ge", value, work_sink)
            rules.append(Rule(atom, (Lit(True, le), Lit(True, ge))))
        return atom

    def _lower_distinct(self, name, views, cfg, rules, work):
        catom = RegAtom(name)
        if len(views) <= 1:
            rules.append(Rule(catom, ()))
            return
        union = None
        if cfg.distinct_to_card or cfg.distinct_permutation or cfg.distinct_pigeon:
            union = DomainSet(())
            materializable = True
            for v in views:
                if abs(v.a) > 1 and self.variables.domain(v.var).size > 10**5:
                    materializable = False
                    break
                union = union.union(_image(v, self.variables.domains))
            if not materializable:
                union = None
        if cfg.distinct_to_card and union is not None and union.size <= 10**4:
            cprime = RegAtom(self.fresh_name("clash"))
            for d in union.values():
                eqs = []
                for v in views:
                    val, ok = _view_value_preimage(v, d)
                    if ok and val in self.variables.domain(v.var):
                        eqs.append(self._eq_atom(v.var, val, rules, work))
                for i in range(len(eqs)):
                    for j in range(i + 1, len(eqs)):
                        rules.append(
                            Rule(cprime, (Lit(True, eqs[i]), Lit(True, eqs[j])))
                        )
            rules.append(Rule(catom, (Lit(False, cprime),)))
        else:
            conj = []
            for i in range(len(views)):
                for j in range(i + 1, len(views)):
                    wi, wj = views[i], views[j]
                    neq = RegAtom(self.fresh_name("neq"))
                    lt = self._pair_catom(wi, wj, work)
                    gt = self._pair_catom(wj, wi, work)
                    rules.append(Rule(neq, (Lit(True, lt),)))
                    rules.append(Rule(neq, (Lit(True, gt),)))
                    conj.append(Lit(True, neq))
            rules.append(Rule(catom, tuple(conj)))
        if cfg.distinct_pigeon and union is not None:
            n = len(views)
            if union.size < n:
                rules.append(Rule(None, (Lit(True, catom),)))
            else:
                u = union.select(union.size - n)
                low = union.select(n - 1)
                body = [Lit(True, catom)]
                for v in views:
                    body.append(Lit(True, self._view_bound_catom(v, u, "gt", work)))
                rules.append(Rule(None, tuple(body)))
                body = [Lit(True, catom)]
                for v in views:
                    body.append(Lit(True, self._view_bound_catom(v, low, "lt", work)))
                rules.append(Rule(None, tuple(body)))
        if cfg.distinct_permutation and union is not None:
            if union.size == len(views):
                for d in union.values():
                    body = [Lit(True, catom)]
                    for v in views:
                        val, ok = _view_value_preimage(v, d)
                        if ok and val in self.variables.domain(v.var):
                            body.append(
                                Lit(False, self._eq_atom(v.var, val, rules, work))
                            )
                    rules.append(Rule(None, tuple(body)))

    def _pair_catom(self, wi, wj, work_sink):
        """Constraint atom for wi < wj (fresh per distinct constraint)."""
        cid = self.new_catom()
        w = pp.normalize_sum(
            [(wi.a, wi.var), (-wj.a, wj.var), (wi.b - wj.b, None)], "<", 0, None
        )
        w.internal = True
        w.cid = cid
        work_sink.append(w)
        return ConAtom(cid)

    def _view_bound_catom(self, view, bound, rel, work_sink):
        """Constraint atom for view > bound (rel 'gt') or view < bound ('lt')."""
        cid = self.new_catom()
        if rel == "gt":
            w = pp.normalize_sum(
                [(-view.a, view.var), (-view.b, None)], "<=", -(bound + 1), None
            )
        else:
            w = pp.normalize_sum(
                [(view.a, view.var), (view.b, None)], "<=", bound - 1, None
            )
        w.internal = True
        w.cid = cid
        work_sink.append(w)
        return ConAtom(cid)

    # -- splitting -------------------------------------------------------------

    def _split(self, w, cfg, structural):
        cache = self.chunk_cache
        alpha = cfg.split_size

        def emit_definition(chunk_terms, var):
            structural.append((list(chunk_terms) + [(-1, var)], 0))
            if cfg.break_symmetries:
                structural.append(([(-c, v) for c, v in chunk_terms] + [(1, var)], 0))

        def fresh_with_cons(chunk_terms):
            key = tuple(sorted(chunk_terms))
            sign = 1
            if key[0][0] < 0:
                key = tuple(sorted((-c, v) for c, v in chunk_terms))
                sign = -1
            vid = cache.get(key)
            if vid is None:
                canon = list(key)
                dom = pp.propagate_domains(
                    canon, self.variables.domains, cfg.domain_size
                )
                vid = self.fresh_var(dom, base="s")
                cache[key] = vid
                emit_definition(canon, vid)
            return (sign, vid)

        def rec(ts):
            if len(ts) <= alpha:
                return ts
            n = len(ts)
            base, rem = divmod(n, alpha)
            out = []
            i = 0
            for g in range(alpha):
                size = base + (1 if g < rem else 0)
                group = ts[i : i + size]
                i += size
                if len(group) <= 1:
                    out.extend(group)
                    continue
                inner = rec(group) if len(group) > alpha else group
                out.append(fresh_with_cons(tuple(inner)))
            return out

        return rec(list(w.terms))

    # -- translation / watching -------------------------------------------------

    def _route_constraint(self, cid, views, bound, mode, tcfg):
        est = estimate_nogoods(views, self.variables.domains)
        m = tcfg.translate_threshold
        catom = ConAtom(cid)
        if m == -1 or (m > 0 and est < m):
            halves = []
            if mode in ("full", "T") and cid not in self.forced_false:
                halves.append((Lit(True, catom), views, bound))
            if mode in ("full", "F") and cid not in self.forced_true:
                halves.append(
                    (Lit(False, catom), tuple(v.negate() for v in views), -bound - 1)
                )
            for seed, vs, b in halves:
                ngs, emitted, removed = translate_constraint(
                    [seed],
                    vs,
                    b,
                    self.variables.domains,
                    self.engine.pool,
                    tcfg.redundant_nogood_check,
                )
                self.stats.translation_emitted += emitted
                self.stats.translation_removed += removed
                for ng in ngs:
                    if not self.engine.add_static(ng):
                        self.load_unsat = True
            self.translated.add(cid)
            self.stats.translated_constraints += 1
        else:
            seed_aid = self.engine.intern_atom(catom)
            self.engine.add_constraint_entry(cid, seed_aid, views, bound, mode)

    def _route_structural(self, views, bound, tcfg):
        est = estimate_nogoods(views, self.variables.domains)
        m = tcfg.translate_threshold
        if m == -1 or (m > 0 and est < m):
            ngs, emitted, removed = translate_constraint(
                [],
                views,
                bound,
                self.variables.domains,
                self.engine.pool,
                tcfg.redundant_nogood_check,
            )
            self.stats.translation_emitted += emitted
            self.stats.translation_removed += removed
            for ng in ngs:
                if not self.engine.add_static(ng):
                    self.load_unsat = True
        else:
            self.engine.add_constraint_entry(-1, None, views, bound, "T")

    # -- externals ---------------------------------------------------------------

    def set_external(self, name, value):
        if name not in self.externals:
            raise SessionError("unknown external %r" % name)
        if value == "release":
            del self.externals[name]
            if not self.engine.add_static(Nogood([Lit(True, RegAtom(name))])):
                self.load_unsat = True
        else:
            self.externals[name] = bool(value)

    # -- solving ---------------------------------------------------------------

    def _assumption_lits(self, assumptions):
        lits = []
        for marker in sorted(self.live_markers):
            lits.append(self.engine.lit_of(Lit(False, RegAtom(marker))))
        for name in sorted(self.externals):
            lits.append(self.engine.lit_of(Lit(self.externals[name], RegAtom(name))))
        for name, value in assumptions:
            if self.names.get(name, (None,))[0] != "reg":
                if value:
                    return None  # an unknown atom can never be true
                continue
            lits.append(self.engine.lit_of(Lit(bool(value), RegAtom(name))))
        return lits

    def _ensure_ufs(self):
        if not self._scc_dirty:
            return
        self._scc_dirty = False
        tight, sccs = tightness_check(self.all_rules)
        structures = []
        if not tight:
            by_head = {}
            for r in self.all_rules:
                if r.head is not None:
                    by_head.setdefault(r.head.name, []).append(r)
            for scc in sccs:
                scc_set = set(scc)
                atom_aids = []
                rules_by_head = {}
                for n in scc:
                    aid = self.engine.intern_atom(RegAtom(n))
                    atom_aids.append(aid)
                    entries = []
                    for r in by_head.get(n, ()):
                        if not r.body:
                            body_lit = 0  # the constant-true atom: never false
                        else:
                            handle = self.completion._body_handle(r.body)
                            if handle[0] == "lit":
                                body_lit = self.engine.lit_of(handle[1])
                            else:
                                body_lit = (
                                    self.engine.intern_atom(
                                        self.completion.body_atom(handle[1])
                                    )
                                    * 2
                                )
                        pos_in = tuple(
                            self.engine.intern_atom(RegAtom(l.atom.name))
                            for l in r.body
                            if l.sign
                            and isinstance(l.atom, RegAtom)
                            and l.atom.name in scc_set
                        )
                        entries.append((body_lit, pos_in))
                    rules_by_head[aid] = entries
                structures.append((atom_aids, rules_by_head))
        self.engine.set_ufs(tight, structures)

    def _make_model(self, number):
        engine = self.engine
        atoms = []
        for aid in range(1, len(engine.space.syms)):
            sym = engine.space.syms[aid]
            if (
                isinstance(sym, RegAtom)
                and not sym.name.startswith(AUX)
                and sym.name in self.user_atoms
                and engine.kernel.value(aid) == VTRUE
            ):
                atoms.append(sym.name)
        assignment = {v: engine.var_value(v) for v in self.variables.live_variables()}
        values = {}
        for vid, name in enumerate(self.variables.names):
            if self._var_is_user[vid]:
                values[name] = self.variables.reconstruct(vid, assignment)
        return Model(tuple(sorted(atoms)), values, number=number)

    def solve(self, assumptions=(), n_models=1, on_model=None, optimize=None):
        """Run one solve call: enumeration, or branch-and-bound optimization.

        n_models=0 enumerates all models; optimize defaults to True when
        minimize directives exist.
        """
        t0 = time.perf_counter()
        self.stats.calls += 1
        if optimize is None:
            optimize = bool(self.objectives)
        try:
            if optimize and self.objectives:
                result = optimize_mod.branch_and_bound(
                    self, assumptions, on_model, n_models
                )
            else:
                result = self._solve_enumerate(assumptions, n_models, on_model)
        finally:
            self._sync_stats(time.perf_counter() - t0)
        return result

    def _solve_enumerate(self, assumptions, n_models, on_model):
        engine = self.engine
        models = []
        if self.load_unsat or engine.permanently_unsat:
            return SolveResult("UNSAT", [], exhausted=True)
        self._ensure_ufs()
        lits = self._assumption_lits(assumptions)
        if lits is None:
            return SolveResult("UNSAT", [], exhausted=True)
        status = engine.start_call(lits)
        if status != -1:
            engine.end_call()
            return SolveResult("UNSAT", [], exhausted=True)

        def callback(_engine):
            m = self._make_model(len(models) + 1)
            models.append(m)
            if on_model is not None:
                on_model(m)

        live = self.variables.live_variables()
        engine.max_conflicts = self.config.max_conflicts or None
        try:
            _, exhausted = engine.search(live, callback, max_models=n_models)
        except SearchLimit:
            engine.end_call()
            return SolveResult("UNKNOWN", models)
        engine.end_call()
        return SolveResult("SAT" if models else "UNSAT", models, exhausted)

    def _sync_stats(self, elapsed):
        es = self.engine.stats
        self.stats.choices = es.choices
        self.stats.conflicts = es.conflicts
        self.stats.restarts = es.restarts
        self.stats.static_nogoods = es.static_nogoods
        self.stats.dynamic_nogoods = es.dynamic_nogoods
        self.stats.order_atoms = es.order_atoms
        self.stats.models = es.models
        self.stats.variables = len(self.variables.names)
        self.stats.time += elapsed

    def statistics(self):
        self._sync_stats(0.0)
        return self.stats

    def objective_vector(self, model):
        """Level sums of a model, ordered by descending priority level."""
        out = []
        for level in sorted(self.objectives, reverse=True):
            const, views = self.objectives[level]
            total = const
            for view in views:
                total += view.a * self._value_of(view.var, model) + view.b
            out.append((level, total))
        return out

    def _value_of(self, var, model):
        name = self.variables.names[var]
        if name in model.values:
            return model.values[name]
        return self.engine.var_value(var)


def _preimage(dset, coef, off):
    """{d : coef*d + off in dset} as a DomainSet."""
    out = []
    for lo, hi in dset.ranges:
        lo2, hi2 = lo - off, hi - off
        if coef > 0:
            a = -((-lo2) // coef)
            b = hi2 // coef
        else:
            a = -((-hi2) // coef)
            b = lo2 // coef
        if a <= b:
            out.append((a, b))
    return DomainSet(out)


def _image(view, domains):
    dom = domains[view.var]
    if abs(view.a) == 1:
        img = dom if view.a == 1 else dom.scale(-1)
        return img.shift(view.b)
    return dom.scale(view.a).shift(view.b)


def _view_value_preimage(view, d):
    """Variable value with view == d, or (None, False) when not integral."""
    if (d - view.b) % view.a:
        return None, False
    return (d - view.b) // view.a, True
