"""Relational points, substitution and unification, experiments, and the
exhaustive membership oracle.

Points of a formula's web are atoms, the empty sequence (), pairs, and
(in the variable-extended webs used by the machine) atomic variables
written `?name`.  Hashes and variable sets are cached per node so that
large shared terms stay cheap to compare and substitute.
"""

import itertools
from collections import deque
from dataclasses import dataclass

from .errors import InputError, ParseError
from .mll import Bot, DualVar, One, Par, PropVar, ProofStructure, Tensor, CellKind

_NO_VARS: frozenset = frozenset()


class RelTerm:
    """Base class of relational terms."""

    vars: frozenset  # names of variables occurring in the term

    def __repr__(self):
        return render_term(self)


@dataclass(frozen=True, eq=False, repr=False)
class Atom(RelTerm):
    name: str

    def __post_init__(self):
        object.__setattr__(self, "vars", _NO_VARS)
        object.__setattr__(self, "_hash", hash(("at", self.name)))

    def __eq__(self, other):
        return self is other or (type(other) is Atom and other.name == self.name)

    def __hash__(self):
        return self._hash


@dataclass(frozen=True, eq=False, repr=False)
class Unit(RelTerm):
    def __post_init__(self):
        object.__setattr__(self, "vars", _NO_VARS)

    def __eq__(self, other):
        return type(other) is Unit

    def __hash__(self):
        return hash("unit")


@dataclass(frozen=True, eq=False, repr=False)
class Pair(RelTerm):
    fst: RelTerm
    snd: RelTerm

    def __post_init__(self):
        fv, sv = self.fst.vars, self.snd.vars
        object.__setattr__(self, "vars", _NO_VARS if not (fv or sv) else fv | sv)
        object.__setattr__(self, "_hash", hash(("pr", hash(self.fst), hash(self.snd))))

    def __eq__(self, other):
        if self is other:
            return True
        return (
            type(other) is Pair
            and self._hash == other._hash
            and self.fst == other.fst
            and self.snd == other.snd
        )

    def __hash__(self):
        return self._hash


@dataclass(frozen=True, eq=False, repr=False)
class Var(RelTerm):
    name: str

    def __post_init__(self):
        object.__setattr__(self, "vars", frozenset((self.name,)))
        object.__setattr__(self, "_hash", hash(("vr", self.name)))

    def __eq__(self, other):
        return self is other or (type(other) is Var and other.name == self.name)

    def __hash__(self):
        return self._hash


UNIT = Unit()


def render_term(t: RelTerm) -> str:
    if isinstance(t, Atom):
        return t.name
    if isinstance(t, Unit):
        return "()"
    if isinstance(t, Var):
        return f"?{t.name}"
    return f"({render_term(t.fst)},{render_term(t.snd)})"


def atoms_of(t: RelTerm) -> set:
    """Names of all atoms occurring in the term."""
    if isinstance(t, Atom):
        return {t.name}
    if isinstance(t, Pair):
        return atoms_of(t.fst) | atoms_of(t.snd)
    return set()


# ---------------------------------------------------------------------------
# Point syntax:  t ::= ident | "()" | "(" t "," t ")" | "?" ident
# Redundant grouping parentheses around a term are tolerated on input.


class _PointParser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def skip_ws(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", pos=self.i)
        self.i += 1

    def ident(self) -> str:
        self.skip_ws()
        j = self.i
        while j < len(self.text) and (self.text[j].isalnum() or self.text[j] == "_"):
            j += 1
        if j == self.i or self.text[self.i].isdigit():
            raise ParseError("expected an identifier", pos=self.i)
        name = self.text[self.i:j]
        self.i = j
        return name

    def term(self) -> RelTerm:
        c = self.peek()
        if c == "?":
            self.i += 1
            return Var(self.ident())
        if c == "(":
            self.i += 1
            if self.peek() == ")":
                self.i += 1
                return UNIT
            first = self.term()
            if self.peek() == ",":
                self.i += 1
                second = self.term()
                self.expect(")")
                return Pair(first, second)
            self.expect(")")  # grouping parentheses
            return first
        if c == "":
            raise ParseError("unexpected end of input", pos=self.i)
        return Atom(self.ident())


def parse_point(text: str) -> RelTerm:
    p = _PointParser(text)
    t = p.term()
    if p.peek():
        raise ParseError(f"unexpected {p.peek()!r}", pos=p.i)
    return t


def parse_point_list(text: str) -> list[RelTerm]:
    """Comma-separated points, one per conclusion; empty input means no points."""
    p = _PointParser(text)
    if not p.peek():
        return []
    out = [p.term()]
    while p.peek() == ",":
        p.i += 1
        out.append(p.term())
    if p.peek():
        raise ParseError(f"unexpected {p.peek()!r}", pos=p.i)
    return out


# ---------------------------------------------------------------------------
# Webs


def web_member(t: RelTerm, a, allow_vars: bool = False) -> bool:
    """Is t a point of the web of formula a?

    With allow_vars set, variables are admitted at every level of the web;
    without it the plain ground web is used.
    """
    if isinstance(t, Var):
        return allow_vars
    if isinstance(a, (PropVar, DualVar)):
        return isinstance(t, Atom)
    if isinstance(a, (One, Bot)):
        return isinstance(t, Unit)
    if isinstance(t, Pair):
        return web_member(t.fst, a.left, allow_vars) and web_member(t.snd, a.right, allow_vars)
    return False


def enumerate_web(a, atom_names) -> list[RelTerm]:
    """All ground points of the web of a over the given atom names."""
    if isinstance(a, (PropVar, DualVar)):
        return [Atom(n) for n in atom_names]
    if isinstance(a, (One, Bot)):
        return [UNIT]
    lefts = enumerate_web(a.left, atom_names)
    rights = enumerate_web(a.right, atom_names)
    return [Pair(l, r) for l in lefts for r in rights]


# ---------------------------------------------------------------------------
# Substitution and most general unification

Substitution = dict  # variable name -> RelTerm


def apply_subst(s: Substitution, t: RelTerm) -> RelTerm:
    """Homomorphic replacement of variables; terms not mentioning s are returned as-is."""
    if not t.vars or not (t.vars & s.keys()):
        return t
    if isinstance(t, Var):
        return s.get(t.name, t)
    return Pair(apply_subst(s, t.fst), apply_subst(s, t.snd))


class UnificationError(Exception):
    """Raised when two terms do not unify; carries the innermost clashing pair."""

    def __init__(self, left: RelTerm, right: RelTerm, occurs: bool = False):
        what = "occurs check" if occurs else "clash"
        super().__init__(f"{what}: {render_term(left)} vs {render_term(right)}")
        self.left = left
        self.right = right
        self.occurs = occurs


def mgu(t1: RelTerm, t2: RelTerm) -> Substitution:
    """Most general unifier of t1 and t2 as an idempotent substitution.

    Raises UnificationError on constructor or atom clash and on occurs-check
    failure.  Equations are solved left to right, so binding order is stable.
    """
    subst: Substitution = {}
    uses: dict = {}  # variable -> bound names whose image mentions it

    def bind(name: str, t: RelTerm):
        if name in t.vars:
            raise UnificationError(Var(name), t, occurs=True)
        one = {name: t}
        for k in uses.pop(name, ()):
            image = apply_subst(one, subst[k])
            subst[k] = image
            for v in t.vars:
                uses.setdefault(v, set()).add(k)
        subst[name] = t
        for v in t.vars:
            uses.setdefault(v, set()).add(name)

    queue = deque([(t1, t2)])
    while queue:
        a, b = queue.popleft()
        a = apply_subst(subst, a)
        b = apply_subst(subst, b)
        if a == b:
            continue
        if isinstance(a, Var):
            bind(a.name, b)
        elif isinstance(b, Var):
            bind(b.name, a)
        elif isinstance(a, Pair) and isinstance(b, Pair):
            queue.appendleft((a.snd, b.snd))
            queue.appendleft((a.fst, b.fst))
        else:
            raise UnificationError(a, b)
    return subst


class FreshVars:
    """Deterministic fresh-variable source with a configurable name prefix."""

    def __init__(self, prefix: str = "_g", avoid=()):
        self.prefix = prefix
        self.n = 0
        self.avoid = set(avoid)

    def __call__(self) -> Var:
        while True:
            name = f"{self.prefix}{self.n}"
            self.n += 1
            if name not in self.avoid:
                return Var(name)


# ---------------------------------------------------------------------------
# Experiments

Experiment = dict  # port id -> ground RelTerm


def verify_experiment(ps: ProofStructure, e: Experiment) -> bool:
    """Do the per-cell coherence conditions hold for this total port labelling?"""
    try:
        for c in ps.cells:
            if c.kind is CellKind.AX:
                p, q = c.principal
                if e[p] != e[q]:
                    return False
            elif c.kind is CellKind.CUT:
                p, q = c.auxiliary
                if e[p] != e[q]:
                    return False
            elif c.kind in (CellKind.ONE, CellKind.BOT):
                if e[c.principal[0]] != UNIT:
                    return False
            else:
                p1, p2 = c.auxiliary
                if e[c.principal[0]] != Pair(e[p1], e[p2]):
                    return False
    except KeyError as missing:
        raise InputError(f"experiment not defined on port {missing.args[0]}") from None
    return True


def experiment_result(ps: ProofStructure, e: Experiment) -> tuple:
    """Values at the conclusions, in conclusion order."""
    return tuple(e[p] for p in ps.conclusions)


# ---------------------------------------------------------------------------
# Membership oracle: brute-force search over experiments.
#
# An experiment is fixed by one ground point per axiom; every other port value
# follows by propagation (units are (), tensor/par principals pair up their
# auxiliary values).  Only cut equalities and the conclusion values remain to
# be checked.  Atoms range over the atoms of the queried point plus one fresh
# atom per atomic leaf per axiom: any witnessing experiment can be renamed so
# its hidden atoms land in that pool, so the finite search is complete.


def validate_point(ps: ProofStructure, point) -> None:
    """Raise InputError unless the point list is ground, web-typed, and of the right arity."""
    if len(point) != len(ps.conclusions):
        raise InputError(
            f"point has {len(point)} component(s) but the structure has "
            f"{len(ps.conclusions)} conclusion(s)"
        )
    for t, p in zip(point, ps.conclusions):
        if t.vars:
            raise InputError(f"point component {render_term(t)} is not ground")
        if not web_member(t, ps.ports[p], allow_vars=False):
            raise InputError(
                f"point component {render_term(t)} is not in the web of conclusion {p}"
            )


def _build_value(formula, leaf_atoms: "iter") -> RelTerm:
    if isinstance(formula, (PropVar, DualVar)):
        return Atom(next(leaf_atoms))
    if isinstance(formula, (One, Bot)):
        return UNIT
    left = _build_value(formula.left, leaf_atoms)
    return Pair(left, _build_value(formula.right, leaf_atoms))


class _OracleSearch:
    def __init__(self, ps: ProofStructure, pool: list):
        self.ps = ps
        self.axioms = [c for c in ps.cells if c.kind is CellKind.AX]
        self.formulas = [ps.ports[c.principal[0]] for c in self.axioms]
        self.leaf_counts = [self._count_leaves(f) for f in self.formulas]
        total = sum(self.leaf_counts)
        fresh, taken, k = [], set(pool), 0
        while len(fresh) < total:
            name = f"h{k}"
            k += 1
            if name not in taken:
                fresh.append(name)
        self.universe = list(pool) + fresh
        self.values: list = [None] * len(self.axioms)
        self.deps = {}
        self.order = self._axiom_order()
        self.rank = {i: k for k, i in enumerate(self.order)}

    @staticmethod
    def _count_leaves(f) -> int:
        if isinstance(f, (PropVar, DualVar)):
            return 1
        if isinstance(f, (Tensor, Par)):
            return _OracleSearch._count_leaves(f.left) + _OracleSearch._count_leaves(f.right)
        return 0

    def port_deps(self, port: str) -> frozenset:
        got = self.deps.get(port)
        if got is not None:
            return got
        cell = self.ps.principal_cell(port)
        if cell.kind is CellKind.AX:
            idx = self.axioms.index(cell)
            got = frozenset((idx,))
        elif cell.kind in (CellKind.ONE, CellKind.BOT):
            got = frozenset()
        else:
            got = self.port_deps(cell.auxiliary[0]) | self.port_deps(cell.auxiliary[1])
        self.deps[port] = got
        return got

    def value(self, port: str) -> RelTerm:
        cell = self.ps.principal_cell(port)
        if cell.kind is CellKind.AX:
            return self.values[self.axioms.index(cell)]
        if cell.kind in (CellKind.ONE, CellKind.BOT):
            return UNIT
        return Pair(self.value(cell.auxiliary[0]), self.value(cell.auxiliary[1]))

    def _axiom_order(self) -> list:
        order: list = []
        fronts = list(self.ps.conclusions) + [
            p for c in self.ps.cells if c.kind is CellKind.CUT for p in c.auxiliary
        ]
        for port in fronts:
            for i in sorted(self.port_deps(port)):
                if i not in order:
                    order.append(i)
        for i in range(len(self.axioms)):
            if i not in order:
                order.append(i)
        return order

    def _constraints(self, target):
        cons = []
        for c in self.ps.cells:
            if c.kind is CellKind.CUT:
                p, q = c.auxiliary
                cons.append((self.port_deps(p) | self.port_deps(q), ("eq", p, q)))
        if target is not None:
            for p, want in zip(self.ps.conclusions, target):
                cons.append((self.port_deps(p), ("is", p, want)))
        buckets: dict = {k: [] for k in range(-1, len(self.order))}
        for deps, con in cons:
            slot = max((self.rank[i] for i in deps), default=-1)
            buckets[slot].append(con)
        return buckets

    def _holds(self, con) -> bool:
        if con[0] == "eq":
            return self.value(con[1]) == self.value(con[2])
        return self.value(con[1]) == con[2]

    def search(self, target=None, collect: set | None = None) -> bool:
        """With a target, return whether some experiment realizes it; with a
        collect set, gather the results of all experiments instead."""
        buckets = self._constraints(target)
        if not all(self._holds(c) for c in buckets[-1]):
            return False

        def dfs(k: int) -> bool:
            if k == len(self.order):
                if collect is not None:
                    collect.add(tuple(self.value(p) for p in self.ps.conclusions))
                    return False
                return True
            i = self.order[k]
            for combo in itertools.product(self.universe, repeat=self.leaf_counts[i]):
                self.values[i] = _build_value(self.formulas[i], iter(combo))
                if all(self._holds(c) for c in buckets[k]) and dfs(k + 1):
                    return True
            self.values[i] = None
            return False

        return dfs(0)


def oracle_check(ps: ProofStructure, point) -> bool:
    """Membership of a ground point in the structure's interpretation, by
    exhaustive search over experiments."""
    point = list(point)
    validate_point(ps, point)
    pool = sorted(set().union(*[atoms_of(t) for t in point]) if point else set())
    return _OracleSearch(ps, pool).search(target=tuple(point))


def enumerate_interpretation(ps: ProofStructure, atom_pool) -> set:
    """All experiment results whose visible atoms are drawn from atom_pool.

    Complete for membership queries over points using only those atoms.
    """
    out: set = set()
    _OracleSearch(ps, sorted(atom_pool)).search(target=None, collect=out)
    return out
