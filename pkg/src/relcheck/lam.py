"""Simply typed lambda terms and their multiset-refinement semantics.

A point refining an arrow type pairs a finite multiset of argument points with
a result point; membership of a point in a term's interpretation is decided
syntax-directed on the beta-normal form, with strict resource accounting: a
head variable consumes exactly one occurrence from its context multiset and
the remaining context is split, as a multiset sum, across the argument
sub-checks.  Duplicated uses therefore need duplicated context entries.
"""

import itertools
import re
from dataclasses import dataclass
from enum import Enum

from .errors import InputError, ParseError


# ---------------------------------------------------------------------------
# Simple types


class SimpleType:
    pass


@dataclass(frozen=True)
class Base(SimpleType):
    def __repr__(self):
        return "o"


@dataclass(frozen=True)
class Arrow(SimpleType):
    dom: SimpleType
    cod: SimpleType

    def __repr__(self):
        return format_type(self)


O = Base()
BOOL = Arrow(O, Arrow(O, O))


def format_type(t: SimpleType) -> str:
    if isinstance(t, Base):
        return "o"
    dom = format_type(t.dom)
    if isinstance(t.dom, Arrow):
        dom = f"({dom})"
    return f"{dom} -> {format_type(t.cod)}"


# ---------------------------------------------------------------------------
# Terms; equality and hashing are up to renaming of bound variables


class LambdaTerm:
    def _key(self, env: tuple):
        raise NotImplementedError

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, LambdaTerm):
            return NotImplemented
        return self._key(()) == other._key(())

    def __hash__(self):
        h = getattr(self, "_hash", None)
        if h is None:
            h = hash(self._key(()))
            object.__setattr__(self, "_hash", h)
        return h

    def __repr__(self):
        return format_term(self)


@dataclass(frozen=True, eq=False, repr=False)
class VarRef(LambdaTerm):
    name: str

    def _key(self, env):
        if self.name in env:
            return ("b", len(env) - 1 - env.index(self.name))
        return ("f", self.name)


@dataclass(frozen=True, eq=False, repr=False)
class Abs(LambdaTerm):
    binder: str
    binder_type: SimpleType
    body: LambdaTerm

    def _key(self, env):
        return ("l", self.binder_type, self.body._key(env + (self.binder,)))


@dataclass(frozen=True, eq=False, repr=False)
class App(LambdaTerm):
    fun: LambdaTerm
    arg: LambdaTerm

    def _key(self, env):
        return ("a", self.fun._key(env), self.arg._key(env))


def format_term(t: LambdaTerm) -> str:
    if isinstance(t, VarRef):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.binder}:{format_type(t.binder_type)}. {format_term(t.body)}"
    fun = format_term(t.fun)
    if isinstance(t.fun, Abs):
        fun = f"({fun})"
    arg = format_term(t.arg)
    if isinstance(t.arg, (App, Abs)):
        arg = f"({arg})"
    return f"{fun} {arg}"


TRUE = Abs("x", O, Abs("y", O, VarRef("x")))
FALSE = Abs("x", O, Abs("y", O, VarRef("y")))


# ---------------------------------------------------------------------------
# Refinement points


class RPoint:
    def __repr__(self):
        return format_rpoint(self)


@dataclass(frozen=True, eq=False, repr=False)
class RAtom(RPoint):
    name: str

    def __eq__(self, other):
        return self is other or (type(other) is RAtom and other.name == self.name)

    def __hash__(self):
        return hash(("ra", self.name))


def format_rpoint(p: RPoint) -> str:
    if isinstance(p, RAtom):
        return p.name
    inner = ", ".join(format_rpoint(q) for q in p.args)
    return f"[{inner}] -> {format_rpoint(p.result)}"


class Multiset:
    """Unordered collection with multiplicities; [a, a] differs from [a]."""

    __slots__ = ("items", "_hash")

    def __init__(self, items=()):
        self.items = tuple(sorted(items, key=format_rpoint))
        self._hash = hash(self.items)

    def __eq__(self, other):
        return isinstance(other, Multiset) and self.items == other.items

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def __repr__(self):
        return "[" + ", ".join(format_rpoint(p) for p in self.items) + "]"


EMPTY_MS = Multiset()


@dataclass(frozen=True, eq=False, repr=False)
class RArrow(RPoint):
    args: Multiset
    result: RPoint

    def __eq__(self, other):
        if self is other:
            return True
        return type(other) is RArrow and self.args == other.args and self.result == other.result

    def __hash__(self):
        return hash(("rw", self.args, self.result))


STAR = RAtom("*")
BOOL_TRUE_POINT = RArrow(Multiset([STAR]), RArrow(EMPTY_MS, STAR))


def refines(p: RPoint, t: SimpleType) -> bool:
    """Does the point refine the simple type shape-wise?"""
    if isinstance(t, Base):
        return isinstance(p, RAtom)
    return (
        isinstance(p, RArrow)
        and all(refines(q, t.dom) for q in p.args)
        and refines(p.result, t.cod)
    )


# ---------------------------------------------------------------------------
# Concrete syntax
#
#   types:  T ::= o | T -> T | (T)          (right associative)
#   terms:  M ::= x | \x:T. M | M M | (M)    (application is juxtaposition)
#   points: p ::= * | ident | [p, ..., p] -> p

_TOKEN = re.compile(
    r"\s*(?:(?P<arrow>->)|(?P<ident>[A-Za-z_][A-Za-z0-9_']*)"
    r"|(?P<star>\*)|(?P<sym>[\\:.(),\[\]]))"
)


def _tokenize(text: str) -> list:
    out = []
    i = 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        if not m or m.lastgroup is None:
            if text[i:].strip():
                raise ParseError(f"unexpected character {text[i:].strip()[0]!r}", pos=i)
            break
        i = m.end()
        out.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
    out.append(("end", "", len(text)))
    return out


class _LamParser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.k = 0

    def peek(self):
        return self.toks[self.k]

    def next(self):
        t = self.toks[self.k]
        self.k += 1
        return t

    def expect(self, kind, value=None):
        k, v, pos = self.next()
        if k != kind or (value is not None and v != value):
            raise ParseError(f"expected {value or kind!r}, found {v!r}", pos=pos)
        return v

    def at_end(self):
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {value!r}", pos=pos)

    # types ------------------------------------------------------------

    def type_(self) -> SimpleType:
        left = self.type_atom()
        if self.peek()[0] == "arrow":
            self.next()
            return Arrow(left, self.type_())
        return left

    def type_atom(self) -> SimpleType:
        kind, value, pos = self.next()
        if kind == "ident":
            if value != "o":
                raise ParseError(f"unknown base type {value!r} (only 'o' exists)", pos=pos)
            return O
        if (kind, value) == ("sym", "("):
            t = self.type_()
            self.expect("sym", ")")
            return t
        raise ParseError(f"expected a type, found {value!r}", pos=pos)

    # terms ------------------------------------------------------------

    def term(self) -> LambdaTerm:
        if self.peek()[:2] == ("sym", "\\"):
            self.next()
            name = self.expect("ident")
            self.expect("sym", ":")
            ty = self.type_()
            self.expect("sym", ".")
            return Abs(name, ty, self.term())
        t = self.term_atom()
        while True:
            kind, value, _ = self.peek()
            if kind == "ident" or (kind, value) == ("sym", "(") or (kind, value) == ("sym", "\\"):
                if (kind, value) == ("sym", "\\"):
                    return App(t, self.term())
                t = App(t, self.term_atom())
            else:
                return t

    def term_atom(self) -> LambdaTerm:
        kind, value, pos = self.next()
        if kind == "ident":
            return VarRef(value)
        if (kind, value) == ("sym", "("):
            t = self.term()
            self.expect("sym", ")")
            return t
        raise ParseError(f"expected a term, found {value!r}", pos=pos)

    # points -----------------------------------------------------------

    def point(self) -> RPoint:
        kind, value, pos = self.peek()
        if kind in ("ident", "star"):
            self.next()
            return RAtom(value)
        if (kind, value) == ("sym", "["):
            self.next()
            elems = []
            if self.peek()[:2] != ("sym", "]"):
                elems.append(self.point())
                while self.peek()[:2] == ("sym", ","):
                    self.next()
                    elems.append(self.point())
            self.expect("sym", "]")
            self.expect("arrow")
            return RArrow(Multiset(elems), self.point())
        raise ParseError(f"expected a point, found {value!r}", pos=pos)


def parse_type(text: str) -> SimpleType:
    p = _LamParser(text)
    t = p.type_()
    p.at_end()
    return t


def parse_term(text: str) -> LambdaTerm:
    p = _LamParser(text)
    t = p.term()
    p.at_end()
    return t


def parse_rpoint(text: str) -> RPoint:
    p = _LamParser(text)
    t = p.point()
    p.at_end()
    return t


# ---------------------------------------------------------------------------
# Typing and normalization


def typecheck(ctx, m: LambdaTerm) -> SimpleType:
    """Unique simple type of m under ctx (a list of (name, SimpleType))."""
    env = dict(ctx)

    def go(term, env):
        if isinstance(term, VarRef):
            if term.name not in env:
                raise InputError(f"unbound variable {term.name}")
            return env[term.name]
        if isinstance(term, Abs):
            inner = dict(env)
            inner[term.binder] = term.binder_type
            return Arrow(term.binder_type, go(term.body, inner))
        ft = go(term.fun, env)
        at = go(term.arg, env)
        if not isinstance(ft, Arrow):
            raise InputError(f"cannot apply a term of type {format_type(ft)}")
        if ft.dom != at:
            raise InputError(
                f"argument type mismatch: expected {format_type(ft.dom)}, got {format_type(at)}"
            )
        return ft.cod

    return go(m, env)


def free_vars(m: LambdaTerm) -> set:
    if isinstance(m, VarRef):
        return {m.name}
    if isinstance(m, Abs):
        return free_vars(m.body) - {m.binder}
    return free_vars(m.fun) | free_vars(m.arg)


def _fresh_name(base: str, avoid: set) -> str:
    name, n = base, 0
    while name in avoid:
        n += 1
        name = f"{base}{n}"
    return name


def substitute(m: LambdaTerm, name: str, value: LambdaTerm) -> LambdaTerm:
    """Capture-avoiding substitution of value for the free variable name."""
    if isinstance(m, VarRef):
        return value if m.name == name else m
    if isinstance(m, App):
        return App(substitute(m.fun, name, value), substitute(m.arg, name, value))
    if m.binder == name:
        return m
    if m.binder in free_vars(value) and name in free_vars(m.body):
        fresh = _fresh_name(m.binder, free_vars(value) | free_vars(m.body) | {name})
        body = substitute(m.body, m.binder, VarRef(fresh))
        return Abs(fresh, m.binder_type, substitute(body, name, value))
    return Abs(m.binder, m.binder_type, substitute(m.body, name, value))


_MAX_BETA_STEPS = 100_000


def normalize(m: LambdaTerm) -> LambdaTerm:
    """Beta-normal form.  Terminates for simply typable terms."""
    budget = [_MAX_BETA_STEPS]

    def go(term):
        if isinstance(term, VarRef):
            return term
        if isinstance(term, Abs):
            return Abs(term.binder, term.binder_type, go(term.body))
        fun = go(term.fun)
        arg = go(term.arg)
        if isinstance(fun, Abs):
            budget[0] -= 1
            if budget[0] < 0:
                raise InputError("reduction did not terminate; is the term simply typable?")
            return go(substitute(fun.body, fun.binder, arg))
        return App(fun, arg)

    return go(m)


def is_beta_normal(m: LambdaTerm) -> bool:
    if isinstance(m, VarRef):
        return True
    if isinstance(m, Abs):
        return is_beta_normal(m.body)
    return not isinstance(m.fun, Abs) and is_beta_normal(m.fun) and is_beta_normal(m.arg)


def _rename_apart(m: LambdaTerm, avoid: set) -> LambdaTerm:
    """Give every binder a name distinct from all others and from avoid."""
    def go(term, env):
        if isinstance(term, VarRef):
            return VarRef(env.get(term.name, term.name))
        if isinstance(term, App):
            return App(go(term.fun, env), go(term.arg, env))
        name = _fresh_name(term.binder, avoid)
        avoid.add(name)
        inner = dict(env)
        inner[term.binder] = name
        return Abs(name, term.binder_type, go(term.body, inner))

    return go(m, {})


# ---------------------------------------------------------------------------
# Multiset bookkeeping helpers


def _ms_remove_one(ms: Multiset, x: RPoint) -> Multiset:
    items = list(ms.items)
    items.remove(x)
    return Multiset(items)


def _ms_sum(a: Multiset, b: Multiset) -> Multiset:
    return Multiset(a.items + b.items)


def _ms_sub(a: Multiset, b: Multiset) -> Multiset | None:
    items = list(a.items)
    for x in b:
        if x not in items:
            return None
        items.remove(x)
    return Multiset(items)


def _ms_subsets(ms: Multiset) -> list:
    """All sub-multisets, smallest first, deterministically ordered."""
    groups = [(k, len(list(g))) for k, g in itertools.groupby(ms.items)]
    out = [[]]
    for elem, count in groups:
        out = [acc + [elem] * take for acc in out for take in range(count + 1)]
    subs = [Multiset(items) for items in out]
    subs.sort(key=lambda s: (len(s), tuple(format_rpoint(p) for p in s.items)))
    return subs


# ---------------------------------------------------------------------------
# Membership search with derivations

Ctx = tuple  # tuple of (name, Multiset), innermost binder last


@dataclass(frozen=True)
class AbsStep:
    ctx: Ctx
    point: RPoint
    binder: str
    body: "AbsStep | HeadStep"


@dataclass(frozen=True)
class HeadStep:
    ctx: Ctx
    point: RPoint
    head: str
    gamma: RPoint
    subs: tuple  # sub-derivations for the argument elements, in order


def consumed_context(d) -> dict:
    """Total multiset consumption of a derivation, per context name."""
    if isinstance(d, AbsStep):
        out = consumed_context(d.body)
        out.pop(d.binder, None)
        return out
    out: dict = {d.head: Multiset([d.gamma])}
    for sub in d.subs:
        for name, ms in consumed_context(sub).items():
            out[name] = _ms_sum(out.get(name, EMPTY_MS), ms)
    return out


def _head_spine(m: LambdaTerm):
    args = []
    while isinstance(m, App):
        args.append(m.arg)
        m = m.fun
    return m, list(reversed(args))


def _arrow_spine(p: RPoint, k: int):
    """Peel k argument multisets; None when the point is not that deep."""
    sets = []
    for _ in range(k):
        if not isinstance(p, RArrow):
            return None, None
        sets.append(p.args)
        p = p.result
    return sets, p


class _Search:
    def __init__(self):
        self.memo: dict = {}

    def derive(self, term: LambdaTerm, point: RPoint, ctx: Ctx):
        key = (id(term), point, ctx)
        if key in self.memo:
            return self.memo[key]
        out = self._derive(term, point, ctx)
        self.memo[key] = out
        return out

    def _derive(self, term, point, ctx):
        if isinstance(term, Abs):
            assert isinstance(point, RArrow), "refinement precondition violated"
            body = self.derive(term.body, point.result, ctx + ((term.binder, point.args),))
            if body is None:
                return None
            return AbsStep(ctx, point, term.binder, body)

        head, args = _head_spine(term)
        assert isinstance(head, VarRef), "term is not beta-normal"
        env = dict(ctx)
        candidates = dict.fromkeys(env.get(head.name, EMPTY_MS))
        for gamma in candidates:
            arg_sets, res = _arrow_spine(gamma, len(args))
            if arg_sets is None or res != point:
                continue
            remaining = tuple(
                (n, _ms_remove_one(ms, gamma) if n == head.name else ms) for n, ms in ctx
            )
            requirements = [
                (arg, beta) for arg, aset in zip(args, arg_sets) for beta in aset
            ]
            subs = self._distribute(requirements, remaining)
            if subs is not None:
                return HeadStep(ctx, point, head.name, gamma, tuple(subs))
        return None

    def _distribute(self, requirements, ctx: Ctx):
        """Split ctx exactly across the requirement checks, multiset-summing."""
        if not requirements:
            return [] if all(len(ms) == 0 for _, ms in ctx) else None
        (term, beta), rest = requirements[0], requirements[1:]
        if not rest:
            d = self.derive(term, beta, ctx)
            return [d] if d is not None else None
        names = [n for n, _ in ctx]
        for split in itertools.product(*[_ms_subsets(ms) for _, ms in ctx]):
            sub_ctx = tuple(zip(names, split))
            d = self.derive(term, beta, sub_ctx)
            if d is None:
                continue
            leftover = tuple(
                (n, _ms_sub(ms, taken)) for (n, ms), taken in zip(ctx, split)
            )
            ds = self._distribute(rest, leftover)
            if ds is not None:
                return [d] + ds
        return None


def derive_point(ctx, m: LambdaTerm, sigma: SimpleType, alpha: RPoint):
    """Derivation witnessing membership, or None.  ctx is a list of
    (name, SimpleType, Multiset) entries matching the typing context."""
    types = [(n, t) for n, t, _ in ctx]
    if typecheck(types, m) != sigma:
        raise InputError("term does not have the stated simple type in this context")
    if not is_beta_normal(m):
        raise InputError("term is not beta-normal; normalize before checking")
    if not refines(alpha, sigma):
        raise InputError("point does not refine the stated simple type")
    for n, t, ms in ctx:
        if not all(refines(q, t) for q in ms):
            raise InputError(f"context multiset for {n} does not refine its type")
    avoid = {n for n, _, _ in ctx} | free_vars(m)
    m = _rename_apart(m, avoid)
    base: Ctx = tuple((n, ms) for n, _, ms in ctx)
    return _Search().derive(m, alpha, base)


def check_point(ctx, m: LambdaTerm, sigma: SimpleType, alpha: RPoint) -> bool:
    """Membership of (ctx multisets, alpha) in the term's interpretation."""
    return derive_point(ctx, m, sigma, alpha) is not None


def check_judgment(m: LambdaTerm, sigma: SimpleType, alpha: RPoint) -> bool:
    """Closed-term membership; the term is normalized first, which preserves
    the interpretation."""
    if typecheck([], m) != sigma:
        raise InputError("term does not have the stated simple type")
    return check_point([], normalize(m), sigma, alpha)


class BoolVerdict(Enum):
    IS_TRUE = "true"
    IS_FALSE = "false"


def boolean_eval(m: LambdaTerm) -> BoolVerdict:
    """Classify a closed term of the boolean type o -> o -> o.

    The separating point accepts exactly the terms beta-eta-equal to
    \\x:o.\\y:o. x; the only other closed normal inhabitant is its mirror.
    """
    if typecheck([], m) != BOOL:
        raise InputError("boolean evaluation needs a closed term of type o -> o -> o")
    if check_judgment(m, BOOL, BOOL_TRUE_POINT):
        return BoolVerdict.IS_TRUE
    return BoolVerdict.IS_FALSE
