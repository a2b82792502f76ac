"""Multiplicative formulas and proof structures.

A proof structure is a set of cells wired through typed ports.  Ports are
directed edges: each is the principal (outgoing) port of exactly one cell and
an auxiliary (incoming) port of at most one.  Ports that are auxiliary of no
cell are the conclusions, kept in a declared total order.
"""

import re
from dataclasses import dataclass
from enum import Enum

from .errors import ParseError, ValidationError


# ---------------------------------------------------------------------------
# Formulas


class Formula:
    """Base class of formula trees."""


@dataclass(frozen=True)
class PropVar(Formula):
    name: str


@dataclass(frozen=True)
class DualVar(Formula):
    name: str


@dataclass(frozen=True)
class One(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Tensor(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Par(Formula):
    left: Formula
    right: Formula


ONE = One()
BOT = Bot()


def dual(a: Formula) -> Formula:
    """Linear negation.  Involutive; negation on compounds is computed, never stored."""
    if isinstance(a, PropVar):
        return DualVar(a.name)
    if isinstance(a, DualVar):
        return PropVar(a.name)
    if isinstance(a, One):
        return BOT
    if isinstance(a, Bot):
        return ONE
    if isinstance(a, Tensor):
        return Par(dual(a.left), dual(a.right))
    if isinstance(a, Par):
        return Tensor(dual(a.left), dual(a.right))
    raise TypeError(f"not a formula: {a!r}")


def atomic_leaves(a: Formula) -> int:
    """Number of propositional-variable leaves (units do not count)."""
    if isinstance(a, (PropVar, DualVar)):
        return 1
    if isinstance(a, (Tensor, Par)):
        return atomic_leaves(a.left) + atomic_leaves(a.right)
    return 0


# Precedence levels for printing: par < tensor < atoms.
_PREC_PAR, _PREC_TENSOR, _PREC_ATOM = 1, 2, 3


def _prec(a: Formula) -> int:
    if isinstance(a, Par):
        return _PREC_PAR
    if isinstance(a, Tensor):
        return _PREC_TENSOR
    return _PREC_ATOM


def format_formula(a: Formula, min_prec: int = _PREC_PAR) -> str:
    if isinstance(a, PropVar):
        s = a.name
    elif isinstance(a, DualVar):
        s = a.name + "^"
    elif isinstance(a, One):
        s = "1"
    elif isinstance(a, Bot):
        s = "bot"
    elif isinstance(a, Tensor):
        # right associative, binds tighter than par
        s = f"{format_formula(a.left, _PREC_ATOM)} * {format_formula(a.right, _PREC_TENSOR)}"
    else:
        s = f"{format_formula(a.left, _PREC_TENSOR)} | {format_formula(a.right, _PREC_PAR)}"
    if _prec(a) < min_prec:
        return f"({s})"
    return s


_FORMULA_TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[*|^()]))")


def _tokenize_formula(text: str):
    tokens = []
    i = 0
    while i < len(text):
        m = _FORMULA_TOKEN.match(text, i)
        if not m:
            if text[i:].strip():
                raise ParseError(f"unexpected character {text[i:].strip()[0]!r}", pos=i)
            break
        i = m.end()
        if m.lastgroup is None:
            break
        tokens.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
    tokens.append(("end", "", len(text)))
    return tokens


class _FormulaParser:
    def __init__(self, text: str):
        self.tokens = _tokenize_formula(text)
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        t = self.tokens[self.k]
        self.k += 1
        return t

    def parse(self) -> Formula:
        f = self.parse_par()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {value!r}", pos=pos)
        return f

    def parse_par(self) -> Formula:
        left = self.parse_tensor()
        if self.peek()[:2] == ("sym", "|"):
            self.next()
            return Par(left, self.parse_par())
        return left

    def parse_tensor(self) -> Formula:
        left = self.parse_atom()
        if self.peek()[:2] == ("sym", "*"):
            self.next()
            return Tensor(left, self.parse_tensor())
        return left

    def parse_atom(self) -> Formula:
        kind, value, pos = self.next()
        if kind == "num":
            if value != "1":
                raise ParseError(f"unexpected number {value!r}", pos=pos)
            return ONE
        if kind == "ident":
            if value == "bot":
                return BOT
            if self.peek()[:2] == ("sym", "^"):
                self.next()
                return DualVar(value)
            return PropVar(value)
        if (kind, value) == ("sym", "("):
            f = self.parse_par()
            kind, value, pos = self.next()
            if (kind, value) != ("sym", ")"):
                raise ParseError("expected ')'", pos=pos)
            return f
        raise ParseError(f"unexpected {value!r}" if value else "unexpected end of input", pos=pos)


def parse_formula(text: str) -> Formula:
    """Parse `ident | ident^ | 1 | bot | F * F | F | F | (F)`; `*` binds tighter."""
    return _FormulaParser(text).parse()


# ---------------------------------------------------------------------------
# Cells and proof structures


class CellKind(Enum):
    AX = "ax"
    CUT = "cut"
    TENSOR = "tensor"
    PAR = "par"
    ONE = "one"
    BOT = "bot"


_PRINCIPAL_ARITY = {
    CellKind.AX: 2,
    CellKind.CUT: 0,
    CellKind.TENSOR: 1,
    CellKind.PAR: 1,
    CellKind.ONE: 1,
    CellKind.BOT: 1,
}

_AUX_ARITY = {
    CellKind.AX: 0,
    CellKind.CUT: 2,
    CellKind.TENSOR: 2,
    CellKind.PAR: 2,
    CellKind.ONE: 0,
    CellKind.BOT: 0,
}


@dataclass(frozen=True)
class Cell:
    cid: str
    kind: CellKind
    principal: tuple[str, ...]
    auxiliary: tuple[str, ...]


@dataclass(frozen=True)
class ProofStructure:
    ports: dict  # port id -> Formula
    cells: tuple[Cell, ...]
    conclusions: tuple[str, ...]

    def formula(self, port: str) -> Formula:
        return self.ports[port]

    def principal_cell(self, port: str) -> Cell | None:
        return self._principal_of().get(port)

    def aux_cell(self, port: str) -> Cell | None:
        return self._aux_of().get(port)

    def _principal_of(self) -> dict:
        m = getattr(self, "_prin", None)
        if m is None:
            m = {p: c for c in self.cells for p in c.principal}
            object.__setattr__(self, "_prin", m)
        return m

    def _aux_of(self) -> dict:
        m = getattr(self, "_aux", None)
        if m is None:
            m = {p: c for c in self.cells for p in c.auxiliary}
            object.__setattr__(self, "_aux", m)
        return m


def validate(ps: ProofStructure) -> list[str]:
    """Check all wiring and typing invariants; empty list means the structure is well formed."""
    bad: list[str] = []
    prin_count: dict = {p: 0 for p in ps.ports}
    aux_count: dict = {p: 0 for p in ps.ports}

    for c in ps.cells:
        if len(c.principal) != _PRINCIPAL_ARITY[c.kind]:
            bad.append(f"cell {c.cid}: {c.kind.value} takes {_PRINCIPAL_ARITY[c.kind]} principal port(s)")
        if len(c.auxiliary) != _AUX_ARITY[c.kind]:
            bad.append(f"cell {c.cid}: {c.kind.value} takes {_AUX_ARITY[c.kind]} auxiliary port(s)")
        for p in c.principal + c.auxiliary:
            if p not in ps.ports:
                bad.append(f"cell {c.cid}: unknown port {p}")
        for p in c.principal:
            if p in prin_count:
                prin_count[p] += 1
        for p in c.auxiliary:
            if p in aux_count:
                aux_count[p] += 1

    for p, n in prin_count.items():
        if n != 1:
            bad.append(f"port {p}: principal of {n} cells (expected exactly 1)")
    for p, n in aux_count.items():
        if n > 1:
            bad.append(f"port {p}: auxiliary of {n} cells (at most 1 allowed)")

    for c in ps.cells:
        if any(p not in ps.ports for p in c.principal + c.auxiliary):
            continue  # already reported
        tp = ps.ports
        if c.kind is CellKind.AX and len(c.principal) == 2:
            p, q = c.principal
            if tp[q] != dual(tp[p]):
                bad.append(f"cell {c.cid}: axiom ports must carry dual formulas")
        elif c.kind is CellKind.CUT and len(c.auxiliary) == 2:
            p, q = c.auxiliary
            if tp[q] != dual(tp[p]):
                bad.append(f"cell {c.cid}: cut ports must carry dual formulas")
        elif c.kind in (CellKind.TENSOR, CellKind.PAR) and len(c.auxiliary) == 2 and len(c.principal) == 1:
            p1, p2 = c.auxiliary
            (q,) = c.principal
            want = Tensor(tp[p1], tp[p2]) if c.kind is CellKind.TENSOR else Par(tp[p1], tp[p2])
            if tp[q] != want:
                bad.append(f"cell {c.cid}: principal type mismatch "
                           f"(expected {format_formula(want)}, got {format_formula(tp[q])})")
        elif c.kind is CellKind.ONE and len(c.principal) == 1:
            if tp[c.principal[0]] != ONE:
                bad.append(f"cell {c.cid}: principal of a one cell must have formula 1")
        elif c.kind is CellKind.BOT and len(c.principal) == 1:
            if tp[c.principal[0]] != BOT:
                bad.append(f"cell {c.cid}: principal of a bot cell must have formula bot")

    computed = {p for p in ps.ports if prin_count[p] >= 1 and aux_count[p] == 0}
    declared = list(ps.conclusions)
    if len(set(declared)) != len(declared):
        bad.append("conclusions: duplicate port")
    for p in declared:
        if p not in ps.ports:
            bad.append(f"conclusions: unknown port {p}")
    if not bad and set(declared) != computed:
        missing = sorted(computed - set(declared))
        extra = sorted(set(declared) - computed)
        if missing:
            bad.append(f"conclusions: missing non-auxiliary port(s) {', '.join(missing)}")
        if extra:
            bad.append(f"conclusions: port(s) {', '.join(extra)} are not conclusions")
    return bad


# ---------------------------------------------------------------------------
# File format
#
#   port <id> : <formula>
#   cell <id> : ax(<p>, <q>)               principal pair
#   cell <id> : cut(<p>, <q>)              auxiliary pair
#   cell <id> : tensor(<p1>, <p2> ; <q>)   aux pair ; principal
#   cell <id> : par(<p1>, <p2> ; <q>)
#   cell <id> : one(<p>)
#   cell <id> : bot(<p>)
#   conclusions: <p1>, <p2>, ...
#
# '#' starts a comment; blank lines are ignored.

_ID = r"[A-Za-z0-9_]+"
_PORT_LINE = re.compile(rf"^port\s+({_ID})\s*:\s*(.+)$")
_CELL_LINE = re.compile(rf"^cell\s+({_ID})\s*:\s*([a-z]+)\s*\((.*)\)\s*$")
_CONC_LINE = re.compile(r"^conclusions\s*:\s*(.*)$")


def _split_ids(text: str, lineno: int) -> list[str]:
    if not text.strip():
        return []
    out = []
    for part in text.split(","):
        part = part.strip()
        if not re.fullmatch(_ID, part or ""):
            raise ParseError(f"bad port id {part!r}", line=lineno)
        out.append(part)
    return out


def parse_proof_structure(text: str) -> ProofStructure:
    """Parse and validate the line-based structure format."""
    ports: dict = {}
    cells: list[Cell] = []
    cell_ids: set = set()
    conclusions: tuple[str, ...] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _PORT_LINE.match(line)
        if m:
            pid, ftext = m.group(1), m.group(2)
            if pid in ports:
                raise ParseError(f"duplicate port {pid}", line=lineno)
            try:
                ports[pid] = parse_formula(ftext)
            except ParseError as e:
                raise ParseError(f"in formula for port {pid}: {e}", line=lineno) from None
            continue
        m = _CELL_LINE.match(line)
        if m:
            cid, kind_name, args = m.groups()
            if cid in cell_ids:
                raise ParseError(f"duplicate cell {cid}", line=lineno)
            cell_ids.add(cid)
            try:
                kind = CellKind(kind_name)
            except ValueError:
                raise ParseError(f"unknown cell kind {kind_name!r}", line=lineno) from None
            if kind in (CellKind.TENSOR, CellKind.PAR):
                halves = args.split(";")
                if len(halves) != 2:
                    raise ParseError(f"{kind_name} expects '<p1>, <p2> ; <q>'", line=lineno)
                aux = _split_ids(halves[0], lineno)
                prin = _split_ids(halves[1], lineno)
                if len(aux) != 2 or len(prin) != 1:
                    raise ParseError(f"{kind_name} expects two auxiliary ports and one principal", line=lineno)
                cells.append(Cell(cid, kind, tuple(prin), tuple(aux)))
            else:
                ids = _split_ids(args, lineno)
                want = _PRINCIPAL_ARITY[kind] + _AUX_ARITY[kind]
                if len(ids) != want:
                    raise ParseError(f"{kind_name} expects {want} port(s)", line=lineno)
                if kind is CellKind.CUT:
                    cells.append(Cell(cid, kind, (), tuple(ids)))
                else:
                    cells.append(Cell(cid, kind, tuple(ids), ()))
            continue
        m = _CONC_LINE.match(line)
        if m:
            if conclusions is not None:
                raise ParseError("duplicate conclusions line", line=lineno)
            conclusions = tuple(_split_ids(m.group(1), lineno))
            continue
        raise ParseError(f"unrecognized line: {line!r}", line=lineno)

    if conclusions is None:
        raise ParseError("missing conclusions line", line=len(text.splitlines()) or 1)

    ps = ProofStructure(ports, tuple(cells), conclusions)
    violations = validate(ps)
    if violations:
        raise ValidationError(violations)
    return ps


def format_structure(ps: ProofStructure) -> str:
    """Emit the structure in the same line format parse_proof_structure reads."""
    lines = [f"port {p} : {format_formula(f)}" for p, f in ps.ports.items()]
    for c in ps.cells:
        if c.kind in (CellKind.TENSOR, CellKind.PAR):
            args = f"{c.auxiliary[0]}, {c.auxiliary[1]} ; {c.principal[0]}"
        elif c.kind is CellKind.CUT:
            args = ", ".join(c.auxiliary)
        else:
            args = ", ".join(c.principal)
        lines.append(f"cell {c.cid} : {c.kind.value}({args})")
    lines.append("conclusions: " + ", ".join(ps.conclusions))
    return "\n".join(lines) + "\n"


def load_structure(path) -> ProofStructure:
    with open(path, encoding="utf-8") as fh:
        return parse_proof_structure(fh.read())
