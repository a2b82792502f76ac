"""Token machine deciding membership of a point in a structure's interpretation.

A configuration assigns every port a finite signed series of relational terms
with coefficients in {-1, 0, +1} (absent port = zero).  Two transition kinds
move the machine:

* displacement: a cell fires one instance of its per-kind template and the
  instance is added to the configuration (x' = x + d).  Axioms and cuts
  subtract/add a witness term on their port pair, units retract (), and
  tensor/par cells place two fresh variables on their auxiliary ports against
  the paired variables on the principal.
* unification: a port holding two terms of opposite sign is resolved by their
  most general unifier, applied to every term of every port.

The scheduler runs token-driven instances only: the witness of an axiom or cut
is a term already present with the consuming sign on one of the cell's ports,
so each displacement zeroes the port that drove it (possibly only after the
unification it mandates).  A run accepts when the configuration is all zeros.

Determinism: ports are ordered (numeric ids numerically, others
lexicographically); the scheduler always serves the lowest pending port, picks
witnesses in rendered-term order, and resolves mandated unifications at the
fired cell's principal ports first.  Fresh variables are numbered from a
per-run counter, so traces are byte-stable.
"""

import heapq
import itertools
from dataclasses import dataclass

from .errors import InputError
from .mll import CellKind, Cell, ProofStructure
from .relsem import (
    UNIT,
    FreshVars,
    Pair,
    RelTerm,
    UnificationError,
    apply_subst,
    mgu,
    render_term,
    validate_point,
)

Series = dict  # RelTerm -> coefficient in {-1, +1}
Configuration = dict  # port id -> Series


def series_add(a: Series, b: Series) -> Series | None:
    """Pointwise sum, defined only while every coefficient stays in {-1, 0, +1}."""
    out = dict(a)
    for term, c in b.items():
        n = out.pop(term, 0) + c
        if n:
            if n < -1 or n > 1:
                return None
            out[term] = n
    return out


def config_is_zero(x: Configuration) -> bool:
    return all(not s for s in x.values())


def initial_config(ps: ProofStructure, point) -> Configuration:
    """Conclusions carry their point components with sign +1; all else is zero."""
    point = list(point)
    validate_point(ps, point)
    return {p: {t: 1} for p, t in zip(ps.conclusions, point)}


@dataclass(frozen=True)
class Displacement:
    cell: str
    per_port: dict  # port -> Series, zero outside the cell's ports
    witness: RelTerm | None  # term for ax/cut, fresh-variable pair for tensor/par


@dataclass(frozen=True)
class DispEvent:
    cell: str
    witness: RelTerm | None


@dataclass(frozen=True)
class UnifEvent:
    port: str
    subst: dict


@dataclass
class RunResult:
    accepted: bool
    events: list
    final: Configuration
    reason: str | None
    displacements: int
    unifications: int


def _make_displacement(cell: Cell, witness, fresh) -> Displacement:
    kind = cell.kind
    if kind is CellKind.AX:
        p, q = cell.principal
        return Displacement(cell.cid, {p: {witness: -1}, q: {witness: -1}}, witness)
    if kind is CellKind.CUT:
        p, q = cell.auxiliary
        return Displacement(cell.cid, {p: {witness: 1}, q: {witness: 1}}, witness)
    if kind in (CellKind.ONE, CellKind.BOT):
        (p,) = cell.principal
        return Displacement(cell.cid, {p: {UNIT: -1}}, None)
    p1, p2 = cell.auxiliary
    (q,) = cell.principal
    w = witness if witness is not None else Pair(fresh(), fresh())
    return Displacement(cell.cid, {p1: {w.fst: 1}, p2: {w.snd: 1}, q: {w: -1}}, w)


def _signed_terms(series: Series, sign: int) -> list:
    out = [t for t, c in series.items() if c * sign > 0]
    if len(out) > 1:
        out.sort(key=lambda t: (bool(t.vars), render_term(t)))  # ground first
    return out


def delta_instances(ps: ProofStructure, cell: Cell, x: Configuration, fresh=None) -> list:
    """Token-driven instances of the cell's template relative to x.

    Axiom/cut instances take each term present with the consuming sign on one
    of the cell's ports as witness; tensor/par and unit cells yield their one
    instance when a consuming-sign token sits on them, and nothing otherwise.
    """
    if fresh is None:
        avoid = {v for s in x.values() for t in s for v in t.vars}
        fresh = FreshVars(avoid=avoid)
    kind = cell.kind
    if kind is CellKind.AX:
        p, q = cell.principal
        witnesses = dict.fromkeys(
            _signed_terms(x.get(p, {}), +1) + _signed_terms(x.get(q, {}), +1)
        )
        return [_make_displacement(cell, w, fresh) for w in witnesses]
    if kind is CellKind.CUT:
        p, q = cell.auxiliary
        witnesses = dict.fromkeys(
            _signed_terms(x.get(p, {}), -1) + _signed_terms(x.get(q, {}), -1)
        )
        return [_make_displacement(cell, w, fresh) for w in witnesses]
    if kind in (CellKind.ONE, CellKind.BOT):
        if _signed_terms(x.get(cell.principal[0], {}), +1):
            return [_make_displacement(cell, None, fresh)]
        return []
    driven = _signed_terms(x.get(cell.principal[0], {}), +1) or any(
        _signed_terms(x.get(p, {}), -1) for p in cell.auxiliary
    )
    return [_make_displacement(cell, None, fresh)] if driven else []


def step_displacement(x: Configuration, d: Displacement) -> Configuration | None:
    """x' = x + d, or None when some port sum leaves {-1, 0, +1}."""
    out = dict(x)
    for port, delta in d.per_port.items():
        s = series_add(out.get(port, {}), delta)
        if s is None:
            return None
        if s:
            out[port] = s
        else:
            out.pop(port, None)
    return out


class UnificationClash(Exception):
    """An opposite-sign pair that does not unify; the run cannot succeed."""

    def __init__(self, port: str, left: RelTerm, right: RelTerm):
        super().__init__(f"clash at {port}: {render_term(left)} vs {render_term(right)}")
        self.port = port
        self.left = left
        self.right = right


class CoefficientOverflow(Exception):
    def __init__(self, port: str):
        super().__init__(f"coefficient overflow at {port}")
        self.port = port


def _rebuild_series(series: Series, s: dict, port: str) -> Series:
    out: Series = {}
    for t, c in series.items():
        t2 = apply_subst(s, t)
        n = out.pop(t2, 0) + c
        if n:
            if n < -1 or n > 1:
                raise CoefficientOverflow(port)
            out[t2] = n
    return out


def apply_subst_config(x: Configuration, s: dict) -> Configuration:
    """Apply a substitution to every term of every port, renormalizing series."""
    out: Configuration = {}
    for port, series in x.items():
        ns = _rebuild_series(series, s, port)
        if ns:
            out[port] = ns
    return out


def _pick_unifiable_pair(series: Series, port: str):
    """First unifiable (+1, -1) pair in rendered order; clash if none unifies."""
    pos = _signed_terms(series, +1)
    neg = _signed_terms(series, -1)
    first_error = None
    for a1 in pos:
        for a2 in neg:
            try:
                return a1, a2, mgu(a1, a2)
            except UnificationError as e:
                if first_error is None:
                    first_error = e
    if first_error is None:
        raise ValueError(f"port {port} holds no opposite-sign pair")
    raise UnificationClash(port, first_error.left, first_error.right)


def step_unification(x: Configuration, p: str) -> tuple:
    """Resolve an opposite-sign pair at p; returns (new configuration, unifier).

    Raises UnificationClash when no pair at p unifies, and ValueError when the
    port holds no opposite-sign pair at all.
    """
    _, _, s = _pick_unifiable_pair(x.get(p, {}), p)
    return apply_subst_config(x, s), s


def _port_key(p: str):
    return (0, int(p)) if p.isdigit() else (1, p)


class _Reject(Exception):
    def __init__(self, reason: str):
        self.reason = reason


class _Scheduler:
    """Worklist run over a mutable configuration with a variable-to-ports index.

    Substitutions touch only the ports whose series mention a bound variable,
    and ports driven by a ground token are always served before ports whose
    only driving tokens carry variables.  Variable-driven firings (the
    speculative moves that hidden cycles need) therefore happen only when
    nothing ground can move, which keeps variable-carrying terms small and
    runs on large structures linear.  The pure transition functions above
    replay every emitted trace to the same configurations.
    """

    def __init__(self, ps: ProofStructure, point, max_displacements=None, fresh_prefix="_g"):
        self.ps = ps
        self.cfg: Configuration = {
            p: dict(s) for p, s in initial_config(ps, point).items()
        }
        self.prin = {p: c for c in ps.cells for p in c.principal}
        self.aux = {p: c for c in ps.cells for p in c.auxiliary}
        self.key = {p: _port_key(p) for p in ps.ports}
        self.fresh = FreshVars(prefix=fresh_prefix)
        self.cap = max_displacements if max_displacements is not None else 2 * len(ps.cells)
        self.heap: list = []  # ports with a pending examination
        self.deferred: list = []  # ports whose only driving tokens carry variables
        self.pending: set = set()
        self.in_deferred: set = set()
        self.var_ports: dict = {}
        self.events: list = []
        self.ndisp = 0
        self.nunif = 0

    # -- worklist -----------------------------------------------------------

    def _push(self, port: str):
        if port not in self.pending and self.cfg.get(port):
            self.pending.add(port)
            heapq.heappush(self.heap, (self.key[port], port))

    def _defer(self, port: str):
        if port not in self.in_deferred:
            self.in_deferred.add(port)
            heapq.heappush(self.deferred, (self.key[port], port))

    def _set_series(self, port: str, series: Series, reg_vars=None):
        # A displacement blocked only by a partner port's content is retried
        # by the full rescan in run(), so changed ports alone are requeued.
        if series:
            self.cfg[port] = series
            if reg_vars is None:
                reg_vars = {v for t in series for v in t.vars}
            for v in reg_vars:
                self.var_ports.setdefault(v, set()).add(port)
        else:
            self.cfg.pop(port, None)
        self._push(port)

    # -- transitions --------------------------------------------------------

    def _commit(self, cell: Cell, witness) -> bool:
        d = _make_displacement(cell, witness, self.fresh)
        staged = {}
        for port, delta in d.per_port.items():
            s = series_add(self.cfg.get(port, {}), delta)
            if s is None:
                return False
            staged[port] = s
        for port, s in staged.items():
            self._set_series(port, s)
        self.events.append(DispEvent(cell.cid, d.witness))
        self.ndisp += 1
        if self.ndisp > self.cap:
            raise _Reject("bound exceeded")
        self._mandated_unifications(cell, list(staged))
        return True

    def _try_fire_from(self, port: str, allow_var_driven: bool) -> bool:
        """Attempt one displacement driven by this port.  Returns whether one
        fired; as a side effect defers the port when only variable-carrying
        tokens could drive it."""
        series = self.cfg.get(port)
        if not series:
            return False
        var_driven_possible = False
        if len(series) == 1:
            ((t, c),) = series.items()
            pos, neg = ([t], []) if c > 0 else ([], [t])
        else:
            pos, neg = _signed_terms(series, +1), _signed_terms(series, -1)
        if pos:
            cell = self.prin[port]
            kind = cell.kind
            if kind is CellKind.AX:
                for w in pos:
                    if (allow_var_driven or not w.vars) and self._commit(cell, w):
                        return True
                var_driven_possible |= any(w.vars for w in pos)
            else:  # tensor, par, one, bot: the one instance, driven by any + token
                if allow_var_driven or any(not w.vars for w in pos):
                    if self._commit(cell, None):
                        return True
                else:
                    var_driven_possible = True
        if neg:
            cell = self.aux.get(port)
            if cell is not None:
                if cell.kind is CellKind.CUT:
                    for w in neg:
                        if (allow_var_driven or not w.vars) and self._commit(cell, w):
                            return True
                    var_driven_possible |= any(w.vars for w in neg)
                else:  # tensor or par driven from an auxiliary port
                    if allow_var_driven or any(not w.vars for w in neg):
                        if self._commit(cell, None):
                            return True
                    else:
                        var_driven_possible = True
        if var_driven_possible and not allow_var_driven:
            self._defer(port)
        return False

    def _mandated_unifications(self, cell: Cell, dirty: list):
        while True:
            port = self._find_pair_port(cell, dirty)
            if port is None:
                return
            try:
                _, _, s = _pick_unifiable_pair(self.cfg[port], port)
            except UnificationClash as clash:
                raise _Reject(str(clash)) from None
            affected = set()
            for v in s:
                affected |= self.var_ports.pop(v, set())
            # Ports not mentioning a bound variable are fixed points of the
            # substitution, so only the indexed ones are rebuilt.  New
            # registrations come from the binding images alone; registrations
            # for untouched variables are already in place.
            new_vars = {v for t in s.values() for v in t.vars}
            staged = {}
            for q in sorted(affected, key=self.key.get):
                series = self.cfg.get(q)
                if series:
                    try:
                        staged[q] = _rebuild_series(series, s, q)
                    except CoefficientOverflow as e:
                        raise _Reject(str(e)) from None
            for q, ns in staged.items():
                self._set_series(q, ns, reg_vars=new_vars)
                dirty.append(q)
            self.events.append(UnifEvent(port, s))
            self.nunif += 1
            if self.nunif > self.cap:
                raise _Reject("bound exceeded")

    def _find_pair_port(self, cell: Cell, dirty: list):
        # The fired cell's principal ports are served first (that is where a
        # split token meets its fresh-variable pair), then its auxiliaries,
        # then any other port a cascading substitution disturbed, in the
        # order the disturbances happened.
        for port in itertools.chain(cell.principal, cell.auxiliary, dirty):
            series = self.cfg.get(port)
            if series and any(c > 0 for c in series.values()) and any(
                c < 0 for c in series.values()
            ):
                return port
        return None

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunResult:
        for port in list(self.cfg):
            self._push(port)
        try:
            rescanned = False
            while True:
                fired_any = False
                while self.heap:
                    _, port = heapq.heappop(self.heap)
                    if port not in self.pending:
                        continue
                    self.pending.discard(port)
                    if self._try_fire_from(port, allow_var_driven=False):
                        fired_any = True
                if self.deferred:
                    _, port = heapq.heappop(self.deferred)
                    self.in_deferred.discard(port)
                    if self._try_fire_from(port, allow_var_driven=True):
                        rescanned = False
                    continue
                if fired_any:
                    rescanned = False
                if config_is_zero(self.cfg):
                    return self._result(True, None)
                if rescanned:
                    return self._result(False, "stuck: no applicable transition")
                rescanned = True
                for port in list(self.cfg):
                    self._push(port)
        except _Reject as r:
            return self._result(False, r.reason)

    def _result(self, accepted: bool, reason) -> RunResult:
        final = {p: dict(s) for p, s in self.cfg.items() if s}
        return RunResult(accepted, self.events, final, reason, self.ndisp, self.nunif)


def normal_run(ps: ProofStructure, point, max_displacements=None, fresh_prefix="_g") -> RunResult:
    """Run the deterministic scheduler on the point placed at the conclusions."""
    for t in point:
        if t.vars:
            raise InputError(f"point component {render_term(t)} is not ground")
    return _Scheduler(ps, point, max_displacements, fresh_prefix).run()


def check(ps: ProofStructure, point) -> bool:
    """Does the machine accept the point?  Agrees with the exhaustive oracle."""
    return normal_run(ps, point).accepted


def replay_trace(ps: ProofStructure, point, events) -> Configuration:
    """Re-apply a recorded event list with the pure transition functions."""
    cells = {c.cid: c for c in ps.cells}
    x = initial_config(ps, point)
    for ev in events:
        if isinstance(ev, DispEvent):
            d = _make_displacement(cells[ev.cell], ev.witness, None)
            x2 = step_displacement(x, d)
            if x2 is None:
                raise ValueError(f"trace replays an unfirable displacement at cell {ev.cell}")
            x = x2
        else:
            x = apply_subst_config(x, ev.subst)
    return x


# ---------------------------------------------------------------------------
# Trace rendering (stable, line-oriented)


def format_subst(s: dict) -> str:
    return "{" + ", ".join(f"?{v}={render_term(t)}" for v, t in s.items()) + "}"


def format_event(ev) -> str:
    if isinstance(ev, DispEvent):
        witness = render_term(ev.witness) if ev.witness is not None else "()"
        return f"DISP {ev.cell} witness={witness}"
    return f"UNIF {ev.port} {format_subst(ev.subst)}"


def render_trace(result: RunResult) -> str:
    lines = [format_event(ev) for ev in result.events]
    lines.append("ACCEPT" if result.accepted else f"REJECT {result.reason}")
    return "\n".join(lines) + "\n"
