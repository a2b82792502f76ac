"""Structure generators: the linear benchmark chain and random valid structures."""

import random

from .mll import (
    BOT,
    Cell,
    CellKind,
    DualVar,
    ONE,
    One,
    Par,
    PropVar,
    ProofStructure,
    Tensor,
    atomic_leaves,
    dual,
    validate,
)
from .relsem import Atom, Pair, RelTerm


def chain_structure(n: int) -> ProofStructure:
    """n axioms over X/X^, their left legs gathered by a balanced tensor tree
    (first conclusion), their right legs by the mirrored par tree, which is cut
    against one closing axiom whose far leg is the second conclusion.

    3n cells in total; an accepting run fires each exactly once.
    """
    if n < 1:
        raise ValueError("need at least one axiom")
    x = PropVar("X")
    xd = DualVar("X")
    ports: dict = {}
    cells: list[Cell] = []
    for i in range(n):
        ports[f"l{i}"] = x
        ports[f"r{i}"] = xd
        cells.append(Cell(f"ax{i}", CellKind.AX, (f"l{i}", f"r{i}"), ()))

    counter = [0]

    def build(lo: int, hi: int):
        if hi - lo == 1:
            return (f"l{lo}", x), (f"r{lo}", xd)
        mid = (lo + hi) // 2
        (tl, fl), (pl, gl) = build(lo, mid)
        (tr, fr), (pr, gr) = build(mid, hi)
        j = counter[0]
        counter[0] += 1
        tport, tform = f"s{j}", Tensor(fl, fr)
        pport, pform = f"q{j}", Par(gl, gr)
        ports[tport] = tform
        ports[pport] = pform
        cells.append(Cell(f"t{j}", CellKind.TENSOR, (tport,), (tl, tr)))
        cells.append(Cell(f"p{j}", CellKind.PAR, (pport,), (pl, pr)))
        return (tport, tform), (pport, pform)

    (troot, tform), (proot, pform) = build(0, n)
    ports["u"] = tform
    ports["w"] = pform
    cells.append(Cell("kc", CellKind.CUT, (), (proot, "u")))
    cells.append(Cell("axtop", CellKind.AX, ("u", "w"), ()))
    return ProofStructure(ports, tuple(cells), (troot, "w"))


def chain_point(n: int) -> list[RelTerm]:
    """The point the chain accepts: the balanced pair tree over n distinct atoms,
    once per conclusion."""

    def build(lo: int, hi: int) -> RelTerm:
        if hi - lo == 1:
            return Atom(f"a{lo}")
        mid = (lo + hi) // 2
        return Pair(build(lo, mid), build(mid, hi))

    tree = build(0, n)
    return [tree, tree]


# ---------------------------------------------------------------------------
# Random valid structures, sized for exhaustive oracle checking


def _random_formula(rng: random.Random, budget: int):
    if budget <= 1 or rng.random() < 0.55:
        r = rng.random()
        if r < 0.45:
            return PropVar(rng.choice("XY"))
        if r < 0.85:
            return DualVar(rng.choice("XY"))
        return ONE if rng.random() < 0.5 else BOT
    split = rng.randint(1, budget - 1)
    left = _random_formula(rng, split)
    right = _random_formula(rng, budget - split)
    return Tensor(left, right) if rng.random() < 0.5 else Par(left, right)


def random_structure(
    rng: random.Random,
    max_cells: int = 8,
    max_axiom_leaves: int = 5,
    max_conclusion_leaves: int = 5,
) -> ProofStructure:
    """A random well-formed structure small enough for the exhaustive oracle.

    Axioms and units seed a pool of open ports; tensor/par cells pair them up
    and cuts close dual pairs (which is what hides parts of the structure from
    the conclusions).  Leaf budgets keep the oracle's search space tiny.
    """
    for _ in range(500):
        ps = _try_random(rng, max_cells, max_axiom_leaves, max_conclusion_leaves)
        if ps is not None:
            return ps
    raise RuntimeError("could not generate a structure within the given budgets")


def _try_random(rng, max_cells, max_axiom_leaves, max_conclusion_leaves):
    ports: dict = {}
    cells: list[Cell] = []
    open_ports: list = []  # (port id, formula)
    leaf_total = [0]
    counters = {"p": 0, "c": 0}

    def new_port(f) -> str:
        name = f"p{counters['p']}"
        counters["p"] += 1
        ports[name] = f
        return name

    def new_cell_id() -> str:
        name = f"c{counters['c']}"
        counters["c"] += 1
        return name

    def add_generator():
        if rng.random() < 0.8:
            budget = max(1, max_axiom_leaves - leaf_total[0])
            f = _random_formula(rng, budget)
            if leaf_total[0] + atomic_leaves(f) > max_axiom_leaves:
                f = ONE if rng.random() < 0.5 else BOT
            leaf_total[0] += atomic_leaves(f)
            p, q = new_port(f), new_port(dual(f))
            cells.append(Cell(new_cell_id(), CellKind.AX, (p, q), ()))
            open_ports.append((p, f))
            open_ports.append((q, dual(f)))
        else:
            unit = ONE if rng.random() < 0.5 else BOT
            p = new_port(unit)
            kind = CellKind.ONE if isinstance(unit, One) else CellKind.BOT
            cells.append(Cell(new_cell_id(), kind, (p,), ()))
            open_ports.append((p, unit))

    for _ in range(rng.randint(1, 3)):
        add_generator()

    while len(cells) < max_cells:
        dual_pairs = [
            (i, j)
            for i in range(len(open_ports))
            for j in range(i + 1, len(open_ports))
            if open_ports[j][1] == dual(open_ports[i][1])
        ]
        ops = ["stop", "stop"]
        if len(open_ports) >= 2:
            ops += ["mul"] * 3
        if dual_pairs:
            ops += ["cut"] * 3
        if leaf_total[0] < max_axiom_leaves:
            ops.append("gen")
        op = rng.choice(ops)
        if op == "stop":
            break
        if op == "gen":
            add_generator()
        elif op == "mul":
            i, j = rng.sample(range(len(open_ports)), 2)
            (p1, f1), (p2, f2) = open_ports[i], open_ports[j]
            if rng.random() < 0.5:
                kind, f = CellKind.TENSOR, Tensor(f1, f2)
            else:
                kind, f = CellKind.PAR, Par(f1, f2)
            q = new_port(f)
            cells.append(Cell(new_cell_id(), kind, (q,), (p1, p2)))
            for k in sorted((i, j), reverse=True):
                open_ports.pop(k)
            open_ports.append((q, f))
        else:
            i, j = rng.choice(dual_pairs)
            (p1, _), (p2, _) = open_ports[i], open_ports[j]
            cells.append(Cell(new_cell_id(), CellKind.CUT, (), (p1, p2)))
            for k in sorted((i, j), reverse=True):
                open_ports.pop(k)

    if sum(atomic_leaves(f) for _, f in open_ports) > max_conclusion_leaves:
        return None
    order = list(range(len(open_ports)))
    rng.shuffle(order)
    conclusions = tuple(open_ports[k][0] for k in order)
    ps = ProofStructure(ports, tuple(cells), conclusions)
    assert not validate(ps), validate(ps)
    return ps
