import random

import pytest

from conftest import rename_atoms
from relcheck.errors import InputError
from relcheck.families import chain_point, chain_structure, random_structure
from relcheck.machine import (
    DispEvent,
    UnifEvent,
    UnificationClash,
    apply_subst_config,
    check,
    delta_instances,
    initial_config,
    normal_run,
    render_trace,
    replay_trace,
    series_add,
    step_displacement,
    step_unification,
    _make_displacement,
)
from relcheck.mll import load_structure, parse_proof_structure
from relcheck.relsem import (
    Atom,
    Pair,
    Var,
    enumerate_interpretation,
    enumerate_web,
    oracle_check,
    parse_point_list,
)

a, b, c = Atom("a"), Atom("b"), Atom("c")


# ---------------------------------------------------------------------------
# series


def test_series_cancellation():
    assert series_add({a: 1}, {a: -1}) == {}


def test_series_sum_is_partial():
    assert series_add({a: 1}, {a: 1}) is None
    assert series_add({a: -1}, {a: -1}) is None


def test_series_disjoint_keys():
    assert series_add({a: 1}, {b: -1}) == {a: 1, b: -1}


# ---------------------------------------------------------------------------
# configurations and single transitions


def test_initial_config_places_points_on_conclusions(cases_dir):
    ps = load_structure(cases_dir / "axiom_pair_tensor.mllps")
    x = initial_config(ps, parse_point_list("a, (a,b), b"))
    assert x == {"1": {a: 1}, "3": {Pair(a, b): 1}, "5": {b: 1}}
    worked = load_structure(cases_dir / "tensor_cut_par.mllps")
    x2 = initial_config(worked, parse_point_list("(a,b), (a,b)"))
    assert len(x2) == 2 and set(x2) == {"t", "w"}


def test_initial_config_rejects_variables(cases_dir):
    ps = load_structure(cases_dir / "axiom_pair_tensor.mllps")
    with pytest.raises(InputError):
        initial_config(ps, parse_point_list("a, (a,?v), b"))


def test_axiom_instances_are_token_driven(cases_dir):
    ps = load_structure(cases_dir / "axiom_pair_tensor.mllps")
    ax12 = next(cell for cell in ps.cells if cell.cid == "ax12")
    x = {"1": {a: 1}}
    (inst,) = delta_instances(ps, ax12, x)
    assert inst.per_port == {"1": {a: -1}, "2": {a: -1}}
    assert inst.witness == a
    assert delta_instances(ps, ax12, {}) == []


def test_split_instance_uses_fresh_variables(cases_dir):
    ps = load_structure(cases_dir / "axiom_pair_tensor.mllps")
    ten = next(cell for cell in ps.cells if cell.cid == "t")
    (inst,) = delta_instances(ps, ten, {"3": {Pair(a, b): 1}})
    w = inst.witness
    assert isinstance(w, Pair) and isinstance(w.fst, Var) and isinstance(w.snd, Var)
    assert inst.per_port == {"2": {w.fst: 1}, "4": {w.snd: 1}, "3": {w: -1}}
    assert delta_instances(ps, ten, {"3": {}}) == []


def test_displacement_steps_of_the_recognition_run(cases_dir):
    ps = load_structure(cases_dir / "axiom_pair_tensor.mllps")
    cells = {cell.cid: cell for cell in ps.cells}
    x0 = initial_config(ps, parse_point_list("a, (a,b), b"))

    d_ax = _make_displacement(cells["ax12"], a, None)
    x1 = step_displacement(x0, d_ax)
    assert x1 == {"3": {Pair(a, b): 1}, "5": {b: 1}, "2": {a: -1}}

    o, e = Var("o"), Var("e")
    d_t = _make_displacement(cells["t"], Pair(o, e), None)
    x2 = step_displacement(x1, d_t)
    assert x2 == {
        "2": {a: -1, o: 1},
        "3": {Pair(a, b): 1, Pair(o, e): -1},
        "4": {e: 1},
        "5": {b: 1},
    }

    x3, s = step_unification(x2, "3")
    assert s == {"o": a, "e": b}
    assert x3 == {"4": {b: 1}, "5": {b: 1}}


def test_displacement_blocked_by_partner_port():
    ps = parse_proof_structure(
        "port p : X\nport q : X^\ncell ax : ax(p, q)\nconclusions: p, q\n"
    )
    d = _make_displacement(ps.cells[0], a, None)
    assert step_displacement({"p": {a: 1}, "q": {a: -1}}, d) is None


def test_unification_clash_and_variable_binding():
    x = {"p": {b: 1, c: -1}}
    with pytest.raises(UnificationClash):
        step_unification(x, "p")
    x2, s = step_unification({"p": {Var("v"): 1, a: -1}}, "p")
    assert s == {"v": a}
    assert x2 == {}


def test_unification_requires_an_opposite_pair():
    with pytest.raises(ValueError):
        step_unification({"p": {a: 1}}, "p")


# ---------------------------------------------------------------------------
# full runs: golden traces


RECOGNITION_TRACE = """\
DISP ax12 witness=a
DISP t witness=(?_g0,?_g1)
UNIF 3 {?_g0=a, ?_g1=b}
DISP ax45 witness=b
ACCEPT
"""


def test_recognition_word_golden_trace(cases_dir):
    ps = load_structure(cases_dir / "axiom_pair_tensor.mllps")
    result = normal_run(ps, parse_point_list("a, (a,b), b"))
    assert render_trace(result) == RECOGNITION_TRACE
    assert result.displacements == 3 <= 2 * len(ps.cells)


WORKED_ACCEPT_TRACE = """\
DISP ten witness=(?_g0,?_g1)
UNIF t {?_g0=a, ?_g1=b}
DISP axA witness=a
DISP pr witness=(?_g2,?_g3)
UNIF a2 {?_g2=a}
DISP axB witness=b
UNIF b2 {?_g3=b}
DISP k witness=(a,b)
DISP axP witness=(a,b)
ACCEPT
"""

WORKED_REJECT_LINE = "REJECT clash at w: c vs b"


def test_worked_example_golden_traces(cases_dir):
    ps = load_structure(cases_dir / "tensor_cut_par.mllps")
    good = normal_run(ps, parse_point_list("(a,b), (a,b)"))
    assert render_trace(good) == WORKED_ACCEPT_TRACE
    bad = normal_run(ps, parse_point_list("(a,b), (a,c)"))
    assert not bad.accepted
    assert render_trace(bad).splitlines()[-1] == WORKED_REJECT_LINE


CYCLE_ACCEPT_TRACE = """\
DISP axL witness=a
DISP ten witness=(?_g0,?_g1)
UNIF a1 {?_g0=a}
DISP axR witness=a
DISP pr witness=(?_g2,?_g3)
UNIF a2 {?_g2=a}
DISP axB witness=?_g1
UNIF b2 {?_g3=?_g1}
DISP k witness=(a,?_g1)
ACCEPT
"""


def test_hidden_cycle_accepts_with_variable_tokens(cases_dir):
    ps = load_structure(cases_dir / "hidden_cycle.mllps")
    result = normal_run(ps, parse_point_list("a, a"))
    assert render_trace(result) == CYCLE_ACCEPT_TRACE
    rejected = normal_run(ps, parse_point_list("a, b"))
    assert not rejected.accepted
    assert "clash" in rejected.reason


def test_fresh_prefix_is_configurable(cases_dir):
    ps = load_structure(cases_dir / "axiom_pair_tensor.mllps")
    result = normal_run(ps, parse_point_list("a, (a,b), b"), fresh_prefix="v")
    assert "UNIF 3 {?v0=a, ?v1=b}" in render_trace(result)


def test_step_cap_override(cases_dir):
    ps = load_structure(cases_dir / "tensor_cut_par.mllps")
    result = normal_run(ps, parse_point_list("(a,b), (a,b)"), max_displacements=2)
    assert not result.accepted
    assert result.reason == "bound exceeded"


def test_isolated_cut_loop_is_ignored():
    ps = parse_proof_structure(
        "port p : X\nport q : X^\ncell ax : ax(p, q)\ncell k : cut(p, q)\nconclusions:\n"
    )
    result = normal_run(ps, [])
    assert result.accepted and result.events == []
    assert oracle_check(ps, [])


def test_single_axiom_check():
    ps = parse_proof_structure(
        "port p : X\nport q : X^\ncell ax : ax(p, q)\nconclusions: p, q\n"
    )
    assert check(ps, [a, a])
    assert not check(ps, [a, b])


# ---------------------------------------------------------------------------
# run-level properties


def _grouped_configurations(ps, point, events):
    """Configurations before and after each displacement together with the
    unifications it mandates."""
    cells = {cell.cid: cell for cell in ps.cells}
    x = initial_config(ps, point)
    groups = []
    i = 0
    while i < len(events):
        ev = events[i]
        assert isinstance(ev, DispEvent)
        before = x
        x = step_displacement(x, _make_displacement(cells[ev.cell], ev.witness, None))
        assert x is not None
        i += 1
        while i < len(events) and isinstance(events[i], UnifEvent):
            x = apply_subst_config(x, events[i].subst)
            i += 1
        groups.append((before, x))
    return x, groups


def _sample_cases(seed, structures):
    rng = random.Random(seed)
    for _ in range(structures):
        ps = random_structure(rng)
        webs = [enumerate_web(ps.ports[p], ["a", "b"]) for p in ps.conclusions]
        points = []
        for _ in range(4):
            points.append([rng.choice(w) for w in webs])
        yield ps, points


def test_traces_replay_to_the_final_configuration():
    for ps, points in _sample_cases(5, 25):
        for point in points:
            result = normal_run(ps, point)
            assert replay_trace(ps, point, result.events) == result.final


def test_each_displacement_group_zeroes_a_port():
    for ps, points in _sample_cases(6, 25):
        for point in points:
            result = normal_run(ps, point)
            if not result.accepted:
                continue
            final, groups = _grouped_configurations(ps, point, result.events)
            assert all(not s for s in final.values())
            for before, after in groups:
                zeroed = [
                    p for p in before
                    if before.get(p) and not after.get(p)
                ]
                assert zeroed, "a displacement must consume some token"


def test_unified_ports_hold_no_unifiable_pair_afterwards():
    from relcheck.relsem import UnificationError, mgu

    for ps, points in _sample_cases(7, 15):
        for point in points:
            result = normal_run(ps, point)
            cells = {cell.cid: cell for cell in ps.cells}
            x = initial_config(ps, point)
            for ev in result.events:
                if isinstance(ev, DispEvent):
                    x = step_displacement(x, _make_displacement(cells[ev.cell], ev.witness, None))
                else:
                    x = apply_subst_config(x, ev.subst)
                    series = x.get(ev.port, {})
                    for t1, c1 in series.items():
                        for t2, c2 in series.items():
                            if c1 > 0 > c2:
                                with pytest.raises(UnificationError):
                                    mgu(t1, t2)


def test_acceptance_invariant_under_atom_renaming():
    swap = {"a": "b", "b": "a"}
    for ps, points in _sample_cases(8, 15):
        for point in points:
            renamed = [rename_atoms(t, swap) for t in point]
            assert check(ps, point) == check(ps, renamed)


def test_machine_agrees_with_oracle_on_samples():
    import itertools

    for ps, _ in _sample_cases(9, 40):
        interp = enumerate_interpretation(ps, ("a", "b"))
        webs = [enumerate_web(ps.ports[p], ["a", "b"]) for p in ps.conclusions]
        for combo in itertools.product(*webs) if webs else [()]:
            assert check(ps, list(combo)) == (tuple(combo) in interp)


def test_accepting_runs_respect_the_displacement_bound():
    for ps, points in _sample_cases(10, 25):
        cap = 2 * len(ps.cells)
        for point in points:
            result = normal_run(ps, point)
            if result.accepted:
                assert result.displacements <= cap


def test_chain_runs_fire_every_cell_once():
    for n in (1, 3, 8):
        ps = chain_structure(n)
        result = normal_run(ps, chain_point(n))
        assert result.accepted
        assert result.displacements == len(ps.cells)
        fired = [ev.cell for ev in result.events if isinstance(ev, DispEvent)]
        assert sorted(fired) == sorted(cell.cid for cell in ps.cells)
