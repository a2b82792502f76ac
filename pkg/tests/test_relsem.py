import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import rename_atoms
from relcheck.errors import InputError, ParseError
from relcheck.families import random_structure
from relcheck.mll import Cell, CellKind, ONE, load_structure, parse_formula
from relcheck.mll import ProofStructure
from relcheck.relsem import (
    Atom,
    Pair,
    UNIT,
    UnificationError,
    Var,
    apply_subst,
    enumerate_web,
    experiment_result,
    mgu,
    oracle_check,
    parse_point,
    parse_point_list,
    render_term,
    verify_experiment,
    web_member,
)

a, b, c = Atom("a"), Atom("b"), Atom("c")


# ---------------------------------------------------------------------------
# webs


def test_web_of_units_holds_only_the_empty_sequence():
    assert not web_member(a, ONE)
    assert web_member(UNIT, ONE)
    assert web_member(UNIT, parse_formula("bot"))


def test_web_of_tensor_is_pairs():
    t = parse_formula("X * Y")
    assert web_member(Pair(a, b), t)
    assert not web_member(a, t)


def test_variables_belong_only_to_extended_webs():
    t = parse_formula("X * Y")
    assert web_member(Var("v"), t, allow_vars=True)
    assert not web_member(Var("v"), t, allow_vars=False)
    assert web_member(Var("v"), parse_formula("X"), allow_vars=True)


def test_enumerate_web_matches_membership():
    t = parse_formula("(X | 1) * Y")
    pts = enumerate_web(t, ["a", "b"])
    assert len(pts) == 4
    assert all(web_member(p, t) for p in pts)


# ---------------------------------------------------------------------------
# points syntax


def test_parse_point_forms():
    assert parse_point("a") == a
    assert parse_point("()") == UNIT
    assert parse_point("(a, b)") == Pair(a, b)
    assert parse_point("?v") == Var("v")
    assert parse_point("((a,b))") == Pair(a, b)  # grouping parens tolerated


def test_parse_point_list_and_render():
    pts = parse_point_list("a, (a,b), b")
    assert pts == [a, Pair(a, b), b]
    assert [render_term(p) for p in pts] == ["a", "(a,b)", "b"]
    assert parse_point_list("") == []


@pytest.mark.parametrize("bad", ["(a", "a)", "(a,)", "?", "a b"])
def test_malformed_points(bad):
    with pytest.raises(ParseError):
        parse_point(bad)


# ---------------------------------------------------------------------------
# substitution and unification


def test_apply_subst_examples():
    s = {"v": a}
    assert apply_subst(s, Pair(Var("v"), b)) == Pair(a, b)
    assert apply_subst({}, Pair(a, b)) == Pair(a, b)
    assert apply_subst({"v": Pair(a, b)}, Var("v")) == Pair(a, b)


def test_mgu_binds_pair_components_in_order():
    s = mgu(Pair(a, b), Pair(Var("o"), Var("e")))
    assert s == {"o": a, "e": b}
    assert list(s) == ["o", "e"]


def test_mgu_of_identical_terms_is_empty():
    assert mgu(a, a) == {}
    assert mgu(Pair(a, UNIT), Pair(a, UNIT)) == {}


def test_mgu_atom_clash():
    with pytest.raises(UnificationError):
        mgu(a, b)


def test_mgu_constructor_clash_and_occurs_check():
    with pytest.raises(UnificationError):
        mgu(Pair(a, b), a)
    with pytest.raises(UnificationError, match="occurs"):
        mgu(Var("v"), Pair(a, Var("v")))


atom_terms = st.sampled_from([a, b, c])
ground_terms = st.recursive(
    st.one_of(atom_terms, st.just(UNIT)), lambda t: st.builds(Pair, t, t), max_leaves=12
)
open_terms = st.recursive(
    st.one_of(atom_terms, st.just(UNIT), st.builds(Var, st.sampled_from(["x", "y", "z"]))),
    lambda t: st.builds(Pair, t, t),
    max_leaves=12,
)


@given(ground_terms, ground_terms)
def test_ground_terms_unify_iff_equal(t, u):
    try:
        s = mgu(t, u)
    except UnificationError:
        assert t != u
    else:
        assert s == {} and t == u


def _is_renaming_variant(t, u, fwd, bwd) -> bool:
    if isinstance(t, Var) and isinstance(u, Var):
        if fwd.setdefault(t.name, u.name) != u.name:
            return False
        return bwd.setdefault(u.name, t.name) == t.name
    if isinstance(t, Pair) and isinstance(u, Pair):
        return _is_renaming_variant(t.fst, u.fst, fwd, bwd) and _is_renaming_variant(
            t.snd, u.snd, fwd, bwd
        )
    return t == u


@given(open_terms, open_terms)
def test_mgu_is_symmetric_up_to_renaming(t, u):
    try:
        s1 = mgu(t, u)
    except UnificationError:
        with pytest.raises(UnificationError):
            mgu(u, t)
        return
    s2 = mgu(u, t)
    r1 = apply_subst(s1, t)
    assert r1 == apply_subst(s1, u)
    r2 = apply_subst(s2, u)
    assert r2 == apply_subst(s2, t)
    assert _is_renaming_variant(r1, r2, {}, {})


@given(open_terms, open_terms, open_terms)
def test_unifier_is_idempotent(t, u, probe):
    try:
        s = mgu(t, u)
    except UnificationError:
        return
    once = apply_subst(s, probe)
    assert apply_subst(s, once) == once


# ---------------------------------------------------------------------------
# experiments


def _worked_example_experiment(value_b=b):
    pair = Pair(a, value_b)
    return {
        "a1": a, "b1": value_b, "a2": a, "b2": value_b,
        "t": pair, "r": pair, "u": pair, "w": pair,
    }


def test_worked_example_labelling_is_an_experiment(cases_dir):
    ps = load_structure(cases_dir / "tensor_cut_par.mllps")
    e = _worked_example_experiment()
    assert verify_experiment(ps, e)
    assert experiment_result(ps, e) == (Pair(a, b), Pair(a, b))
    for port, value in e.items():
        assert web_member(value, ps.ports[port])


def test_breaking_one_axiom_side_fails_verification(cases_dir):
    ps = load_structure(cases_dir / "tensor_cut_par.mllps")
    e = _worked_example_experiment()
    e["a2"] = c
    assert not verify_experiment(ps, e)


def test_single_one_cell_experiment():
    ps = ProofStructure({"p": ONE}, (Cell("u", CellKind.ONE, ("p",), ()),), ("p",))
    assert verify_experiment(ps, {"p": UNIT})
    assert experiment_result(ps, {"p": UNIT}) == (UNIT,)
    assert not verify_experiment(ps, {"p": a})


def test_single_axiom_results():
    ps = ProofStructure(
        {"p": parse_formula("X"), "q": parse_formula("X^")},
        (Cell("ax", CellKind.AX, ("p", "q"), ()),),
        ("p", "q"),
    )
    assert verify_experiment(ps, {"p": a, "q": a})
    assert experiment_result(ps, {"p": a, "q": a}) == (a, a)
    assert oracle_check(ps, [a, a])
    assert not oracle_check(ps, [a, b])


def test_experiment_must_be_total(cases_dir):
    ps = load_structure(cases_dir / "tensor_cut_par.mllps")
    with pytest.raises(InputError):
        verify_experiment(ps, {"a1": a})


# ---------------------------------------------------------------------------
# oracle


def test_oracle_on_worked_example(cases_dir):
    ps = load_structure(cases_dir / "tensor_cut_par.mllps")
    assert oracle_check(ps, parse_point_list("(a,b), (a,b)"))
    assert not oracle_check(ps, parse_point_list("(a,b), (a,c)"))


def test_oracle_on_hidden_cycle(cases_dir):
    ps = load_structure(cases_dir / "hidden_cycle.mllps")
    assert oracle_check(ps, parse_point_list("a, a"))
    assert not oracle_check(ps, parse_point_list("a, b"))


def test_oracle_preconditions(cases_dir):
    ps = load_structure(cases_dir / "tensor_cut_par.mllps")
    with pytest.raises(InputError):
        oracle_check(ps, parse_point_list("(a,b)"))  # arity
    with pytest.raises(InputError):
        oracle_check(ps, parse_point_list("(a,?v), (a,b)"))  # not ground
    with pytest.raises(InputError):
        oracle_check(ps, parse_point_list("a, (a,b)"))  # web mismatch


def test_oracle_is_invariant_under_atom_renaming():
    rng = random.Random(42)
    swap = {"a": "b", "b": "a"}
    for _ in range(10):
        ps = random_structure(rng)
        for point in _sample_points(ps, rng, 4):
            renamed = [rename_atoms(t, swap) for t in point]
            assert oracle_check(ps, point) == oracle_check(ps, renamed)


def _sample_points(ps, rng, count):
    webs = [enumerate_web(ps.ports[p], ["a", "b"]) for p in ps.conclusions]
    out = []
    for _ in range(count):
        out.append([rng.choice(w) for w in webs])
    return out
