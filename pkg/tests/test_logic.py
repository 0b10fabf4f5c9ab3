import pytest
from hypothesis import given, settings, strategies as st

from polyreg import eval_formula, ordered_model, parse_formula, quantifier_rank, to_sexpr
from polyreg.errors import EvalError, FormulaSyntaxError, SubsetCapExceeded
from polyreg import logic
from polyreg.logic import (
    And, Eq, Exists, Forall, Label, Less, Not, Or,
    free_vars, is_mso, rename_vars, substitute,
)
from polyreg.structures import ordered_product

from conftest import words_upto


# ---------------------------------------------------------------------------
# parsing


def test_parse_label_atom():
    f = parse_formula("(a x)")
    assert f == Label("a", "x")
    assert quantifier_rank(f) == 0
    assert free_vars(f) == {"x"}


def test_parse_one_quantifier():
    f = parse_formula("(exists y (and (< x y) (b y)))")
    assert quantifier_rank(f) == 1
    assert free_vars(f) == {"x"}


def test_parse_example1_order_formula():
    f = parse_formula("(or (< x1 y1) (and (= x1 y1) (>= x2 y2)))")
    assert quantifier_rank(f) == 0
    assert free_vars(f) == {"x1", "x2", "y1", "y2"}


def test_rank_counts_nesting():
    assert quantifier_rank(parse_formula("(exists x (exists y (< x y)))")) == 2
    assert quantifier_rank(parse_formula("(and (exists x (a x)) (exists y (b y)))")) == 1
    # set quantifiers count too
    assert quantifier_rank(parse_formula("(existsS X (exists x (in x X)))")) == 2


def test_printer_round_trip():
    sources = [
        "(a x)",
        "(exists y (and (< x y) (b y)))",
        "(forallS X (or (in x X) (not (in x X))))",
        "(and (succ u v) (block< u v))",
        "(or)",
        "(and)",
    ]
    for src in sources:
        f = parse_formula(src)
        assert parse_formula(to_sexpr(f)) == f


def test_sugar_desugars():
    assert parse_formula("(<= x y)") == Or((Less("x", "y"), Eq("x", "y")))
    assert parse_formula("(>= x y)") == Or((Less("y", "x"), Eq("x", "y")))
    assert parse_formula("(> x y)") == Less("y", "x")
    assert parse_formula("(!= x y)") == Not(Eq("x", "y"))


def test_syntax_errors_carry_position():
    with pytest.raises(FormulaSyntaxError) as err:
        parse_formula("(and (a x)\n  (< x)")
    assert err.value.line == 2
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(exists X (a x))")  # set variable in FO quantifier
    with pytest.raises(FormulaSyntaxError):
        parse_formula("(in x y)")  # second argument must be a set variable


def test_mso_detection():
    assert not is_mso(parse_formula("(exists x (a x))"))
    assert is_mso(parse_formula("(existsS X (in x X))"))
    with pytest.raises(logic.FlavorError):
        logic.require_fo(parse_formula("(in x X)"))


# ---------------------------------------------------------------------------
# evaluation


def test_eval_atoms():
    st_ab = ordered_model("ab")
    assert eval_formula(parse_formula("(a x)"), st_ab, {"x": 1})
    assert not eval_formula(parse_formula("(a x)"), st_ab, {"x": 2})


def test_eval_distinguishing_sentence():
    f = parse_formula("(exists x (exists y (and (< x y) (a x) (b y))))")
    assert not eval_formula(f, ordered_model("ba"))
    assert eval_formula(f, ordered_model("ab"))


def test_eval_example1_pair_order():
    # the pairs (2,2) and (2,1) appear in that order in the enumeration
    phi = parse_formula("(or (< x1 y1) (and (= x1 y1) (>= x2 y2)))")
    st = ordered_model("abbb")
    assert eval_formula(phi, st, {"x1": 2, "x2": 2, "y1": 2, "y2": 1})
    assert not eval_formula(phi, st, {"x1": 2, "x2": 1, "y1": 2, "y2": 2})


def test_eval_uncovered_variable():
    with pytest.raises(EvalError):
        eval_formula(parse_formula("(a x)"), ordered_model("ab"))


def test_eval_out_of_range_assignment():
    with pytest.raises(EvalError):
        eval_formula(parse_formula("(a x)"), ordered_model("ab"), {"x": 3})


def test_eval_mso_set_quantifier():
    # some set containing exactly the a-positions
    f = parse_formula(
        "(existsS X (forall x (or (and (in x X) (a x)) (and (not (in x X)) (not (a x))))))")
    assert eval_formula(f, ordered_model("abab"))
    # every set is closed downward: false on two positions
    g = parse_formula("(forallS X (forall x (forall y (or (not (in y X)) (not (< x y)) (in x X)))))")
    assert not eval_formula(g, ordered_model("ab"))


def test_eval_subset_cap():
    big = ordered_model("a" * 19)
    with pytest.raises(SubsetCapExceeded):
        eval_formula(parse_formula("(existsS X (exists x (in x X)))"), big)


def test_eval_succ_and_blocks():
    from polyreg import successor_model
    st = successor_model("ab")
    assert eval_formula(parse_formula("(succ x y)"), st, {"x": 1, "y": 2})
    assert not eval_formula(parse_formula("(succ x y)"), st, {"x": 2, "y": 1})
    with pytest.raises(EvalError):
        eval_formula(parse_formula("(< x y)"), st, {"x": 1, "y": 2})
    prod = ordered_product(["ab", "ab"])
    assert eval_formula(parse_formula("(block< x y)"), prod, {"x": 2, "y": 3})
    assert not eval_formula(parse_formula("(block< x y)"), prod, {"x": 3, "y": 4})


# ---------------------------------------------------------------------------
# random-formula properties

_VARS = ("x", "y", "z")


def formulas(max_depth=3):
    atoms = st.one_of(
        st.builds(Label, st.sampled_from("ab"), st.sampled_from(_VARS)),
        st.builds(Less, st.sampled_from(_VARS), st.sampled_from(_VARS)),
        st.builds(Eq, st.sampled_from(_VARS), st.sampled_from(_VARS)),
    )

    def extend(children):
        return st.one_of(
            st.builds(Not, children),
            st.builds(lambda a, b: And((a, b)), children, children),
            st.builds(lambda a, b: Or((a, b)), children, children),
            st.builds(Exists, st.sampled_from(_VARS), children),
            st.builds(Forall, st.sampled_from(_VARS), children),
        )

    return st.recursive(atoms, extend, max_leaves=8)


@given(formulas(), st.text(alphabet="ab", min_size=1, max_size=4), st.data())
@settings(max_examples=120, deadline=None)
def test_double_negation_and_de_morgan(f, word, data):
    stru = ordered_model(word)
    env = {v: data.draw(st.integers(1, len(word))) for v in free_vars(f)}
    value = eval_formula(f, stru, env)
    assert eval_formula(Not(Not(f)), stru, env) == value
    g = data.draw(formulas())
    env.update({v: data.draw(st.integers(1, len(word)))
                for v in free_vars(g) - set(env)})
    both = eval_formula(And((f, g)), stru, env)
    assert both == (not eval_formula(Or((Not(f), Not(g))), stru, env))


@given(formulas(), st.text(alphabet="ab", min_size=1, max_size=4), st.data())
@settings(max_examples=120, deadline=None)
def test_alpha_invariance(f, word, data):
    stru = ordered_model(word)
    env = {v: data.draw(st.integers(1, len(word))) for v in free_vars(f)}
    renamed = logic.rename_bound(f, prefix="w")
    assert eval_formula(renamed, stru, env) == eval_formula(f, stru, env)


def test_rename_vars_avoids_capture():
    f = Exists("y", Less("x", "y"))
    g = rename_vars(f, {"x": "y"})
    # the bound y must have been renamed away from the new free y
    assert free_vars(g) == {"y"}
    st_ = ordered_model("ab")
    assert eval_formula(g, st_, {"y": 1})
    assert not eval_formula(g, st_, {"y": 2})


# ---------------------------------------------------------------------------
# substitution


def test_substitute_identity():
    f = Label("a", "x")
    out = substitute(f, {("label", "a"): Label("a", "x1")}, 1)
    assert free_vars(out) == {"x_1"}
    st_ = ordered_model("ab")
    assert eval_formula(out, st_, {"x_1": 1})


def test_substitute_order_atom_with_example1():
    phi = parse_formula("(or (< x1 y1) (and (= x1 y1) (>= x2 y2)))")
    out = substitute(Less("x", "y"), {"less": phi}, 2)
    assert free_vars(out) == {"x_1", "x_2", "y_1", "y_2"}
    st_ = ordered_model("abbb")
    env = {"x_1": 1, "x_2": 1, "y_1": 2, "y_2": 2}
    assert eval_formula(out, st_, env) == eval_formula(
        phi, st_, {"x1": 1, "x2": 1, "y1": 2, "y2": 2})


def test_substitute_quantifier_expansion_rank():
    f = parse_formula("(exists x (a x))")
    out = substitute(f, {("label", "a"): parse_formula("(and (a x1) (a x2))")}, 2)
    # one quantifier becomes two
    assert quantifier_rank(out) == 2


def test_substitute_soundness_against_output_structure():
    """Evaluating the substituted formula on the input equals evaluating the
    original on the interpretation's output structure (words up to length 5).
    """
    from polyreg import Interpretation
    from polyreg.fixtures import fixture_path
    from polyreg.interpretation import evaluate_interpretation

    interp = Interpretation.from_json(fixture_path(
        "interpretations", "revprefix.json").read_text())
    relation_map = {("label", c): f for c, f in interp.labels.items()}
    strict = And((interp.order, Not(logic.componentwise_eq(("x1", "x2"), ("y1", "y2")))))
    relation_map["less"] = strict

    probes = [
        parse_formula("(exists u (a u))"),
        parse_formula("(exists u (exists v (and (< u v) (b u) (a v))))"),
        parse_formula("(forall u (or (a u) (exists v (< u v))))"),
    ]
    for word in words_upto("ab", 5):
        result = evaluate_interpretation(interp, word)
        out_st = ordered_model(result.output)
        in_st = ordered_model(word)
        for probe in probes:
            lifted = substitute(logic.rename_bound(probe), relation_map, 2,
                                universe_guard=interp.universe)
            assert eval_formula(lifted, in_st) == eval_formula(probe, out_st), (word, probe)
