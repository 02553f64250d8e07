import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from gqw.syntax import (
    And, ArityError, Atom, Eq, ExistsInd, ExistsPred, ForallInd, ForallPred, Imp,
    Not, NotPrenexable, Or, ParseError, QApp, QBind, ScopeError, classify, iff,
    parse, render, so_prenex, substitute_pred,
)
from gqw.semantics import Assignment, HenkinModel, QuantifierInterpretation, Relation, eval_l2q
from gqw.definability import henkin_models

from oracles import FREE_PREDS, IND, random_formula


def test_parse_examples():
    assert parse("forall x. ~P(x)") == ForallInd("x", Not(Atom("P", ("x",))))
    assert parse("forall P:1. Q(P)") == ForallPred("P", 1, QApp("Q", ("P",)))
    assert parse("I[x | P(x); y | R(y)]") == QBind(
        "I", ((("x",), Atom("P", ("x",))), (("y",), Atom("R", ("y",)))))


def test_render_examples():
    assert render(ForallInd("x", Atom("P", ("x",)))) == "forall x. P(x)"
    assert render(QApp("Q", ("P",))) == "Q(P)"
    nested = And(Or(Atom("P", ("x",)), Atom("R", ("x",))), Or(Atom("B"), Not(Atom("B"))))
    assert render(nested) == "(P(x) | R(x)) & (B | ~B)"
    assert parse(render(nested)) == nested


def test_precedence_and_iff_sugar():
    a, b, c = Atom("A"), Atom("B"), Atom("C")
    assert parse("A & B | C") == Or(And(a, b), c)
    assert parse("A | B & C") == Or(a, And(b, c))
    assert parse("A -> B -> C") == Imp(a, Imp(b, c))
    assert parse("A <-> B") == And(Imp(a, b), Imp(b, a))
    assert parse("~A & B") == And(Not(a), b)
    # quantifier prefixes bind tighter than connectives
    assert parse("forall x. P(x) & B") == And(ForallInd("x", Atom("P", ("x",))), b)


def test_tuple_binders_and_lowercase_symbols():
    f = parse("most[x | P(x); x | B(x)]")
    assert f.symbol == "most"
    g = parse("Z[(x, y) | S(x, y)]")
    assert g.parts[0][0] == ("x", "y")
    assert render(g) == "Z[x, y | S(x, y)]"
    assert parse(render(g)) == g


def test_comments_and_whitespace():
    text = "# header\nforall x.   # trailing\n  ~P(x)\n"
    assert parse(text) == parse("forall x. ~P(x)")


def test_equality_is_flag_gated():
    with pytest.raises(ParseError, match="equality"):
        parse("x = y")
    assert parse("exists x. exists y. ~x = y", equality=True) == ExistsInd(
        "x", ExistsInd("y", Not(Eq("x", "y"))))


@pytest.mark.parametrize("text", [
    "forall x. P(x", "P(x) &", "forall P. P(x)", "forall x:1. P(x)", "I[x | P(x)", "P(x) $ R(x)",
])
def test_syntax_errors_carry_position(text):
    with pytest.raises(ParseError, match="column"):
        parse(text)


@pytest.mark.parametrize("text", [
    "P(x) & P(x, y)",
    "forall P:2. P(x)",
    "Q(P) & Q(P, R)",
    "I[x | P(x)] & I[x, y | S(x, y)]",
])
def test_arity_errors(text):
    with pytest.raises(ArityError):
        parse(text)


@pytest.mark.parametrize("text", ["x", "P(x, R)", "forall Q:1. Q(P)", "I[x, x | S(x, x)]"])
def test_scope_errors(text):
    with pytest.raises(ScopeError):
        parse(text)


def test_qapp_type_checked_against_declaration():
    with pytest.raises(ArityError):
        parse("forall P:2. Q(P)", qtypes={"Q": (1,)})
    assert parse("forall P:1. Q(P)", qtypes={"Q": (1,)})


@pytest.mark.parametrize("text, fragment, polyadic, prenex", [
    ("forall P:1. forall x. ~P(x)", "L2", False, True),
    ("forall P:1. (Q(P) <-> exists x. P(x))", "L2(Q)", False, True),
    ("forall x. exists R:2. R(x, x)", "L2", True, False),
    ("forall x. P(x)", "FO", False, True),
    ("E[x | P(x)]", "L(Q)", False, True),
])
def test_classify(text, fragment, polyadic, prenex):
    info = classify(parse(text))
    assert (info.fragment, info.has_polyadic_so_vars, info.is_so_prenex) == (fragment, polyadic, prenex)


def test_classify_prefix():
    info = classify(parse("forall P:1. exists R:1. (Q(P) | R(x))"))
    assert info.so_prefix == (("forall", "P"), ("exists", "R"))


def test_so_prenex_examples():
    assert so_prenex(parse("~(exists P:1. P(x))")) == parse("forall P:1. ~P(x)")
    assert render(so_prenex(parse("(forall P:1. Q(P)) & (forall P:1. Q(P))"))) == \
        "forall P:1. forall P':1. (Q(P) & Q(P'))"
    with pytest.raises(NotPrenexable):
        so_prenex(parse("forall x. exists P:1. P(x)"))


def test_so_prenex_leaves_prenex_input_alone():
    f = parse("forall P:1. (Q(P) <-> exists x. P(x))")
    assert so_prenex(f) == f


def test_so_prenex_refuses_pull_that_breaks_on_empty_family():
    # With Pred_1 empty the left conjunct is vacuously true but the pulled
    # form would be vacuously true regardless of B.
    with pytest.raises(NotPrenexable):
        so_prenex(parse("(forall P:1. P(x)) & B"))
    # ... unless arity 1 is already known nonempty from an enclosing binder.
    g = so_prenex(parse("exists R:1. ((forall P:1. P(x)) & R(x))"))
    assert classify(g).is_so_prenex


def test_so_prenex_renames_to_avoid_capture():
    f = parse("(forall P:1. P(x)) | P(y)")
    g = so_prenex(f)
    assert g == parse("forall P':1. (P'(x) | P(y))")


def test_substitute_pred_examples():
    assert substitute_pred(parse("Q(P1)"), "P1", "P") == parse("Q(P)")
    f = parse("forall x. R(x)")
    assert substitute_pred(f, "P", "S") == f
    g = parse("P(x) & forall P:1. P(y)")
    assert substitute_pred(g, "P", "R") == parse("R(x) & forall P:1. P(y)")


def test_substitute_pred_avoids_capture():
    g = parse("forall S:1. (P(x) & S(x))")
    out = substitute_pred(g, "P", "S")
    assert out == parse("forall S':1. (S(x) & S'(x))")


def test_substitute_pred_arity_mismatch():
    with pytest.raises(ArityError):
        substitute_pred(parse("P(x) & S(x, y)"), "P", "S")


# ---------------------------------------------------------------- properties

def _formulas(depth=6):
    ind = st.sampled_from(IND)
    leaves = st.one_of(
        st.builds(lambda p, xs: Atom(p, tuple(xs[:FREE_PREDS[p]])),
                  st.sampled_from(sorted(FREE_PREDS)), st.lists(ind, min_size=2, max_size=2)),
        st.builds(lambda: QApp("Q", ("U",))),
    )

    def extend(children):
        return st.one_of(
            st.builds(Not, children),
            st.builds(And, children, children),
            st.builds(Or, children, children),
            st.builds(Imp, children, children),
            st.builds(iff, children, children),
            st.builds(ForallInd, ind, children),
            st.builds(ExistsInd, ind, children),
            st.builds(lambda b: ForallPred("U", 1, b), children),
            st.builds(lambda b: ExistsPred("U", 1, b), children),
            st.builds(lambda x, b: QBind("E", (((x,), b),)), ind, children),
            st.builds(lambda x, y, a, b: QBind("I", (((x,), a), ((y,), b))), ind, ind, children, children),
        )

    return st.recursive(leaves, extend, max_leaves=depth * 3)


@settings(max_examples=300, deadline=None)
@given(_formulas())
def test_roundtrip_property(f):
    text = render(f)
    assert parse(text) == f
    assert classify(parse(text)) == classify(f)


@settings(max_examples=100, deadline=None)
@given(_formulas())
def test_substitute_identity_is_noop(f):
    assert substitute_pred(f, "P", "P") == f


def test_so_prenex_preserves_semantics():
    rng = random.Random(7)
    pulled = 0
    for _ in range(120):
        f = random_formula(rng, 4, qbind=False)
        try:
            g = so_prenex(f)
        except NotPrenexable:
            continue
        assert classify(g).is_so_prenex
        if g != f:
            pulled += 1
        for n in (1, 2):
            dom = tuple(range(1, n + 1))
            tuples2 = list(itertools.product(dom, repeat=2))
            for m in henkin_models(dom, [0, 1]):
                for fam2 in [(), (Relation(2, frozenset(tuples2[:1])),)]:
                    model = HenkinModel(dom, {**m.preds, 2: fam2})
                    interp = {
                        "Q": QuantifierInterpretation((1,), frozenset((r,) for r in model.family(1) if r.tuples)),
                        "H": QuantifierInterpretation((1, 2), frozenset(
                            (a, b) for a in model.family(1) for b in model.family(2))),
                    }
                    s = Assignment({v: dom[-1] for v in IND},
                                   {p: Relation(k, frozenset(list(itertools.product(dom, repeat=k))[:1]))
                                    for p, k in FREE_PREDS.items()})
                    assert eval_l2q(model, interp, s, f) == eval_l2q(model, interp, s, g), render(f)
    assert pulled > 10
