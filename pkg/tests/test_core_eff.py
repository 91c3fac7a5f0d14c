"""Core Eff typechecker."""

import pytest

from conftest import corpus_names, corpus_source
from effws import core_eff as ce
from effws.core_eff import (
    Absurd,
    App,
    BOOL_T,
    CaseSum,
    DYN_T,
    EMPTY_T,
    HandlerVal,
    INT_T,
    IntV,
    Lam,
    Let,
    NewP,
    OpInvoke,
    Prim,
    STR_T,
    StrV,
    TArrow,
    TEff,
    TEffH,
    TPair,
    TSum,
    UNIT_T,
    UnitV,
    Val,
    Var,
    WithHandle,
    infer_comp,
    infer_value,
    is_core_anf,
    typecheck,
)
from effws.errors import TypeCheckError
from effws.pipeline import surface_to_core
from effws.surface import parse


def test_literals():
    assert infer_value({}, IntV(1)) == INT_T
    assert infer_value({}, UnitV()) == UNIT_T
    assert infer_value({}, StrV("a")) == STR_T
    assert infer_comp({}, Val(UnitV())) == UNIT_T


def test_op_invoke_type():
    ctx = {"x": TEff(INT_T, INT_T)}
    assert infer_value(ctx, OpInvoke(Var("x"))) == TArrow(INT_T, INT_T)


def test_newp_and_handle():
    assert infer_comp({}, NewP(INT_T, STR_T)) == TEff(INT_T, STR_T)
    h = HandlerVal(Var("p"), "v", UNIT_T, Val(Var("v")), "x", "k", App(Var("k"), Var("x")))
    ctx = {"p": TEff(INT_T, INT_T)}
    with pytest.raises(TypeCheckError):
        # handled computation of the wrong type
        infer_comp(ctx, WithHandle(h, Val(IntV(3))))


def test_readerh_type():
    # the state-passing handler's type instantiates (c, int -> c) at int
    add = Prim("add")
    h = HandlerVal(
        Var("p"), "v", INT_T, Val(Lam("s", INT_T, Val(Var("v")))),
        "x", "k",
        Val(Lam("s", INT_T,
            Let("a", App(add, Var("s")),
            Let("z", App(Var("a"), Var("x")),
            Let("f", App(Var("k"), Var("z")),
            App(Var("f"), Var("s"))))))),
    )
    assert infer_value({"p": TEff(INT_T, INT_T)}, h) == TEffH(INT_T, TArrow(INT_T, INT_T))


def test_weakening():
    e = Let("x", Val(IntV(1)), Val(Var("x")))
    assert infer_comp({}, e) == infer_comp({"unused": STR_T}, e)


def test_absurd_requires_empty():
    with pytest.raises(TypeCheckError):
        infer_comp({"x": INT_T}, Absurd(Var("x"), UNIT_T))
    assert infer_comp({"x": EMPTY_T}, Absurd(Var("x"), STR_T)) == STR_T


def test_case_branch_agreement():
    scrut = {"s": TSum(INT_T, STR_T)}
    good = CaseSum(Var("s"), "l", Val(IntV(1)), "r", Val(IntV(2)))
    assert infer_comp(scrut, good) == INT_T
    bad = CaseSum(Var("s"), "l", Val(IntV(1)), "r", Val(StrV("x")))
    with pytest.raises(TypeCheckError):
        infer_comp(scrut, bad)


def test_dyn_is_consistent_everywhere():
    ctx = {"d": DYN_T}
    assert infer_comp(ctx, App(Prim("add"), Var("d"))) == TArrow(INT_T, INT_T)
    assert infer_comp(ctx, App(Var("d"), IntV(1))) == DYN_T
    assert infer_comp(ctx, ce.Cast(Var("d"), INT_T)) == INT_T
    with pytest.raises(TypeCheckError):
        infer_comp({"x": INT_T}, ce.Cast(Var("x"), STR_T))


def test_unbound_variable():
    with pytest.raises(TypeCheckError):
        infer_value({}, Var("ghost"))


def test_infer_deterministic_and_total():
    e = Let("f", Val(Lam("x", INT_T, App(Prim("absint"), Var("x")))), App(Var("f"), IntV(3)))
    assert infer_comp({}, e) == infer_comp({}, e) == INT_T


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_typechecks_and_is_anf(name):
    core = surface_to_core(parse(corpus_source(name)))
    typecheck(core)
    assert is_core_anf(core)


def test_corpus_paper_types():
    assert typecheck(surface_to_core(parse(corpus_source("reader")))) == INT_T
    assert typecheck(surface_to_core(parse(corpus_source("exeff")))) == INT_T
    t = typecheck(surface_to_core(parse(corpus_source("test1"))))
    assert t == UNIT_T
