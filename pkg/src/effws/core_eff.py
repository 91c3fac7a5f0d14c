"""Core Eff: first-order abstract syntax and typechecker.

Computations are in A-normal form: both components of an application are
values.  Effects have a single (anonymous) operation, so an effect
instance alone names the effect; instances are created by ``newp``.

The checker is a bottom-up synthesiser over fully annotated terms.
``dyn`` is consistent with every type; the lie is caught at run time by
the evaluators' tag checks, never silently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterator, Optional, Tuple, Union

from .errors import Pos, TypeCheckError

# ---------------------------------------------------------------------------
# Types


@dataclass(frozen=True)
class TUnit:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class TInt:
    def __str__(self) -> str:
        return "int"


@dataclass(frozen=True)
class TStr:
    def __str__(self) -> str:
        return "string"


@dataclass(frozen=True)
class TEmpty:
    def __str__(self) -> str:
        return "empty"


@dataclass(frozen=True)
class TDyn:
    def __str__(self) -> str:
        return "dyn"


@dataclass(frozen=True)
class TArrow:
    a: "CoreType"
    b: "CoreType"

    def __str__(self) -> str:
        return f"({self.a} -> {self.b})"


@dataclass(frozen=True)
class TPair:
    a: "CoreType"
    b: "CoreType"

    def __str__(self) -> str:
        return f"({self.a} * {self.b})"


@dataclass(frozen=True)
class TSum:
    a: "CoreType"
    b: "CoreType"

    def __str__(self) -> str:
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class TEff:
    """Effect-instance type: operation argument and result types."""

    a: "CoreType"
    b: "CoreType"

    def __str__(self) -> str:
        return f"({self.a} +-> {self.b})"


@dataclass(frozen=True)
class TEffH:
    """Handler type: transforms computations of type c into w."""

    c: "CoreType"
    w: "CoreType"

    def __str__(self) -> str:
        return f"({self.c} => {self.w})"


CoreType = Union[TUnit, TInt, TStr, TEmpty, TDyn, TArrow, TPair, TSum, TEff, TEffH]

UNIT_T = TUnit()
INT_T = TInt()
STR_T = TStr()
EMPTY_T = TEmpty()
DYN_T = TDyn()
BOOL_T = TSum(UNIT_T, UNIT_T)  # inl () = false, inr () = true


def consistent(t1: CoreType, t2: CoreType) -> bool:
    """Type compatibility where ``dyn`` matches anything."""
    if isinstance(t1, TDyn) or isinstance(t2, TDyn):
        return True
    if type(t1) is not type(t2):
        return False
    if isinstance(t1, (TUnit, TInt, TStr, TEmpty)):
        return True
    if isinstance(t1, (TArrow, TPair, TSum, TEff)):
        return consistent(t1.a, t2.a) and consistent(t1.b, t2.b)
    if isinstance(t1, TEffH):
        return consistent(t1.c, t2.c) and consistent(t1.w, t2.w)
    raise AssertionError(t1)


def refine(t1: CoreType, t2: CoreType) -> CoreType:
    """The more informative of two consistent types (prefers non-dyn parts)."""
    if isinstance(t1, TDyn):
        return t2
    if isinstance(t2, TDyn):
        return t1
    if isinstance(t1, (TArrow, TPair, TSum, TEff)) and type(t1) is type(t2):
        return type(t1)(refine(t1.a, t2.a), refine(t1.b, t2.b))
    if isinstance(t1, TEffH) and isinstance(t2, TEffH):
        return TEffH(refine(t1.c, t2.c), refine(t1.w, t2.w))
    return t1


# ---------------------------------------------------------------------------
# Values and computations


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class UnitV:
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class IntV:
    n: int
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class StrV:
    s: str
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Lam:
    param: str
    param_t: CoreType
    body: "CoreComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class OpInvoke:
    """The functional value ``op v`` for an effect instance value ``v``."""

    inst: "CoreValue"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class HandlerVal:
    """First-class deep handler over one effect instance.

    The val-clause binder carries a type annotation: with monomorphic
    first-order checking the handled type cannot be synthesised from the
    clause body alone.
    """

    inst: "CoreValue"
    val_binder: str
    val_t: CoreType
    val_body: "CoreComp"
    op_arg: str
    op_k: str
    op_body: "CoreComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class PairV:
    a: "CoreValue"
    b: "CoreValue"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class InL:
    v: "CoreValue"
    ann: CoreType  # the full sum type
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class InR:
    v: "CoreValue"
    ann: CoreType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Prim:
    name: str
    pos: Pos = field(default=None, compare=False)


CoreValue = Union[Var, UnitV, IntV, StrV, Lam, OpInvoke, HandlerVal, PairV, InL, InR, Prim]


@dataclass(frozen=True)
class Val:
    v: CoreValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Let:
    binder: str
    e1: "CoreComp"
    e2: "CoreComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class App:
    f: CoreValue
    a: CoreValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class NewP:
    """Create a fresh effect instance; annotated because the checker has
    no polymorphism."""

    t1: CoreType
    t2: CoreType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class WithHandle:
    handler: CoreValue
    body: "CoreComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class CaseSum:
    scrut: CoreValue
    lbinder: str
    lbody: "CoreComp"
    rbinder: str
    rbody: "CoreComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Proj1:
    v: CoreValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Proj2:
    v: CoreValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Absurd:
    v: CoreValue
    ann: CoreType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Print:
    v: CoreValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class Cast:
    """Runtime-checked coercion; ``dyn`` is the only static escape hatch."""

    v: CoreValue
    to: CoreType
    pos: Pos = field(default=None, compare=False)


CoreComp = Union[Val, Let, App, NewP, WithHandle, CaseSum, Proj1, Proj2, Absurd, Print, Cast]

CoreEffProgram = CoreComp

TypeCtx = Dict[str, CoreType]

PRIM_TYPES: Dict[str, CoreType] = {
    "add": TArrow(INT_T, TArrow(INT_T, INT_T)),
    "sub": TArrow(INT_T, TArrow(INT_T, INT_T)),
    "mul": TArrow(INT_T, TArrow(INT_T, INT_T)),
    "eq": TArrow(INT_T, TArrow(INT_T, BOOL_T)),
    "lt": TArrow(INT_T, TArrow(INT_T, BOOL_T)),
    "leq": TArrow(INT_T, TArrow(INT_T, BOOL_T)),
    "absint": TArrow(INT_T, INT_T),
}


# ---------------------------------------------------------------------------
# Typechecker


def _expect(cond: bool, msg: str, pos: Pos, expected=None, found=None) -> None:
    if not cond:
        raise TypeCheckError(msg, pos, expected, found)


def infer_value(ctx: TypeCtx, v: CoreValue) -> CoreType:
    if isinstance(v, Var):
        t = ctx.get(v.name)
        _expect(t is not None, f"unbound variable {v.name}", v.pos)
        return t  # type: ignore[return-value]
    if isinstance(v, UnitV):
        return UNIT_T
    if isinstance(v, IntV):
        return INT_T
    if isinstance(v, StrV):
        return STR_T
    if isinstance(v, Prim):
        t = PRIM_TYPES.get(v.name)
        _expect(t is not None, f"unknown primitive {v.name}", v.pos)
        return t  # type: ignore[return-value]
    if isinstance(v, Lam):
        body_t = infer_comp({**ctx, v.param: v.param_t}, v.body)
        return TArrow(v.param_t, body_t)
    if isinstance(v, OpInvoke):
        it = infer_value(ctx, v.inst)
        if isinstance(it, TDyn):
            return TArrow(DYN_T, DYN_T)
        _expect(isinstance(it, TEff), "operation of a non-instance value", v.pos, "an effect instance", it)
        return TArrow(it.a, it.b)  # type: ignore[union-attr]
    if isinstance(v, HandlerVal):
        it = infer_value(ctx, v.inst)
        if isinstance(it, TDyn):
            it = TEff(DYN_T, DYN_T)
        _expect(isinstance(it, TEff), "handler over a non-instance value", v.pos, "an effect instance", it)
        w = infer_comp({**ctx, v.val_binder: v.val_t}, v.val_body)
        op_ctx = {**ctx, v.op_arg: it.a, v.op_k: TArrow(it.b, w)}  # type: ignore[union-attr]
        w2 = infer_comp(op_ctx, v.op_body)
        _expect(consistent(w, w2), "handler clauses disagree on the answer type", v.pos, w, w2)
        return TEffH(v.val_t, refine(w, w2))
    if isinstance(v, PairV):
        return TPair(infer_value(ctx, v.a), infer_value(ctx, v.b))
    if isinstance(v, (InL, InR)):
        _expect(isinstance(v.ann, (TSum, TDyn)), "injection annotated with a non-sum type", v.pos, "a sum type", v.ann)
        if isinstance(v.ann, TDyn):
            infer_value(ctx, v.v)
            return DYN_T
        side = v.ann.a if isinstance(v, InL) else v.ann.b
        pt = infer_value(ctx, v.v)
        _expect(consistent(pt, side), "injection payload type mismatch", v.pos, side, pt)
        return v.ann
    raise AssertionError(f"not a Core Eff value: {v!r}")


def infer_comp(ctx: TypeCtx, e: CoreComp) -> CoreType:
    if isinstance(e, Val):
        return infer_value(ctx, e.v)
    if isinstance(e, Let):
        t1 = infer_comp(ctx, e.e1)
        return infer_comp({**ctx, e.binder: t1}, e.e2)
    if isinstance(e, App):
        ft = infer_value(ctx, e.f)
        at = infer_value(ctx, e.a)
        if isinstance(ft, TDyn):
            return DYN_T
        _expect(isinstance(ft, TArrow), "application of a non-function", e.pos, "a function", ft)
        _expect(consistent(ft.a, at), "argument type mismatch", e.pos, ft.a, at)  # type: ignore[union-attr]
        return ft.b  # type: ignore[union-attr]
    if isinstance(e, NewP):
        return TEff(e.t1, e.t2)
    if isinstance(e, WithHandle):
        ht = infer_value(ctx, e.handler)
        bt = infer_comp(ctx, e.body)
        if isinstance(ht, TDyn):
            return DYN_T
        _expect(isinstance(ht, TEffH), "handle with a non-handler value", e.pos, "a handler", ht)
        _expect(consistent(ht.c, bt), "handled computation type mismatch", e.pos, ht.c, bt)  # type: ignore[union-attr]
        return ht.w  # type: ignore[union-attr]
    if isinstance(e, CaseSum):
        st = infer_value(ctx, e.scrut)
        if isinstance(st, TDyn):
            st = TSum(DYN_T, DYN_T)
        _expect(isinstance(st, TSum), "case on a non-sum value", e.pos, "a sum", st)
        lt = infer_comp({**ctx, e.lbinder: st.a}, e.lbody)  # type: ignore[union-attr]
        rt = infer_comp({**ctx, e.rbinder: st.b}, e.rbody)  # type: ignore[union-attr]
        _expect(consistent(lt, rt), "case branches disagree", e.pos, lt, rt)
        return refine(lt, rt)
    if isinstance(e, Proj1) or isinstance(e, Proj2):
        pt = infer_value(ctx, e.v)
        if isinstance(pt, TDyn):
            return DYN_T
        _expect(isinstance(pt, TPair), "projection from a non-pair", e.pos, "a pair", pt)
        return pt.a if isinstance(e, Proj1) else pt.b  # type: ignore[union-attr]
    if isinstance(e, Absurd):
        vt = infer_value(ctx, e.v)
        _expect(consistent(vt, EMPTY_T), "absurd applied to a non-empty value", e.pos, EMPTY_T, vt)
        return e.ann
    if isinstance(e, Print):
        vt = infer_value(ctx, e.v)
        _expect(consistent(vt, STR_T), "print applied to a non-string", e.pos, STR_T, vt)
        return UNIT_T
    if isinstance(e, Cast):
        vt = infer_value(ctx, e.v)
        _expect(
            isinstance(e.to, TDyn) or isinstance(vt, TDyn),
            "cast must go to or from dyn",
            e.pos,
            DYN_T,
            vt,
        )
        return e.to
    raise AssertionError(f"not a Core Eff computation: {e!r}")


def typecheck(program: CoreEffProgram) -> CoreType:
    """Check a closed program and return its type."""
    return infer_comp({}, program)


# ---------------------------------------------------------------------------
# Structural helpers


def is_core_anf(e: CoreComp) -> bool:
    """Applications of values to values only; every node well-formed."""
    try:
        _walk_comp(e)
        return True
    except AssertionError:
        return False


_VALUE_TYPES = (Var, UnitV, IntV, StrV, Lam, OpInvoke, HandlerVal, PairV, InL, InR, Prim)


def _walk_value(v) -> None:
    assert isinstance(v, _VALUE_TYPES)
    if isinstance(v, Lam):
        _walk_comp(v.body)
    elif isinstance(v, OpInvoke):
        _walk_value(v.inst)
    elif isinstance(v, HandlerVal):
        _walk_value(v.inst)
        _walk_comp(v.val_body)
        _walk_comp(v.op_body)
    elif isinstance(v, PairV):
        _walk_value(v.a)
        _walk_value(v.b)
    elif isinstance(v, (InL, InR)):
        _walk_value(v.v)


def _walk_comp(e) -> None:
    if isinstance(e, Val):
        _walk_value(e.v)
    elif isinstance(e, Let):
        _walk_comp(e.e1)
        _walk_comp(e.e2)
    elif isinstance(e, App):
        _walk_value(e.f)
        _walk_value(e.a)
    elif isinstance(e, NewP):
        pass
    elif isinstance(e, WithHandle):
        _walk_value(e.handler)
        _walk_comp(e.body)
    elif isinstance(e, CaseSum):
        _walk_value(e.scrut)
        _walk_comp(e.lbody)
        _walk_comp(e.rbody)
    elif isinstance(e, (Proj1, Proj2, Absurd, Print, Cast)):
        _walk_value(e.v)
    else:
        raise AssertionError(f"not a computation: {e!r}")


def free_vars_value(v: CoreValue) -> set:
    if isinstance(v, Var):
        return {v.name}
    if isinstance(v, (UnitV, IntV, StrV, Prim)):
        return set()
    if isinstance(v, Lam):
        return free_vars_comp(v.body) - {v.param}
    if isinstance(v, OpInvoke):
        return free_vars_value(v.inst)
    if isinstance(v, HandlerVal):
        fv = free_vars_value(v.inst)
        fv |= free_vars_comp(v.val_body) - {v.val_binder}
        fv |= free_vars_comp(v.op_body) - {v.op_arg, v.op_k}
        return fv
    if isinstance(v, PairV):
        return free_vars_value(v.a) | free_vars_value(v.b)
    if isinstance(v, (InL, InR)):
        return free_vars_value(v.v)
    raise AssertionError(v)


def free_vars_comp(e: CoreComp) -> set:
    if isinstance(e, Val):
        return free_vars_value(e.v)
    if isinstance(e, Let):
        return free_vars_comp(e.e1) | (free_vars_comp(e.e2) - {e.binder})
    if isinstance(e, App):
        return free_vars_value(e.f) | free_vars_value(e.a)
    if isinstance(e, NewP):
        return set()
    if isinstance(e, WithHandle):
        return free_vars_value(e.handler) | free_vars_comp(e.body)
    if isinstance(e, CaseSum):
        fv = free_vars_value(e.scrut)
        fv |= free_vars_comp(e.lbody) - {e.lbinder}
        fv |= free_vars_comp(e.rbody) - {e.rbinder}
        return fv
    if isinstance(e, (Proj1, Proj2, Absurd, Print, Cast)):
        return free_vars_value(e.v)
    raise AssertionError(e)


# ---------------------------------------------------------------------------
# S-expression dump (for --dump-core)


def type_sexp(t: CoreType) -> str:
    if isinstance(t, (TUnit, TInt, TStr, TEmpty, TDyn)):
        return str(t)
    if isinstance(t, TArrow):
        return f"(-> {type_sexp(t.a)} {type_sexp(t.b)})"
    if isinstance(t, TPair):
        return f"(* {type_sexp(t.a)} {type_sexp(t.b)})"
    if isinstance(t, TSum):
        return f"(+ {type_sexp(t.a)} {type_sexp(t.b)})"
    if isinstance(t, TEff):
        return f"(eff {type_sexp(t.a)} {type_sexp(t.b)})"
    if isinstance(t, TEffH):
        return f"(effh {type_sexp(t.c)} {type_sexp(t.w)})"
    raise AssertionError(t)


def value_sexp(v: CoreValue) -> str:
    if isinstance(v, Var):
        return v.name
    if isinstance(v, UnitV):
        return "unit"
    if isinstance(v, IntV):
        return f"(int {v.n})"
    if isinstance(v, StrV):
        return f'(str "{v.s}")'
    if isinstance(v, Lam):
        return f"(fn ({v.param} {type_sexp(v.param_t)}) {sexp(v.body)})"
    if isinstance(v, OpInvoke):
        return f"(op {value_sexp(v.inst)})"
    if isinstance(v, HandlerVal):
        return (
            f"(handler {value_sexp(v.inst)} "
            f"(val ({v.val_binder} {type_sexp(v.val_t)}) {sexp(v.val_body)}) "
            f"(op ({v.op_arg} {v.op_k}) {sexp(v.op_body)}))"
        )
    if isinstance(v, PairV):
        return f"(pair {value_sexp(v.a)} {value_sexp(v.b)})"
    if isinstance(v, InL):
        return f"(inl {value_sexp(v.v)} {type_sexp(v.ann)})"
    if isinstance(v, InR):
        return f"(inr {value_sexp(v.v)} {type_sexp(v.ann)})"
    if isinstance(v, Prim):
        return f"(prim {v.name})"
    raise AssertionError(v)


def sexp(e: CoreComp) -> str:
    if isinstance(e, Val):
        return f"(val {value_sexp(e.v)})"
    if isinstance(e, Let):
        return f"(let {e.binder} {sexp(e.e1)} {sexp(e.e2)})"
    if isinstance(e, App):
        return f"(app {value_sexp(e.f)} {value_sexp(e.a)})"
    if isinstance(e, NewP):
        return f"(newp {type_sexp(e.t1)} {type_sexp(e.t2)})"
    if isinstance(e, WithHandle):
        return f"(with-handle {value_sexp(e.handler)} {sexp(e.body)})"
    if isinstance(e, CaseSum):
        return f"(case {value_sexp(e.scrut)} ({e.lbinder} {sexp(e.lbody)}) ({e.rbinder} {sexp(e.rbody)}))"
    if isinstance(e, Proj1):
        return f"(fst {value_sexp(e.v)})"
    if isinstance(e, Proj2):
        return f"(snd {value_sexp(e.v)})"
    if isinstance(e, Absurd):
        return f"(absurd {value_sexp(e.v)} {type_sexp(e.ann)})"
    if isinstance(e, Print):
        return f"(print {value_sexp(e.v)})"
    if isinstance(e, Cast):
        return f"(cast {value_sexp(e.v)} {type_sexp(e.to)})"
    raise AssertionError(e)
