"""Core delimcc: first-order abstract syntax and typechecker.

The target calculus of the translation: multi-prompt delimited control
(``newpr`` / ``pushpr`` / ``sh0``), recursive functions, a universal
type with runtime-checked projection, and the free structure ``ret`` /
``act`` with its eliminator.  Computations are in A-normal form, like
Core Eff.

Where the reference signature is polymorphic, nodes carry annotations:
``sh0`` carries its result type, ``ret`` the free type it inhabits,
``reclam`` its full arrow type, ``newpr`` the prompt's content type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Union

from .errors import Pos, TypeCheckError

# ---------------------------------------------------------------------------
# Types (class names shared with core_eff so runtime tag checks dispatch
# uniformly; the classes themselves are distinct)


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
class TUniv:
    def __str__(self) -> str:
        return "univ"


@dataclass(frozen=True)
class TArrow:
    a: "DType"
    b: "DType"

    def __str__(self) -> str:
        return f"({self.a} -> {self.b})"


@dataclass(frozen=True)
class TPair:
    a: "DType"
    b: "DType"

    def __str__(self) -> str:
        return f"({self.a} * {self.b})"


@dataclass(frozen=True)
class TSum:
    a: "DType"
    b: "DType"

    def __str__(self) -> str:
        return f"({self.a} + {self.b})"


@dataclass(frozen=True)
class TPrompt:
    t: "DType"

    def __str__(self) -> str:
        return f"({self.t} prompt)"


@dataclass(frozen=True)
class TFree:
    a: "DType"
    b: "DType"

    def __str__(self) -> str:
        return f"(({self.a}, {self.b}) free)"


DType = Union[TUnit, TInt, TStr, TEmpty, TDyn, TUniv, TArrow, TPair, TSum, TPrompt, TFree]

UNIT_T = TUnit()
INT_T = TInt()
STR_T = TStr()
EMPTY_T = TEmpty()
DYN_T = TDyn()
UNIV_T = TUniv()
BOOL_T = TSum(UNIT_T, UNIT_T)


def consistent(t1: DType, t2: DType) -> bool:
    if isinstance(t1, TDyn) or isinstance(t2, TDyn):
        return True
    if type(t1) is not type(t2):
        return False
    if isinstance(t1, (TUnit, TInt, TStr, TEmpty, TUniv)):
        return True
    if isinstance(t1, TPrompt):
        return consistent(t1.t, t2.t)
    if isinstance(t1, (TArrow, TPair, TSum, TFree)):
        return consistent(t1.a, t2.a) and consistent(t1.b, t2.b)
    raise AssertionError(t1)


def refine(t1: DType, t2: DType) -> DType:
    if isinstance(t1, TDyn):
        return t2
    if isinstance(t2, TDyn):
        return t1
    if isinstance(t1, TPrompt) and isinstance(t2, TPrompt):
        return TPrompt(refine(t1.t, t2.t))
    if isinstance(t1, (TArrow, TPair, TSum, TFree)) and type(t1) is type(t2):
        return type(t1)(refine(t1.a, t2.a), refine(t1.b, t2.b))
    return t1


# ---------------------------------------------------------------------------
# Values


@dataclass(frozen=True)
class DVar:
    name: str
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DUnitV:
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DIntV:
    n: int
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DStrV:
    s: str
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DLam:
    param: str
    param_t: DType
    body: "DComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DRecLam:
    """Recursive function; ``fn_t`` is the full arrow type of ``self``."""

    self_name: str
    param: str
    fn_t: DType
    body: "DComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DIUniv:
    v: "DValue"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DRet:
    """Free structure: normal completion; annotated with its free type."""

    v: "DValue"
    ann: DType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DAct:
    arg: "DValue"
    k: "DValue"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DPairV:
    a: "DValue"
    b: "DValue"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DInL:
    v: "DValue"
    ann: DType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DInR:
    v: "DValue"
    ann: DType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DPrim:
    name: str
    pos: Pos = field(default=None, compare=False)


DValue = Union[DVar, DUnitV, DIntV, DStrV, DLam, DRecLam, DIUniv, DRet, DAct, DPairV, DInL, DInR, DPrim]


# ---------------------------------------------------------------------------
# Computations


@dataclass(frozen=True)
class DVl:
    v: DValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DLet:
    binder: str
    e1: "DComp"
    e2: "DComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DApp:
    f: DValue
    a: DValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DNewPr:
    """Fresh prompt; annotated with the prompt's content type."""

    t: DType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DPushPr:
    prompt: DValue
    body: "DComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DSh0:
    """Capture up to the nearest matching prompt.

    ``res_t`` annotates the hole's type (the reference signature's
    answer-polymorphic ``'b``); the continuation binder has type
    ``res_t -> a`` where the prompt has content type ``a``.
    """

    prompt: DValue
    k_binder: str
    res_t: DType
    body: "DComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DWithFree:
    scrut: DValue
    ret_binder: str
    ret_body: "DComp"
    act_arg: str
    act_k: str
    act_body: "DComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DPUniv:
    """Projection from the universal type; tag-checked at run time."""

    v: DValue
    to: DType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DCaseSum:
    scrut: DValue
    lbinder: str
    lbody: "DComp"
    rbinder: str
    rbody: "DComp"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DProj1:
    v: DValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DProj2:
    v: DValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DAbsurd:
    v: DValue
    ann: DType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DPrint:
    v: DValue
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class DCast:
    v: DValue
    to: DType
    pos: Pos = field(default=None, compare=False)


DComp = Union[
    DVl, DLet, DApp, DNewPr, DPushPr, DSh0, DWithFree, DPUniv, DCaseSum, DProj1, DProj2, DAbsurd, DPrint, DCast
]

DProgram = DComp

DTypeCtx = Dict[str, DType]

PRIM_TYPES: Dict[str, DType] = {
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


def check_value(ctx: DTypeCtx, v: DValue) -> DType:
    if isinstance(v, DVar):
        t = ctx.get(v.name)
        _expect(t is not None, f"unbound variable {v.name}", v.pos)
        return t  # type: ignore[return-value]
    if isinstance(v, DUnitV):
        return UNIT_T
    if isinstance(v, DIntV):
        return INT_T
    if isinstance(v, DStrV):
        return STR_T
    if isinstance(v, DPrim):
        t = PRIM_TYPES.get(v.name)
        _expect(t is not None, f"unknown primitive {v.name}", v.pos)
        return t  # type: ignore[return-value]
    if isinstance(v, DLam):
        return TArrow(v.param_t, check_comp({**ctx, v.param: v.param_t}, v.body))
    if isinstance(v, DRecLam):
        _expect(isinstance(v.fn_t, TArrow), "recursive function annotated with a non-arrow", v.pos, "an arrow", v.fn_t)
        ft: TArrow = v.fn_t  # type: ignore[assignment]
        bt = check_comp({**ctx, v.self_name: ft, v.param: ft.a}, v.body)
        _expect(consistent(bt, ft.b), "recursive function body type mismatch", v.pos, ft.b, bt)
        return ft
    if isinstance(v, DIUniv):
        check_value(ctx, v.v)
        return UNIV_T
    if isinstance(v, DRet):
        pt = check_value(ctx, v.v)
        _expect(consistent(pt, UNIV_T), "ret payload must be univ", v.pos, UNIV_T, pt)
        _expect(isinstance(v.ann, (TFree, TDyn)), "ret annotated with a non-free type", v.pos, "a free type", v.ann)
        return v.ann
    if isinstance(v, DAct):
        at = check_value(ctx, v.arg)
        kt = check_value(ctx, v.k)
        if isinstance(kt, TDyn):
            return TFree(at, DYN_T)
        _expect(isinstance(kt, TArrow), "act continuation must be a function", v.pos, "an arrow", kt)
        free_t = kt.b  # type: ignore[union-attr]
        if isinstance(free_t, TDyn):
            return TFree(at, kt.a)  # type: ignore[union-attr]
        _expect(isinstance(free_t, TFree), "act continuation must return a free structure", v.pos, "a free type", free_t)
        _expect(consistent(free_t.a, at), "act argument type mismatch", v.pos, free_t.a, at)
        _expect(consistent(free_t.b, kt.a), "act continuation domain mismatch", v.pos, free_t.b, kt.a)  # type: ignore[union-attr]
        return free_t
    if isinstance(v, DPairV):
        return TPair(check_value(ctx, v.a), check_value(ctx, v.b))
    if isinstance(v, (DInL, DInR)):
        _expect(isinstance(v.ann, (TSum, TDyn)), "injection annotated with a non-sum type", v.pos, "a sum type", v.ann)
        if isinstance(v.ann, TDyn):
            check_value(ctx, v.v)
            return DYN_T
        side = v.ann.a if isinstance(v, DInL) else v.ann.b
        pt = check_value(ctx, v.v)
        _expect(consistent(pt, side), "injection payload type mismatch", v.pos, side, pt)
        return v.ann
    raise AssertionError(f"not a delimcc value: {v!r}")


def check_comp(ctx: DTypeCtx, e: DComp) -> DType:
    if isinstance(e, DVl):
        return check_value(ctx, e.v)
    if isinstance(e, DLet):
        t1 = check_comp(ctx, e.e1)
        return check_comp({**ctx, e.binder: t1}, e.e2)
    if isinstance(e, DApp):
        ft = check_value(ctx, e.f)
        at = check_value(ctx, e.a)
        if isinstance(ft, TDyn):
            return DYN_T
        _expect(isinstance(ft, TArrow), "application of a non-function", e.pos, "a function", ft)
        _expect(consistent(ft.a, at), "argument type mismatch", e.pos, ft.a, at)  # type: ignore[union-attr]
        return ft.b  # type: ignore[union-attr]
    if isinstance(e, DNewPr):
        return TPrompt(e.t)
    if isinstance(e, DPushPr):
        pt = check_value(ctx, e.prompt)
        bt = check_comp(ctx, e.body)
        if isinstance(pt, TDyn):
            return bt
        _expect(isinstance(pt, TPrompt), "pushpr of a non-prompt", e.pos, "a prompt", pt)
        _expect(consistent(pt.t, bt), "pushpr body type mismatch", e.pos, pt.t, bt)  # type: ignore[union-attr]
        return refine(pt.t, bt)  # type: ignore[union-attr]
    if isinstance(e, DSh0):
        pt = check_value(ctx, e.prompt)
        if isinstance(pt, TDyn):
            pt = TPrompt(DYN_T)
        _expect(isinstance(pt, TPrompt), "sh0 of a non-prompt", e.pos, "a prompt", pt)
        a = pt.t  # type: ignore[union-attr]
        bt = check_comp({**ctx, e.k_binder: TArrow(e.res_t, a)}, e.body)
        _expect(consistent(bt, a), "sh0 body must produce the prompt's answer type", e.pos, a, bt)
        return e.res_t
    if isinstance(e, DWithFree):
        st = check_value(ctx, e.scrut)
        if isinstance(st, TDyn):
            st = TFree(DYN_T, DYN_T)
        _expect(isinstance(st, TFree), "with_free on a non-free value", e.pos, "a free structure", st)
        rt = check_comp({**ctx, e.ret_binder: UNIV_T}, e.ret_body)
        act_ctx = {**ctx, e.act_arg: st.a, e.act_k: TArrow(st.b, st)}  # type: ignore[union-attr]
        at = check_comp(act_ctx, e.act_body)
        _expect(consistent(rt, at), "with_free branches disagree", e.pos, rt, at)
        return refine(rt, at)
    if isinstance(e, DPUniv):
        vt = check_value(ctx, e.v)
        _expect(consistent(vt, UNIV_T), "p_univ of a non-univ value", e.pos, UNIV_T, vt)
        return e.to
    if isinstance(e, DCaseSum):
        st = check_value(ctx, e.scrut)
        if isinstance(st, TDyn):
            st = TSum(DYN_T, DYN_T)
        _expect(isinstance(st, TSum), "case on a non-sum value", e.pos, "a sum", st)
        lt = check_comp({**ctx, e.lbinder: st.a}, e.lbody)  # type: ignore[union-attr]
        rt = check_comp({**ctx, e.rbinder: st.b}, e.rbody)  # type: ignore[union-attr]
        _expect(consistent(lt, rt), "case branches disagree", e.pos, lt, rt)
        return refine(lt, rt)
    if isinstance(e, (DProj1, DProj2)):
        pt = check_value(ctx, e.v)
        if isinstance(pt, TDyn):
            return DYN_T
        _expect(isinstance(pt, TPair), "projection from a non-pair", e.pos, "a pair", pt)
        return pt.a if isinstance(e, DProj1) else pt.b  # type: ignore[union-attr]
    if isinstance(e, DAbsurd):
        vt = check_value(ctx, e.v)
        _expect(consistent(vt, EMPTY_T), "absurd applied to a non-empty value", e.pos, EMPTY_T, vt)
        return e.ann
    if isinstance(e, DPrint):
        vt = check_value(ctx, e.v)
        _expect(consistent(vt, STR_T), "print applied to a non-string", e.pos, STR_T, vt)
        return UNIT_T
    if isinstance(e, DCast):
        vt = check_value(ctx, e.v)
        _expect(
            isinstance(e.to, TDyn) or isinstance(vt, TDyn),
            "cast must go to or from dyn",
            e.pos,
            DYN_T,
            vt,
        )
        return e.to
    raise AssertionError(f"not a delimcc computation: {e!r}")


def check_delimcc(ctx: DTypeCtx, e: DComp) -> DType:
    return check_comp(ctx, e)


def typecheck(program: DProgram) -> DType:
    return check_comp({}, program)


# ---------------------------------------------------------------------------
# S-expression dump (for --dump-delimcc / --emit)


def type_sexp(t: DType) -> str:
    if isinstance(t, (TUnit, TInt, TStr, TEmpty, TDyn, TUniv)):
        return str(t)
    if isinstance(t, TArrow):
        return f"(-> {type_sexp(t.a)} {type_sexp(t.b)})"
    if isinstance(t, TPair):
        return f"(* {type_sexp(t.a)} {type_sexp(t.b)})"
    if isinstance(t, TSum):
        return f"(+ {type_sexp(t.a)} {type_sexp(t.b)})"
    if isinstance(t, TPrompt):
        return f"(prompt {type_sexp(t.t)})"
    if isinstance(t, TFree):
        return f"(free {type_sexp(t.a)} {type_sexp(t.b)})"
    raise AssertionError(t)


def value_sexp(v: DValue) -> str:
    if isinstance(v, DVar):
        return v.name
    if isinstance(v, DUnitV):
        return "unit"
    if isinstance(v, DIntV):
        return f"(int {v.n})"
    if isinstance(v, DStrV):
        return f'(str "{v.s}")'
    if isinstance(v, DLam):
        return f"(fn ({v.param} {type_sexp(v.param_t)}) {sexp(v.body)})"
    if isinstance(v, DRecLam):
        return f"(absrec {v.self_name} ({v.param}) {type_sexp(v.fn_t)} {sexp(v.body)})"
    if isinstance(v, DIUniv):
        return f"(i-univ {value_sexp(v.v)})"
    if isinstance(v, DRet):
        return f"(ret {value_sexp(v.v)} {type_sexp(v.ann)})"
    if isinstance(v, DAct):
        return f"(act {value_sexp(v.arg)} {value_sexp(v.k)})"
    if isinstance(v, DPairV):
        return f"(pair {value_sexp(v.a)} {value_sexp(v.b)})"
    if isinstance(v, DInL):
        return f"(inl {value_sexp(v.v)} {type_sexp(v.ann)})"
    if isinstance(v, DInR):
        return f"(inr {value_sexp(v.v)} {type_sexp(v.ann)})"
    if isinstance(v, DPrim):
        return f"(prim {v.name})"
    raise AssertionError(v)


def sexp(e: DComp) -> str:
    if isinstance(e, DVl):
        return f"(vl {value_sexp(e.v)})"
    if isinstance(e, DLet):
        return f"(let {e.binder} {sexp(e.e1)} {sexp(e.e2)})"
    if isinstance(e, DApp):
        return f"(app {value_sexp(e.f)} {value_sexp(e.a)})"
    if isinstance(e, DNewPr):
        return f"(newpr {type_sexp(e.t)})"
    if isinstance(e, DPushPr):
        return f"(pushpr {value_sexp(e.prompt)} {sexp(e.body)})"
    if isinstance(e, DSh0):
        return f"(sh0 {value_sexp(e.prompt)} ({e.k_binder} {type_sexp(e.res_t)}) {sexp(e.body)})"
    if isinstance(e, DWithFree):
        return (
            f"(with-free {value_sexp(e.scrut)} "
            f"(ret ({e.ret_binder}) {sexp(e.ret_body)}) "
            f"(act ({e.act_arg} {e.act_k}) {sexp(e.act_body)}))"
        )
    if isinstance(e, DPUniv):
        return f"(p-univ {value_sexp(e.v)} {type_sexp(e.to)})"
    if isinstance(e, DCaseSum):
        return f"(case {value_sexp(e.scrut)} ({e.lbinder} {sexp(e.lbody)}) ({e.rbinder} {sexp(e.rbody)}))"
    if isinstance(e, DProj1):
        return f"(fst {value_sexp(e.v)})"
    if isinstance(e, DProj2):
        return f"(snd {value_sexp(e.v)})"
    if isinstance(e, DAbsurd):
        return f"(absurd {value_sexp(e.v)} {type_sexp(e.ann)})"
    if isinstance(e, DPrint):
        return f"(print {value_sexp(e.v)})"
    if isinstance(e, DCast):
        return f"(cast {value_sexp(e.v)} {type_sexp(e.to)})"
    raise AssertionError(e)
