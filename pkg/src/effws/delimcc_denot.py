"""Direct denotational interpreter for Core delimcc.

``sh0`` creates a bubble packing the prompt, the shift body (as an
opaque mapping over continuation values) and the identity continuation
for the empty context.  ``let`` grows a bubble by composing the let-body
onto its continuation; a matching ``pushpr`` pricks it, releasing the
body applied to the accumulated continuation re-enclosed in the prompt.
Non-matching prompts relay the bubble outward unchanged except for the
growing continuation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Union

from . import core_delimcc as cd
from .runtime import (
    DEFAULT_FUEL,
    DEFAULT_MAX_DEPTH,
    UNIT,
    DepthExceeded,
    EvalFailure,
    FuelExhausted,
    Outcome,
    Session,
    VAct,
    VFn,
    VInst,
    VInt,
    VPair,
    VRet,
    VStr,
    VSum,
    VUniv,
    Value,
    deep_call,
    render,
    tag_matches,
)


@dataclass(frozen=True)
class DV:
    d: Value


@dataclass(frozen=True)
class Bubble:
    prompt: int
    body: Callable[[Value], "DRes"]  # applied to the continuation-as-value
    k: Callable[[Value], "DRes"]  # the accumulated context
    act_origin: bool = True


DRes = Union[DV, Bubble]

Env = Dict[str, Value]


def lift_d(f: Callable[[Value], DRes], r: DRes, s: Session) -> DRes:
    if isinstance(r, DV):
        return f(r.d)
    k = r.k

    def k2(c: Value) -> DRes:
        s.push()
        out = lift_d(f, k(c), s)
        s.pop()
        return out

    return Bubble(r.prompt, r.body, k2, r.act_origin)


def pushpr_denot(p: int, r: DRes, s: Session) -> DRes:
    """Prick a matching bubble; relay others; values pass through."""
    if isinstance(r, DV):
        return r
    if r.prompt == p:
        k = r.k

        def resume(c: Value) -> DRes:
            s.push()
            out = pushpr_denot(p, k(c), s)
            s.pop()
            return out

        return r.body(VFn(resume))
    k = r.k

    def relay(c: Value) -> DRes:
        s.push()
        out = pushpr_denot(p, k(c), s)
        s.pop()
        return out

    return Bubble(r.prompt, r.body, relay, r.act_origin)


def apply_fn(f: Value, a: Value) -> DRes:
    if isinstance(f, VFn):
        return f.fn(a)
    raise EvalFailure("TagMismatch", f"application of a non-function: {render(f)}")


def _prim_int(v: Value) -> int:
    if isinstance(v, VInt):
        return v.n
    raise EvalFailure("TagMismatch", f"primitive expected an int, got {render(v)}")


def _bool(b: bool) -> VSum:
    return VSum(left=not b, v=UNIT)


def _arith2(op) -> VFn:
    return VFn(lambda x: DV(VFn(lambda y: DV(op(_prim_int(x), _prim_int(y))))))


PRIM_DENOTS: Dict[str, VFn] = {
    "add": _arith2(lambda a, b: VInt(a + b)),
    "sub": _arith2(lambda a, b: VInt(a - b)),
    "mul": _arith2(lambda a, b: VInt(a * b)),
    "eq": _arith2(lambda a, b: _bool(a == b)),
    "lt": _arith2(lambda a, b: _bool(a < b)),
    "leq": _arith2(lambda a, b: _bool(a <= b)),
    "absint": VFn(lambda x: DV(VInt(abs(_prim_int(x))))),
}


def eval_dvalue(env: Env, v: cd.DValue, s: Session) -> Value:
    if isinstance(v, cd.DVar):
        try:
            return env[v.name]
        except KeyError:
            raise EvalFailure("TagMismatch", f"unbound variable {v.name}") from None
    if isinstance(v, cd.DUnitV):
        return UNIT
    if isinstance(v, cd.DIntV):
        return VInt(v.n)
    if isinstance(v, cd.DStrV):
        return VStr(v.s)
    if isinstance(v, cd.DPrim):
        return PRIM_DENOTS[v.name]
    if isinstance(v, cd.DLam):
        param, body = v.param, v.body
        return VFn(lambda a: eval_d({**env, param: a}, body, s))
    if isinstance(v, cd.DRecLam):
        self_name, param, body = v.self_name, v.param, v.body

        def self_fn(a: Value) -> DRes:
            return eval_d({**env, self_name: fnv, param: a}, body, s)

        fnv = VFn(self_fn)
        return fnv
    if isinstance(v, cd.DIUniv):
        return VUniv(eval_dvalue(env, v.v, s))
    if isinstance(v, cd.DRet):
        return VRet(eval_dvalue(env, v.v, s))
    if isinstance(v, cd.DAct):
        return VAct(eval_dvalue(env, v.arg, s), eval_dvalue(env, v.k, s))
    if isinstance(v, cd.DPairV):
        return VPair(eval_dvalue(env, v.a, s), eval_dvalue(env, v.b, s))
    if isinstance(v, cd.DInL):
        return VSum(True, eval_dvalue(env, v.v, s))
    if isinstance(v, cd.DInR):
        return VSum(False, eval_dvalue(env, v.v, s))
    raise AssertionError(f"not a delimcc value: {v!r}")


def eval_d(env: Env, e: cd.DComp, s: Session) -> DRes:
    s.tick()
    s.push()
    r = _eval(env, e, s)
    s.pop()
    return r


def _eval(env: Env, e: cd.DComp, s: Session) -> DRes:
    if isinstance(e, cd.DVl):
        return DV(eval_dvalue(env, e.v, s))
    if isinstance(e, cd.DLet):
        binder, body = e.binder, e.e2
        r1 = eval_d(env, e.e1, s)
        return lift_d(lambda d: eval_d({**env, binder: d}, body, s), r1, s)
    if isinstance(e, cd.DApp):
        f = eval_dvalue(env, e.f, s)
        a = eval_dvalue(env, e.a, s)
        return apply_fn(f, a)
    if isinstance(e, cd.DNewPr):
        return DV(VInst(s.fresh_instance()))
    if isinstance(e, cd.DPushPr):
        p = eval_dvalue(env, e.prompt, s)
        if not isinstance(p, VInst):
            raise EvalFailure("TagMismatch", f"pushpr of a non-prompt: {render(p)}")
        return pushpr_denot(p.n, eval_d(env, e.body, s), s)
    if isinstance(e, cd.DSh0):
        p = eval_dvalue(env, e.prompt, s)
        if not isinstance(p, VInst):
            raise EvalFailure("TagMismatch", f"sh0 of a non-prompt: {render(p)}")
        k_binder, body = e.k_binder, e.body
        act_origin = isinstance(body, cd.DVl) and isinstance(body.v, cd.DAct)
        if act_origin:
            s.act_bubbles += 1
        else:
            s.other_bubbles += 1
        return Bubble(
            p.n,
            lambda kval: eval_d({**env, k_binder: kval}, body, s),
            lambda c: DV(c),
            act_origin,
        )
    if isinstance(e, cd.DWithFree):
        d = eval_dvalue(env, e.scrut, s)
        if isinstance(d, VRet):
            return eval_d({**env, e.ret_binder: d.v}, e.ret_body, s)
        if isinstance(d, VAct):
            return eval_d({**env, e.act_arg: d.arg, e.act_k: d.k}, e.act_body, s)
        raise EvalFailure("TagMismatch", f"with_free on a non-free value: {render(d)}")
    if isinstance(e, cd.DPUniv):
        d = eval_dvalue(env, e.v, s)
        if not isinstance(d, VUniv):
            raise EvalFailure("TagMismatch", f"p_univ of a non-univ value: {render(d)}")
        if not tag_matches(d.v, e.to):
            raise EvalFailure("TagMismatch", f"p_univ of {render(d.v)} at {e.to}")
        return DV(d.v)
    if isinstance(e, cd.DCaseSum):
        d = eval_dvalue(env, e.scrut, s)
        if not isinstance(d, VSum):
            raise EvalFailure("TagMismatch", f"case on a non-sum: {render(d)}")
        if d.left:
            return eval_d({**env, e.lbinder: d.v}, e.lbody, s)
        return eval_d({**env, e.rbinder: d.v}, e.rbody, s)
    if isinstance(e, (cd.DProj1, cd.DProj2)):
        d = eval_dvalue(env, e.v, s)
        if not isinstance(d, VPair):
            raise EvalFailure("TagMismatch", f"projection from a non-pair: {render(d)}")
        return DV(d.a if isinstance(e, cd.DProj1) else d.b)
    if isinstance(e, cd.DAbsurd):
        raise EvalFailure("Absurd", "eliminated a value of the empty type")
    if isinstance(e, cd.DPrint):
        d = eval_dvalue(env, e.v, s)
        if not isinstance(d, VStr):
            raise EvalFailure("TagMismatch", f"print of a non-string: {render(d)}")
        s.trace.append(d.s)
        return DV(UNIT)
    if isinstance(e, cd.DCast):
        d = eval_dvalue(env, e.v, s)
        if not tag_matches(d, e.to):
            raise EvalFailure("TagMismatch", f"cast of {render(d)} to {e.to}")
        return DV(d)
    raise AssertionError(f"not a delimcc computation: {e!r}")


def observe(r: DRes, s: Session) -> Outcome:
    if isinstance(r, DV):
        return Outcome.of_value(render(r.d), s.trace)
    return Outcome.unhandled(r.prompt, s.trace)


def run_delimcc(
    program: cd.DProgram,
    fuel: int = DEFAULT_FUEL,
    max_depth: int = DEFAULT_MAX_DEPTH,
    session: Session = None,
) -> Outcome:
    """Evaluate a closed delimcc program; an escaped bubble is an
    unhandled effect."""

    def go() -> Outcome:
        s = session if session is not None else Session(fuel=fuel, max_depth=max_depth)
        try:
            r = eval_d({}, program, s)
        except (FuelExhausted, DepthExceeded, RecursionError):
            return Outcome.out_of_fuel()
        except EvalFailure as ex:
            return Outcome.of_error(ex.kind, s.trace)
        return observe(r, s)

    return deep_call(go)
