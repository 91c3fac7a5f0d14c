"""Denotational interpreter for Core Eff.

A computation's meaning is an :class:`EffRes`: either a final value
``RV`` or a suspended effect request ``RE`` carrying the instance id,
the argument and the continuation as an opaque function.  ``let`` grows
the continuation of a pending request via :func:`lift_eff`; a handler
dispatches requests for its own instance and relays the rest outward,
composing itself onto the continuation (handlers are deep).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Union

from . import core_eff as ce
from .runtime import (
    DEFAULT_FUEL,
    DEFAULT_MAX_DEPTH,
    UNIT,
    DepthExceeded,
    EvalFailure,
    FuelExhausted,
    Outcome,
    Session,
    VFn,
    VInst,
    VInt,
    VPair,
    VStr,
    VSum,
    VUnit,
    Value,
    deep_call,
    render,
    tag_matches,
)


@dataclass(frozen=True)
class RV:
    d: Value


@dataclass(frozen=True)
class RE:
    inst: int
    arg: Value
    k: Callable[[Value], "EffRes"]


EffRes = Union[RV, RE]

Env = Dict[str, Value]


def lift_eff(f: Callable[[Value], EffRes], r: EffRes, s: Session) -> EffRes:
    """Lift a value-consumer over results: apply to values, grow requests."""
    if isinstance(r, RV):
        return f(r.d)
    k = r.k

    def k2(x: Value) -> EffRes:
        s.push()
        out = lift_eff(f, k(x), s)
        s.pop()
        return out

    return RE(r.inst, r.arg, k2)


def apply_fn(f: Value, a: Value) -> EffRes:
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
    return VFn(lambda x: RV(VFn(lambda y: RV(op(_prim_int(x), _prim_int(y))))))


PRIM_DENOTS: Dict[str, VFn] = {
    "add": _arith2(lambda a, b: VInt(a + b)),
    "sub": _arith2(lambda a, b: VInt(a - b)),
    "mul": _arith2(lambda a, b: VInt(a * b)),
    "eq": _arith2(lambda a, b: _bool(a == b)),
    "lt": _arith2(lambda a, b: _bool(a < b)),
    "leq": _arith2(lambda a, b: _bool(a <= b)),
    "absint": VFn(lambda x: RV(VInt(abs(_prim_int(x))))),
}


def eval_value(env: Env, v: ce.CoreValue, s: Session) -> Value:
    if isinstance(v, ce.Var):
        try:
            return env[v.name]
        except KeyError:
            raise EvalFailure("TagMismatch", f"unbound variable {v.name}") from None
    if isinstance(v, ce.UnitV):
        return UNIT
    if isinstance(v, ce.IntV):
        return VInt(v.n)
    if isinstance(v, ce.StrV):
        return VStr(v.s)
    if isinstance(v, ce.Prim):
        return PRIM_DENOTS[v.name]
    if isinstance(v, ce.Lam):
        param, body = v.param, v.body
        return VFn(lambda a: eval_comp({**env, param: a}, body, s))
    if isinstance(v, ce.OpInvoke):
        inst = eval_value(env, v.inst, s)
        if not isinstance(inst, VInst):
            raise EvalFailure("TagMismatch", f"operation of a non-instance: {render(inst)}")
        p = inst.n
        return VFn(lambda a: RE(p, a, lambda x: RV(x)))
    if isinstance(v, ce.HandlerVal):
        return _handler_fn(env, v, s)
    if isinstance(v, ce.PairV):
        return VPair(eval_value(env, v.a, s), eval_value(env, v.b, s))
    if isinstance(v, ce.InL):
        return VSum(True, eval_value(env, v.v, s))
    if isinstance(v, ce.InR):
        return VSum(False, eval_value(env, v.v, s))
    raise AssertionError(f"not a value: {v!r}")


def _handler_fn(env: Env, hv: ce.HandlerVal, s: Session) -> VFn:
    inst = eval_value(env, hv.inst, s)
    if not isinstance(inst, VInst):
        raise EvalFailure("TagMismatch", f"handler over a non-instance: {render(inst)}")
    p = inst.n

    def dispatch(r: EffRes) -> EffRes:
        if isinstance(r, RV):
            return eval_comp({**env, hv.val_binder: r.d}, hv.val_body, s)
        k = r.k
        if r.inst == p:
            # deep handler: the resumption re-enters this dispatcher
            def resume(b: Value) -> EffRes:
                s.push()
                out = dispatch(k(b))
                s.pop()
                return out

            op_env = {**env, hv.op_arg: r.arg, hv.op_k: VFn(resume)}
            return eval_comp(op_env, hv.op_body, s)

        # relay to an outer handler, composing this one onto the continuation
        def relay(b: Value) -> EffRes:
            s.push()
            out = dispatch(k(b))
            s.pop()
            return out

        return RE(r.inst, r.arg, relay)

    return VFn(lambda th: dispatch(apply_fn(th, UNIT)))


def eval_comp(env: Env, e: ce.CoreComp, s: Session) -> EffRes:
    s.tick()
    s.push()
    r = _eval(env, e, s)
    s.pop()
    return r


def _eval(env: Env, e: ce.CoreComp, s: Session) -> EffRes:
    if isinstance(e, ce.Val):
        return RV(eval_value(env, e.v, s))
    if isinstance(e, ce.Let):
        binder, body = e.binder, e.e2
        r1 = eval_comp(env, e.e1, s)
        return lift_eff(lambda d: eval_comp({**env, binder: d}, body, s), r1, s)
    if isinstance(e, ce.App):
        f = eval_value(env, e.f, s)
        a = eval_value(env, e.a, s)
        return apply_fn(f, a)
    if isinstance(e, ce.NewP):
        return RV(VInst(s.fresh_instance()))
    if isinstance(e, ce.WithHandle):
        h = eval_value(env, e.handler, s)
        body = e.body
        return apply_fn(h, VFn(lambda _u: eval_comp(env, body, s)))
    if isinstance(e, ce.CaseSum):
        d = eval_value(env, e.scrut, s)
        if not isinstance(d, VSum):
            raise EvalFailure("TagMismatch", f"case on a non-sum: {render(d)}")
        if d.left:
            return eval_comp({**env, e.lbinder: d.v}, e.lbody, s)
        return eval_comp({**env, e.rbinder: d.v}, e.rbody, s)
    if isinstance(e, (ce.Proj1, ce.Proj2)):
        d = eval_value(env, e.v, s)
        if not isinstance(d, VPair):
            raise EvalFailure("TagMismatch", f"projection from a non-pair: {render(d)}")
        return RV(d.a if isinstance(e, ce.Proj1) else d.b)
    if isinstance(e, ce.Absurd):
        raise EvalFailure("Absurd", "eliminated a value of the empty type")
    if isinstance(e, ce.Print):
        d = eval_value(env, e.v, s)
        if not isinstance(d, VStr):
            raise EvalFailure("TagMismatch", f"print of a non-string: {render(d)}")
        s.trace.append(d.s)
        return RV(UNIT)
    if isinstance(e, ce.Cast):
        d = eval_value(env, e.v, s)
        if not tag_matches(d, e.to):
            raise EvalFailure("TagMismatch", f"cast of {render(d)} to {e.to}")
        return RV(d)
    raise AssertionError(f"not a computation: {e!r}")


def observe(r: EffRes, s: Session) -> Outcome:
    if isinstance(r, RV):
        return Outcome.of_value(render(r.d), s.trace)
    return Outcome.unhandled(r.inst, s.trace)


def run_eff(program: ce.CoreEffProgram, fuel: int = DEFAULT_FUEL, max_depth: int = DEFAULT_MAX_DEPTH) -> Outcome:
    """Evaluate a closed program under a fresh session and observe it."""

    def go() -> Outcome:
        s = Session(fuel=fuel, max_depth=max_depth)
        try:
            r = eval_comp({}, program, s)
        except (FuelExhausted, DepthExceeded, RecursionError):
            return Outcome.out_of_fuel()
        except EvalFailure as ex:
            return Outcome.of_error(ex.kind, s.trace)
        return observe(r, s)

    return deep_call(go)
