"""Small-step reducer for Core delimcc via evaluation-context decomposition.

The machine is the defunctionalised counterpart of the bubble-up
interpreter: the evaluation context is an explicit frame stack (pending
lets and installed prompts).  ``sh0`` pops frames down to the nearest
matching prompt frame and materialises them as a continuation value;
invoking the continuation replays the saved frames under a fresh prompt
frame, so captured continuations are multi-shot.  One rewrite rule
application costs one fuel unit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

from . import core_delimcc as cd
from .runtime import (
    DEFAULT_FUEL,
    DEFAULT_MAX_DEPTH,
    UNIT,
    EvalFailure,
    FnLike,
    FuelExhausted,
    Outcome,
    Session,
    VInst,
    VInt,
    VPair,
    VRet,
    VAct,
    VStr,
    VSum,
    VUniv,
    Value,
    render,
    tag_matches,
)

Env = Dict[str, Value]


# ---------------------------------------------------------------------------
# Machine values (callables are machine-specific, data is shared)


class MClosure(FnLike):
    __slots__ = ("param", "body", "env")

    def __init__(self, param: str, body: cd.DComp, env: Env):
        self.param = param
        self.body = body
        self.env = env


class MRecClosure(FnLike):
    __slots__ = ("self_name", "param", "body", "env")

    def __init__(self, self_name: str, param: str, body: cd.DComp, env: Env):
        self.self_name = self_name
        self.param = param
        self.body = body
        self.env = env


class MPrim(FnLike):
    __slots__ = ("name", "args")

    def __init__(self, name: str, args: Tuple[Value, ...] = ()):
        self.name = name
        self.args = args


class MCont(FnLike):
    """Captured continuation: a saved frame segment replayed under its
    prompt.  Frames are immutable, so re-invocation is repeatable."""

    __slots__ = ("prompt", "frames")

    def __init__(self, prompt: int, frames: Tuple["Frame", ...]):
        self.prompt = prompt
        self.frames = frames  # innermost first


# ---------------------------------------------------------------------------
# Frames


@dataclass(frozen=True)
class FLet:
    binder: str
    body: cd.DComp
    env: Env


@dataclass(frozen=True)
class FPrompt:
    prompt: int


Frame = Union[FLet, FPrompt]


@dataclass
class Done:
    value: Value


class EscapedShift(Exception):
    def __init__(self, prompt: int):
        self.prompt = prompt
        super().__init__(f"sh0 with no matching prompt {prompt}")


@dataclass
class Machine:
    """Control is either a computation under an environment or a value."""

    control: Optional[cd.DComp]
    value: Optional[Value]
    env: Env
    stack: list
    session: Session

    @staticmethod
    def load(program: cd.DProgram, session: Session) -> "Machine":
        return Machine(control=program, value=None, env={}, stack=[], session=session)


_PRIM_ARITY = {"add": 2, "sub": 2, "mul": 2, "eq": 2, "lt": 2, "leq": 2, "absint": 1}


def _prim_int(v: Value) -> int:
    if isinstance(v, VInt):
        return v.n
    raise EvalFailure("TagMismatch", f"primitive expected an int, got {render(v)}")


def _bool(b: bool) -> VSum:
    return VSum(left=not b, v=UNIT)


def _prim_compute(name: str, args: Tuple[Value, ...]) -> Value:
    if name == "add":
        return VInt(_prim_int(args[0]) + _prim_int(args[1]))
    if name == "sub":
        return VInt(_prim_int(args[0]) - _prim_int(args[1]))
    if name == "mul":
        return VInt(_prim_int(args[0]) * _prim_int(args[1]))
    if name == "eq":
        return _bool(_prim_int(args[0]) == _prim_int(args[1]))
    if name == "lt":
        return _bool(_prim_int(args[0]) < _prim_int(args[1]))
    if name == "leq":
        return _bool(_prim_int(args[0]) <= _prim_int(args[1]))
    if name == "absint":
        return VInt(abs(_prim_int(args[0])))
    raise EvalFailure("Stuck", f"unknown primitive {name}")


def eval_mvalue(env: Env, v: cd.DValue) -> Value:
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
        return MPrim(v.name)
    if isinstance(v, cd.DLam):
        return MClosure(v.param, v.body, env)
    if isinstance(v, cd.DRecLam):
        return MRecClosure(v.self_name, v.param, v.body, env)
    if isinstance(v, cd.DIUniv):
        return VUniv(eval_mvalue(env, v.v))
    if isinstance(v, cd.DRet):
        return VRet(eval_mvalue(env, v.v))
    if isinstance(v, cd.DAct):
        return VAct(eval_mvalue(env, v.arg), eval_mvalue(env, v.k))
    if isinstance(v, cd.DPairV):
        return VPair(eval_mvalue(env, v.a), eval_mvalue(env, v.b))
    if isinstance(v, cd.DInL):
        return VSum(True, eval_mvalue(env, v.v))
    if isinstance(v, cd.DInR):
        return VSum(False, eval_mvalue(env, v.v))
    raise AssertionError(f"not a delimcc value: {v!r}")


def _apply(m: Machine, f: Value, a: Value) -> None:
    if isinstance(f, MClosure):
        m.env = {**f.env, f.param: a}
        m.control = f.body
        m.value = None
        return
    if isinstance(f, MRecClosure):
        m.env = {**f.env, f.self_name: f, f.param: a}
        m.control = f.body
        m.value = None
        return
    if isinstance(f, MCont):
        # replay: pushpr p Cp[a]
        m.stack.append(FPrompt(f.prompt))
        m.stack.extend(reversed(f.frames))
        m.control = None
        m.value = a
        return
    if isinstance(f, MPrim):
        args = f.args + (a,)
        if len(args) == _PRIM_ARITY[f.name]:
            m.value = _prim_compute(f.name, args)
        else:
            m.value = MPrim(f.name, args)
        m.control = None
        return
    raise EvalFailure("TagMismatch", f"application of a non-function: {render(f)}")


def step(m: Machine) -> Union[Machine, Done]:
    """Apply one rewrite rule; raises EscapedShift for an unmatched sh0."""
    m.session.tick()
    e = m.control
    if e is None:
        v = m.value
        if not m.stack:
            return Done(v)
        frame = m.stack.pop()
        if isinstance(frame, FLet):
            m.env = {**frame.env, frame.binder: v}
            m.control = frame.body
            m.value = None
        # FPrompt: pushpr p (vl x) -> vl x; nothing else to do
        return m

    env = m.env
    if isinstance(e, cd.DVl):
        m.value = eval_mvalue(env, e.v)
        m.control = None
        return m
    if isinstance(e, cd.DLet):
        m.stack.append(FLet(e.binder, e.e2, env))
        m.control = e.e1
        return m
    if isinstance(e, cd.DApp):
        _apply(m, eval_mvalue(env, e.f), eval_mvalue(env, e.a))
        return m
    if isinstance(e, cd.DNewPr):
        m.value = VInst(m.session.fresh_instance())
        m.control = None
        return m
    if isinstance(e, cd.DPushPr):
        p = eval_mvalue(env, e.prompt)
        if not isinstance(p, VInst):
            raise EvalFailure("TagMismatch", f"pushpr of a non-prompt: {render(p)}")
        m.stack.append(FPrompt(p.n))
        m.control = e.body
        return m
    if isinstance(e, cd.DSh0):
        p = eval_mvalue(env, e.prompt)
        if not isinstance(p, VInst):
            raise EvalFailure("TagMismatch", f"sh0 of a non-prompt: {render(p)}")
        captured = []
        while m.stack:
            frame = m.stack.pop()
            if isinstance(frame, FPrompt) and frame.prompt == p.n:
                k = MCont(p.n, tuple(captured))
                m.env = {**env, e.k_binder: k}
                m.control = e.body
                return m
            captured.append(frame)
        raise EscapedShift(p.n)
    if isinstance(e, cd.DWithFree):
        d = eval_mvalue(env, e.scrut)
        if isinstance(d, VRet):
            m.env = {**env, e.ret_binder: d.v}
            m.control = e.ret_body
        elif isinstance(d, VAct):
            m.env = {**env, e.act_arg: d.arg, e.act_k: d.k}
            m.control = e.act_body
        else:
            raise EvalFailure("TagMismatch", f"with_free on a non-free value: {render(d)}")
        return m
    if isinstance(e, cd.DPUniv):
        d = eval_mvalue(env, e.v)
        if not isinstance(d, VUniv):
            raise EvalFailure("TagMismatch", f"p_univ of a non-univ value: {render(d)}")
        if not tag_matches(d.v, e.to):
            raise EvalFailure("TagMismatch", f"p_univ of {render(d.v)} at {e.to}")
        m.value = d.v
        m.control = None
        return m
    if isinstance(e, cd.DCaseSum):
        d = eval_mvalue(env, e.scrut)
        if not isinstance(d, VSum):
            raise EvalFailure("TagMismatch", f"case on a non-sum: {render(d)}")
        if d.left:
            m.env = {**env, e.lbinder: d.v}
            m.control = e.lbody
        else:
            m.env = {**env, e.rbinder: d.v}
            m.control = e.rbody
        return m
    if isinstance(e, (cd.DProj1, cd.DProj2)):
        d = eval_mvalue(env, e.v)
        if not isinstance(d, VPair):
            raise EvalFailure("TagMismatch", f"projection from a non-pair: {render(d)}")
        m.value = d.a if isinstance(e, cd.DProj1) else d.b
        m.control = None
        return m
    if isinstance(e, cd.DAbsurd):
        raise EvalFailure("Absurd", "eliminated a value of the empty type")
    if isinstance(e, cd.DPrint):
        d = eval_mvalue(env, e.v)
        if not isinstance(d, VStr):
            raise EvalFailure("TagMismatch", f"print of a non-string: {render(d)}")
        m.session.trace.append(d.s)
        m.value = UNIT
        m.control = None
        return m
    if isinstance(e, cd.DCast):
        d = eval_mvalue(env, e.v)
        if not tag_matches(d, e.to):
            raise EvalFailure("TagMismatch", f"cast of {render(d)} to {e.to}")
        m.value = d
        m.control = None
        return m
    raise EvalFailure("Stuck", f"no rule applies to {type(e).__name__}")


def describe(m: Machine) -> str:
    """One-line configuration summary for --trace-steps."""
    if m.control is None:
        ctl = f"ret {render(m.value)}"
    else:
        ctl = f"ev {type(m.control).__name__}"
    return f"{ctl} | stack={len(m.stack)}"


def run_machine(
    program: cd.DProgram,
    session: Session,
    trace_fn: Optional[Callable[[int, Machine], None]] = None,
) -> Value:
    """Iterate the machine to completion; returns the final machine value."""
    m = Machine.load(program, session)
    n = 0
    while True:
        if trace_fn is not None:
            trace_fn(n, m)
        r = step(m)
        n += 1
        if isinstance(r, Done):
            return r.value


def run_step(
    program: cd.DProgram,
    fuel: int = DEFAULT_FUEL,
    max_depth: int = DEFAULT_MAX_DEPTH,
    trace_fn: Optional[Callable[[int, Machine], None]] = None,
    session: Session = None,
) -> Outcome:
    """Run to an Outcome under the shared rendering contract."""
    s = session if session is not None else Session(fuel=fuel, max_depth=max_depth)
    try:
        v = run_machine(program, s, trace_fn)
    except FuelExhausted:
        return Outcome.out_of_fuel()
    except EscapedShift as ex:
        return Outcome.unhandled(ex.prompt, s.trace)
    except EvalFailure as ex:
        return Outcome.of_error(ex.kind, s.trace)
    return Outcome.of_value(render(v), s.trace)
