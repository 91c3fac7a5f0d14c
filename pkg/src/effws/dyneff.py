"""Dynamic (higher-order) effects as an ordinary effect.

``withnew { e }`` installs a handler for a reserved instance-creation
effect; its operation clause creates a fresh state instance and wraps
the supplied handling function around the resumed continuation, so both
halves of dynamic effect creation happen in one ordinary deep handler.
``newref s0`` ships the state handler (closed over the initial value)
through that effect and gets the fresh instance back; ``get``/``put``
are invocations of the single state operation with Get/Put union tags.

Payloads cross the instance-creation boundary as ``dyn`` with
runtime-checked casts; the block's answer type is monomorphised to
``dyn`` for the same reason.
"""

from __future__ import annotations

from dataclasses import replace
from typing import List, Optional

from .errors import ExpandError
from .surface import (
    EffectDecl,
    OpClause,
    OpDecl,
    SAbsurd,
    SApp,
    SCase,
    SCast,
    SExpr,
    SFst,
    SGet,
    SHandle,
    SHandler,
    SInl,
    SInr,
    SInt,
    SLam,
    SLet,
    SNew,
    SNewref,
    SOp,
    SPair,
    SPrint,
    SPut,
    SSnd,
    SStr,
    STArrow,
    STDyn,
    STEmpty,
    STInst,
    STSum,
    STUnit,
    SType,
    SUnit,
    SurfaceProgram,
    SVar,
    SWith,
    SWithNew,
    ValClause,
)

NEW_EFFECT = "$new"
STATE_EFFECT = "$state"

STATE_IN: SType = STSum(STUnit(), STDyn())  # inl () = get, inr v = put v
STATE_OUT: SType = STSum(STDyn(), STUnit())  # inl v = got, inr () = put done

NEW_DECL = EffectDecl(NEW_EFFECT, (), (OpDecl("op", STDyn(), STDyn()),))
STATE_DECL = EffectDecl(STATE_EFFECT, (), (OpDecl("op", STATE_IN, STATE_OUT),))

# the handling function shipped through the instance-creation effect
HANDLER_FN_T: SType = STArrow(STInst(STATE_EFFECT), STArrow(STArrow(STUnit(), STDyn()), STDyn()))


class _Expander:
    def __init__(self) -> None:
        self.counter = 0
        self.prompt_stack: List[str] = []
        self.used = False

    def fresh(self, hint: str) -> str:
        self.counter += 1
        return f"$d{hint}{self.counter}"

    def expr(self, e: SExpr) -> SExpr:
        if isinstance(e, (SVar, SUnit, SInt, SStr, SNew)):
            return e
        if isinstance(e, SLam):
            return replace(e, body=self.expr(e.body))
        if isinstance(e, SApp):
            return replace(e, f=self.expr(e.f), a=self.expr(e.a))
        if isinstance(e, SLet):
            return replace(e, e1=self.expr(e.e1), e2=self.expr(e.e2))
        if isinstance(e, SPair):
            return replace(e, a=self.expr(e.a), b=self.expr(e.b))
        if isinstance(e, (SFst, SSnd, SPrint, SAbsurd, SInl, SInr, SCast)):
            return replace(e, e=self.expr(e.e))
        if isinstance(e, SCase):
            return replace(e, scrut=self.expr(e.scrut), lbody=self.expr(e.lbody), rbody=self.expr(e.rbody))
        if isinstance(e, SOp):
            return replace(e, arg=self.expr(e.arg))
        if isinstance(e, (SHandle, SHandler)):
            vc = replace(e.val_clause, body=self.expr(e.val_clause.body))
            op_cs = tuple(replace(c, body=self.expr(c.body)) for c in e.op_clauses)
            if isinstance(e, SHandle):
                return replace(e, body=self.expr(e.body), val_clause=vc, op_clauses=op_cs)
            return replace(e, val_clause=vc, op_clauses=op_cs)
        if isinstance(e, SWith):
            return replace(e, handler=self.expr(e.handler), body=self.expr(e.body))
        if isinstance(e, SWithNew):
            return self.withnew(e)
        if isinstance(e, SNewref):
            return self.newref(e)
        if isinstance(e, SGet):
            return self.get(e)
        if isinstance(e, SPut):
            return self.put(e)
        raise AssertionError(f"not a surface expression: {e!r}")

    def withnew(self, e: SWithNew) -> SExpr:
        self.used = True
        pn = self.fresh("pn")
        self.prompt_stack.append(pn)
        body = self.expr(e.body)
        self.prompt_stack.pop()

        h0 = self.fresh("h")
        k = self.fresh("k")
        hf = self.fresh("hf")
        pi = self.fresh("pi")
        th = self.fresh("th")
        u = self.fresh("u")
        # op clause: cast the shipped handling function back, create the
        # instance, and wrap the handler around the (deep) continuation
        clause_body = SLet(
            hf,
            SCast(SVar(h0), HANDLER_FN_T),
            SLet(
                pi,
                SNew(STATE_EFFECT, ()),
                SLet(
                    th,
                    SLam(u, STUnit(), SApp(SVar(k), SCast(SVar(pi), STDyn()))),
                    SApp(SApp(SVar(hf), SVar(pi)), SVar(th)),
                ),
            ),
        )
        v = self.fresh("v")
        handler = SHandler(ValClause(v, STDyn(), SVar(v)), (OpClause(pn, "op", h0, k, clause_body),))
        return SLet(pn, SNew(NEW_EFFECT, ()), SWith(handler, body, e.pos), e.pos)

    def newref(self, e: SNewref) -> SExpr:
        self.used = True
        if not self.prompt_stack:
            raise ExpandError("newref outside a withnew block", e.pos)
        pn = self.prompt_stack[-1]
        init = self.expr(e.init)
        hf = state_handler_template(init, self.fresh)
        r0 = self.fresh("r")
        return SLet(
            r0,
            SOp(pn, "op", SCast(hf, STDyn()), e.pos),
            SCast(SVar(r0), STInst(STATE_EFFECT)),
            e.pos,
        )

    def get(self, e: SGet) -> SExpr:
        self.used = True
        if not self.prompt_stack:
            raise ExpandError("get outside a withnew block", e.pos)
        d = self.fresh("g")
        z = self.fresh("z")
        z2 = self.fresh("z")
        reply = SOp(e.ref, "op", SInl(SUnit(), STATE_IN), e.pos)
        dead = SLet(
            z2,
            SCast(SCast(SVar(z), STDyn()), STEmpty()),
            SAbsurd(SVar(z2), STDyn()),
        )
        return SCase(reply, d, SVar(d), z, dead, e.pos)

    def put(self, e: SPut) -> SExpr:
        self.used = True
        if not self.prompt_stack:
            raise ExpandError("put outside a withnew block", e.pos)
        value = self.expr(e.value)
        d = self.fresh("p")
        z = self.fresh("z")
        u = self.fresh("u")
        reply = SOp(e.ref, "op", SInr(SCast(value, STDyn()), STATE_IN), e.pos)
        dead = SLet(z, SCast(SVar(d), STEmpty()), SAbsurd(SVar(z), STUnit()))
        return SCase(reply, d, dead, u, SVar(u), e.pos)


def state_handler_template(init: SExpr, fresh=None) -> SExpr:
    """The state-passing handler closed over an initial value.

    Returns ``fn p. fn th. (with <state handler on p> handle th ()) init``:
    the val clause returns a constant function; the op clause feeds the
    current state to Get and threads the replacement through Put.
    """
    if fresh is None:
        counter = [0]

        def fresh(hint: str) -> str:
            counter[0] += 1
            return f"$d{hint}{counter[0]}"

    p = fresh("p")
    th = fresh("th")
    q = fresh("q")
    k2 = fresh("k")
    v = fresh("v")
    s1 = fresh("s")
    s2 = fresh("s")
    f1 = fresh("f")
    f2 = fresh("f")
    u = fresh("u")
    w = fresh("w")
    g = fresh("g")

    get_arm = SLam(s1, STDyn(), SLet(f1, SApp(SVar(k2), SInl(SVar(s1), STATE_OUT)), SApp(SVar(f1), SVar(s1))))
    put_arm = SLam(s2, STDyn(), SLet(f2, SApp(SVar(k2), SInr(SUnit(), STATE_OUT)), SApp(SVar(f2), SVar(w))))
    dispatch = SCase(SVar(q), u, get_arm, w, put_arm)
    handler = SHandler(
        ValClause(v, STDyn(), SLam(fresh("s"), STDyn(), SVar(v))),
        (OpClause(p, "op", q, k2, dispatch),),
    )
    handled = SWith(handler, SApp(SVar(th), SUnit()))
    return SLam(
        p,
        STInst(STATE_EFFECT),
        SLam(th, STArrow(STUnit(), STDyn()), SLet(g, handled, SApp(SVar(g), SCast(init, STDyn())))),
    )


def _uses_dynamic(e: SExpr) -> bool:
    if isinstance(e, (SWithNew, SNewref, SGet, SPut)):
        return True
    if isinstance(e, SLam):
        return _uses_dynamic(e.body)
    if isinstance(e, SApp):
        return _uses_dynamic(e.f) or _uses_dynamic(e.a)
    if isinstance(e, SLet):
        return _uses_dynamic(e.e1) or _uses_dynamic(e.e2)
    if isinstance(e, SPair):
        return _uses_dynamic(e.a) or _uses_dynamic(e.b)
    if isinstance(e, (SFst, SSnd, SPrint, SAbsurd, SInl, SInr, SCast)):
        return _uses_dynamic(e.e)
    if isinstance(e, SCase):
        return _uses_dynamic(e.scrut) or _uses_dynamic(e.lbody) or _uses_dynamic(e.rbody)
    if isinstance(e, SOp):
        return _uses_dynamic(e.arg)
    if isinstance(e, (SHandle, SHandler)):
        sub = [e.val_clause.body] + [c.body for c in e.op_clauses]
        if isinstance(e, SHandle):
            sub.append(e.body)
        return any(_uses_dynamic(x) for x in sub)
    if isinstance(e, SWith):
        return _uses_dynamic(e.handler) or _uses_dynamic(e.body)
    return False


def expand_dynamic(program: SurfaceProgram) -> SurfaceProgram:
    """Expand withnew/newref/get/put; programs without them pass through."""
    if not _uses_dynamic(program.body):
        return program
    ex = _Expander()
    body = ex.expr(program.body)
    decls = program.effect_decls + (NEW_DECL, STATE_DECL)
    return SurfaceProgram(decls, program.instances, body)
