"""Compositional translation from Core Eff to Core delimcc.

An effect instance becomes a prompt over the free structure; an
operation invocation becomes ``sh0`` building an ``act`` node; a handler
becomes a recursive dispatcher over the free structure, wrapped so the
handled expression runs as a thunk under ``pushpr`` with its normal
result injected into the universal type.  Since handlers are deep, the
dispatcher composes itself onto the continuation it hands to the
operation clause.  Everything else maps homomorphically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import core_delimcc as cd
from . import core_eff as ce
from .errors import TypeCheckError


@dataclass
class TransEnv:
    """Fresh-name supply for the translation's internal binders.

    Generated names carry the reserved ``$t`` prefix, disjoint both from
    source identifiers and from the ``$a`` names introduced by
    A-normalisation, so the (identity) binder renaming stays injective.
    """

    counter: int = 0

    def fresh(self, hint: str) -> str:
        self.counter += 1
        return f"$t{hint}{self.counter}"


def translate_type(t: ce.CoreType) -> cd.DType:
    if isinstance(t, ce.TUnit):
        return cd.UNIT_T
    if isinstance(t, ce.TInt):
        return cd.INT_T
    if isinstance(t, ce.TStr):
        return cd.STR_T
    if isinstance(t, ce.TEmpty):
        return cd.EMPTY_T
    if isinstance(t, ce.TDyn):
        return cd.DYN_T
    if isinstance(t, ce.TArrow):
        return cd.TArrow(translate_type(t.a), translate_type(t.b))
    if isinstance(t, ce.TPair):
        return cd.TPair(translate_type(t.a), translate_type(t.b))
    if isinstance(t, ce.TSum):
        return cd.TSum(translate_type(t.a), translate_type(t.b))
    if isinstance(t, ce.TEff):
        return cd.TPrompt(cd.TFree(translate_type(t.a), translate_type(t.b)))
    if isinstance(t, ce.TEffH):
        return cd.TArrow(cd.TArrow(cd.UNIT_T, translate_type(t.c)), translate_type(t.w))
    raise AssertionError(f"not a Core Eff type: {t!r}")


def _eff_type(ctx: ce.TypeCtx, inst: ce.CoreValue) -> ce.TEff:
    it = ce.infer_value(ctx, inst)
    if isinstance(it, ce.TDyn):
        return ce.TEff(ce.DYN_T, ce.DYN_T)
    if not isinstance(it, ce.TEff):
        raise TypeCheckError("translation of an operation over a non-instance", getattr(inst, "pos", None))
    return it


def translate_value(ctx: ce.TypeCtx, v: ce.CoreValue, te: TransEnv) -> cd.DValue:
    if isinstance(v, ce.Var):
        return cd.DVar(v.name, pos=v.pos)
    if isinstance(v, ce.UnitV):
        return cd.DUnitV(pos=v.pos)
    if isinstance(v, ce.IntV):
        return cd.DIntV(v.n, pos=v.pos)
    if isinstance(v, ce.StrV):
        return cd.DStrV(v.s, pos=v.pos)
    if isinstance(v, ce.Prim):
        return cd.DPrim(v.name, pos=v.pos)
    if isinstance(v, ce.Lam):
        pt = translate_type(v.param_t)
        body = translate_comp({**ctx, v.param: v.param_t}, v.body, te)
        return cd.DLam(v.param, pt, body, pos=v.pos)
    if isinstance(v, ce.PairV):
        return cd.DPairV(translate_value(ctx, v.a, te), translate_value(ctx, v.b, te), pos=v.pos)
    if isinstance(v, ce.InL):
        return cd.DInL(translate_value(ctx, v.v, te), translate_type(v.ann), pos=v.pos)
    if isinstance(v, ce.InR):
        return cd.DInR(translate_value(ctx, v.v, te), translate_type(v.ann), pos=v.pos)
    if isinstance(v, ce.OpInvoke):
        # op p  =  abs (fun v -> sh0 p (fun k -> vl (act v k)))
        eff = _eff_type(ctx, v.inst)
        a_t = translate_type(eff.a)
        b_t = translate_type(eff.b)
        pv = translate_value(ctx, v.inst, te)
        arg = te.fresh("v")
        k = te.fresh("k")
        return cd.DLam(
            arg,
            a_t,
            cd.DSh0(pv, k, b_t, cd.DVl(cd.DAct(cd.DVar(arg), cd.DVar(k)))),
            pos=v.pos,
        )
    if isinstance(v, ce.HandlerVal):
        return _translate_handler(ctx, v, te)
    raise AssertionError(f"not a Core Eff value: {v!r}")


def _translate_handler(ctx: ce.TypeCtx, hv: ce.HandlerVal, te: TransEnv) -> cd.DValue:
    eff = _eff_type(ctx, hv.inst)
    ht = ce.infer_value(ctx, hv)
    assert isinstance(ht, ce.TEffH)
    c_t = translate_type(ht.c)
    w_t = translate_type(ht.w)
    a_t = translate_type(eff.a)
    b_t = translate_type(eff.b)
    free_t = cd.TFree(a_t, b_t)
    pv = translate_value(ctx, hv.inst, te)

    val_body = translate_comp({**ctx, hv.val_binder: hv.val_t}, hv.val_body, te)
    op_ctx = {**ctx, hv.op_arg: eff.a, hv.op_k: ce.TArrow(eff.b, ht.w)}
    op_body = translate_comp(op_ctx, hv.op_body, te)

    h = te.fresh("h")
    freer = te.fresh("fr")
    u = te.fresh("u")
    k0 = te.fresh("k")
    ca = te.fresh("a")
    cb = te.fresh("b")
    th = te.fresh("th")
    fr2 = te.fresh("fr")
    r = te.fresh("r")

    # compose h k  =  abs (fun a -> let b = k a in h b)
    compose = cd.DLam(
        ca,
        b_t,
        cd.DLet(cb, cd.DApp(cd.DVar(k0), cd.DVar(ca)), cd.DApp(cd.DVar(h), cd.DVar(cb))),
    )
    dispatcher = cd.DRecLam(
        h,
        freer,
        cd.TArrow(free_t, w_t),
        cd.DWithFree(
            cd.DVar(freer),
            u,
            cd.DLet(hv.val_binder, cd.DPUniv(cd.DVar(u), c_t), val_body),
            hv.op_arg,
            k0,
            cd.DLet(hv.op_k, cd.DVl(compose), op_body),
        ),
    )
    # abs (fun th -> let fr = pushpr p (let r = th () in vl (ret (i_univ r))) in h fr)
    return cd.DLam(
        th,
        cd.TArrow(cd.UNIT_T, c_t),
        cd.DLet(
            fr2,
            cd.DPushPr(
                pv,
                cd.DLet(
                    r,
                    cd.DApp(cd.DVar(th), cd.DUnitV()),
                    cd.DVl(cd.DRet(cd.DIUniv(cd.DVar(r)), free_t)),
                ),
            ),
            cd.DApp(dispatcher, cd.DVar(fr2)),
        ),
        pos=hv.pos,
    )


def translate_comp(ctx: ce.TypeCtx, e: ce.CoreComp, te: TransEnv) -> cd.DComp:
    if isinstance(e, ce.Val):
        return cd.DVl(translate_value(ctx, e.v, te), pos=e.pos)
    if isinstance(e, ce.Let):
        t1 = ce.infer_comp(ctx, e.e1)
        return cd.DLet(
            e.binder,
            translate_comp(ctx, e.e1, te),
            translate_comp({**ctx, e.binder: t1}, e.e2, te),
            pos=e.pos,
        )
    if isinstance(e, ce.App):
        return cd.DApp(translate_value(ctx, e.f, te), translate_value(ctx, e.a, te), pos=e.pos)
    if isinstance(e, ce.NewP):
        return cd.DNewPr(cd.TFree(translate_type(e.t1), translate_type(e.t2)), pos=e.pos)
    if isinstance(e, ce.WithHandle):
        # handle h e  =  h $$ abs (fun (_: unit) -> e)
        hv = translate_value(ctx, e.handler, te)
        u = te.fresh("u")
        return cd.DApp(hv, cd.DLam(u, cd.UNIT_T, translate_comp(ctx, e.body, te)), pos=e.pos)
    if isinstance(e, ce.CaseSum):
        st = ce.infer_value(ctx, e.scrut)
        if isinstance(st, ce.TDyn):
            st = ce.TSum(ce.DYN_T, ce.DYN_T)
        assert isinstance(st, ce.TSum)
        return cd.DCaseSum(
            translate_value(ctx, e.scrut, te),
            e.lbinder,
            translate_comp({**ctx, e.lbinder: st.a}, e.lbody, te),
            e.rbinder,
            translate_comp({**ctx, e.rbinder: st.b}, e.rbody, te),
            pos=e.pos,
        )
    if isinstance(e, ce.Proj1):
        return cd.DProj1(translate_value(ctx, e.v, te), pos=e.pos)
    if isinstance(e, ce.Proj2):
        return cd.DProj2(translate_value(ctx, e.v, te), pos=e.pos)
    if isinstance(e, ce.Absurd):
        return cd.DAbsurd(translate_value(ctx, e.v, te), translate_type(e.ann), pos=e.pos)
    if isinstance(e, ce.Print):
        return cd.DPrint(translate_value(ctx, e.v, te), pos=e.pos)
    if isinstance(e, ce.Cast):
        return cd.DCast(translate_value(ctx, e.v, te), translate_type(e.to), pos=e.pos)
    raise AssertionError(f"not a Core Eff computation: {e!r}")


def translate(program: ce.CoreEffProgram) -> cd.DProgram:
    """Translate a closed, well-typed Core Eff program."""
    return translate_comp({}, program, TransEnv())
