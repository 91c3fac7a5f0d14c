"""Lower single-operation surface programs to Core Eff A-normal form.

Applications may only apply values to values, so compound operands are
let-bound left to right under fresh ``$a`` names.  Lowering synthesises
types as it goes: binder types enter the context, and a ``handle … with``
form's val-clause binder is annotated with the handled expression's
synthesised type.  Duplicate binders are uniquified here, so the core
context never shadows.
"""

from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from . import core_eff as ce
from . import surface as sf
from .desugar import subst_type
from .errors import TypeCheckError
from .surface import (
    EffectDecl,
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
    STInt,
    STPair,
    STStr,
    STSum,
    STUnit,
    STVar,
    SType,
    SUnit,
    SurfaceProgram,
    SVar,
    SWith,
    SWithNew,
)

Binds = List[Tuple[str, ce.CoreComp]]

_PRIM_MARK = object()


class Lowerer:
    def __init__(self, decls: Dict[str, EffectDecl]):
        self.decls = decls
        self.counter = 0
        self.used_names: set = set()
        self.name_counts: Dict[str, int] = {}
        self.ctx: Dict[str, ce.CoreType] = {}

    def fresh(self) -> str:
        self.counter += 1
        return f"$a{self.counter}"

    def bind_name(self, name: str) -> str:
        if name not in self.used_names:
            self.used_names.add(name)
            return name
        n = self.name_counts.get(name, 0) + 1
        while f"{name}${n}" in self.used_names:
            n += 1
        self.name_counts[name] = n
        unique = f"{name}${n}"
        self.used_names.add(unique)
        return unique

    # -- types

    def conv_type(self, t: SType, pos=None) -> ce.CoreType:
        if isinstance(t, STUnit):
            return ce.UNIT_T
        if isinstance(t, STInt):
            return ce.INT_T
        if isinstance(t, STStr):
            return ce.STR_T
        if isinstance(t, STEmpty):
            return ce.EMPTY_T
        if isinstance(t, STDyn):
            return ce.DYN_T
        if isinstance(t, STArrow):
            return ce.TArrow(self.conv_type(t.a, pos), self.conv_type(t.b, pos))
        if isinstance(t, STPair):
            return ce.TPair(self.conv_type(t.a, pos), self.conv_type(t.b, pos))
        if isinstance(t, STSum):
            return ce.TSum(self.conv_type(t.a, pos), self.conv_type(t.b, pos))
        if isinstance(t, STInst):
            return self.instance_type(t.effect, t.args, pos)
        if isinstance(t, STVar):
            if t.name in self.decls:
                return self.instance_type(t.name, (), pos)
            raise TypeCheckError(f"type variable {t.name} is not allowed outside effect declarations", pos)
        raise AssertionError(t)

    def instance_type(self, effect: str, args: Tuple[SType, ...], pos=None) -> ce.TEff:
        decl = self.decls.get(effect)
        if decl is None:
            raise TypeCheckError(f"unknown effect {effect}", pos)
        if len(decl.params) != len(args):
            raise TypeCheckError(
                f"effect {effect} expects {len(decl.params)} type arguments, got {len(args)}", pos
            )
        assert len(decl.ops) == 1, "lowering requires single-operation effects"
        sub = dict(zip(decl.params, args))
        op = decl.ops[0]
        return ce.TEff(
            self.conv_type(subst_type(op.arg, sub), pos),
            self.conv_type(subst_type(op.res, sub), pos),
        )

    # -- expressions

    def value_of(self, e: SExpr, env, binds: Binds) -> Tuple[ce.CoreValue, ce.CoreType]:
        comp, t = self.comp(e, env)
        if isinstance(comp, ce.Val):
            return comp.v, t
        name = self.fresh()
        self.used_names.add(name)
        binds.append((name, comp))
        self.ctx[name] = t
        return ce.Var(name, pos=getattr(e, "pos", None)), t

    @staticmethod
    def wrap(binds: Binds, comp: ce.CoreComp) -> ce.CoreComp:
        for name, b in reversed(binds):
            comp = ce.Let(name, b, comp, pos=comp.pos)
        return comp

    def comp(self, e: SExpr, env: Dict[str, object]) -> Tuple[ce.CoreComp, ce.CoreType]:
        pos = getattr(e, "pos", None)
        if isinstance(e, SVar):
            target = env.get(e.name)
            if target is _PRIM_MARK:
                return ce.Val(ce.Prim(e.name, pos=pos), pos=pos), ce.PRIM_TYPES[e.name]
            assert isinstance(target, str), f"unbound {e.name}"
            return ce.Val(ce.Var(target, pos=pos), pos=pos), self.ctx[target]
        if isinstance(e, SUnit):
            return ce.Val(ce.UnitV(pos=pos), pos=pos), ce.UNIT_T
        if isinstance(e, SInt):
            return ce.Val(ce.IntV(e.n, pos=pos), pos=pos), ce.INT_T
        if isinstance(e, SStr):
            return ce.Val(ce.StrV(e.s, pos=pos), pos=pos), ce.STR_T
        if isinstance(e, SLam):
            pt = self.conv_type(e.ann, pos)
            param = self.bind_name(e.param)
            self.ctx[param] = pt
            body, bt = self.comp(e.body, {**env, e.param: param})
            return ce.Val(ce.Lam(param, pt, body, pos=pos), pos=pos), ce.TArrow(pt, bt)
        if isinstance(e, SApp):
            binds: Binds = []
            fv, ft = self.value_of(e.f, env, binds)
            av, at = self.value_of(e.a, env, binds)
            if isinstance(ft, ce.TDyn):
                rt: ce.CoreType = ce.DYN_T
            elif isinstance(ft, ce.TArrow):
                if not ce.consistent(ft.a, at):
                    raise TypeCheckError("argument type mismatch", pos, ft.a, at)
                rt = ft.b
            else:
                raise TypeCheckError("application of a non-function", pos, "a function", ft)
            return self.wrap(binds, ce.App(fv, av, pos=pos)), rt
        if isinstance(e, SLet):
            comp1, t1 = self.comp(e.e1, env)
            binder = self.bind_name(e.binder)
            self.ctx[binder] = t1
            comp2, t2 = self.comp(e.e2, {**env, e.binder: binder})
            return ce.Let(binder, comp1, comp2, pos=pos), t2
        if isinstance(e, SPair):
            binds = []
            av, at = self.value_of(e.a, env, binds)
            bv, bt = self.value_of(e.b, env, binds)
            return self.wrap(binds, ce.Val(ce.PairV(av, bv, pos=pos), pos=pos)), ce.TPair(at, bt)
        if isinstance(e, (SFst, SSnd)):
            binds = []
            v, vt = self.value_of(e.e, env, binds)
            if isinstance(vt, ce.TDyn):
                rt = ce.DYN_T
            elif isinstance(vt, ce.TPair):
                rt = vt.a if isinstance(e, SFst) else vt.b
            else:
                raise TypeCheckError("projection from a non-pair", pos, "a pair", vt)
            node = ce.Proj1(v, pos=pos) if isinstance(e, SFst) else ce.Proj2(v, pos=pos)
            return self.wrap(binds, node), rt
        if isinstance(e, (SInl, SInr)):
            ann = self.conv_type(e.ann, pos)
            if not isinstance(ann, (ce.TSum, ce.TDyn)):
                raise TypeCheckError("injection annotated with a non-sum type", pos, "a sum type", ann)
            binds = []
            v, vt = self.value_of(e.e, env, binds)
            if isinstance(ann, ce.TSum):
                side = ann.a if isinstance(e, SInl) else ann.b
                if not ce.consistent(vt, side):
                    raise TypeCheckError("injection payload type mismatch", pos, side, vt)
            ctor = ce.InL if isinstance(e, SInl) else ce.InR
            return self.wrap(binds, ce.Val(ctor(v, ann, pos=pos), pos=pos)), ann
        if isinstance(e, SCase):
            binds = []
            sv, st = self.value_of(e.scrut, env, binds)
            if isinstance(st, ce.TDyn):
                st = ce.TSum(ce.DYN_T, ce.DYN_T)
            if not isinstance(st, ce.TSum):
                raise TypeCheckError("case on a non-sum value", pos, "a sum", st)
            lb = self.bind_name(e.lbinder)
            self.ctx[lb] = st.a
            lbody, lt = self.comp(e.lbody, {**env, e.lbinder: lb})
            rb = self.bind_name(e.rbinder)
            self.ctx[rb] = st.b
            rbody, rt = self.comp(e.rbody, {**env, e.rbinder: rb})
            if not ce.consistent(lt, rt):
                raise TypeCheckError("case branches disagree", pos, lt, rt)
            return self.wrap(binds, ce.CaseSum(sv, lb, lbody, rb, rbody, pos=pos)), ce.refine(lt, rt)
        if isinstance(e, SAbsurd):
            ann = self.conv_type(e.ann, pos)
            binds = []
            v, vt = self.value_of(e.e, env, binds)
            if not ce.consistent(vt, ce.EMPTY_T):
                raise TypeCheckError("absurd applied to a non-empty value", pos, ce.EMPTY_T, vt)
            return self.wrap(binds, ce.Absurd(v, ann, pos=pos)), ann
        if isinstance(e, SPrint):
            binds = []
            v, vt = self.value_of(e.e, env, binds)
            if not ce.consistent(vt, ce.STR_T):
                raise TypeCheckError("print applied to a non-string", pos, ce.STR_T, vt)
            return self.wrap(binds, ce.Print(v, pos=pos)), ce.UNIT_T
        if isinstance(e, SNew):
            it = self.instance_type(e.effect, e.args, pos)
            return ce.NewP(it.a, it.b, pos=pos), it
        if isinstance(e, SOp):
            target = env.get(e.inst)
            assert isinstance(target, str), f"unresolved instance {e.inst}"
            it = self.ctx[target]
            if isinstance(it, ce.TDyn):
                it = ce.TEff(ce.DYN_T, ce.DYN_T)
            if not isinstance(it, ce.TEff):
                raise TypeCheckError(f"{e.inst} is not an effect instance", pos, "an effect instance", it)
            binds = []
            av, at = self.value_of(e.arg, env, binds)
            if not ce.consistent(at, it.a):
                raise TypeCheckError("operation argument type mismatch", pos, it.a, at)
            call = ce.App(ce.OpInvoke(ce.Var(target, pos=pos), pos=pos), av, pos=pos)
            return self.wrap(binds, call), it.b
        if isinstance(e, (SHandle, SHandler)):
            return self.handler_form(e, env)
        if isinstance(e, SWith):
            binds = []
            hv, ht = self.value_of(e.handler, env, binds)
            bcomp, bt = self.comp(e.body, env)
            if isinstance(ht, ce.TDyn):
                rt = ce.DYN_T
            elif isinstance(ht, ce.TEffH):
                if not ce.consistent(ht.c, bt):
                    raise TypeCheckError("handled computation type mismatch", pos, ht.c, bt)
                rt = ht.w
            else:
                raise TypeCheckError("with-handle of a non-handler", pos, "a handler", ht)
            return self.wrap(binds, ce.WithHandle(hv, bcomp, pos=pos)), rt
        if isinstance(e, SCast):
            ann = self.conv_type(e.ann, pos)
            binds = []
            v, vt = self.value_of(e.e, env, binds)
            if not (isinstance(ann, ce.TDyn) or isinstance(vt, ce.TDyn)):
                raise TypeCheckError("cast must go to or from dyn", pos, ce.DYN_T, vt)
            return self.wrap(binds, ce.Cast(v, ann, pos=pos)), ann
        if isinstance(e, (SWithNew, SNewref, SGet, SPut)):
            raise AssertionError("dynamic sugar must be expanded before lowering")
        raise AssertionError(f"not a surface expression: {e!r}")

    def handler_form(self, e, env) -> Tuple[ce.CoreComp, ce.CoreType]:
        pos = getattr(e, "pos", None)
        assert len(e.op_clauses) == 1, "lowering requires single-operation handlers (run desugar first)"
        oc = e.op_clauses[0]
        target = env.get(oc.inst)
        assert isinstance(target, str), f"unresolved instance {oc.inst}"
        it = self.ctx[target]
        if isinstance(it, ce.TDyn):
            it = ce.TEff(ce.DYN_T, ce.DYN_T)
        if not isinstance(it, ce.TEff):
            raise TypeCheckError(f"{oc.inst} is not an effect instance", pos, "an effect instance", it)

        body_comp: Optional[ce.CoreComp] = None
        if isinstance(e, SHandle):
            body_comp, body_t = self.comp(e.body, env)
        vc = e.val_clause
        if vc.ann is not None:
            c_t = self.conv_type(vc.ann, vc.pos)
        elif isinstance(e, SHandle):
            c_t = body_t
        else:
            raise TypeCheckError("a standalone handler requires an annotated val binder", pos)
        if isinstance(e, SHandle) and not ce.consistent(c_t, body_t):
            raise TypeCheckError("handled computation type mismatch", pos, c_t, body_t)

        vb = self.bind_name(vc.binder)
        self.ctx[vb] = c_t
        val_body, w1 = self.comp(vc.body, {**env, vc.binder: vb})

        ab = self.bind_name(oc.arg_binder)
        self.ctx[ab] = it.a
        kb = self.bind_name(oc.k_binder)
        self.ctx[kb] = ce.TArrow(it.b, w1)
        op_body, w2 = self.comp(oc.body, {**env, oc.arg_binder: ab, oc.k_binder: kb})
        if not ce.consistent(w1, w2):
            raise TypeCheckError("handler clauses disagree on the answer type", pos, w1, w2)
        w = ce.refine(w1, w2)

        hv = ce.HandlerVal(ce.Var(target, pos=pos), vb, c_t, val_body, ab, kb, op_body, pos=pos)
        if isinstance(e, SHandler):
            return ce.Val(hv, pos=pos), ce.TEffH(c_t, w)
        assert body_comp is not None
        return ce.WithHandle(hv, body_comp, pos=pos), w


def lower(program: SurfaceProgram) -> ce.CoreEffProgram:
    """Lower a single-op, dynamic-sugar-free surface program to Core Eff."""
    decls = {d.name: d for d in program.effect_decls}
    lw = Lowerer(decls)
    env: Dict[str, object] = {p: _PRIM_MARK for p in sf.PRIM_NAMES}
    insts: List[Tuple[str, ce.TEff]] = []
    for inst in program.instances:
        it = lw.instance_type(inst.effect, inst.args, inst.pos)
        name = lw.bind_name(inst.name)
        lw.ctx[name] = it
        env[inst.name] = name
        insts.append((name, it))
    body, _t = lw.comp(program.body, env)
    for name, it in reversed(insts):
        body = ce.Let(name, ce.NewP(it.a, it.b), body)
    return body
