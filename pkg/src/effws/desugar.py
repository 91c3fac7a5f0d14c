"""Rewrite multi-operation effects into single-operation form.

An effect with operations ``op_i : a_i -> b_i`` becomes one operation
over right-nested sums ``(a_1 + (a_2 + ...)) -> (b_1 + (b_2 + ...))``.
Invocations inject the argument and project the reply; handler clause
sets become a single clause dispatching on the payload tag, with a
default re-raising clause for operations the handler does not mention.
Branches that are unreachable under the tagging protocol fail loudly
through a dyn-to-empty cast if they are ever taken.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Dict, List, Optional, Tuple

from .errors import DesugarError
from .surface import (
    EffectDecl,
    InstanceDecl,
    OpClause,
    OpDecl,
    PRIM_NAMES,
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
    STPair,
    STSum,
    STVar,
    SType,
    SUnit,
    SurfaceProgram,
    SVar,
    SWith,
    SWithNew,
    ValClause,
)


def subst_type(t: SType, sub: Dict[str, SType]) -> SType:
    if isinstance(t, STVar):
        return sub.get(t.name, t)
    if isinstance(t, (STArrow, STPair, STSum)):
        return type(t)(subst_type(t.a, sub), subst_type(t.b, sub))
    if isinstance(t, STInst):
        return STInst(t.effect, tuple(subst_type(a, sub) for a in t.args))
    return t


def _nested_sum(ts: List[SType]) -> SType:
    if len(ts) == 1:
        return ts[0]
    return STSum(ts[0], _nested_sum(ts[1:]))


class _Desugarer:
    def __init__(self, program: SurfaceProgram):
        self.program = program
        self.decls: Dict[str, EffectDecl] = {d.name: d for d in program.effect_decls}
        self.counter = 0

    def fresh(self, hint: str) -> str:
        self.counter += 1
        return f"$m{hint}{self.counter}"

    # -- per-effect shapes

    def is_multi(self, effect: str) -> bool:
        return len(self.decls[effect].ops) > 1

    def op_types(self, effect: str, args: Tuple[SType, ...]) -> Tuple[List[SType], List[SType]]:
        decl = self.decls[effect]
        sub = dict(zip(decl.params, args))
        ins = [subst_type(op.arg, sub) for op in decl.ops]
        outs = [subst_type(op.res, sub) for op in decl.ops]
        return ins, outs

    def op_index(self, effect: str, op: str) -> int:
        for i, o in enumerate(self.decls[effect].ops):
            if o.name == op:
                return i
        raise DesugarError(f"effect {effect} has no operation {op}")

    # -- sum plumbing

    def inject(self, kinds: List[SType], i: int, payload: SExpr) -> SExpr:
        """Build the i-th injection into the right-nested sum of kinds."""
        if len(kinds) == 1:
            return payload
        full = _nested_sum(kinds)
        if i == 0:
            return SInl(payload, full)
        return SInr(self.inject(kinds[1:], i - 1, payload), full)

    def _impossible(self, witness: str, target: SType) -> SExpr:
        # protocol violation: diagnose at run time instead of fabricating a value
        d = self.fresh("d")
        z = self.fresh("z")
        return SLet(
            d,
            SCast(SVar(witness), STDyn()),
            SLet(z, SCast(SVar(d), STEmpty()), SAbsurd(SVar(z), target)),
        )

    def project(self, scrut: SExpr, kinds: List[SType], i: int) -> SExpr:
        """Case tree extracting position i of a nested sum, other branches
        unreachable."""
        assert len(kinds) >= 2
        target = kinds[i]

        def go(sc: SExpr, ks: List[SType], j: int) -> SExpr:
            y = self.fresh("y")
            z = self.fresh("z")
            if j == i:
                hit = SVar(y)
            elif isinstance(ks[0], STEmpty):
                hit = SAbsurd(SVar(y), target)
            else:
                hit = self._impossible(y, target)
            if len(ks) == 2:
                if j + 1 == i:
                    miss = SVar(z)
                elif isinstance(ks[1], STEmpty):
                    miss = SAbsurd(SVar(z), target)
                else:
                    miss = self._impossible(z, target)
                return SCase(sc, y, hit, z, miss)
            return SCase(sc, y, hit, z, go(SVar(z), ks[1:], j + 1))

        return go(scrut, kinds, 0)

    # -- expression rewrite

    def bind(self, env, name, value=None):
        env2 = dict(env)
        env2[name] = value
        return env2

    def instance_of(self, e: SExpr, env):
        if isinstance(e, SVar):
            return env.get(e.name)
        if isinstance(e, SNew):
            return (e.effect, e.args)
        if isinstance(e, SCast) and isinstance(e.ann, STInst):
            return (e.ann.effect, e.ann.args)
        if isinstance(e, SLet):
            return self.instance_of(e.e2, self.bind(env, e.binder, self.instance_of(e.e1, env)))
        return None

    def resolve(self, env, name: str, pos) -> Tuple[str, Tuple[SType, ...]]:
        r = env.get(name)
        if r is None:
            raise DesugarError(f"cannot resolve the effect instance of {name}", pos)
        return r

    def expr(self, e: SExpr, env) -> SExpr:
        if isinstance(e, (SVar, SUnit, SInt, SStr, SGet)):
            return e
        if isinstance(e, SLam):
            ann = e.ann
            inst = None
            if isinstance(ann, STInst):
                inst = (ann.effect, ann.args)
            elif isinstance(ann, STVar) and ann.name in self.decls:
                inst = (ann.name, ())
            return replace(e, body=self.expr(e.body, self.bind(env, e.param, inst)))
        if isinstance(e, SApp):
            return replace(e, f=self.expr(e.f, env), a=self.expr(e.a, env))
        if isinstance(e, SLet):
            e1 = self.expr(e.e1, env)
            return replace(e, e1=e1, e2=self.expr(e.e2, self.bind(env, e.binder, self.instance_of(e.e1, env))))
        if isinstance(e, SPair):
            return replace(e, a=self.expr(e.a, env), b=self.expr(e.b, env))
        if isinstance(e, (SFst, SSnd, SPrint, SAbsurd, SInl, SInr, SCast)):
            return replace(e, e=self.expr(e.e, env))
        if isinstance(e, SNewref):
            return replace(e, init=self.expr(e.init, env))
        if isinstance(e, SPut):
            return replace(e, value=self.expr(e.value, env))
        if isinstance(e, SCase):
            return replace(
                e,
                scrut=self.expr(e.scrut, env),
                lbody=self.expr(e.lbody, self.bind(env, e.lbinder)),
                rbody=self.expr(e.rbody, self.bind(env, e.rbinder)),
            )
        if isinstance(e, SNew):
            return e
        if isinstance(e, SWithNew):
            return replace(e, body=self.expr(e.body, env))
        if isinstance(e, SWith):
            return replace(e, handler=self.expr(e.handler, env), body=self.expr(e.body, env))
        if isinstance(e, SOp):
            effect, args = self.resolve(env, e.inst, e.pos)
            arg = self.expr(e.arg, env)
            if not self.is_multi(effect):
                return replace(e, arg=arg)
            ins, outs = self.op_types(effect, args)
            i = self.op_index(effect, e.op)
            call = SOp(e.inst, "op", self.inject(ins, i, arg), e.pos)
            return self.project(call, outs, i)
        if isinstance(e, (SHandle, SHandler)):
            body = self.expr(e.body, env) if isinstance(e, SHandle) else None
            vc = replace(e.val_clause, body=self.expr(e.val_clause.body, self.bind(env, e.val_clause.binder)))
            op_cs = tuple(
                replace(
                    c,
                    body=self.expr(c.body, self.bind(self.bind(env, c.arg_binder), c.k_binder)),
                )
                for c in e.op_clauses
            )
            inst_name = op_cs[0].inst
            effect, args = self.resolve(env, inst_name, e.pos)
            decl = self.decls[effect]
            for c in op_cs:
                if not any(o.name == c.op for o in decl.ops):
                    raise DesugarError(f"handler clause mentions {c.op}, not an operation of {effect}", c.pos)
            if self.is_multi(effect):
                op_cs = (self.merge_clauses(inst_name, effect, args, op_cs),)
            if isinstance(e, SHandle):
                return replace(e, body=body, val_clause=vc, op_clauses=op_cs)
            return replace(e, val_clause=vc, op_clauses=op_cs)
        raise AssertionError(f"not a surface expression: {e!r}")

    def merge_clauses(
        self, inst: str, effect: str, args: Tuple[SType, ...], clauses: Tuple[OpClause, ...]
    ) -> OpClause:
        ins, outs = self.op_types(effect, args)
        by_op: Dict[str, OpClause] = {}
        for c in clauses:
            if c.op in by_op:
                raise DesugarError(f"duplicate clause for operation {c.op}", c.pos)
            by_op[c.op] = c
        decl = self.decls[effect]
        x = self.fresh("x")
        k = self.fresh("k")

        def arm(j: int, payload_binder: str) -> SExpr:
            op = decl.ops[j]
            c = by_op.get(op.name)
            if c is None:
                # default clause: re-raise the whole payload outward
                y = self.fresh("y")
                return SLet(y, SOp(inst, "op", SVar(x)), SApp(SVar(k), SVar(y)))
            y = self.fresh("y")
            wrapped_k = SLam(y, outs[j], SApp(SVar(k), self.inject(outs, j, SVar(y))))
            body = SLet(c.k_binder, wrapped_k, c.body)
            if payload_binder != c.arg_binder:
                body = SLet(c.arg_binder, SVar(payload_binder), body)
            return body

        def dispatch(sc: SExpr, j: int) -> SExpr:
            if j == len(decl.ops) - 1:
                b = self.fresh("p")
                c = by_op.get(decl.ops[j].name)
                binder = c.arg_binder if c is not None else b
                return SLet(binder, sc, arm(j, binder))
            c = by_op.get(decl.ops[j].name)
            lb = c.arg_binder if c is not None else self.fresh("p")
            rb = self.fresh("r")
            return SCase(sc, lb, arm(j, lb), rb, dispatch(SVar(rb), j + 1))

        return OpClause(inst, "op", x, k, dispatch(SVar(x), 0))

    def run(self) -> SurfaceProgram:
        if not any(len(d.ops) > 1 for d in self.decls.values()):
            return self.program
        new_decls = []
        for d in self.program.effect_decls:
            if len(d.ops) > 1:
                ins = [op.arg for op in d.ops]
                outs = [op.res for op in d.ops]
                new_decls.append(
                    EffectDecl(d.name, d.params, (OpDecl("op", _nested_sum(ins), _nested_sum(outs)),), d.pos)
                )
            else:
                new_decls.append(d)
        env: Dict[str, Optional[Tuple[str, Tuple[SType, ...]]]] = {p: None for p in PRIM_NAMES}
        for inst in self.program.instances:
            env[inst.name] = (inst.effect, inst.args)
        body = self.expr(self.program.body, env)
        return SurfaceProgram(tuple(new_decls), self.program.instances, body)


def desugar_multi_op(program: SurfaceProgram) -> SurfaceProgram:
    """Rewrite every effect to single-operation form; returns the program
    unchanged when every effect already has one operation."""
    return _Desugarer(program).run()
