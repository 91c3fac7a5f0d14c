"""Deterministic random generator of closed, well-typed Core Eff programs.

Generation is type-directed, so every program typechecks by
construction; it is a pure function of :class:`GenConfig`.  Templates
cover integer arithmetic, let/app chains, pairs, sums, printing, up to
``max_instances`` effect instances with choose-, fail- and state-shaped
operations, and handler clauses drawn from resume-once, resume-twice,
drop-continuation and re-raise.  Operations may also be invoked outside
any handler, so unhandled-effect outcomes are part of the corpus.  With
the ``dynamic`` toggle, some programs are built as surface text with
``withnew``/``newref``/``get``/``put`` and run through the front-end
pipeline.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .. import core_eff as ce
from .. import surface as sf
from ..desugar import desugar_multi_op
from ..dyneff import expand_dynamic
from ..lower import lower

BOOL_T = ce.BOOL_T

DATA_TYPES: Tuple[ce.CoreType, ...] = (
    ce.UNIT_T,
    ce.INT_T,
    ce.STR_T,
    BOOL_T,
    ce.TPair(ce.INT_T, ce.INT_T),
    ce.TSum(ce.INT_T, ce.STR_T),
    ce.TPair(ce.STR_T, ce.UNIT_T),
)

STR_POOL = ("a", "b", "c", "x", ";", "!")


@dataclass(frozen=True)
class GenConfig:
    seed: int
    size: int = 20
    max_instances: int = 3
    max_nesting: int = 3
    nondet: bool = True
    state: bool = False
    dynamic: bool = False


def gen_program(cfg: GenConfig) -> ce.CoreEffProgram:
    """Generate a closed, typechecked Core Eff program from the config."""
    if cfg.size <= 0:
        return ce.Val(ce.IntV(0))
    rng = random.Random(
        (cfg.seed, cfg.size, cfg.max_instances, cfg.max_nesting, cfg.nondet, cfg.state, cfg.dynamic)
    )
    if cfg.dynamic and rng.random() < 0.4:
        return _gen_dynamic(rng, cfg)
    return _Gen(rng, cfg).program()


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        self.budget = cfg.size
        self.counter = 0
        self.instances = 0

    def fresh(self, hint: str) -> str:
        self.counter += 1
        return f"g{hint}{self.counter}"

    def spend(self, n: int = 1) -> None:
        self.budget -= n

    def data_type(self, depth: int = 0) -> ce.CoreType:
        if depth > 1:
            return self.rng.choice((ce.UNIT_T, ce.INT_T, ce.STR_T))
        return self.rng.choice(DATA_TYPES)

    # -- values

    def value(self, env: List[Tuple[str, ce.CoreType]], t: ce.CoreType, depth: int = 0) -> ce.CoreValue:
        vars_of_t = [n for n, vt in env if vt == t]
        if vars_of_t and self.rng.random() < 0.5:
            return ce.Var(self.rng.choice(vars_of_t))
        if isinstance(t, ce.TUnit):
            return ce.UnitV()
        if isinstance(t, ce.TInt):
            return ce.IntV(self.rng.randint(0, 9))
        if isinstance(t, ce.TStr):
            return ce.StrV(self.rng.choice(STR_POOL))
        if isinstance(t, ce.TPair):
            return ce.PairV(self.value(env, t.a, depth + 1), self.value(env, t.b, depth + 1))
        if isinstance(t, ce.TSum):
            if isinstance(t.a, ce.TEmpty):
                return ce.InR(self.value(env, t.b, depth + 1), t)
            if isinstance(t.b, ce.TEmpty) or self.rng.random() < 0.5:
                return ce.InL(self.value(env, t.a, depth + 1), t)
            return ce.InR(self.value(env, t.b, depth + 1), t)
        if isinstance(t, ce.TArrow):
            x = self.fresh("x")
            body = self.comp(env + [(x, t.a)], t.b, self.cfg.max_nesting)
            return ce.Lam(x, t.a, body)
        raise AssertionError(f"no value generator for {t}")

    # -- computations

    def comp(self, env, t: ce.CoreType, nesting: int) -> ce.CoreComp:
        self.spend()
        if self.budget <= 0:
            return ce.Val(self.value(env, t))
        roll = self.rng.random()
        if roll < 0.22:
            return ce.Val(self.value(env, t))
        if roll < 0.34:
            x = self.fresh("v")
            t1 = self.data_type()
            return ce.Let(x, self.comp(env, t1, nesting), self.comp(env + [(x, t1)], t, nesting))
        if roll < 0.42:
            u = self.fresh("u")
            pr = ce.Print(self.value(env, ce.STR_T))
            return ce.Let(u, pr, self.comp(env + [(u, ce.UNIT_T)], t, nesting))
        if roll < 0.50 and isinstance(t, (ce.TInt,)):
            return self.arith(env, t)
        if roll < 0.58:
            return self.case_sum(env, t, nesting)
        if roll < 0.64:
            x = self.fresh("x")
            t1 = self.data_type(1)
            fn = ce.Lam(x, t1, self.comp(env + [(x, t1)], t, nesting))
            return ce.App(fn, self.value(env, t1))
        if roll < 0.72:
            p = ce.TPair(self.data_type(1), self.data_type(1))
            side = self.rng.random() < 0.5
            pv = self.value(env, p)
            z = self.fresh("z")
            proj = ce.Proj1(pv) if side else ce.Proj2(pv)
            zt = p.a if side else p.b
            return ce.Let(z, proj, self.comp(env + [(z, zt)], t, nesting))
        insts = [(n, vt) for n, vt in env if isinstance(vt, ce.TEff)]
        if roll < 0.82 and insts:
            return self.invoke(env, t, nesting, insts)
        if nesting > 0 and self.instances < self.cfg.max_instances and (self.cfg.nondet or self.cfg.state):
            return self.effect_block(env, t, nesting)
        return ce.Val(self.value(env, t))

    def arith(self, env, t: ce.CoreType) -> ce.CoreComp:
        op = self.rng.choice(("add", "sub", "mul"))
        f = self.fresh("f")
        a = self.value(env, ce.INT_T)
        b = self.value(env, ce.INT_T)
        return ce.Let(f, ce.App(ce.Prim(op), a), ce.App(ce.Var(f), b))

    def case_sum(self, env, t: ce.CoreType, nesting: int) -> ce.CoreComp:
        st = ce.TSum(self.data_type(1), self.data_type(1))
        sv = self.value(env, st)
        lb, rb = self.fresh("l"), self.fresh("r")
        return ce.CaseSum(
            sv,
            lb,
            self.comp(env + [(lb, st.a)], t, nesting),
            rb,
            self.comp(env + [(rb, st.b)], t, nesting),
        )

    def invoke(self, env, t: ce.CoreType, nesting: int, insts) -> ce.CoreComp:
        name, it = self.rng.choice(insts)
        arg = self.value(env, it.a)
        z = self.fresh("z")
        call = ce.App(ce.OpInvoke(ce.Var(name)), arg)
        if isinstance(it.b, ce.TEmpty):
            return ce.Let(z, call, ce.Absurd(ce.Var(z), t))
        return ce.Let(z, call, self.comp(env + [(z, it.b)], t, nesting))

    def effect_shape(self) -> ce.TEff:
        shapes = []
        if self.cfg.nondet:
            elem = self.rng.choice((ce.INT_T, ce.STR_T))
            shapes.append(ce.TEff(ce.TPair(elem, elem), elem))  # choose
            shapes.append(ce.TEff(ce.UNIT_T, ce.EMPTY_T))  # fail
        if self.cfg.state:
            shapes.append(ce.TEff(ce.INT_T, ce.INT_T))  # reader/state
        return self.rng.choice(shapes)

    def effect_block(self, env, t: ce.CoreType, nesting: int) -> ce.CoreComp:
        self.instances += 1
        self.spend(6)
        it = self.effect_shape()
        p = self.fresh("p")
        env_p = env + [(p, it)]
        unhandled = self.rng.random() < 0.15
        if unhandled:
            return ce.Let(p, ce.NewP(it.a, it.b), self.comp(env_p, t, nesting))
        if self.cfg.state and it == ce.TEff(ce.INT_T, ce.INT_T) and self.rng.random() < 0.5:
            return ce.Let(p, ce.NewP(it.a, it.b), self.state_block(env_p, p, it, t, nesting))
        hv = self.handler(env_p, p, it, t)
        body = self.comp(env_p, t, nesting - 1)
        return ce.Let(p, ce.NewP(it.a, it.b), ce.WithHandle(hv, body))

    def handler(self, env, p: str, it: ce.TEff, w: ce.CoreType) -> ce.HandlerVal:
        """Handler with c = w; clause style drawn from the four templates."""
        vb = self.fresh("r")
        val_body = ce.Val(ce.Var(vb))
        xb, kb = self.fresh("x"), self.fresh("k")
        styles = ["drop", "reraise"]
        if not isinstance(it.b, ce.TEmpty):
            styles += ["once", "twice"]
        style = self.rng.choice(styles)
        if style == "drop":
            op_body: ce.CoreComp = ce.Val(self.value(env, w))
        elif style == "reraise":
            y = self.fresh("y")
            op_body = ce.Let(y, ce.App(ce.OpInvoke(ce.Var(p)), ce.Var(xb)), ce.App(ce.Var(kb), ce.Var(y)))
        elif style == "once":
            r = self.fresh("r")
            op_body = ce.Let(r, ce.App(ce.Var(kb), self.value(env, it.b)), ce.Val(ce.Var(r)))
        else:  # twice
            r1, r2 = self.fresh("r"), self.fresh("r")
            op_body = ce.Let(
                r1,
                ce.App(ce.Var(kb), self.value(env, it.b)),
                ce.Let(r2, ce.App(ce.Var(kb), self.value(env, it.b)), ce.Val(ce.Var(r2))),
            )
        return ce.HandlerVal(ce.Var(p), vb, w, val_body, xb, kb, op_body)

    def state_block(self, env, p: str, it: ce.TEff, t: ce.CoreType, nesting: int) -> ce.CoreComp:
        """Reader-style handler: answer is a function of the environment."""
        vb, xb, kb = self.fresh("r"), self.fresh("x"), self.fresh("k")
        s, z = self.fresh("s"), self.fresh("z")
        val_body = ce.Val(ce.Lam(s, ce.INT_T, ce.Val(ce.Var(vb))))
        op_body = ce.Val(
            ce.Lam(
                s,
                ce.INT_T,
                ce.Let(z, ce.App(ce.Var(kb), ce.Var(s)), ce.App(ce.Var(z), ce.Var(s))),
            )
        )
        hv = ce.HandlerVal(ce.Var(p), vb, t, val_body, xb, kb, op_body)
        g = self.fresh("g")
        body = self.comp(env, t, nesting - 1)
        return ce.Let(g, ce.WithHandle(hv, body), ce.App(ce.Var(g), ce.IntV(self.rng.randint(0, 9))))

    def program(self) -> ce.CoreEffProgram:
        t = self.data_type()
        return self.comp([], t, self.cfg.max_nesting)


def _gen_dynamic(rng: random.Random, cfg: GenConfig) -> ce.CoreEffProgram:
    """A surface program with withnew / newref / get / put, via the pipeline."""
    n_refs = rng.randint(1, 2)
    refs = []
    counter = [0]

    def fresh(h: str) -> str:
        counter[0] += 1
        return f"q{h}{counter[0]}"

    stmts: List[Tuple[str, sf.SExpr]] = []
    for _ in range(n_refs):
        r = fresh("r")
        init: sf.SExpr = sf.SInt(rng.randint(0, 9)) if rng.random() < 0.7 else sf.SStr(rng.choice(STR_POOL))
        stmts.append((r, sf.SNewref(init)))
        refs.append(r)
    reads = []
    for _ in range(rng.randint(1, min(4, max(1, cfg.size // 4)))):
        r = rng.choice(refs)
        if rng.random() < 0.5:
            x = fresh("x")
            stmts.append((x, sf.SGet(r)))
            reads.append(x)
        else:
            stmts.append((fresh("u"), sf.SPut(r, sf.SInt(rng.randint(0, 9)))))
    final_reads = [sf.SGet(rng.choice(refs))] + [sf.SVar(x) for x in reads]
    result: sf.SExpr = final_reads[0]
    for extra in final_reads[1 : rng.randint(1, 3)]:
        result = sf.SPair(result, extra)
    expr: sf.SExpr = result
    for name, rhs in reversed(stmts):
        expr = sf.SLet(name, rhs, expr)
    program = sf.SurfaceProgram((), (), sf.SWithNew(expr))
    return lower(desugar_multi_op(expand_dynamic(program)))
