"""Random surface-program generator for parser round-trip testing.

Programs are grammatical and well-scoped but not necessarily well-typed;
the round-trip property only needs parseability.
"""

from __future__ import annotations

import random
from typing import List

from effws import surface as sf

NAMES = ("x", "y", "z", "foo", "bar", "acc", "tmp")
OPS_OF = {"r": ("fail", "pick"), "s": ("op",)}


def gen_type(rng: random.Random, depth: int = 0) -> sf.SType:
    if depth >= 2:
        return rng.choice((sf.STUnit(), sf.STInt(), sf.STStr()))
    roll = rng.random()
    if roll < 0.45:
        return rng.choice((sf.STUnit(), sf.STInt(), sf.STStr(), sf.STEmpty(), sf.STDyn()))
    if roll < 0.60:
        return sf.STArrow(gen_type(rng, depth + 1), gen_type(rng, depth + 1))
    if roll < 0.75:
        return sf.STPair(gen_type(rng, depth + 1), gen_type(rng, depth + 1))
    if roll < 0.90:
        return sf.STSum(gen_type(rng, depth + 1), gen_type(rng, depth + 1))
    return sf.STInst("nd", (gen_type(rng, depth + 1),))


def gen_expr(rng: random.Random, env: List[str], insts: List[str], depth: int = 0) -> sf.SExpr:
    atoms = [
        lambda: sf.SInt(rng.randint(0, 99)),
        lambda: sf.SStr(rng.choice(("", "a", "b;", 'quo"te', "back\\slash", "new\nline"))),
        lambda: sf.SUnit(),
    ]
    if env:
        atoms.append(lambda: sf.SVar(rng.choice(env)))
    if depth >= 4:
        return rng.choice(atoms)()
    roll = rng.random()
    sub = lambda: gen_expr(rng, env, insts, depth + 1)  # noqa: E731
    if roll < 0.20:
        return rng.choice(atoms)()
    if roll < 0.30:
        x = rng.choice(NAMES)
        return sf.SLet(x, sub(), gen_expr(rng, env + [x], insts, depth + 1))
    if roll < 0.38:
        x = rng.choice(NAMES)
        return sf.SLam(x, gen_type(rng), gen_expr(rng, env + [x], insts, depth + 1))
    if roll < 0.46:
        return sf.SApp(sub(), sub())
    if roll < 0.52:
        return sf.SPair(sub(), sub())
    if roll < 0.56:
        return rng.choice((sf.SFst, sf.SSnd))(sub())
    if roll < 0.62:
        ctor = rng.choice((sf.SInl, sf.SInr))
        return ctor(sub(), gen_type(rng, 1))
    if roll < 0.66:
        lx, rx = rng.choice(NAMES), rng.choice(NAMES)
        return sf.SCase(sub(), lx, gen_expr(rng, env + [lx], insts, depth + 1), rx, gen_expr(rng, env + [rx], insts, depth + 1))
    if roll < 0.70:
        return sf.SPrint(sub())
    if roll < 0.73:
        return sf.SAbsurd(sub(), gen_type(rng, 1))
    if roll < 0.76:
        return sf.SNew("nd", (gen_type(rng, 1),))
    if roll < 0.80 and insts:
        inst = rng.choice(insts)
        return sf.SOp(inst, rng.choice(OPS_OF[inst]), sub())
    if roll < 0.86 and insts:
        inst = rng.choice(insts)
        op = rng.choice(OPS_OF[inst])
        a, k = rng.choice(NAMES), "k"
        vc = sf.ValClause(rng.choice(NAMES), gen_type(rng, 1) if rng.random() < 0.5 else None, sub())
        oc = sf.OpClause(inst, op, a, k, gen_expr(rng, env + [a, k], insts, depth + 1))
        if rng.random() < 0.5 or vc.ann is None:
            return sf.SHandle(sub(), vc, (oc,))
        return sf.SHandler(vc, (oc,))
    if roll < 0.90:
        return sf.SWith(sub(), sub())
    if roll < 0.94:
        return sf.SWithNew(sub())
    if roll < 0.96:
        x = rng.choice(NAMES)
        return sf.SLet(x, sf.SNewref(sub()), gen_expr(rng, env + [x], insts, depth + 1))
    if env and roll < 0.98:
        return sf.SGet(rng.choice(env))
    if env:
        return sf.SPut(rng.choice(env), sub())
    return rng.choice(atoms)()


def gen_surface_program(seed: int) -> sf.SurfaceProgram:
    rng = random.Random(seed)
    effects = (
        sf.EffectDecl("nd", ("a",), (sf.OpDecl("fail", sf.STUnit(), sf.STEmpty()), sf.OpDecl("pick", sf.STVar("a"), sf.STVar("a")))),
        sf.EffectDecl("st", (), (sf.OpDecl("op", sf.STInt(), sf.STInt()),)),
    )
    instances = (sf.InstanceDecl("r", "nd", (sf.STStr(),)), sf.InstanceDecl("s", "st", ()))
    body = gen_expr(rng, [], ["r", "s"])
    return sf.SurfaceProgram(effects, instances, body)
