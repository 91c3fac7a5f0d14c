"""The effect-calculus interpreter: lift laws, handler behaviour,
determinism, instance freshness."""

import random

import pytest

from conftest import corpus_names, corpus_source
from effws import core_eff as ce
from effws.eff_denot import RE, RV, eval_comp, lift_eff, run_eff
from effws.pipeline import surface_to_core
from effws.runtime import Session, VInt, VStr, VUnit, render
from effws.surface import parse


def observe(r, feeds):
    """Drive a result with a fixed feed sequence; transcript of what we saw."""
    out = []
    for f in feeds:
        if isinstance(r, RV):
            break
        out.append(f"E[{r.inst} {render(r.arg)}]")
        r = r.k(VInt(f))
    if isinstance(r, RV):
        out.append(f"V[{render(r.d)}]")
    else:
        out.append(f"E[{r.inst} {render(r.arg)}]...")
    return " ".join(out)


def random_res(rng, depth=0):
    """A finite chain of requests ending in a value."""
    if depth >= 3 or rng.random() < 0.4:
        return RV(VInt(rng.randint(0, 9)))
    inst = rng.randint(1, 3)
    arg = VInt(rng.randint(0, 9))
    nxt = random_res(rng, depth + 1)
    add = rng.randint(0, 5)

    def k(x):
        if isinstance(nxt, RV):
            return RV(VInt(nxt.d.n + x.n + add))
        return nxt

    return RE(inst, arg, k)


def lift_fns(rng):
    c = rng.randint(1, 9)
    fs = [
        lambda d: RV(VInt(d.n + c)),
        lambda d: RV(VInt(d.n * 2)),
        lambda d: RE(9, d, lambda x: RV(x)),
    ]
    return rng.choice(fs)


def test_lift_on_value_applies():
    s = Session()
    f = lambda d: RV(VInt(d.n + 1))  # noqa: E731
    assert lift_eff(f, RV(VInt(4)), s) == RV(VInt(5))


@pytest.mark.parametrize("seed", range(200))
def test_lift_identity_law(seed):
    rng = random.Random(seed)
    s = Session()
    r = random_res(rng)
    feeds = [rng.randint(0, 9) for _ in range(5)]
    assert observe(lift_eff(lambda d: RV(d), r, s), feeds) == observe(r, feeds)


@pytest.mark.parametrize("seed", range(200))
def test_lift_composition_law(seed):
    """lift f . lift g == lift (lift f . g), observed on finite chains."""
    rng = random.Random(seed)
    s = Session()
    r = random_res(rng)
    f = lift_fns(rng)
    g = lift_fns(rng)
    feeds = [rng.randint(0, 9) for _ in range(6)]
    lhs = lift_eff(f, lift_eff(g, r, s), s)
    rhs = lift_eff(lambda x: lift_eff(f, g(x), s), r, s)
    assert observe(lhs, feeds) == observe(rhs, feeds)


def test_op_invocation_builds_request():
    s = Session()
    prog = ce.Let("p", ce.NewP(ce.INT_T, ce.INT_T), ce.App(ce.OpInvoke(ce.Var("p")), ce.IntV(5)))
    r = eval_comp({}, prog, s)
    assert isinstance(r, RE) and r.inst == 1 and r.arg == VInt(5)
    assert r.k(VInt(7)) == RV(VInt(7))  # freshly created request: identity continuation


def test_unhandled_effect_outcome():
    prog = ce.Let("p", ce.NewP(ce.INT_T, ce.INT_T), ce.App(ce.OpInvoke(ce.Var("p")), ce.IntV(5)))
    out = run_eff(prog)
    assert out.kind == "unhandled" and out.inst == 1


def test_print_appends_to_trace():
    prog = ce.Let("u", ce.Print(ce.StrV("hi")), ce.Val(ce.UnitV()))
    out = run_eff(prog)
    assert out.trace == ("hi",) and out.value == "()"


def test_instance_freshness():
    prog = ce.Let(
        "p1",
        ce.NewP(ce.INT_T, ce.INT_T),
        ce.Let("p2", ce.NewP(ce.STR_T, ce.STR_T), ce.Val(ce.PairV(ce.Var("p1"), ce.Var("p2")))),
    )
    out = run_eff(prog)
    assert out.value == "(<inst:1>, <inst:2>)"


class _RecordingSession(Session):
    def __init__(self):
        super().__init__()
        self.issued = []

    def fresh_instance(self):
        n = super().fresh_instance()
        self.issued.append(n)
        return n


@pytest.mark.parametrize("seed", range(200))
def test_instance_freshness_generated(seed):
    from effws.harness.generate import GenConfig, gen_program

    p = gen_program(GenConfig(seed=seed, size=16, state=True))
    s = _RecordingSession()
    eval_comp({}, p, s)
    assert len(set(s.issued)) == len(s.issued)
    assert s.issued == sorted(s.issued)


@pytest.mark.parametrize("name", corpus_names())
def test_determinism_corpus(name):
    core = surface_to_core(parse(corpus_source(name)))
    assert run_eff(core) == run_eff(core)


@pytest.mark.parametrize("seed", range(200))
def test_determinism_generated(seed):
    from effws.harness.generate import GenConfig, gen_program

    p = gen_program(GenConfig(seed=seed, size=18, state=True))
    assert run_eff(p) == run_eff(p)


def _single_resume_handler(p, ops_t, reply):
    """val x -> x | op(x, k) -> k reply : commutes with its peers."""
    return ce.HandlerVal(
        ce.Var(p), "v", ce.UNIT_T, ce.Val(ce.Var("v")),
        "x", "k", ce.App(ce.Var("k"), reply),
    )


@pytest.mark.parametrize("seed", range(200))
def test_handler_relay_commutation(seed):
    """Single-resume handlers on distinct instances commute: requests for
    the outer instance relay through the inner handler untouched."""
    rng = random.Random(seed)
    body_ops = []
    for i in range(rng.randint(1, 4)):
        which = rng.choice(("p", "q"))
        body_ops.append((which, rng.randint(0, 9)))
    inner = ce.Val(ce.UnitV())
    for n, (which, arg) in enumerate(reversed(body_ops)):
        inner = ce.Let(
            f"z{n}",
            ce.App(ce.OpInvoke(ce.Var(which)), ce.IntV(arg)),
            ce.Let(f"u{n}", ce.Print(ce.StrV(which)), inner),
        )
    hp = _single_resume_handler("p", ce.INT_T, ce.IntV(rng.randint(0, 9)))
    hq = _single_resume_handler("q", ce.INT_T, ce.IntV(rng.randint(0, 9)))

    def program(outer_first):
        body = ce.WithHandle(hp, ce.WithHandle(hq, inner)) if outer_first else ce.WithHandle(
            hq, ce.WithHandle(hp, inner)
        )
        return ce.Let("p", ce.NewP(ce.INT_T, ce.INT_T), ce.Let("q", ce.NewP(ce.INT_T, ce.INT_T), body))

    assert run_eff(program(True)) == run_eff(program(False))
