"""Differential runner: one program, three evaluation routes.

``diff_run`` evaluates a Core Eff program under the effect interpreter
and, after translation, under the bubble-up interpreter and the
small-step machine, asserting translated-type agreement along the way.
The three routes use independent step notions, so each gets the same
configured budget; when only some routes run out of fuel, everything is
retried once at ten times the budget before the mix is flagged.  On
disagreement the program is shrunk greedily by type-preserving subterm
replacement while the disagreement persists.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

from .. import core_eff as ce
from ..core_delimcc import check_delimcc
from ..delimcc_denot import run_delimcc
from ..delimcc_step import run_step
from ..eff_denot import run_eff
from ..runtime import DEFAULT_FUEL, DEFAULT_MAX_DEPTH, Outcome
from ..translate import translate, translate_type

MAX_SHRINK_ATTEMPTS = 10_000

ROUTE_NAMES = ("eff", "trans", "step")


@dataclass(frozen=True)
class DiffReport:
    id: str
    verdict: str  # "agree" | "disagree"
    outcomes: Tuple[Outcome, Outcome, Outcome]
    disagree_routes: Tuple[str, ...] = ()
    witness: Optional[str] = None  # s-expression of the shrunk program

    @property
    def trace(self) -> Optional[List[str]]:
        return list(self.outcomes[0].trace) if self.verdict == "agree" else None

    @property
    def value(self) -> Optional[str]:
        return self.outcomes[0].value if self.verdict == "agree" else None

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "verdict": self.verdict,
            "outcomes": [o.to_json() for o in self.outcomes],
            "trace": self.trace,
            "value": self.value,
            "disagree_routes": list(self.disagree_routes),
            "witness": self.witness,
        }

    @staticmethod
    def from_json(d: dict) -> "DiffReport":
        return DiffReport(
            id=d["id"],
            verdict=d["verdict"],
            outcomes=tuple(Outcome.from_json(o) for o in d["outcomes"]),
            disagree_routes=tuple(d.get("disagree_routes") or ()),
            witness=d.get("witness"),
        )

    def to_json_line(self) -> str:
        return json.dumps(self.to_json())


def _run_three(p: ce.CoreEffProgram, d, fuel: int, max_depth: int) -> Tuple[Outcome, Outcome, Outcome]:
    return (
        run_eff(p, fuel=fuel, max_depth=max_depth),
        run_delimcc(d, fuel=fuel, max_depth=max_depth),
        run_step(d, fuel=fuel, max_depth=max_depth),
    )


def _outcomes(p: ce.CoreEffProgram, fuel: int, max_depth: int) -> Tuple[Outcome, Outcome, Outcome]:
    d = translate(p)
    outs = _run_three(p, d, fuel, max_depth)
    kinds = {o.kind for o in outs}
    if "fuel" in kinds and kinds != {"fuel"}:
        # mixed out-of-fuel: routes count steps differently, so retry once
        # with a 10x budget before flagging
        outs = _run_three(p, d, fuel * 10, max_depth)
    return outs


def diff_run(
    p: ce.CoreEffProgram,
    fuel: int = DEFAULT_FUEL,
    max_depth: int = DEFAULT_MAX_DEPTH,
    program_id: str = "?",
    shrink: bool = True,
) -> DiffReport:
    """Run all three routes and compare; shrinks a disagreeing program."""
    t = ce.infer_comp({}, p)
    dt = check_delimcc({}, translate(p))
    expected = translate_type(t)
    assert dt == expected, f"translated type {dt} differs from {expected}"

    outs = _outcomes(p, fuel, max_depth)
    if outs[0] == outs[1] == outs[2]:
        return DiffReport(program_id, "agree", outs)

    routes = _disagreeing(outs)
    witness = p
    if shrink:
        witness = shrink_program(p, fuel, max_depth)
    return DiffReport(program_id, "disagree", outs, routes, ce.sexp(witness))


def _disagreeing(outs) -> Tuple[str, ...]:
    bad = []
    for i in range(3):
        for j in range(i + 1, 3):
            if outs[i] != outs[j]:
                bad.append(f"{ROUTE_NAMES[i]}/{ROUTE_NAMES[j]}")
    return tuple(bad)


# ---------------------------------------------------------------------------
# Shrinking


def canonical_value(t: ce.CoreType) -> Optional[ce.CoreValue]:
    if isinstance(t, ce.TUnit):
        return ce.UnitV()
    if isinstance(t, ce.TInt):
        return ce.IntV(0)
    if isinstance(t, ce.TStr):
        return ce.StrV("")
    if isinstance(t, ce.TDyn):
        return ce.UnitV()
    if isinstance(t, ce.TPair):
        a, b = canonical_value(t.a), canonical_value(t.b)
        return ce.PairV(a, b) if a is not None and b is not None else None
    if isinstance(t, ce.TSum):
        a = canonical_value(t.a)
        if a is not None:
            return ce.InL(a, t)
        b = canonical_value(t.b)
        return ce.InR(b, t) if b is not None else None
    if isinstance(t, ce.TArrow):
        b = canonical_value(t.b)
        if b is None:
            return None
        return ce.Lam("_s", t.a, ce.Val(b))
    return None  # no closed canonical value for empty / eff / effh


def _replacements(e: ce.CoreComp, ctx: ce.TypeCtx) -> Iterator[ce.CoreComp]:
    """Type-preserving simplifications of the root of e."""
    t = ce.infer_comp(ctx, e)
    cv = canonical_value(t)
    if cv is not None and e != ce.Val(cv):
        yield ce.Val(cv)
    if isinstance(e, ce.Let):
        if e.binder not in ce.free_vars_comp(e.e2):
            yield e.e2
    if isinstance(e, ce.WithHandle) and isinstance(e.handler, ce.HandlerVal):
        ht = ce.infer_value(ctx, e.handler)
        if isinstance(ht, ce.TEffH) and ht.c == ht.w:
            yield e.body
    if isinstance(e, ce.Val) and isinstance(e.v, ce.IntV) and e.v.n != 0:
        yield ce.Val(ce.IntV(0))
    if isinstance(e, ce.Val) and isinstance(e.v, ce.StrV) and e.v.s != "":
        yield ce.Val(ce.StrV(""))


def _rewrite_sites(e: ce.CoreComp, ctx: ce.TypeCtx):
    """Yield (candidate whole-program rewrite) pairs, outermost first."""

    def at_comp(c: ce.CoreComp, ctx: ce.TypeCtx, rebuild):
        for r in _replacements(c, ctx):
            yield rebuild(r)
        if isinstance(c, ce.Let):
            t1 = ce.infer_comp(ctx, c.e1)
            yield from at_comp(c.e1, ctx, lambda r: rebuild(ce.Let(c.binder, r, c.e2)))
            yield from at_comp(
                c.e2, {**ctx, c.binder: t1}, lambda r: rebuild(ce.Let(c.binder, c.e1, r))
            )
        elif isinstance(c, ce.WithHandle):
            yield from at_comp(c.body, ctx, lambda r: rebuild(ce.WithHandle(c.handler, r)))
        elif isinstance(c, ce.CaseSum):
            st = ce.infer_value(ctx, c.scrut)
            if isinstance(st, ce.TSum):
                yield from at_comp(
                    c.lbody,
                    {**ctx, c.lbinder: st.a},
                    lambda r: rebuild(ce.CaseSum(c.scrut, c.lbinder, r, c.rbinder, c.rbody)),
                )
                yield from at_comp(
                    c.rbody,
                    {**ctx, c.rbinder: st.b},
                    lambda r: rebuild(ce.CaseSum(c.scrut, c.lbinder, c.lbody, c.rbinder, r)),
                )

    yield from at_comp(e, ctx, lambda r: r)


def shrink_program(p: ce.CoreEffProgram, fuel: int, max_depth: int) -> ce.CoreEffProgram:
    """Greedy shrink preserving typability and route disagreement."""

    def disagrees(q: ce.CoreEffProgram) -> bool:
        try:
            ce.infer_comp({}, q)
            outs = _outcomes(q, fuel, max_depth)
        except Exception:
            return False
        return not (outs[0] == outs[1] == outs[2])

    attempts = 0
    current = p
    improved = True
    while improved and attempts < MAX_SHRINK_ATTEMPTS:
        improved = False
        for candidate in _rewrite_sites(current, {}):
            attempts += 1
            if attempts >= MAX_SHRINK_ATTEMPTS:
                break
            if candidate != current and disagrees(candidate):
                current = candidate
                improved = True
                break
    return current
