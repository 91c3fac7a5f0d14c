"""The three-prompt delimcc example with repeated continuation invocation.

Built programmatically (there is no surface syntax for Core delimcc); the
expected result is 135.  Used by the route-agreement and acceptance tests.
"""

from __future__ import annotations

from effws.core_delimcc import (
    DApp,
    DLam,
    DLet,
    DNewPr,
    DPrim,
    DPushPr,
    DSh0,
    DUnitV,
    DIntV,
    DVar,
    DVl,
    INT_T,
    TArrow,
    UNIT_T,
    DComp,
)

THUNK_T = TArrow(UNIT_T, INT_T)


def _plus(e: DComp, n: int, tag: str) -> DComp:
    # e ++ n  ==  let ev = e in let fv = add ev in fv n
    return DLet(
        f"ev{tag}",
        e,
        DLet(
            f"fv{tag}",
            DApp(DPrim("add"), DVar(f"ev{tag}")),
            DApp(DVar(f"fv{tag}"), DIntV(n)),
        ),
    )


def _call_unit(e: DComp, tag: str) -> DComp:
    # e $$$ ()  ==  let z = e in z ()
    return DLet(f"z{tag}", e, DApp(DVar(f"z{tag}"), DUnitV()))


def exd_program() -> DComp:
    inner_sh0 = DSh0(
        DVar("p2"),
        "sk2",
        THUNK_T,
        DApp(
            DVar("sk2"),
            DLam("u3", UNIT_T, DApp(DVar("sk2"), DLam("u4", UNIT_T, DVl(DIntV(3))))),
        ),
    )
    pushtwice_body = DApp(
        DVar("sk"),
        DLam(
            "u1",
            UNIT_T,
            DApp(
                DVar("sk"),
                DLam("u2", UNIT_T, _call_unit(inner_sh0, "i")),
            ),
        ),
    )
    core = DPushPr(
        DVar("p1"),
        _plus(
            DPushPr(
                DVar("p2"),
                _plus(
                    DPushPr(
                        DVar("p3"),
                        _call_unit(DSh0(DVar("p1"), "sk", THUNK_T, pushtwice_body), "o"),
                    ),
                    10,
                    "a",
                ),
            ),
            1,
            "b",
        ),
    )
    return DLet(
        "p1",
        DNewPr(INT_T),
        DLet("p2", DNewPr(INT_T), DLet("p3", DNewPr(INT_T), _plus(core, 100, "c"))),
    )
