"""Backtracking N-queens: effect-handler variants against a host oracle.

``effect-backtrack`` places queens row by row through a select-style
operation; the handler tries each column by resuming the continuation,
depth-first, taking the first success.  Conflicts abort the current
branch through a separate fail effect whose handler drops the
continuation.  ``fail-only`` uses only the fail effect with candidate
iteration unrolled in the program text, which grows the term
exponentially in the board size, so it is capped at n = 5 (Core Eff has
no recursion; that cap is the price of exceptions-only backtracking).
``host-native`` is a plain Python backtracker used as the correctness
oracle.  Timings are informational only; nothing here is comparable to
compiled-system benchmarks.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional, Tuple

from .. import surface as sf
from ..eff_denot import RV, eval_comp
from ..pipeline import surface_to_core
from ..runtime import Session, VInt, VPair, VSum, deep_call

VARIANTS = ("effect-backtrack", "fail-only", "host-native")

FAIL_ONLY_MAX_N = 5


@dataclass(frozen=True)
class BenchResult:
    variant: str
    n: int
    solved: bool
    solution: Optional[List[int]]
    wall_time_s: float
    steps: int
    count: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "n": self.n,
            "solved": self.solved,
            "solution": self.solution,
            "wall_time_s": self.wall_time_s,
            "steps": self.steps,
            "count": self.count,
        }


# ---------------------------------------------------------------------------
# Host-native oracle


def no_attack(q1: Tuple[int, int], q2: Tuple[int, int]) -> bool:
    (x, y), (x2, y2) = q1, q2
    return x != x2 and y != y2 and abs(x - x2) != abs(y - y2)


def _available(x: int, qs: List[Tuple[int, int]], n: int) -> List[int]:
    return [y for y in range(1, n + 1) if all(no_attack((x, y), q) for q in qs)]


def host_solve(n: int) -> Optional[List[int]]:
    def place(x: int, qs: List[Tuple[int, int]]) -> Optional[List[Tuple[int, int]]]:
        if x == n + 1:
            return qs
        for y in _available(x, qs, n):
            r = place(x + 1, qs + [(x, y)])
            if r is not None:
                return r
        return None

    r = place(1, [])
    return [y for _x, y in r] if r is not None else None


def host_count(n: int) -> int:
    def place(x: int, qs: List[Tuple[int, int]]) -> int:
        if x == n + 1:
            return 1
        return sum(place(x + 1, qs + [(x, y)]) for y in _available(x, qs, n))

    return place(1, [])


def is_valid_solution(solution: List[int]) -> bool:
    queens = list(enumerate(solution, start=1))
    return all(no_attack(queens[i], queens[j]) for i in range(len(queens)) for j in range(i + 1, len(queens)))


# ---------------------------------------------------------------------------
# Surface program builders

_U = sf.STUnit()
_I = sf.STInt()


def _sol_type(rows: int) -> sf.SType:
    t: sf.SType = _I
    for _ in range(rows - 1):
        t = sf.STPair(t, _I)
    return t


def _app2(f: str, a: sf.SExpr, b: sf.SExpr) -> sf.SExpr:
    return sf.SApp(sf.SApp(sf.SVar(f), a), b)


def _guard(row: int, prev: int, fail_inst: str) -> sf.SExpr:
    """unit-typed check of column c{row} against column c{prev}."""
    ci, cj = sf.SVar(f"c{row}"), sf.SVar(f"c{prev}")
    abort = sf.SAbsurd(sf.SOp(fail_inst, "nope", sf.SUnit()), _U)
    diag = sf.SCase(
        _app2("eq", sf.SApp(sf.SVar("absint"), _app2("sub", ci, cj)), sf.SInt(row - prev)),
        "u", sf.SUnit(),
        "t", abort,
    )
    return sf.SCase(_app2("eq", ci, cj), "u", diag, "t", abort)


def _body_rows(n: int, fail_inst: str, select_inst: Optional[str], tail: sf.SExpr) -> sf.SExpr:
    """let c1 = pick 1 in … guards … tail (select_inst=None means the
    caller substitutes literal columns and no picks are emitted)."""
    expr = tail
    for row in range(n, 0, -1):
        for prev in range(row - 1, 0, -1):
            expr = sf.SLet(f"u{row}_{prev}", _guard(row, prev, fail_inst), expr)
        if select_inst is not None:
            expr = sf.SLet(f"c{row}", sf.SOp(select_inst, "pick", sf.SInt(row)), expr)
    return expr


def _sol_tuple(n: int) -> sf.SExpr:
    e: sf.SExpr = sf.SVar("c1")
    for row in range(2, n + 1):
        e = sf.SPair(e, sf.SVar(f"c{row}"))
    return e


def _decls() -> Tuple[Tuple[sf.EffectDecl, ...], Tuple[sf.InstanceDecl, ...]]:
    qsel = sf.EffectDecl("qsel", (), (sf.OpDecl("pick", _I, _I),))
    qfail = sf.EffectDecl("qfail", (), (sf.OpDecl("nope", _U, sf.STEmpty()),))
    return (qsel, qfail), (sf.InstanceDecl("s", "qsel", ()), sf.InstanceDecl("f", "qfail", ()))


def build_queens(n: int) -> sf.SurfaceProgram:
    """First-solution search: answer is unit + solution."""
    sol_t = _sol_type(n)
    ans_t = sf.STSum(_U, sol_t)
    body = _body_rows(n, "f", "s", _sol_tuple(n))
    inner = sf.SHandle(
        body,
        sf.ValClause("x", None, sf.SInr(sf.SVar("x"), ans_t)),
        (sf.OpClause("f", "nope", "z", "k", sf.SInl(sf.SUnit(), ans_t)),),
    )

    def try_from(y: int) -> sf.SExpr:
        attempt = sf.SApp(sf.SVar("k"), sf.SInt(y))
        if y == n:
            return attempt
        r = f"r{y}"
        return sf.SLet(r, attempt, sf.SCase(sf.SVar(r), "u", try_from(y + 1), "sol", sf.SVar(r)))

    outer = sf.SHandle(
        inner,
        sf.ValClause("r", None, sf.SVar("r")),
        (sf.OpClause("s", "pick", "row", "k", try_from(1)),),
    )
    effects, instances = _decls()
    return sf.SurfaceProgram(effects, instances, outer)


def build_queens_count(n: int) -> sf.SurfaceProgram:
    """Exhaustive search: the handler resumes every candidate and sums."""
    body = _body_rows(n, "f", "s", sf.SUnit())
    inner = sf.SHandle(
        body,
        sf.ValClause("x", None, sf.SInt(1)),
        (sf.OpClause("f", "nope", "z", "k", sf.SInt(0)),),
    )
    total: sf.SExpr = sf.SVar("r1")
    for y in range(2, n + 1):
        total = _app2("add", total, sf.SVar(f"r{y}"))
    tries: sf.SExpr = total
    for y in range(n, 0, -1):
        tries = sf.SLet(f"r{y}", sf.SApp(sf.SVar("k"), sf.SInt(y)), tries)
    outer = sf.SHandle(
        inner,
        sf.ValClause("r", None, sf.SVar("r")),
        (sf.OpClause("s", "pick", "row", "k", tries),),
    )
    effects, instances = _decls()
    return sf.SurfaceProgram(effects, instances, outer)


def build_queens_failonly(n: int) -> sf.SurfaceProgram:
    """Exceptions-only backtracking with the candidate loops unrolled.

    Columns are literals in each branch, so the program is exponential
    in n.
    """
    if n > FAIL_ONLY_MAX_N:
        raise ValueError(f"fail-only variant is capped at n = {FAIL_ONLY_MAX_N}")
    sol_t = _sol_type(n)
    ans_t = sf.STSum(_U, sol_t)

    def sol_tuple(cols: List[int]) -> sf.SExpr:
        e: sf.SExpr = sf.SInt(cols[0])
        for c in cols[1:]:
            e = sf.SPair(e, sf.SInt(c))
        return e

    def guards(row: int, y: int, cols: List[int], tail: sf.SExpr) -> sf.SExpr:
        expr = tail
        for prev in range(row - 1, 0, -1):
            cj = cols[prev - 1]
            abort = sf.SAbsurd(sf.SOp("f", "nope", sf.SUnit()), _U)
            diag = sf.SCase(
                _app2("eq", sf.SApp(sf.SVar("absint"), _app2("sub", sf.SInt(y), sf.SInt(cj))), sf.SInt(row - prev)),
                "u", sf.SUnit(),
                "t", abort,
            )
            check = sf.SCase(_app2("eq", sf.SInt(y), sf.SInt(cj)), "u", diag, "t", abort)
            expr = sf.SLet(f"u{row}_{prev}_{y}", check, expr)
        return expr

    def place(row: int, cols: List[int]) -> sf.SExpr:
        if row == n + 1:
            return sf.SInr(sol_tuple(cols), ans_t)

        def attempt(y: int) -> sf.SExpr:
            inner = guards(row, y, cols, place(row + 1, cols + [y]))
            return sf.SHandle(
                inner,
                sf.ValClause("a", None, sf.SVar("a")),
                (sf.OpClause("f", "nope", "z", "k", sf.SInl(sf.SUnit(), ans_t)),),
            )

        def try_from(y: int) -> sf.SExpr:
            if y == n:
                return attempt(y)
            r = f"r{row}_{y}"
            return sf.SLet(r, attempt(y), sf.SCase(sf.SVar(r), "u", try_from(y + 1), "sol", sf.SVar(r)))

        return try_from(1)

    effects, instances = _decls()
    qfail = effects[1]
    return sf.SurfaceProgram((qfail,), (instances[1],), place(1, []))


# ---------------------------------------------------------------------------
# Running


def _denote(program: sf.SurfaceProgram, fuel: int, max_depth: int):
    core = surface_to_core(program)

    def go():
        s = Session(fuel=fuel, max_depth=max_depth)
        r = eval_comp({}, core, s)
        assert isinstance(r, RV), f"queens program did not finish: {r}"
        return r.d, fuel - s.fuel

    return deep_call(go)


def _extract_solution(d) -> Optional[List[int]]:
    if not isinstance(d, VSum):
        raise AssertionError(f"unexpected queens answer: {d!r}")
    if d.left:
        return None
    cols: List[int] = []
    node = d.v
    while isinstance(node, VPair):
        assert isinstance(node.b, VInt)
        cols.append(node.b.n)
        node = node.a
    assert isinstance(node, VInt)
    cols.append(node.n)
    return list(reversed(cols))


def count_solutions_effect(n: int, fuel: int = 10**8, max_depth: int = 20_000) -> int:
    d, _steps = _denote(build_queens_count(n), fuel, max_depth)
    assert isinstance(d, VInt)
    return d.n


def bench_queens(n: int, variant: str, fuel: int = 10**8, max_depth: int = 20_000) -> BenchResult:
    """Solve N-queens under the requested variant; first solution or
    solved=False."""
    if not 1 <= n <= 12:
        raise ValueError("board size must be between 1 and 12")
    if variant == "host-native":
        t0 = time.perf_counter()
        sol = host_solve(n)
        dt = time.perf_counter() - t0
        return BenchResult(variant, n, sol is not None, sol, dt, 0)
    if variant == "effect-backtrack":
        program = build_queens(n)
    elif variant == "fail-only":
        program = build_queens_failonly(n)
    else:
        raise ValueError(f"unknown variant {variant!r} (expected one of {VARIANTS})")
    t0 = time.perf_counter()
    d, steps = _denote(program, fuel, max_depth)
    dt = time.perf_counter() - t0
    sol = _extract_solution(d)
    return BenchResult(variant, n, sol is not None, sol, dt, steps)
