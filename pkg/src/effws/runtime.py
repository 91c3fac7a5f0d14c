"""Shared runtime machinery for the three evaluators.

Runtime values carry constructor tags, so every dynamic cast, handler
dispatch and primitive application is checked; a mismatch surfaces as a
diagnosed runtime error instead of undefined behaviour.  All evaluation
routes render results through the same functions, which makes
differential comparison plain equality on :class:`Outcome`.
"""

from __future__ import annotations

import json
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

DEFAULT_FUEL = 10**7
DEFAULT_MAX_DEPTH = 20_000

# Large evaluation stacks: run on a dedicated worker thread whose stack is
# big enough for max_depth nested interpreter calls; the main thread's 8 MB
# would segfault long before the depth budget is reached.
_WORKER_STACK_BYTES = 512 * 1024 * 1024
_WORKER_RECURSION_LIMIT = 500_000


# ---------------------------------------------------------------------------
# Runtime values


class FnLike:
    """Marker base class for anything that renders as ``<fn>``."""

    __slots__ = ()


@dataclass(frozen=True)
class VUnit:
    pass


@dataclass(frozen=True)
class VInt:
    n: int


@dataclass(frozen=True)
class VStr:
    s: str


@dataclass(frozen=True)
class VInst:
    """Effect instance / prompt identity: a fresh positive integer."""

    n: int


@dataclass(frozen=True)
class VPair:
    a: object
    b: object


@dataclass(frozen=True)
class VSum:
    left: bool
    v: object


@dataclass(frozen=True)
class VUniv:
    """Universal-type box with a runtime-checked projection."""

    v: object


@dataclass(frozen=True)
class VRet:
    """Free structure: normal completion, payload is a VUniv."""

    v: object


@dataclass(frozen=True)
class VAct:
    """Free structure: suspended request (argument, continuation value)."""

    arg: object
    k: object


class VFn(FnLike):
    """Opaque denotation function used by the denotational routes."""

    __slots__ = ("fn",)

    def __init__(self, fn: Callable):
        self.fn = fn

    def __repr__(self) -> str:
        return "<fn>"


UNIT = VUnit()

Value = object  # any of the V* classes above, or an FnLike subclass


def escape_string(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        else:
            out.append(ch)
    return "".join(out)


def render(v: Value) -> str:
    """Canonical rendering, identical across all evaluation routes."""
    if isinstance(v, VUnit):
        return "()"
    if isinstance(v, VInt):
        return str(v.n)
    if isinstance(v, VStr):
        return f'"{escape_string(v.s)}"'
    if isinstance(v, VPair):
        return f"({render(v.a)}, {render(v.b)})"
    if isinstance(v, VSum):
        return ("inl " if v.left else "inr ") + render(v.v)
    if isinstance(v, VInst):
        return f"<inst:{v.n}>"
    if isinstance(v, VUniv):
        return f"<univ:{render(v.v)}>"
    if isinstance(v, (VRet, VAct)):
        return "<free>"
    if isinstance(v, FnLike):
        return "<fn>"
    raise AssertionError(f"unrenderable runtime value: {v!r}")


def tag_matches(v: Value, t: object) -> bool:
    """Check a runtime value's constructor tag against a static type.

    Dispatches on the type node's class name so it serves both the Core
    Eff and the Core delimcc type families.  The check is structural for
    data and shallow for functions (domains are not inspectable).
    """
    name = type(t).__name__
    if name == "TDyn":
        return True
    if name == "TUnit":
        return isinstance(v, VUnit)
    if name == "TInt":
        return isinstance(v, VInt)
    if name == "TStr":
        return isinstance(v, VStr)
    if name == "TEmpty":
        return False
    if name in ("TArrow", "TEffH"):
        return isinstance(v, FnLike)
    if name in ("TEff", "TPrompt"):
        return isinstance(v, VInst)
    if name == "TUniv":
        return isinstance(v, VUniv)
    if name == "TFree":
        return isinstance(v, (VRet, VAct))
    if name == "TPair":
        return isinstance(v, VPair) and tag_matches(v.a, t.a) and tag_matches(v.b, t.b)
    if name == "TSum":
        if not isinstance(v, VSum):
            return False
        return tag_matches(v.v, t.a if v.left else t.b)
    raise AssertionError(f"unknown type node: {t!r}")


# ---------------------------------------------------------------------------
# Evaluation failures (control flow inside the evaluators)


class FuelExhausted(Exception):
    pass


class DepthExceeded(Exception):
    pass


class EvalFailure(Exception):
    """Diagnosed runtime error: TagMismatch, Absurd or Stuck."""

    def __init__(self, kind: str, detail: str = ""):
        self.kind = kind
        self.detail = detail
        super().__init__(f"{kind}: {detail}" if detail else kind)


# ---------------------------------------------------------------------------
# Session


@dataclass
class Session:
    """Per-run mutable state: instance counter, output trace, budgets.

    A Session is single-threaded; distinct Sessions are independent, so
    separate runs may proceed in parallel.
    """

    fuel: int = DEFAULT_FUEL
    max_depth: int = DEFAULT_MAX_DEPTH
    next_instance: int = 1
    depth: int = 0
    trace: list = field(default_factory=list)
    # bubble-shape accounting, used by the translation's shape assertion
    act_bubbles: int = 0
    other_bubbles: int = 0

    def fresh_instance(self) -> int:
        n = self.next_instance
        self.next_instance += 1
        return n

    def tick(self) -> None:
        self.fuel -= 1
        if self.fuel < 0:
            raise FuelExhausted()

    def push(self) -> None:
        self.depth += 1
        if self.depth > self.max_depth:
            raise DepthExceeded()

    def pop(self) -> None:
        self.depth -= 1


# ---------------------------------------------------------------------------
# Outcome


@dataclass(frozen=True)
class Outcome:
    """Observable result of a whole-program run.

    ``kind`` is one of ``value``, ``unhandled``, ``error``, ``fuel``.
    Equality is structural, which is exactly the differential-testing
    comparison.  An out-of-fuel run carries no trace: partial traces are
    budget-dependent, not semantics.
    """

    kind: str
    value: Optional[str] = None
    inst: Optional[int] = None
    error: Optional[str] = None
    trace: Tuple[str, ...] = ()

    @staticmethod
    def of_value(rendered: str, trace) -> "Outcome":
        return Outcome("value", value=rendered, trace=tuple(trace))

    @staticmethod
    def unhandled(inst: int, trace) -> "Outcome":
        return Outcome("unhandled", inst=inst, trace=tuple(trace))

    @staticmethod
    def of_error(kind: str, trace) -> "Outcome":
        return Outcome("error", error=kind, trace=tuple(trace))

    @staticmethod
    def out_of_fuel() -> "Outcome":
        return Outcome("fuel")

    def trace_text(self) -> str:
        return "".join(self.trace)

    def result_line(self) -> str:
        if self.kind == "value":
            return self.value or ""
        if self.kind == "unhandled":
            return f"unhandled effect <inst:{self.inst}>"
        if self.kind == "error":
            return f"runtime error: {self.error}"
        return "out of fuel"

    def render_lines(self) -> str:
        return self.trace_text() + "\n" + self.result_line()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "inst": self.inst,
            "error": self.error,
            "trace": list(self.trace),
        }

    @staticmethod
    def from_json(d: dict) -> "Outcome":
        return Outcome(
            kind=d["kind"],
            value=d.get("value"),
            inst=d.get("inst"),
            error=d.get("error"),
            trace=tuple(d.get("trace") or ()),
        )

    def __str__(self) -> str:
        return json.dumps(self.to_json())


# ---------------------------------------------------------------------------
# Deep-stack execution

_worker: Optional[ThreadPoolExecutor] = None
_worker_ident: Optional[int] = None
_worker_lock = threading.Lock()


def _init_worker() -> None:
    global _worker_ident
    _worker_ident = threading.get_ident()
    sys.setrecursionlimit(_WORKER_RECURSION_LIMIT)


def deep_call(fn: Callable[[], object]) -> object:
    """Run ``fn`` on the big-stack worker thread (inline when already there)."""
    global _worker
    if threading.get_ident() == _worker_ident:
        return fn()
    if _worker is None:
        with _worker_lock:
            if _worker is None:
                old = threading.stack_size()
                threading.stack_size(_WORKER_STACK_BYTES)
                try:
                    pool = ThreadPoolExecutor(max_workers=1, initializer=_init_worker)
                    pool.submit(lambda: None).result()
                finally:
                    threading.stack_size(old)
                _worker = pool
    return _worker.submit(fn).result()
