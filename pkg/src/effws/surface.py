"""The human-writable surface language.

Multi-operation effect declarations, instances, ``handle … with``
clauses, first-class ``handler`` values, strings, pairs, sums, printing,
and the dynamic-effect sugar ``withnew`` / ``newref`` / ``get`` /
``put``.  ``parse`` also scope-checks; ``pretty`` inverts it up to
positions.  Comments are ``(* … *)`` and nest.

Grammar sketch::

    program  := decl* expr
    decl     := "effect" ID ["[" ID,+ "]"] "{" (ID ":" ty "->" ty),+ "}"
              | "instance" ID ":" ID ["[" ty,+ "]"]
    ty       := typrod ("+" typrod)* ["->" ty]     ; "*" binds tighter than "+"
    expr     := "let" ID "=" expr "in" expr | "fn" ID ":" ty "." expr
              | "with" expr "handle" expr | "handle" expr "with" "{" clauses "}"
              | "handler" "{" clauses "}" | "withnew" "{" expr "}"
              | "case" expr "{" "inl" ID "->" expr "|" "inr" ID "->" expr "}"
              | "val" expr | app (";" expr)?
    app      := unary atom*
    unary    := "print" atom | "fst" atom | "snd" atom
              | ("inl"|"inr") atom ":" tyatom | "absurd" atom ":" tyatom
              | "new" ID ["[" ty,+ "]"] | "newref" atom
              | "get" ID "(" ")" | "put" ID atom | ID "#" ID atom | atom
    atom     := INT | STRING | ID | "(" ")" | "(" expr ("," expr)* ")"
    clause   := "val" ID "->" expr | "val" "(" ID ":" ty ")" "->" expr
              | ID "#" ID "(" ID "," ID ")" "->" expr
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from .errors import ParseError, Pos, ScopeError

# ---------------------------------------------------------------------------
# Surface types


@dataclass(frozen=True)
class STUnit:
    pass


@dataclass(frozen=True)
class STInt:
    pass


@dataclass(frozen=True)
class STStr:
    pass


@dataclass(frozen=True)
class STEmpty:
    pass


@dataclass(frozen=True)
class STDyn:
    pass


@dataclass(frozen=True)
class STVar:
    name: str


@dataclass(frozen=True)
class STArrow:
    a: "SType"
    b: "SType"


@dataclass(frozen=True)
class STPair:
    a: "SType"
    b: "SType"


@dataclass(frozen=True)
class STSum:
    a: "SType"
    b: "SType"


@dataclass(frozen=True)
class STInst:
    """A declared effect used as an instance type, e.g. ``nondet[string]``."""

    effect: str
    args: Tuple["SType", ...] = ()


SType = Union[STUnit, STInt, STStr, STEmpty, STDyn, STVar, STArrow, STPair, STSum, STInst]


# ---------------------------------------------------------------------------
# Declarations and expressions


@dataclass(frozen=True)
class OpDecl:
    name: str
    arg: SType
    res: SType


@dataclass(frozen=True)
class EffectDecl:
    name: str
    params: Tuple[str, ...]
    ops: Tuple[OpDecl, ...]
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class InstanceDecl:
    name: str
    effect: str
    args: Tuple[SType, ...]
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SVar:
    name: str
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SUnit:
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SInt:
    n: int
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SStr:
    s: str
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SLam:
    param: str
    ann: SType
    body: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SApp:
    f: "SExpr"
    a: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SLet:
    binder: str
    e1: "SExpr"
    e2: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SPair:
    a: "SExpr"
    b: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SFst:
    e: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SSnd:
    e: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SInl:
    e: "SExpr"
    ann: SType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SInr:
    e: "SExpr"
    ann: SType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SCase:
    scrut: "SExpr"
    lbinder: str
    lbody: "SExpr"
    rbinder: str
    rbody: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SAbsurd:
    e: "SExpr"
    ann: SType
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SPrint:
    e: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SNew:
    effect: str
    args: Tuple[SType, ...]
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SOp:
    """Operation invocation ``inst#op arg``."""

    inst: str
    op: str
    arg: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class ValClause:
    binder: str
    ann: Optional[SType]
    body: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class OpClause:
    inst: str
    op: str
    arg_binder: str
    k_binder: str
    body: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SHandle:
    """``handle e with { clauses }``."""

    body: "SExpr"
    val_clause: ValClause
    op_clauses: Tuple[OpClause, ...]
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SHandler:
    """First-class ``handler { clauses }``; the val binder must be annotated."""

    val_clause: ValClause
    op_clauses: Tuple[OpClause, ...]
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SWith:
    """``with h handle e``."""

    handler: "SExpr"
    body: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SWithNew:
    body: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SNewref:
    init: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SGet:
    ref: str
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SPut:
    ref: str
    value: "SExpr"
    pos: Pos = field(default=None, compare=False)


@dataclass(frozen=True)
class SCast:
    """Machine-generated coercion; produced by the dynamic-effect
    expansion, not expressible in source."""

    e: "SExpr"
    ann: SType
    pos: Pos = field(default=None, compare=False)


SExpr = Union[
    SVar, SUnit, SInt, SStr, SLam, SApp, SLet, SPair, SFst, SSnd, SInl, SInr,
    SCase, SAbsurd, SPrint, SNew, SOp, SHandle, SHandler, SWith, SWithNew,
    SNewref, SGet, SPut, SCast,
]


@dataclass(frozen=True)
class SurfaceProgram:
    effect_decls: Tuple[EffectDecl, ...]
    instances: Tuple[InstanceDecl, ...]
    body: SExpr


PRIM_NAMES = ("add", "sub", "mul", "eq", "lt", "leq", "absint")

KEYWORDS = {
    "effect", "instance", "let", "in", "fn", "with", "handle", "handler",
    "withnew", "case", "val", "inl", "inr", "fst", "snd", "absurd", "print",
    "new", "newref", "get", "put", "unit", "int", "string", "empty", "dyn",
    "cast",
}


# ---------------------------------------------------------------------------
# Lexer


@dataclass(frozen=True)
class Token:
    kind: str  # "ident", "int", "string", "kw", "punct", "eof"
    text: str
    pos: Pos


_PUNCT1 = "(){}[],:;|#.*+="


def tokenize(text: str) -> List[Token]:
    toks: List[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("(*", i):
            depth = 1
            start = (line, col)
            advance(2)
            while i < n and depth:
                if text.startswith("(*", i):
                    depth += 1
                    advance(2)
                elif text.startswith("*)", i):
                    depth -= 1
                    advance(2)
                else:
                    advance(1)
            if depth:
                raise ParseError("unterminated comment", start)
            continue
        pos = (line, col)
        if c == '"':
            advance(1)
            buf = []
            while True:
                if i >= n:
                    raise ParseError("unterminated string literal", pos)
                c = text[i]
                if c == '"':
                    advance(1)
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise ParseError("unterminated escape", (line, col))
                    esc = text[i + 1]
                    mapped = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc)
                    if mapped is None:
                        raise ParseError(f"unknown escape \\{esc}", (line, col))
                    buf.append(mapped)
                    advance(2)
                else:
                    buf.append(c)
                    advance(1)
            toks.append(Token("string", "".join(buf), pos))
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], pos))
            advance(j - i)
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            word = text[i:j]
            toks.append(Token("kw" if word in KEYWORDS else "ident", word, pos))
            advance(j - i)
            continue
        if text.startswith("->", i):
            toks.append(Token("punct", "->", pos))
            advance(2)
            continue
        if c in _PUNCT1:
            toks.append(Token("punct", c, pos))
            advance(1)
            continue
        raise ParseError(f"unexpected character {c!r}", pos)
    toks.append(Token("eof", "", (line, col)))
    return toks


# ---------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, toks: List[Token]):
        self.toks = toks
        self.i = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.toks[min(self.i + ahead, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, msg: str) -> None:
        t = self.peek()
        raise ParseError(f"{msg}, got {t.text!r}" if t.text else f"{msg}, got end of input", t.pos)

    def at(self, kind: str, text: Optional[str] = None) -> bool:
        t = self.peek()
        return t.kind == kind and (text is None or t.text == text)

    def eat(self, kind: str, text: Optional[str] = None) -> Token:
        if not self.at(kind, text):
            self.fail(f"expected {text or kind}")
        return self.next()

    def ident(self, what: str = "an identifier") -> Token:
        if not self.at("ident"):
            self.fail(f"expected {what}")
        return self.next()

    # -- types

    def type_(self) -> SType:
        t = self.ty_sum()
        if self.at("punct", "->"):
            self.next()
            return STArrow(t, self.type_())
        return t

    def ty_sum(self) -> SType:
        t = self.ty_prod()
        while self.at("punct", "+"):
            self.next()
            t = STSum(t, self.ty_prod())
        return t

    def ty_prod(self) -> SType:
        t = self.ty_atom()
        while self.at("punct", "*"):
            self.next()
            t = STPair(t, self.ty_atom())
        return t

    def ty_atom(self) -> SType:
        t = self.peek()
        if t.kind == "kw" and t.text in ("unit", "int", "string", "empty", "dyn"):
            self.next()
            return {"unit": STUnit(), "int": STInt(), "string": STStr(), "empty": STEmpty(), "dyn": STDyn()}[t.text]
        if t.kind == "ident":
            self.next()
            if self.at("punct", "["):
                return STInst(t.text, tuple(self.ty_args()))
            return STVar(t.text)
        if self.at("punct", "("):
            self.next()
            inner = self.type_()
            self.eat("punct", ")")
            return inner
        self.fail("expected a type")
        raise AssertionError

    def ty_args(self) -> List[SType]:
        self.eat("punct", "[")
        args = [self.type_()]
        while self.at("punct", ","):
            self.next()
            args.append(self.type_())
        self.eat("punct", "]")
        return args

    # -- declarations

    def program(self) -> SurfaceProgram:
        effects: List[EffectDecl] = []
        instances: List[InstanceDecl] = []
        while True:
            if self.at("kw", "effect"):
                effects.append(self.effect_decl())
            elif self.at("kw", "instance"):
                instances.append(self.instance_decl())
            else:
                break
        body = self.expr()
        self.eat("eof")
        return SurfaceProgram(tuple(effects), tuple(instances), body)

    def effect_decl(self) -> EffectDecl:
        pos = self.eat("kw", "effect").pos
        name = self.ident("an effect name").text
        params: List[str] = []
        if self.at("punct", "["):
            self.next()
            params.append(self.ident("a type parameter").text)
            while self.at("punct", ","):
                self.next()
                params.append(self.ident("a type parameter").text)
            self.eat("punct", "]")
        self.eat("punct", "{")
        ops = [self.op_decl()]
        while self.at("punct", ","):
            self.next()
            if self.at("punct", "}"):
                break
            ops.append(self.op_decl())
        self.eat("punct", "}")
        return EffectDecl(name, tuple(params), tuple(ops), pos)

    def op_decl(self) -> OpDecl:
        # the argument type stops before the "->" separating it from the
        # result; an arrow-typed argument needs parentheses
        name = self.ident("an operation name").text
        self.eat("punct", ":")
        arg = self.ty_sum()
        self.eat("punct", "->")
        res = self.type_()
        return OpDecl(name, arg, res)

    def instance_decl(self) -> InstanceDecl:
        pos = self.eat("kw", "instance").pos
        name = self.ident("an instance name").text
        self.eat("punct", ":")
        effect = self.ident("an effect name").text
        args: Tuple[SType, ...] = ()
        if self.at("punct", "["):
            args = tuple(self.ty_args())
        return InstanceDecl(name, effect, args, pos)

    # -- expressions

    def expr(self) -> SExpr:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "let":
                pos = self.next().pos
                binder = self.ident("a binder").text
                self.eat("punct", "=")
                e1 = self.expr()
                self.eat("kw", "in")
                e2 = self.expr()
                return SLet(binder, e1, e2, pos)
            if t.text == "fn":
                pos = self.next().pos
                param = self.ident("a parameter").text
                self.eat("punct", ":")
                ann = self.type_()
                self.eat("punct", ".")
                body = self.expr()
                return SLam(param, ann, body, pos)
            if t.text == "with":
                pos = self.next().pos
                h = self.expr_until_kw("handle")
                self.eat("kw", "handle")
                body = self.expr()
                return SWith(h, body, pos)
            if t.text == "handle":
                pos = self.next().pos
                body = self.expr_until_kw("with")
                self.eat("kw", "with")
                val_c, op_cs = self.clauses()
                return SHandle(body, val_c, op_cs, pos)
            if t.text == "handler":
                pos = self.next().pos
                val_c, op_cs = self.clauses()
                return SHandler(val_c, op_cs, pos)
            if t.text == "withnew":
                pos = self.next().pos
                self.eat("punct", "{")
                body = self.expr()
                self.eat("punct", "}")
                return SWithNew(body, pos)
            if t.text == "case":
                pos = self.next().pos
                scrut = self.expr_until_punct("{")
                self.eat("punct", "{")
                self.eat("kw", "inl")
                lb = self.ident("a binder").text
                self.eat("punct", "->")
                lbody = self.expr()
                self.eat("punct", "|")
                self.eat("kw", "inr")
                rb = self.ident("a binder").text
                self.eat("punct", "->")
                rbody = self.expr()
                self.eat("punct", "}")
                return SCase(scrut, lb, lbody, rb, rbody, pos)
            if t.text == "val":
                self.next()
                return self.expr()
            if t.text == "cast":
                self.fail("'cast' is reserved for machine-generated programs")
        return self.seq()

    def expr_until_kw(self, stop: str) -> SExpr:
        # the sub-expression of `with … handle` / `handle … with`; the
        # recursive descent stops at the keyword naturally
        return self.seq() if not self.at("kw", stop) else self.fail(f"expected an expression before {stop}")

    def expr_until_punct(self, stop: str) -> SExpr:
        return self.seq() if not self.at("punct", stop) else self.fail(f"expected an expression before {stop}")

    def seq(self) -> SExpr:
        e = self.app()
        if self.at("punct", ";"):
            pos = self.next().pos
            rest = self.expr()
            return SLet("_", e, rest, pos)
        return e

    def app(self) -> SExpr:
        e = self.unary()
        while self.at_atom_start():
            arg = self.atom()
            e = SApp(e, arg, getattr(e, "pos", None))
        return e

    def at_atom_start(self) -> bool:
        t = self.peek()
        return t.kind in ("int", "string") or t.kind == "ident" or (t.kind == "punct" and t.text == "(")

    def unary(self) -> SExpr:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "print":
                pos = self.next().pos
                return SPrint(self.atom(), pos)
            if t.text == "fst":
                pos = self.next().pos
                return SFst(self.atom(), pos)
            if t.text == "snd":
                pos = self.next().pos
                return SSnd(self.atom(), pos)
            if t.text in ("inl", "inr"):
                pos = self.next().pos
                e = self.atom()
                self.eat("punct", ":")
                ann = self.ty_atom()
                return (SInl if t.text == "inl" else SInr)(e, ann, pos)
            if t.text == "absurd":
                pos = self.next().pos
                e = self.atom()
                self.eat("punct", ":")
                ann = self.ty_atom()
                return SAbsurd(e, ann, pos)
            if t.text == "new":
                pos = self.next().pos
                name = self.ident("an effect name").text
                args: Tuple[SType, ...] = ()
                if self.at("punct", "["):
                    args = tuple(self.ty_args())
                return SNew(name, args, pos)
            if t.text == "newref":
                pos = self.next().pos
                return SNewref(self.atom(), pos)
            if t.text == "get":
                pos = self.next().pos
                ref = self.ident("a reference").text
                self.eat("punct", "(")
                self.eat("punct", ")")
                return SGet(ref, pos)
            if t.text == "put":
                pos = self.next().pos
                ref = self.ident("a reference").text
                return SPut(ref, self.atom(), pos)
        if t.kind == "ident" and self.peek(1).kind == "punct" and self.peek(1).text == "#":
            inst = self.next().text
            self.next()  # '#'
            op = self.ident("an operation name").text
            arg = self.atom()
            return SOp(inst, op, arg, t.pos)
        return self.atom()

    def atom(self) -> SExpr:
        t = self.peek()
        if t.kind == "int":
            self.next()
            return SInt(int(t.text), t.pos)
        if t.kind == "string":
            self.next()
            return SStr(t.text, t.pos)
        if t.kind == "ident":
            self.next()
            return SVar(t.text, t.pos)
        if self.at("punct", "("):
            pos = self.next().pos
            if self.at("punct", ")"):
                self.next()
                return SUnit(pos)
            parts = [self.expr()]
            while self.at("punct", ","):
                self.next()
                parts.append(self.expr())
            self.eat("punct", ")")
            e = parts[0]
            for p in parts[1:]:
                e = SPair(e, p, pos)
            return e
        self.fail("expected an expression")
        raise AssertionError

    def clauses(self) -> Tuple[ValClause, Tuple[OpClause, ...]]:
        self.eat("punct", "{")
        val_c: Optional[ValClause] = None
        op_cs: List[OpClause] = []
        while True:
            t = self.peek()
            if self.at("kw", "val"):
                pos = self.next().pos
                if self.at("punct", "("):
                    self.next()
                    binder = self.ident("a binder").text
                    self.eat("punct", ":")
                    ann: Optional[SType] = self.type_()
                    self.eat("punct", ")")
                else:
                    binder = self.ident("a binder").text
                    ann = None
                self.eat("punct", "->")
                body = self.expr()
                if val_c is not None:
                    raise ParseError("duplicate val clause in handler", pos)
                val_c = ValClause(binder, ann, body, pos)
            elif t.kind == "ident":
                inst = self.next().text
                self.eat("punct", "#")
                op = self.ident("an operation name").text
                self.eat("punct", "(")
                arg_b = self.ident("a binder").text
                self.eat("punct", ",")
                k_b = self.ident("a binder").text
                self.eat("punct", ")")
                self.eat("punct", "->")
                body = self.expr()
                op_cs.append(OpClause(inst, op, arg_b, k_b, body, t.pos))
            else:
                self.fail("expected a handler clause")
            if self.at("punct", "|"):
                self.next()
                if self.at("punct", "}"):
                    break
                continue
            break
        self.eat("punct", "}")
        if val_c is None:
            raise ParseError("handler needs a val clause", self.peek().pos)
        return val_c, tuple(op_cs)


# ---------------------------------------------------------------------------
# Scope checking


class _SurfaceScope:
    def __init__(self, program: SurfaceProgram):
        self.effects: Dict[str, EffectDecl] = {}
        for d in program.effect_decls:
            if d.name in self.effects:
                raise ScopeError(f"duplicate effect declaration {d.name}", d.pos)
            self.effects[d.name] = d
        for d in program.effect_decls:
            seen = set()
            for op in d.ops:
                if op.name in seen:
                    raise ScopeError(f"duplicate operation {op.name} in effect {d.name}", d.pos)
                seen.add(op.name)
                self.check_type(op.arg, set(d.params), d.pos)
                self.check_type(op.res, set(d.params), d.pos)
        self.program = program

    def check_type(self, t: SType, tyvars: set, pos: Pos) -> None:
        if isinstance(t, STVar):
            if t.name not in tyvars:
                if t.name in self.effects:
                    return  # bare effect reference, e.g. `reader`
                raise ScopeError(f"unknown type {t.name}", pos)
        elif isinstance(t, STInst):
            decl = self.effects.get(t.effect)
            if decl is None:
                raise ScopeError(f"unknown effect {t.effect}", pos)
            if len(t.args) != len(decl.params):
                raise ScopeError(
                    f"effect {t.effect} expects {len(decl.params)} type arguments, got {len(t.args)}", pos
                )
            for a in t.args:
                self.check_type(a, tyvars, pos)
        elif isinstance(t, (STArrow, STPair, STSum)):
            self.check_type(t.a, tyvars, pos)
            self.check_type(t.b, tyvars, pos)

    def run(self) -> None:
        env: Dict[str, Optional[Tuple[str, Tuple[SType, ...]]]] = {p: None for p in PRIM_NAMES}
        for inst in self.program.instances:
            self.check_type(STInst(inst.effect, inst.args), set(), inst.pos)
            env[inst.name] = (inst.effect, inst.args)
        self.expr(self.program.body, env)

    def resolve_instance(self, env, name: str, pos: Pos) -> Tuple[str, Tuple[SType, ...]]:
        if name not in env:
            raise ScopeError(f"unknown identifier {name}", pos)
        r = env[name]
        if r is None:
            raise ScopeError(f"{name} does not name an effect instance", pos)
        return r

    def instance_of(self, e: SExpr, env) -> Optional[Tuple[str, Tuple[SType, ...]]]:
        """Statically visible instance identity of an expression, if any."""
        if isinstance(e, SVar):
            return env.get(e.name)
        if isinstance(e, SNew):
            return (e.effect, e.args)
        if isinstance(e, SCast) and isinstance(e.ann, STInst):
            return (e.ann.effect, e.ann.args)
        if isinstance(e, SLet):
            inner = dict(env)
            inner[e.binder] = self.instance_of(e.e1, env)
            return self.instance_of(e.e2, inner)
        return None

    def bind(self, env, name: str, value=None):
        env2 = dict(env)
        env2[name] = value
        return env2

    def expr(self, e: SExpr, env) -> None:
        if isinstance(e, SVar):
            if e.name not in env:
                raise ScopeError(f"unknown identifier {e.name}", e.pos)
        elif isinstance(e, (SUnit, SInt, SStr)):
            pass
        elif isinstance(e, SLam):
            self.check_type(e.ann, set(), e.pos)
            inst = (e.ann.effect, e.ann.args) if isinstance(e.ann, STInst) else None
            if isinstance(e.ann, STVar) and e.ann.name in self.effects:
                inst = (e.ann.name, ())
            self.expr(e.body, self.bind(env, e.param, inst))
        elif isinstance(e, SApp):
            self.expr(e.f, env)
            self.expr(e.a, env)
        elif isinstance(e, SLet):
            self.expr(e.e1, env)
            self.expr(e.e2, self.bind(env, e.binder, self.instance_of(e.e1, env)))
        elif isinstance(e, SPair):
            self.expr(e.a, env)
            self.expr(e.b, env)
        elif isinstance(e, (SFst, SSnd, SPrint)):
            self.expr(e.e, env)
        elif isinstance(e, SNewref):
            self.expr(e.init, env)
        elif isinstance(e, (SInl, SInr, SAbsurd, SCast)):
            self.check_type(e.ann, set(), e.pos)
            self.expr(e.e, env)
        elif isinstance(e, SCase):
            self.expr(e.scrut, env)
            self.expr(e.lbody, self.bind(env, e.lbinder))
            self.expr(e.rbody, self.bind(env, e.rbinder))
        elif isinstance(e, SNew):
            self.check_type(STInst(e.effect, e.args), set(), e.pos)
        elif isinstance(e, SOp):
            effect, _args = self.resolve_instance(env, e.inst, e.pos)
            decl = self.effects[effect]
            if not any(op.name == e.op for op in decl.ops):
                raise ScopeError(f"effect {effect} has no operation {e.op}", e.pos)
            self.expr(e.arg, env)
        elif isinstance(e, (SHandle, SHandler)):
            if isinstance(e, SHandle):
                self.expr(e.body, env)
            if not e.op_clauses:
                raise ScopeError("handler needs at least one operation clause", e.pos)
            insts = set()
            for c in e.op_clauses:
                effect, _args = self.resolve_instance(env, c.inst, c.pos)
                decl = self.effects[effect]
                if not any(op.name == c.op for op in decl.ops):
                    raise ScopeError(f"effect {effect} has no operation {c.op}", c.pos)
                insts.add(c.inst)
                self.expr(c.body, self.bind(self.bind(env, c.arg_binder), c.k_binder))
            if len(insts) > 1:
                raise ScopeError("handler clauses must target a single instance", e.pos)
            vc = e.val_clause
            if vc.ann is not None:
                self.check_type(vc.ann, set(), vc.pos)
            self.expr(vc.body, self.bind(env, vc.binder))
        elif isinstance(e, SWith):
            self.expr(e.handler, env)
            self.expr(e.body, env)
        elif isinstance(e, SWithNew):
            self.expr(e.body, env)
        elif isinstance(e, SGet):
            if e.ref not in env:
                raise ScopeError(f"unknown identifier {e.ref}", e.pos)
        elif isinstance(e, SPut):
            if e.ref not in env:
                raise ScopeError(f"unknown identifier {e.ref}", e.pos)
            self.expr(e.value, env)
        else:
            raise AssertionError(f"not a surface expression: {e!r}")


def scope_check(program: SurfaceProgram) -> None:
    _SurfaceScope(program).run()


def parse(text: str) -> SurfaceProgram:
    """Parse and scope-check a surface program."""
    p = _Parser(tokenize(text)).program()
    scope_check(p)
    return p


# ---------------------------------------------------------------------------
# Pretty-printer: parse(pretty(p)) == p up to positions


def type_str(t: SType) -> str:
    return _ty(t, 0)


def _ty(t: SType, level: int) -> str:
    # levels: 0 = arrow position, 1 = sum operand, 2 = product operand / atom
    if isinstance(t, STUnit):
        return "unit"
    if isinstance(t, STInt):
        return "int"
    if isinstance(t, STStr):
        return "string"
    if isinstance(t, STEmpty):
        return "empty"
    if isinstance(t, STDyn):
        return "dyn"
    if isinstance(t, STVar):
        return t.name
    if isinstance(t, STInst):
        if not t.args:
            return t.effect
        return f"{t.effect}[{', '.join(_ty(a, 0) for a in t.args)}]"
    if isinstance(t, STArrow):
        s = f"{_ty(t.a, 1)} -> {_ty(t.b, 0)}"
        return f"({s})" if level > 0 else s
    if isinstance(t, STSum):
        s = f"{_ty(t.a, 1)} + {_ty(t.b, 2)}"
        return f"({s})" if level > 1 else s
    if isinstance(t, STPair):
        s = f"{_ty(t.a, 2)} * {_ty(t.b, 2)}"
        return f"({s})" if level > 1 else s
    raise AssertionError(t)


def _ty_atom(t: SType) -> str:
    s = _ty(t, 0)
    if isinstance(t, (STArrow, STSum, STPair)):
        return f"({s})"
    return s


_ATOMIC = (SVar, SUnit, SInt, SStr, SPair)


def _atom_str(e: SExpr) -> str:
    s = expr_str(e)
    if isinstance(e, _ATOMIC):
        return s
    return f"({s})"


def expr_str(e: SExpr) -> str:
    if isinstance(e, SVar):
        return e.name
    if isinstance(e, SUnit):
        return "()"
    if isinstance(e, SInt):
        return str(e.n)
    if isinstance(e, SStr):
        out = e.s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\t", "\\t")
        return f'"{out}"'
    if isinstance(e, SLam):
        return f"fn {e.param}: {type_str(e.ann)}. {expr_str(e.body)}"
    if isinstance(e, SApp):
        # app := unary atom*, so these forms may head a chain bare
        headable = (SApp, SOp, SFst, SSnd, SPrint, SNew, SNewref, SGet, SPut)
        head_s = expr_str(e.f) if isinstance(e.f, headable) else _atom_str(e.f)
        return f"{head_s} {_atom_str(e.a)}"
    if isinstance(e, SLet):
        return f"let {e.binder} = {expr_str(e.e1)} in {expr_str(e.e2)}"
    if isinstance(e, SPair):
        return f"({expr_str(e.a)}, {expr_str(e.b)})"
    if isinstance(e, SFst):
        return f"fst {_atom_str(e.e)}"
    if isinstance(e, SSnd):
        return f"snd {_atom_str(e.e)}"
    if isinstance(e, SInl):
        return f"inl {_atom_str(e.e)} : {_ty_atom(e.ann)}"
    if isinstance(e, SInr):
        return f"inr {_atom_str(e.e)} : {_ty_atom(e.ann)}"
    if isinstance(e, SCase):
        return (
            f"case {_atom_str(e.scrut)} {{ inl {e.lbinder} -> {expr_str(e.lbody)}"
            f" | inr {e.rbinder} -> {expr_str(e.rbody)} }}"
        )
    if isinstance(e, SAbsurd):
        return f"absurd {_atom_str(e.e)} : {_ty_atom(e.ann)}"
    if isinstance(e, SPrint):
        return f"print {_atom_str(e.e)}"
    if isinstance(e, SNew):
        if not e.args:
            return f"new {e.effect}"
        return f"new {e.effect}[{', '.join(type_str(a) for a in e.args)}]"
    if isinstance(e, SOp):
        return f"{e.inst}#{e.op} {_atom_str(e.arg)}"
    if isinstance(e, SHandle):
        return f"handle {_atom_str(e.body)} with {_clauses_str(e.val_clause, e.op_clauses)}"
    if isinstance(e, SHandler):
        return f"handler {_clauses_str(e.val_clause, e.op_clauses)}"
    if isinstance(e, SWith):
        return f"with {_atom_str(e.handler)} handle {expr_str(e.body)}"
    if isinstance(e, SWithNew):
        return f"withnew {{ {expr_str(e.body)} }}"
    if isinstance(e, SNewref):
        return f"newref {_atom_str(e.init)}"
    if isinstance(e, SGet):
        return f"get {e.ref} ()"
    if isinstance(e, SPut):
        return f"put {e.ref} {_atom_str(e.value)}"
    if isinstance(e, SCast):
        return f"cast {_atom_str(e.e)} : {_ty_atom(e.ann)}"
    raise AssertionError(f"not a surface expression: {e!r}")


def _clauses_str(val_c: ValClause, op_cs: Tuple[OpClause, ...]) -> str:
    if val_c.ann is None:
        parts = [f"val {val_c.binder} -> {expr_str(val_c.body)}"]
    else:
        parts = [f"val ({val_c.binder}: {type_str(val_c.ann)}) -> {expr_str(val_c.body)}"]
    for c in op_cs:
        parts.append(f"{c.inst}#{c.op}({c.arg_binder}, {c.k_binder}) -> {expr_str(c.body)}")
    return "{ " + " | ".join(parts) + " }"


def pretty(program: SurfaceProgram) -> str:
    """Render a program in concrete syntax."""
    lines = []
    for d in program.effect_decls:
        params = f"[{', '.join(d.params)}]" if d.params else ""
        ops = ", ".join(f"{op.name} : {_ty(op.arg, 1)} -> {type_str(op.res)}" for op in d.ops)
        lines.append(f"effect {d.name}{params} {{ {ops} }}")
    for inst in program.instances:
        args = f"[{', '.join(type_str(a) for a in inst.args)}]" if inst.args else ""
        lines.append(f"instance {inst.name} : {inst.effect}{args}")
    lines.append(expr_str(program.body))
    return "\n".join(lines) + "\n"
