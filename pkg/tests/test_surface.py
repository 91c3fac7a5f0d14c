"""Parser, scope checker and pretty-printer."""

import pytest
from gen_surface import gen_surface_program

from conftest import corpus_names, corpus_source
from effws import surface as sf
from effws.errors import ParseError, ScopeError
from effws.surface import parse, pretty


def strip(program: sf.SurfaceProgram) -> sf.SurfaceProgram:
    # dataclass equality already ignores positions (compare=False)
    return program


def test_val_literal():
    p = parse("val 1")
    assert p.body == sf.SInt(1)
    assert p.effect_decls == () and p.instances == ()


def test_parse_test1_shape():
    p = parse(corpus_source("test1"))
    assert len(p.effect_decls) == 1
    decl = p.effect_decls[0]
    assert decl.name == "nondet" and len(decl.ops) == 2
    assert [op.name for op in decl.ops] == ["fail", "choose"]
    assert len(p.instances) == 1
    handle = p.body.e2
    assert isinstance(handle, sf.SHandle)
    assert len(handle.op_clauses) == 2  # plus the val clause makes 3


def test_unbalanced_delimiter():
    with pytest.raises(ParseError):
        parse("val (")


def test_unknown_identifier():
    with pytest.raises(ScopeError):
        parse("val nosuch")


def test_unknown_operation():
    src = "effect e { op : int -> int }\ninstance r : e\nr#wrong 1"
    with pytest.raises(ScopeError):
        parse(src)


def test_duplicate_op_names_rejected():
    with pytest.raises(ScopeError):
        parse("effect e { op : int -> int, op : int -> int }\nval 1")


def test_type_params_must_be_declared():
    with pytest.raises(ScopeError):
        parse("effect e { op : b -> int }\nval 1")


def test_instance_arity_checked():
    with pytest.raises(ScopeError):
        parse("effect e[a] { op : a -> a }\ninstance r : e\nval 1")


def test_handler_requires_op_clause():
    with pytest.raises(ScopeError):
        parse("handle 1 with { val x -> val x }")


def test_nested_comments():
    p = parse("(* outer (* inner *) still comment *) val 3")
    assert p.body == sf.SInt(3)


def test_string_escapes_roundtrip():
    p = parse(r'val "a\"b\\c\nd"')
    assert p.body == sf.SStr('a"b\\c\nd')
    assert parse(pretty(p)) == p


def test_sequencing_is_let():
    p = parse('print "a"; val 2')
    assert isinstance(p.body, sf.SLet) and p.body.binder == "_"


def test_tuple_left_nesting():
    p = parse("val (1, 2, 3)")
    assert p.body == sf.SPair(sf.SPair(sf.SInt(1), sf.SInt(2)), sf.SInt(3))


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_pretty_parse_fixpoint(name):
    """pretty . parse is a fixpoint after one iteration."""
    p1 = parse(corpus_source(name))
    text1 = pretty(p1)
    p2 = parse(text1)
    assert p2 == p1
    assert pretty(p2) == text1


def test_pretty_preserves_clause_order():
    p = parse(corpus_source("test2"))
    p2 = parse(pretty(p))
    inner = p.body.e2.e2.body  # let i1 = .. in let i2 = .. in handle ...
    inner2 = p2.body.e2.e2.body
    assert [c.op for c in inner.op_clauses] == [c.op for c in inner2.op_clauses]


@pytest.mark.parametrize("seed", range(300))
def test_roundtrip_generated(seed):
    """parse(pretty(p)) == p for generated surface programs."""
    p = gen_surface_program(seed)
    text = pretty(p)
    assert parse(text) == p, text
