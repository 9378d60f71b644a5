"""
Test the front end - lexer, parser, resolver, type checker and statement registry
"""

import pytest

from frontend.lexer import tokenize
from frontend.parser import parse
from frontend.typecheck import check_types
from frontend.unit import analyze
from model.errors import (AmbiguousOverload, DuplicateDefinition, ParseError, TypeCheckError, UnknownCharacter,
                          UnknownName, UnterminatedComment, UnterminatedString)
from model.span import SourceSpan

COUNTER = """contract Counter {
    uint count;
    function inc(uint by) returns (uint) {
        count = count + by;
        return count;
    }
}
"""


def _statements(unit, kind):
    return [sid for sid in unit.registry.statement_ids if unit.registry.kinds[sid] == kind]


def test_tokens_carry_byte_spans():
    """Comments are skipped but still move offsets"""
    tokens = tokenize("// note\nuint x = 0x1F; /* c */ x >= 2;")
    texts = [t.text for t in tokens]
    assert texts == ["uint", "x", "=", "0x1F", ";", "x", ">=", "2", ";"]
    assert tokens[0].kind == "keyword"
    assert tokens[0].span == SourceSpan(8, 4)
    assert tokens[6].span.length == 2


def test_spans_are_utf8_byte_offsets():
    tokens = tokenize('/* é */ x', 1)
    assert tokens[0].span == SourceSpan(9, 1, 1)


@pytest.mark.parametrize("text, error", [
    ("uint x = #;", UnknownCharacter),
    ('"open', UnterminatedString),
    ("/* never closed", UnterminatedComment),
])
def test_lexer_errors(text, error):
    with pytest.raises(error):
        tokenize(text)


def test_statement_span_covers_semicolon(fixture_source):
    text = fixture_source("zkvoting")
    root = parse(tokenize(text))
    function = root["contracts"][0]["members"][1]
    require = function["body"]["stmts"][0]
    assert require.kind == "require"
    assert require.span.text_of(text) == 'require(verifyZKProof(zkProof), "Invalid proof");'
    assert require["message"] == "Invalid proof"


def test_node_ids_are_dense_preorder():
    root = parse(tokenize(COUNTER))
    ids = [n.node_id for n in root.walk()]
    assert ids == list(range(len(ids)))


def test_precedence():
    root = parse(tokenize("contract A { function f() returns (bool) { return 1 + 2 * 3 == 7 && true; } }"))
    ret = root["contracts"][0]["members"][0]["body"]["stmts"][0]
    top = ret["value"]
    assert top["op"] == "&&"
    assert top["left"]["op"] == "=="
    assert top["left"]["left"]["op"] == "+"
    assert top["left"]["left"]["right"]["op"] == "*"


@pytest.mark.parametrize("text", [
    "contract A { function f() { x = ; } }",
    "contract A { uint x }",
    "contract A { function f() { 1 + 2 = 3; } }",
    "",
])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        parse(tokenize(text))


def test_compile_error_location():
    text = "contract A {\n  function f() { y = 1; }\n}\n"
    with pytest.raises(UnknownName) as info:
        analyze([("a.msol", text)])
    assert info.value.describe([("a.msol", text)]) == "a.msol:2:18: unknown name 'y'"


def test_overloads_resolve_by_arity(fixture_source):
    unit = analyze([("overload_add.msol", fixture_source("overload_add"))])
    keys = sorted(fn.key for fn in unit.table.functions())
    assert keys == ["Adder.add/2", "Adder.add/3", "Adder.store/2"]
    inner_calls = [n for n in unit.roots[0].walk() if n.kind == "call"]
    assert {c.resolved.key for c in inner_calls} == {"Adder.add/2", "Adder.add/3"}


def test_call_binds_internal_function(fixture_source):
    unit = analyze([("zkvoting.msol", fixture_source("zkvoting"))])
    call = next(n for n in unit.roots[0].walk() if n.kind == "call")
    assert call.resolved.key == "ZKVoting.verifyZKProof/1"
    assert call.resolved.node["visibility"] == "internal"


@pytest.mark.parametrize("text, error", [
    ("contract A { function f(uint a) {} function f(uint b) {} }", DuplicateDefinition),
    ("contract A { uint x; uint x; }", DuplicateDefinition),
    ("contract A { function f() { g(); } }", UnknownName),
    ("contract A { function f() { uint a; uint a; } }", DuplicateDefinition),
    ("contract A { modifier m { } function f() m {} }", ParseError),
    ("contract A { modifier m { _; return; } }", ParseError),
    ("contract A { function f() { _; } }", ParseError),
])
def test_resolve_errors(text, error):
    with pytest.raises(error):
        analyze([("a.msol", text)])


def test_ambiguous_overload():
    text = ("contract A { function f(uint a) returns (uint) { return a; } "
            "function f(bool b) returns (uint) { return 1; } "
            "function g() returns (uint) { return f(1); } }")
    with pytest.raises(AmbiguousOverload):
        analyze([("a.msol", text)])


@pytest.mark.parametrize("body", [
    "uint x = true;",
    "require(1, \"no\");",
    "bool b = 1 + 2 > 1 && 3;",
    "uint x = msg.sender;",
])
def test_type_errors(body):
    unit = analyze([("a.msol", "contract A { function f() { " + body + " } }")])
    with pytest.raises(TypeCheckError):
        check_types(unit.table)


def test_nested_mapping_rejected():
    unit = analyze([("a.msol", "contract A { mapping(uint => mapping(uint => uint)) m; }")])
    with pytest.raises(TypeCheckError):
        check_types(unit.table)


def test_constant_initialisers():
    unit = analyze([("a.msol", "contract A { uint a = 2 * 3 + 1; bool b = !false; uint c; }")])
    assert check_types(unit.table) == {0: 7, 1: 1}


def test_registry_spans_and_kinds():
    unit = analyze([("c.msol", COUNTER)])
    registry = unit.registry
    kinds = sorted(registry.kinds.values())
    assert kinds == ["assign", "implicit_return", "return"]
    assign = _statements(unit, "assign")[0]
    assert registry.spans[assign].text_of(COUNTER) == "count = count + by;"
    inner = SourceSpan(registry.spans[assign].start + 8, 10)
    assert registry.statement_of_span(inner) == assign
    assert registry.statement_of_span(SourceSpan(0, 3)) is None


def test_registry_control_flow(fixture_source):
    unit = analyze([("control_search.msol", fixture_source("control_search"))])
    registry = unit.registry
    loop = _statements(unit, "while")[0]
    returns = _statements(unit, "return")
    assert registry.reachable(loop, loop)
    # the loop body can run again after its own increment
    increment = max(sid for sid in _statements(unit, "assign") if registry.owner[sid].endswith("indexOf/1"))
    assert registry.reachable(increment, loop)
    assert registry.reachable(loop, increment)
    # the two returns of indexOf are not ordered with respect to each other
    first, second = [r for r in returns if registry.owner[r].endswith("indexOf/1")]
    assert not registry.reachable(first, second)
    assert not registry.reachable(second, first)


def test_registry_call_edges(fixture_source):
    unit = analyze([("zkvoting.msol", fixture_source("zkvoting"))])
    registry = unit.registry
    require = _statements(unit, "require")[0]
    callee_return = _statements(unit, "return")[0]
    assert registry.reachable(require, callee_return)
    assert registry.reachable(callee_return, require)
    assert (require, registry.entries["ZKVoting.verifyZKProof/1"][0]) in registry.edges_of_kind("call")


def test_multi_file_unit():
    unit = analyze([("a.msol", "contract A { uint x; }"), ("b.msol", "contract B { function f() { } }")])
    assert unit.file_names == ["a.msol", "b.msol"]
    fn = unit.table.function_by_key("B.f/0")
    assert fn.node.span.file == 1
    assert fn.node.node_id > max(n.node_id for n in unit.roots[0].walk())
