"""Parsing and rendering: the two file formats must round-trip exactly."""

import pytest
from hypothesis import given, strategies as st

from chorex import (
    InvalidTerm, ParseError, parse_choreography, parse_network, render,
    render_choreography,
)
from chorex.terms import (
    Branch, Cond, CondSelf, Constant, End, Literal, Network, Program, Recv,
    SELF, Select, Selection, Send, Seq, Stuck, UNIT, ValueCom, network,
    process_names,
)

from helpers import CORPUS, NAMES, behaviours, choreographies


# --------------------------------------------------------------------------
# round-trip properties

@given(choreographies())
def test_choreography_roundtrip(term):
    prog = Program((), term)
    assert parse_choreography(render(prog)) == prog


@given(st.lists(st.tuples(st.sampled_from(NAMES), behaviours()),
                min_size=0, max_size=4,
                unique_by=lambda pb: pb[0]))
def test_network_roundtrip(procs):
    net = Network(tuple(procs))
    assert parse_network(render(net)) == net


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.cc")),
                         ids=lambda p: p.name)
def test_corpus_choreography_fixpoint(path):
    prog = parse_choreography(path.read_text())
    assert parse_choreography(render(prog)) == prog


@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.sp")),
                         ids=lambda p: p.name)
def test_corpus_network_fixpoint(path):
    net = parse_network(path.read_text())
    assert parse_network(render(net)) == net


def test_program_with_definitions_roundtrip():
    text = ("def X = c.pwd -> a; if a=s then a -> c[ok]; 0 else a -> c[ko]; X\n"
            "main = X")
    prog = parse_choreography(text)
    assert render(prog) == text
    assert [n for n, _ in prog.defs] == ["X"]


def test_comments_and_blank_lines_are_skipped():
    prog = parse_choreography("# header\n\nmain = p.x -> q; 0  # trailing\n")
    assert prog == parse_choreography("main = p.x -> q; 0")


# --------------------------------------------------------------------------
# corner cases pinned by the grammar

def test_empty_network_source():
    assert parse_network("") == Network(())
    assert parse_network("   \n  ") == Network(())


def test_send_without_expression_is_a_parse_error():
    with pytest.raises(ParseError) as exc:
        parse_network("p { q! }")
    assert "found '}'" in str(exc.value)
    assert "expected one of: *, identifier, integer" in str(exc.value)
    assert exc.value.line == 1 and exc.value.col == 8


def test_missing_continuation_is_a_parse_error():
    with pytest.raises(ParseError, match="expected one of: ;"):
        parse_choreography("main = p.x -> q")


def test_self_directed_terms_are_rejected():
    with pytest.raises(ParseError, match="self-communication at p"):
        parse_choreography("main = p.x -> p; 0")
    with pytest.raises(ParseError, match="comparing p with itself"):
        parse_choreography("main = if p=p then 0 else 0")


def test_static_name_checks_at_parse_time():
    with pytest.raises(ParseError, match="duplicate procedure definitions"):
        parse_choreography("def X = p.x -> q; 0\ndef X = q.y -> p; 0\nmain = X")
    with pytest.raises(ParseError, match="undefined procedure Y"):
        parse_choreography("main = Y")
    with pytest.raises(ParseError, match="duplicate process names"):
        parse_network("p { q!x; 0 } | p { q!y; 0 }")
    with pytest.raises(ParseError, match="duplicate receivers"):
        parse_choreography("main = (p.x -> q | r.y -> q); 0")


def test_empty_choreography_is_rejected():
    # unlike networks, a choreography file must at least define main
    with pytest.raises(ParseError, match="expected one of: main"):
        parse_choreography("")


def test_keywords_are_not_process_names():
    with pytest.raises(ParseError):
        parse_network("def { p!x; 0 }")


# --------------------------------------------------------------------------
# constructor invariants (the parser routes through the same checks)

def test_constructors_reject_invalid_terms():
    with pytest.raises(InvalidTerm, match="self-communication"):
        ValueCom("p", Literal(Constant("x")), "p")
    with pytest.raises(InvalidTerm, match="duplicate receivers"):
        Seq((ValueCom("a", SELF, "q"), ValueCom("b", SELF, "q")), End())
    with pytest.raises(InvalidTerm):
        Seq((), End())
    with pytest.raises(InvalidTerm):
        Cond("p", "p", End(), End())
    with pytest.raises(InvalidTerm, match="duplicate"):
        Network((("p", End()), ("p", End())))


def test_program_requires_bound_calls_everywhere():
    from chorex.terms import Call
    with pytest.raises(InvalidTerm):
        Program((), Call("X"))
    # mutual recursion is fine: every def sees every other
    text = "def X = p.a -> q; Y\ndef Y = q.b -> p; X\nmain = X"
    prog = parse_choreography(text)
    assert {n for n, _ in prog.defs} == {"X", "Y"}


def test_network_processes_are_kept_sorted():
    net = parse_network("b { a?; 0 } | a { b!x; 0 }")
    assert [p for p, _ in net.procs] == ["a", "b"]
    assert net.names == ("a", "b")
    assert isinstance(net.behaviour("a"), Send)
    # the factory accepts a mapping too
    assert network({"a": Send("b", SELF, End()),
                    "b": Recv("a", End())}).names == ("a", "b")


def test_branch_alternatives_are_label_sorted():
    net = parse_network("q { p&{ r: 0, l: 0 } }")
    assert render(net) == "q { p&{ l: 0, r: 0 } }"
    b = net.behaviour("q")
    assert b.labels == ("l", "r")
    assert b.branch("r") == End()


def test_self_send_in_a_process_is_allowed_but_inert():
    # the network grammar has no self-communication rule to violate; such
    # a process simply never synchronizes
    net = parse_network("p { p!x; 0 }")
    from chorex import State, step_network_sync
    assert step_network_sync(net, State()) == []


# --------------------------------------------------------------------------
# rendering details

def test_render_accepts_only_networks_and_programs():
    with pytest.raises(TypeError, match="Network or Program"):
        render(End())
    assert render_choreography(End()) == "0"
    assert render_choreography(Stuck()) == "1"


def test_stuck_diagnostics_do_not_affect_equality():
    assert Stuck((("p", End()),)) == Stuck()


def test_integer_payloads_parse_as_constants():
    prog = parse_choreography("main = a.0 -> b; 0")
    action = prog.main.actions[0]
    assert action == ValueCom("a", Literal(Constant("0")), "b")
    assert render(prog) == "main = a.0 -> b; 0"


def test_unit_payload_renders_as_star():
    prog = parse_choreography("main = a.* -> b; 0")
    assert prog.main.actions[0].expr == SELF
    assert render(prog) == "main = a.* -> b; 0"


def test_process_names_collects_every_role():
    prog = parse_choreography("main = if a=b then c.x -> d; 0 else 0")
    assert process_names(prog.main) == frozenset("abcd")
