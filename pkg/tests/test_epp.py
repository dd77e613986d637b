"""Endpoint projection and behaviour merging."""

import pytest
from hypothesis import given, settings

from chorex import epp, extract, parse_choreography, parse_network, render
from chorex.epp import (
    MergeError, ProjectionError, merge, procedure_usage, project_behaviour,
    unused_definitions,
)
from chorex.terms import (
    Branch, Constant, End, Literal, Network, Recv, Send,
)

from helpers import behaviours, corpus_text


X = Literal(Constant("x"))


# --------------------------------------------------------------------------
# merging

def test_merge_unions_branch_offers():
    left = Branch("p", (("l", End()),))
    right = Branch("p", (("r", Send("q", X, End())),))
    merged = merge(left, right)
    assert merged == Branch("p", (("l", End()),
                                  ("r", Send("q", X, End()))))


@settings(max_examples=80, deadline=None)
@given(behaviours())
def test_merge_is_idempotent(b):
    assert merge(b, b) == b


def test_merge_reports_the_path_to_the_disagreement():
    with pytest.raises(MergeError) as exc:
        merge(Send("q", X, Send("r", Literal(Constant("a")), End())),
              Send("q", X, Send("r", Literal(Constant("b")), End())))
    assert str(exc.value) == "cannot merge at q!x: r!a; 0  vs  r!b; 0"
    assert exc.value.path == ("q!x",)


def test_merge_recurses_into_shared_branch_labels():
    with pytest.raises(MergeError) as exc:
        merge(Branch("p", (("l", Send("q", Literal(Constant("a")), End())),)),
              Branch("p", (("l", Send("q", Literal(Constant("b")), End())),)))
    assert exc.value.path == ("p&l",)


# --------------------------------------------------------------------------
# projecting single behaviours

def test_bystander_of_everything_projects_to_termination():
    prog = parse_choreography("main = p.x -> q; 0")
    assert project_behaviour(prog.main, "z", {}) == End()


def test_receiver_projection_is_a_unary_offer_for_selections():
    prog = parse_choreography("main = p -> q[go]; 0")
    assert project_behaviour(prog.main, "q", {}) == Branch("p", (("go", End()),))
    assert project_behaviour(prog.main, "p", {}).label == "go"


def test_two_bundle_actions_at_one_process_cannot_be_projected():
    prog = parse_choreography("main = (p.x -> q | q.y -> p); 0")
    with pytest.raises(ProjectionError) as exc:
        epp(prog)
    assert exc.value.process == "p"
    assert "p appears in more than one action of a bundle" in str(exc.value)


def test_nested_definitions_are_rejected():
    prog = parse_choreography("main = def Z = p.x -> q; Z in Z")
    with pytest.raises(MergeError, match="use top-level procedures"):
        project_behaviour(prog.main, "p", {})


# --------------------------------------------------------------------------
# conditionals and knowledge of choice

def test_unaware_bystander_makes_the_choreography_unprojectable():
    prog = parse_choreography(
        "main = if p=q then q.x -> r; 0 else q.y -> r; 0")
    with pytest.raises(ProjectionError) as exc:
        epp(prog)
    assert exc.value.process == "q"
    assert str(exc.value) == ("choreography is not projectable for q: "
                              "cannot merge at if p=q: r!x; 0  vs  r!y; 0")


def test_selections_propagate_the_choice():
    prog = parse_choreography(
        "main = if p=q then p -> r[l]; q.x -> r; 0 else p -> r[r]; q.x -> r; 0")
    net = epp(prog)
    want = parse_network(
        "p { if *=q then r+l; 0 else r+r; 0 } |"
        "q { p!*; r!x; 0 } |"
        "r { p&{ l: q?; 0, r: q?; 0 } }")
    assert net == want


def test_extracted_loop_with_a_starved_process_is_unprojectable():
    # the deadlock marker projects to termination, which cannot be
    # merged with the live branch that re-enters the loop
    prog = extract(parse_network(corpus_text("fig5.sp")))
    with pytest.raises(ProjectionError) as exc:
        epp(prog)
    assert exc.value.process == "r"
    assert "cannot merge at if q=r: X1  vs  0" in str(exc.value)


# --------------------------------------------------------------------------
# procedures

def test_procedure_usage_closes_over_calls():
    prog = parse_choreography(corpus_text("r09_mutual.cc"))
    assert procedure_usage(prog) == {"X": frozenset({"p", "q"}),
                                     "Y": frozenset({"p", "q"})}


def test_usage_includes_transitive_participants():
    prog = parse_choreography(
        "def X = p.a -> q; Y\ndef Y = r.b -> s; 0\nmain = X")
    usage = procedure_usage(prog)
    assert usage["X"] == frozenset({"p", "q", "r", "s"})
    assert usage["Y"] == frozenset({"r", "s"})


def test_unused_definitions_are_reported():
    prog = parse_choreography("def X = p.a -> q; 0\ndef Y = r.b -> s; 0\nmain = X")
    assert unused_definitions(prog) == frozenset({"Y"})
    assert unused_definitions(parse_choreography("main = 0")) == frozenset()


def test_mutually_recursive_procedures_reembed_their_partners():
    prog = parse_choreography(corpus_text("r09_mutual.cc"))
    assert render(epp(prog)) == (
        "p { def X = def Y = q?; X in q!a; Y in def Y = q?; X in X }\n"
        "| q { def X = def Y = p!b; X in p?; Y in def Y = p!b; X in X }")


def test_uninvolved_processes_drop_the_procedure():
    prog = parse_choreography("def X = p.a -> q; X\nmain = r.go -> s; X")
    net = epp(prog)
    procs = dict(net.procs)
    assert render(net) == ("p { def X = q!a; X in X }\n"
                           "| q { def X = p?; X in X }\n"
                           "| r { s!go; 0 }\n"
                           "| s { r?; 0 }")
    assert procs["r"] == Send("s", Literal(Constant("go")), End())


# --------------------------------------------------------------------------
# whole networks

def test_projection_of_the_authentication_protocol():
    prog = parse_choreography(corpus_text("r01_auth.cc"))
    assert epp(prog) == parse_network(corpus_text("auth.sp"))


def test_empty_choreography_projects_to_the_empty_network():
    assert epp(parse_choreography("main = 0")) == Network(())


@pytest.mark.parametrize("name", sorted(
    p.name for p in __import__("helpers").CORPUS.glob("f*.cc")))
def test_finite_corpus_is_projectable(name):
    prog = parse_choreography(corpus_text(name))
    net = epp(prog)
    assert set(dict(net.procs)) == {
        n for n, _ in net.procs}  # names unique by construction
    assert len(net.procs) >= 2
