"""Concrete stepping (choreographies, sync networks, async networks) and
the structural equivalence oracle."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from chorex import (
    Queues, State, eval_expr, parse_choreography, parse_network, render,
    render_label, render_state, state, step_choreography, step_network_async,
    step_network_sync, struct_equiv,
)
from chorex.semantics import (
    ComLabel, DeqLabel, EnqLabel, MultiLabel, SelLabel, ThenLabel,
    UnboundProcedure, canonical_form,
)
from chorex.terms import Constant, End, Literal, SELF, Seq, UNIT, ValueCom

from helpers import CORPUS, choreographies, random_finite_network


def chor(text):
    return parse_choreography(text)


def labels_of(moves):
    return sorted(render_label(m[0]) for m in moves)


# --------------------------------------------------------------------------
# expressions and state

def test_eval_expr():
    assert eval_expr(Literal(Constant("v")), Constant("w")) == Constant("v")
    assert eval_expr(SELF, Constant("w")) == Constant("w")
    assert eval_expr(SELF, UNIT) == UNIT


def test_state_defaults_to_unit():
    s = State()
    assert s.get("anyone") == UNIT
    s2 = s.set("p", Constant("v"))
    assert s.get("p") == UNIT and s2.get("p") == Constant("v")
    assert render_state(s) == "(all unset)"
    assert render_state(s2) == "p=v"
    # storing Unit is the same as never having stored anything
    assert s2.set("p", UNIT) == State()


# --------------------------------------------------------------------------
# choreography stepping

def test_single_communication_updates_receiver():
    prog = chor("main = p.hello -> q; 0")
    ((label, cont, sigma),) = step_choreography(prog, prog.main, State())
    assert render_label(label) == "p.hello -> q"
    assert cont == End()
    assert sigma.get("q") == Constant("hello")


def test_star_forwards_the_senders_value():
    prog = chor("main = a.* -> b; 0")
    ((label, _, sigma),) = step_choreography(
        prog, prog.main, state({"a": Constant("payload")}))
    assert label == ComLabel("a", Constant("payload"), "b")
    assert sigma.get("b") == Constant("payload")


def test_conditional_is_deterministic_per_state():
    prog = chor("main = if p=q then p -> q[y]; 0 else p -> q[n]; 0")
    agree = state({"p": Constant("v"), "q": Constant("v")})
    differ = state({"p": Constant("v")})
    eq_moves = step_choreography(prog, prog.main, agree)
    ne_moves = step_choreography(prog, prog.main, differ)
    assert labels_of(eq_moves) == ["p=q:then"]
    assert labels_of(ne_moves) == ["p=q:else"]
    # unset values are equal to each other
    assert labels_of(step_choreography(prog, prog.main, State())) == ["p=q:then"]


def test_multicom_fires_atomically_against_the_prestate():
    prog = chor("main = (p.* -> q | q.* -> p); 0")
    sigma = state({"p": Constant("a"), "q": Constant("b")})
    ((label, cont, out),) = step_choreography(prog, prog.main, sigma)
    assert isinstance(label, MultiLabel)
    assert render_label(label) == "(p.a -> q | q.b -> p)"
    assert cont == End()
    assert out.get("p") == Constant("b") and out.get("q") == Constant("a")


def test_independent_later_actions_may_fire_early():
    prog = chor("main = a.x -> b; c.y -> d; 0")
    assert labels_of(step_choreography(prog, prog.main, State())) == \
        ["a.x -> b", "c.y -> d"]
    # a dependent continuation stays blocked
    dep = chor("main = a.x -> b; b.y -> c; 0")
    assert labels_of(step_choreography(dep, dep.main, State())) == ["a.x -> b"]


def test_recursion_unfolds_at_call_sites():
    prog = chor("def X = p.t -> q; X\nmain = X")
    (label, cont, _), = step_choreography(prog, prog.main, State())
    assert render_label(label) == "p.t -> q"
    # one more step from the unfolded continuation
    (label2, _, _), = step_choreography(prog, cont, State())
    assert render_label(label2) == "p.t -> q"


def test_terminal_terms_do_not_step():
    prog = chor("main = 0")
    assert step_choreography(prog, prog.main, State()) == []
    stuck = chor("main = 1")
    assert step_choreography(stuck, stuck.main, State()) == []


def test_unbound_call_raises():
    prog = chor("def X = p.t -> q; X\nmain = X")
    from chorex.terms import Call
    with pytest.raises(UnboundProcedure):
        step_choreography(prog, Call("Nope"), State())


def test_two_bit_protocol_first_labels():
    text = ("def X = (a.1 -> b | b.ack0 -> a); (a.0 -> b | b.ack1 -> a); X\n"
            "main = a.0 -> b; X")
    prog = chor(text)
    cfg, sigma = prog.main, State()
    seen = []
    for _ in range(5):
        moves = step_choreography(prog, cfg, sigma)
        assert len(moves) == 1
        label, cfg, sigma = moves[0]
        seen.append(render_label(label))
    assert seen == [
        "a.0 -> b",
        "(a.1 -> b | b.ack0 -> a)",
        "(a.0 -> b | b.ack1 -> a)",
        "(a.1 -> b | b.ack0 -> a)",
        "(a.0 -> b | b.ack1 -> a)",
    ]


# --------------------------------------------------------------------------
# synchronous network stepping

def test_auth_network_first_step():
    net = parse_network((CORPUS / "auth.sp").read_text())
    moves = step_network_sync(net, state({"c": Constant("pwd")}))
    assert labels_of(moves) == ["c.pwd -> a"]
    _, net2, sigma2 = moves[0]
    assert sigma2.get("a") == Constant("pwd")


def test_network_conditional_consumes_without_storing():
    # the comparing process reads its partner's value but does not keep it
    net = parse_network("p { if *=q then 0 else 0 } | q { p!*; 0 }")
    agree = state({"p": UNIT, "q": UNIT})
    ((label, net2, sigma2),) = step_network_sync(net, agree)
    assert label == ThenLabel("p", "q")
    assert sigma2 == agree
    differ = state({"q": Constant("other")})
    ((label, _, _),) = step_network_sync(net, differ)
    assert render_label(label) == "p=q:else"


def test_selection_synchronizes_on_offered_labels_only():
    net = parse_network("p { q+go; 0 } | q { p&{ go: 0, stop: 0 } }")
    assert labels_of(step_network_sync(net, State())) == ["p -> q[go]"]
    bad = parse_network("p { q+other; 0 } | q { p&{ go: 0 } }")
    assert step_network_sync(bad, State()) == []


def test_exchange_deadlocks_synchronously():
    net = parse_network((CORPUS / "exchange.sp").read_text())
    assert step_network_sync(net, State()) == []


def test_empty_network_has_no_steps():
    assert step_network_sync(parse_network(""), State()) == []


# --------------------------------------------------------------------------
# asynchronous network stepping

def test_exchange_completes_asynchronously():
    net = parse_network((CORPUS / "exchange.sp").read_text())
    sigma = state({"p": Constant("a"), "q": Constant("b")})
    cfg = (net, sigma, Queues())
    trace = []
    while True:
        steps = step_network_async(*cfg)
        if not steps:
            break
        label, *cfg = steps[0]
        cfg = tuple(cfg)
        trace.append(render_label(label))
    assert trace == ["enq[p.a -> q]", "enq[q.b -> p]",
                     "deq[p.a -> q]", "deq[q.b -> p]"]
    final_net, final_sigma, final_queues = cfg
    assert render(final_net) == "p { 0 }\n| q { 0 }"
    assert final_sigma.get("p") == Constant("b")
    assert final_sigma.get("q") == Constant("a")
    assert final_queues == Queues()


def test_channels_are_fifo():
    net = parse_network("a { b!first; b!second; 0 } | b { a?; a?; 0 }")
    cfg = (net, State(), Queues())
    # enqueue both sends, then the receiver must see them in order
    for _ in range(2):
        (label, *rest), = [m for m in step_network_async(*cfg)
                           if isinstance(m[0], EnqLabel)]
        cfg = tuple(rest)
    deqs = [m for m in step_network_async(*cfg) if isinstance(m[0], DeqLabel)]
    assert [render_label(m[0]) for m in deqs] == ["deq[a.first -> b]"]
    cfg = tuple(deqs[0][1:])
    deqs2 = [m for m in step_network_async(*cfg) if isinstance(m[0], DeqLabel)]
    assert [render_label(m[0]) for m in deqs2] == ["deq[a.second -> b]"]


def test_async_conditional_dequeues_the_probe():
    net = parse_network("p { if *=q then 0 else 0 } | q { p!*; 0 }")
    cfg = (net, State(), Queues())
    (label, *cfg), = step_network_async(*cfg)
    assert isinstance(label, EnqLabel)
    (label2, net2, sigma2, queues2), = step_network_async(*tuple(cfg))
    assert render_label(label2) == "deq[p=q:then]"
    assert sigma2 == State() and queues2 == Queues()


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_every_sync_step_has_an_async_counterpart(seed):
    net = random_finite_network(random.Random(seed))
    sigma = State()
    for label, net2, sigma2 in step_network_sync(net, sigma):
        enqs = [m for m in step_network_async(net, sigma, Queues())
                if isinstance(m[0], EnqLabel) and m[0].inner == label]
        assert enqs, render_label(label)
        _, mid_net, mid_sigma, mid_queues = enqs[0]
        deqs = [m for m in step_network_async(mid_net, mid_sigma, mid_queues)
                if isinstance(m[0], DeqLabel) and m[0].inner == label]
        assert deqs, render_label(label)
        _, end_net, end_sigma, end_queues = deqs[0]
        assert (end_net, end_sigma) == (net2, sigma2)
        assert end_queues == Queues()


# --------------------------------------------------------------------------
# structural equivalence

EQUIV_CASES = [
    # disjoint neighbours commute
    ("main = p.x -> q; r.y -> s; 0", "main = r.y -> s; p.x -> q; 0", True),
    # same sender commutes (merge one way, split the other)
    ("main = a.x -> b; a.y -> c; 0", "main = a.y -> c; a.x -> b; 0", True),
    # a bundle of independent actions equals its sequencing
    ("main = (p.m -> q | r.n -> s); 0", "main = r.n -> s; p.m -> q; 0", True),
    # receiver feeding a later sender pins the order
    ("main = p.x -> q; q.y -> r; 0", "main = q.y -> r; p.x -> q; 0", False),
    # shared receiver pins the order
    ("main = p.x -> q; r.y -> q; 0", "main = r.y -> q; p.x -> q; 0", False),
    # the value swap cannot be sequenced in either direction
    ("main = (p.* -> q | q.* -> p); 0", "main = p.* -> q; q.* -> p; 0", False),
    ("main = (p.* -> q | q.* -> p); 0", "main = q.* -> p; p.* -> q; 0", False),
    # partial split of a three-way bundle
    ("main = (a.x -> b | c.y -> d | b.z -> e); 0",
     "main = c.y -> d; b.z -> e; a.x -> b; 0", True),
    # selections participate like communications
    ("main = p -> q[go]; r.x -> s; 0", "main = r.x -> s; p -> q[go]; 0", True),
    ("main = p -> q[go]; q.x -> r; 0", "main = q.x -> r; p -> q[go]; 0", False),
    # different payloads never unify
    ("main = p.x -> q; 0", "main = p.y -> q; 0", False),
    # congruence applies inside conditionals
    ("main = if a=b then p.x -> q; r.y -> s; 0 else 0",
     "main = if a=b then r.y -> s; p.x -> q; 0 else 0", True),
    # ... but conditionals themselves do not commute with interactions
    ("main = p.x -> q; if a=b then 0 else 0",
     "main = if a=b then p.x -> q; 0 else p.x -> q; 0", False),
]


@pytest.mark.parametrize("lhs,rhs,expected", EQUIV_CASES)
def test_struct_equiv_cases(lhs, rhs, expected):
    a, b = chor(lhs).main, chor(rhs).main
    assert struct_equiv(a, b) is expected
    assert struct_equiv(b, a) is expected


@given(choreographies())
def test_struct_equiv_is_reflexive(term):
    assert struct_equiv(term, term)


@given(choreographies())
def test_canonical_form_is_idempotent_and_equivalent(term):
    cf = canonical_form(term)
    assert canonical_form(cf) == cf
    assert struct_equiv(term, cf)


def test_bundle_member_order_carries_no_meaning():
    fwd = Seq((ValueCom("p", SELF, "q"), ValueCom("q", SELF, "p")), End())
    rev = Seq((ValueCom("q", SELF, "p"), ValueCom("p", SELF, "q")), End())
    assert struct_equiv(fwd, rev)


def test_procedure_calls_are_opaque():
    a = chor("def X = p.x -> q; X\nmain = X")
    b = chor("def X = q.y -> p; X\nmain = X")
    # same call name, different bodies: struct_equiv does not unfold
    assert struct_equiv(a.main, b.main)
    assert not struct_equiv(a.defs[0][1], b.defs[0][1])


# --------------------------------------------------------------------------
# abstract/concrete coherence

@pytest.mark.parametrize("path", sorted(CORPUS.glob("*.sp")),
                         ids=lambda p: p.name)
def test_concrete_steps_instantiate_abstract_ones(path):
    from chorex import lift, step_network_abstract

    net = parse_network(path.read_text())
    for sigma in (State(), state({p: Constant("w") for p in net.names})):
        abstract = [label for label, _ in step_network_abstract(lift(net))]
        for label, _, _ in step_network_sync(net, sigma):
            assert any(_instantiates(a, label, sigma) for a in abstract), \
                render_label(label)


def _instantiates(abstract_label, concrete_label, sigma):
    if isinstance(abstract_label, ComLabel) and isinstance(concrete_label, ComLabel):
        return (abstract_label.sender == concrete_label.sender
                and abstract_label.receiver == concrete_label.receiver
                and eval_expr(abstract_label.payload,
                              sigma.get(abstract_label.sender))
                == concrete_label.payload)
    return abstract_label == concrete_label
