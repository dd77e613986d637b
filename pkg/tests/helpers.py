"""Builders shared across test modules."""

from __future__ import annotations

from pathlib import Path

from hypothesis import strategies as st

from chorex.terms import (
    Branch, Cond, CondSelf, Constant, End, Literal, Network, Recv, SELF,
    Select, Selection, Send, Seq, Stuck, UNIT, ValueCom,
)

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

NAMES = ["p", "q", "r", "s", "alice", "b7"]
CONSTS = ["x", "y", "ok", "v0", "0"]
LABELS = ["l", "r", "go", "stop"]


@st.composite
def bundles(draw):
    receivers = draw(st.lists(st.sampled_from(NAMES), min_size=1, max_size=3,
                              unique=True))
    actions = []
    for rcv in receivers:
        snd = draw(st.sampled_from([n for n in NAMES if n != rcv]))
        if draw(st.booleans()):
            expr = draw(st.sampled_from(
                [SELF] + [Literal(Constant(c)) for c in CONSTS]))
            actions.append(ValueCom(snd, expr, rcv))
        else:
            actions.append(Selection(snd, rcv, draw(st.sampled_from(LABELS))))
    return tuple(actions)


def choreographies():
    def extend(children):
        seq = st.builds(Seq, bundles(), children)
        cond = st.builds(
            lambda pq, t, e: Cond(pq[0], pq[1], t, e),
            st.tuples(st.sampled_from(NAMES), st.sampled_from(NAMES))
              .filter(lambda pq: pq[0] != pq[1]),
            children, children)
        return st.one_of(seq, cond)
    return st.recursive(st.sampled_from([End(), Stuck()]), extend, max_leaves=8)


def behaviours():
    def extend(children):
        return st.one_of(
            st.builds(Send, st.sampled_from(NAMES),
                      st.sampled_from([SELF] + [Literal(Constant(c)) for c in CONSTS]),
                      children),
            st.builds(Recv, st.sampled_from(NAMES), children),
            st.builds(Select, st.sampled_from(NAMES), st.sampled_from(LABELS),
                      children),
            st.builds(
                lambda src, labs, conts: Branch(src, tuple(zip(labs, conts))),
                st.sampled_from(NAMES),
                st.lists(st.sampled_from(LABELS), min_size=1, max_size=3,
                         unique=True),
                st.lists(children, min_size=3, max_size=3)),
            st.builds(CondSelf, st.sampled_from(NAMES), children, children),
        )
    return st.recursive(st.just(End()), extend, max_leaves=6)


def corpus_text(name: str) -> str:
    return (CORPUS / name).read_text()


def random_finite_network(rng, max_procs: int = 6, max_actions: int = 5) -> Network:
    """A finite com/sel network with a synchronously executable schedule.

    Actions are drawn one matched pair at a time, so executing every
    process in textual order realizes the generation order; occasionally a
    deliberately unmatched trailing send is added to exercise the stuck
    path.  Conditionals are excluded on purpose: the reordering laws the
    random properties check say nothing about them.
    """
    while True:
        n = rng.randint(2, max_procs)
        names = [f"p{i}" for i in range(1, n + 1)]
        slots: dict[str, list] = {p: [] for p in names}
        budget = {p: rng.randint(0, max_actions) for p in names}
        while True:
            open_parts = [p for p in names if budget[p] >= 1]
            pairs = [(s, t) for s in open_parts for t in open_parts if s != t]
            if not pairs or rng.random() < 0.15:
                break
            s, t = rng.choice(pairs)
            budget[s] -= 1
            budget[t] -= 1
            if rng.random() < 0.3:
                lab = rng.choice(["go", "stop", "ack"])
                slots[s].append(("sel", t, lab))
                slots[t].append(("bra", s, lab))
            else:
                val = rng.choice(["x", "y", "*"])
                slots[s].append(("snd", t, val))
                slots[t].append(("rcv", s, None))
        if rng.random() < 0.10:
            cands = [p for p in names if budget[p] >= 1]
            if cands:
                s = rng.choice(cands)
                t = rng.choice([q for q in names if q != s])
                slots[s].append(("snd", t, "*"))
        if not any(slots.values()):
            continue
        return Network(tuple((p, _build_behaviour(slots[p]))
                             for p in names if slots[p]))


def _build_behaviour(items):
    term = End()
    for kind, other, payload in reversed(items):
        if kind == "snd":
            expr = Literal(UNIT if payload == "*" else Constant(payload))
            term = Send(other, expr, term)
        elif kind == "rcv":
            term = Recv(other, term)
        elif kind == "sel":
            term = Select(other, payload, term)
        else:
            term = Branch(other, ((payload, term),))
    return term


def pair_family(n: int) -> Network:
    """n independent two-process cells: an evaluator comparing itself with
    a sender that feeds it.  Extraction must branch on every cell in every
    branch of every other cell, so the result has 2^n - 1 conditionals."""
    procs = []
    for i in range(1, n + 1):
        left, right = f"p{2 * i - 1}", f"p{2 * i}"
        procs.append((left, CondSelf(right, End(), End())))
        procs.append((right, Send(left, Literal(Constant("e")), End())))
    return Network(tuple(procs))


def count_nodes(term, cls) -> int:
    from chorex.terms import subterms
    return sum(1 for s in subterms(term) if isinstance(s, cls))
