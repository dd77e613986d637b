"""Grouping asynchronous exchanges into atomic bundles.

Under asynchronous messaging a process may fire several sends before it
sits down to receive.  A bundle (multicom) captures one such round: it
is seeded with some process's leading send, and then, for every message
in the bundle, the receiver must be able to reach a matching receive
after emitting finitely many sends/selections of its own - which join
the bundle and are resolved in turn.  If every obligation closes, the
whole bundle commits atomically; the network advances past all of it.

The worklist here follows that recipe literally and keeps a step trace
so the intermediate states can be inspected.  Failures carry the process
that could not meet its obligation and the term it was stuck at.

`normalize_multicom` is the choreography-side counterpart: it splits
every bundle into the finest atomic pieces the splitting law allows and
orders each piece canonically, giving a normal form that is stable under
re-normalization and equivalent to the input.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .abstract import AnnNet, BLACK, LiftedProc, _flip_if_exhausted, lift, mark_calls
from .printing import render_behaviour
from .semantics import ComLabel, ElseLabel, SelLabel, ThenLabel, make_label, trace_canonical
from .terms import (
    Branch, Call, Choreography, Cond, CondSelf, Def, Network, Program, Recv,
    Select, Selection, Send, Seq, ValueCom,
)


class MulticomFailure(Exception):
    def __init__(self, process: str, residual: str, reason: str):
        self.process = process
        self.residual = residual
        self.reason = reason
        super().__init__(f"process {process} cannot complete the bundle: "
                         f"{reason} (stuck at: {residual})")


@dataclass(frozen=True)
class MulticomResult:
    actions: tuple          # interactions in discovery order
    steps: tuple            # (resolved_interaction, newly_added_interactions) pairs
    network: AnnNet         # the annotated network after the bundle commits


def _interaction_of(head, sender: str):
    if isinstance(head, Send):
        return ValueCom(sender, head.expr, head.to)
    if isinstance(head, Select):
        return Selection(sender, head.to, head.label)
    return None


def _unfold(cur, env, guard):
    while isinstance(cur, Call):
        if cur.name in guard:
            return cur
        guard.add(cur.name)
        cur = mark_calls(env[cur.name], BLACK)
    return cur


def _scan_receiver(net: AnnNet, action) -> tuple:
    """Sends/selections `action.receiver` performs before its matching
    receive.  Raises if no such receive is reachable."""
    name = action.receiver
    try:
        pr = net.proc(name)
    except KeyError:
        raise MulticomFailure(name, "<absent>", "no such process") from None
    env = pr.env_map
    guard: set = set()
    cur = _unfold(pr.term, env, guard)
    prefix = []
    while True:
        if isinstance(cur, Recv) and isinstance(action, ValueCom):
            if cur.source == action.sender:
                return tuple(prefix)
            raise MulticomFailure(name, render_behaviour(cur, marks=True),
                                  f"expects a value from {cur.source}, "
                                  f"not {action.sender}")
        if isinstance(cur, Branch) and isinstance(action, Selection):
            if cur.source == action.sender and action.label in cur.labels:
                return tuple(prefix)
            raise MulticomFailure(name, render_behaviour(cur, marks=True),
                                  f"offers {{{', '.join(cur.labels)}}} from "
                                  f"{cur.source}, which does not cover "
                                  f"{action.sender}[{action.label}]")
        got = _interaction_of(cur, name)
        if got is None:
            raise MulticomFailure(name, render_behaviour(cur, marks=True),
                                  "no matching receive behind its sends")
        if got in prefix:
            raise MulticomFailure(
                got.receiver, render_behaviour(cur, marks=True),
                "would have to receive twice in one bundle")
        prefix.append(got)
        cur = _unfold(cur.cont, env, guard)


def compute_multicom(net, seed: str) -> MulticomResult:
    """Build the bundle forced by `seed`'s leading send or selection.

    Accepts a plain Network (lifted on the fly) or an annotated one.
    """
    if isinstance(net, Network):
        net = lift(net)
    pr = net.proc(seed)
    head = _unfold(pr.term, pr.env_map, set())
    first = _interaction_of(head, seed)
    if first is None:
        raise MulticomFailure(seed, render_behaviour(head, marks=True),
                              "seed process does not start with a send or selection")

    actions: list = [first]
    receivers = {first.receiver}
    waiting = deque([first])
    steps: list = [(None, (first,))]
    while waiting:
        eta = waiting.popleft()
        added = []
        for a in _scan_receiver(net, eta):
            if a in actions:
                continue
            if a.receiver in receivers:
                raise MulticomFailure(
                    a.receiver, render_behaviour(net.proc(a.receiver).term, marks=True),
                    "would have to receive twice in one bundle")
            actions.append(a)
            receivers.add(a.receiver)
            waiting.append(a)
            added.append(a)
        steps.append((eta, tuple(added)))
    return MulticomResult(tuple(actions), tuple(steps), _apply(net, tuple(actions)))


def _apply(net: AnnNet, actions: tuple) -> AnnNet:
    """Advance every involved process past its part of the bundle."""
    as_sender: dict[str, list] = {}
    receive_of: dict[str, object] = {}
    for a in actions:
        as_sender.setdefault(a.sender, []).append(a)
        receive_of[a.receiver] = a

    procs = []
    for name, pr in net.procs:
        sends = list(as_sender.get(name, ()))
        rcv = receive_of.get(name)
        if not sends and rcv is None:
            procs.append((name, pr))
            continue
        env = pr.env_map
        guard: set = set()
        cur = _unfold(pr.term, env, guard)
        while sends:
            got = _interaction_of(cur, name)
            assert got is not None and got in sends, (
                f"bundle application out of sync at {name}")
            sends.remove(got)
            cur = _unfold(cur.cont, env, guard)
        if rcv is not None:
            if isinstance(rcv, ValueCom):
                assert isinstance(cur, Recv) and cur.source == rcv.sender
                cur = cur.cont
            else:
                assert isinstance(cur, Branch) and rcv.label in cur.labels
                cur = cur.branch(rcv.label)
        procs.append((name, LiftedProc(pr.env, cur)))
    return _flip_if_exhausted(AnnNet(tuple(procs)))


def _as_label(a):
    if isinstance(a, ValueCom):
        return ComLabel(a.sender, a.expr, a.receiver)
    return SelLabel(a.sender, a.receiver, a.label)


def step_network_abstract_async(net: AnnNet):
    """Abstract asynchronous reductions: one bundle per viable seed, plus
    both branches of every enabled conditional."""
    from .abstract import expose_term, _with_terms

    results = {}
    for p in net.names:
        try:
            res = compute_multicom(net, p)
        except MulticomFailure:
            continue
        label = make_label(tuple(_as_label(a) for a in res.actions))
        results[(label, res.network)] = (label, res.network)

    exposed = {name: expose_term(net.proc(name)) for name in net.names}
    for p in net.names:
        hp = exposed[p]
        if isinstance(hp, CondSelf) and hp.partner in exposed:
            hq = exposed[hp.partner]
            if isinstance(hq, Send) and hq.to == p:
                for label, taken in ((ThenLabel(p, hp.partner), hp.then_branch),
                                     (ElseLabel(p, hp.partner), hp.else_branch)):
                    succ = _with_terms(net, {p: taken, hp.partner: hq.cont})
                    results[(label, succ)] = (label, succ)

    from .semantics import render_label
    from .abstract import render_annet
    return sorted(results.values(),
                  key=lambda r: (render_label(r[0]), render_annet(r[1])))


# --------------------------------------------------------------------------
# choreography-side bundle normalization

def normalize_multicom(c):
    """Split every bundle as finely as the splitting law allows and put
    each piece in canonical order.  Idempotent, equivalence-preserving."""
    from .semantics import _atomize

    if isinstance(c, Program):
        return Program(tuple((n, normalize_multicom(b)) for n, b in c.defs),
                       normalize_multicom(c.main))
    match c:
        case Seq(actions=acts, cont=cont):
            out = normalize_multicom(cont)
            for piece in reversed(_atomize(acts)):
                out = Seq(trace_canonical(piece), out)
            return out
        case Cond(p=p, q=q, then_branch=t, else_branch=e):
            return Cond(p, q, normalize_multicom(t), normalize_multicom(e))
        case Def(name=n, body=b, cont=k):
            return Def(n, normalize_multicom(b), normalize_multicom(k))
        case _:
            return c
