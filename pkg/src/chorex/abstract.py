"""State-free network reductions over annotated procedure calls.

Extraction explores how a network *could* behave without fixing memory
contents, so here conditionals offer both branches and value
communications carry the unevaluated expression.

To give graph nodes a stable identity, each process is first *lifted*:
nested definitions are hoisted (with renaming where needed) into a
per-process procedure table, leaving an active term with no binders.
The table never changes during reduction, so a node is just the tuple of
active terms plus the annotations on their calls.

Annotations drive loop detection: calls start white; unfolding a call
marks the calls it introduces black; once every call in the network is
black, all of them reset to white.  A node whose calls are all white is
a safe place for an extracted loop to pass through, since every process
has demonstrably made progress since the last reset.
"""

from __future__ import annotations

from dataclasses import dataclass

from .printing import render_behaviour
from .semantics import (
    ComLabel, ElseLabel, SelLabel, ThenLabel, UnboundProcedure, render_label,
)
from .terms import (
    Branch, Call, CondSelf, Def, End, Network, Recv, Select, Send, subterms,
)

WHITE = "w"
BLACK = "b"


@dataclass(frozen=True)
class LiftedProc:
    """One process: hoisted procedure table plus its binder-free active term."""

    env: tuple[tuple[str, object], ...]
    term: object

    @property
    def env_map(self) -> dict:
        return dict(self.env)


@dataclass(frozen=True)
class AnnNet:
    procs: tuple[tuple[str, LiftedProc], ...]

    def __post_init__(self):
        object.__setattr__(self, "procs", tuple(sorted(self.procs)))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.procs)

    def proc(self, name: str) -> LiftedProc:
        for n, pr in self.procs:
            if n == name:
                return pr
        raise KeyError(name)


# --------------------------------------------------------------------------
# lifting

def _fresh_name(base: str, used: set[str]) -> str:
    if base not in used:
        return base
    k = 2
    while f"{base}_{k}" in used:
        k += 1
    return f"{base}_{k}"


def _strip_defs(b, rename: dict, env_out: list, used: set[str]):
    """Rewrite b without Def nodes, appending hoisted bodies to env_out."""
    match b:
        case Def(name=n, body=body, cont=cont):
            fresh = _fresh_name(n, used)
            used.add(fresh)
            inner = {**rename, n: fresh}
            env_out.append((fresh, _strip_defs(body, inner, env_out, used)))
            return _strip_defs(cont, inner, env_out, used)
        case Call(name=n):
            return Call(rename[n])
        case Send(to=q, expr=e, cont=k):
            return Send(q, e, _strip_defs(k, rename, env_out, used))
        case Recv(source=q, cont=k):
            return Recv(q, _strip_defs(k, rename, env_out, used))
        case Select(to=q, label=l, cont=k):
            return Select(q, l, _strip_defs(k, rename, env_out, used))
        case Branch(source=q, branches=bs):
            return Branch(q, tuple(
                (l, _strip_defs(t, rename, env_out, used)) for l, t in bs))
        case CondSelf(partner=q, then_branch=t, else_branch=e):
            return CondSelf(q, _strip_defs(t, rename, env_out, used),
                            _strip_defs(e, rename, env_out, used))
        case _:
            return b


def mark_calls(term, mark):
    match term:
        case Call(name=n):
            return Call(n, ann=mark)
        case Send(to=q, expr=e, cont=k):
            return Send(q, e, mark_calls(k, mark))
        case Recv(source=q, cont=k):
            return Recv(q, mark_calls(k, mark))
        case Select(to=q, label=l, cont=k):
            return Select(q, l, mark_calls(k, mark))
        case Branch(source=q, branches=bs):
            return Branch(q, tuple((l, mark_calls(t, mark)) for l, t in bs))
        case CondSelf(partner=q, then_branch=t, else_branch=e):
            return CondSelf(q, mark_calls(t, mark), mark_calls(e, mark))
        case _:
            return term


def lift(net: Network) -> AnnNet:
    """Hoist definitions out of every process and whiten its calls."""
    procs = []
    for name, b in net.procs:
        env_out: list = []
        stripped = _strip_defs(b, {}, env_out, set())
        procs.append((name, LiftedProc(tuple(env_out), mark_calls(stripped, WHITE))))
    return AnnNet(tuple(procs))


# --------------------------------------------------------------------------
# annotation queries

def network_calls(net: AnnNet):
    for _, pr in net.procs:
        for sub in subterms(pr.term):
            if isinstance(sub, Call):
                yield sub


def is_all_white(net: AnnNet) -> bool:
    return all(c.ann == WHITE for c in network_calls(net))


def is_terminated(net: AnnNet) -> bool:
    return all(isinstance(pr.term, End) for _, pr in net.procs)


def finite_processes(net: AnnNet) -> tuple[str, ...]:
    """Processes whose active term makes no procedure call."""
    out = []
    for name, pr in net.procs:
        if not any(isinstance(s, Call) for s in subterms(pr.term)):
            out.append(name)
    return tuple(out)


def _flip_if_exhausted(net: AnnNet) -> AnnNet:
    calls = list(network_calls(net))
    if not calls or any(c.ann == WHITE for c in calls):
        return net
    return AnnNet(tuple(
        (name, LiftedProc(pr.env, mark_calls(pr.term, WHITE)))
        for name, pr in net.procs))


# --------------------------------------------------------------------------
# abstract synchronous stepping

def expose_term(pr: LiftedProc):
    """Unfold a leading call chain, blackening what it introduces.

    Returns the exposed term; only applied to processes that actually
    take part in a reduction, so bystanders keep their annotations.
    """
    env = pr.env_map
    cur = pr.term
    guard = set()
    while isinstance(cur, Call):
        if cur.name in guard:
            break
        guard.add(cur.name)
        if cur.name not in env:
            raise UnboundProcedure(cur.name)
        cur = mark_calls(env[cur.name], BLACK)
    return cur


def _with_terms(net: AnnNet, updates: dict) -> AnnNet:
    return _flip_if_exhausted(AnnNet(tuple(
        (name, LiftedProc(pr.env, updates.get(name, pr.term)))
        for name, pr in net.procs)))


def step_network_abstract(net: AnnNet):
    """All abstract reductions: communications, selections, and both
    branches of every enabled conditional."""
    exposed = {name: expose_term(net.proc(name)) for name in net.names}
    results = set()
    for p in net.names:
        hp = exposed[p]
        match hp:
            case Send(to=q, expr=e, cont=kp) if q in exposed:
                hq = exposed[q]
                if isinstance(hq, Recv) and hq.source == p:
                    results.add((ComLabel(p, e, q),
                                 _with_terms(net, {p: kp, q: hq.cont})))
            case Select(to=q, label=l, cont=kp) if q in exposed:
                hq = exposed[q]
                if isinstance(hq, Branch) and hq.source == p and l in hq.labels:
                    results.add((SelLabel(p, q, l),
                                 _with_terms(net, {p: kp, q: hq.branch(l)})))
            case CondSelf(partner=q, then_branch=t, else_branch=f) if q in exposed:
                hq = exposed[q]
                if isinstance(hq, Send) and hq.to == p:
                    results.add((ThenLabel(p, q),
                                 _with_terms(net, {p: t, q: hq.cont})))
                    results.add((ElseLabel(p, q),
                                 _with_terms(net, {p: f, q: hq.cont})))
            case _:
                pass
    return sorted(results, key=lambda r: (render_label(r[0]), render_annet(r[1])))


def render_annet(net: AnnNet, marks: bool = True, multiline: bool = False) -> str:
    """Active terms only, annotations shown; the procedure tables are
    implicit (they never change, and the figures of interest omit them)."""
    parts = [f"{name}: {render_behaviour(pr.term, marks=marks)}"
             for name, pr in net.procs]
    return ("\n".join(parts)) if multiline else (" | ".join(parts))
