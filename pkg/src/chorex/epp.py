"""Endpoint projection: compiling a choreography onto its processes.

Each process receives the actions it takes part in; a conditional's
branches are projected onto bystanders by *merging* - identical
behaviour is kept, and offered branch sets are unioned, so a process
that cannot yet know which branch was taken behaves uniformly until the
deciding selection reaches it.  Merging is partial: a bystander whose
two continuations differ outside a branching cannot be projected, and
the error carries the path at which the difference showed up.

Procedures: a process keeps only the procedures it takes part in
(computed as a fixpoint over the call graph), and each process wraps
its projected bodies back into nested definitions.  Definitions are
nested callee-outermost; mutually recursive groups, which cannot be
linearised that way, fall back to re-embedding the missing definitions
inside the body that needs them, duplicating code but preserving
behaviour.
"""

from __future__ import annotations

from .printing import render_behaviour, render_expr
from .terms import (
    Branch, Call, Cond, CondSelf, Def, End, Network, Program, Recv, SELF,
    Select, Send, Seq, Stuck, ValueCom, call_names, process_names,
)


class MergeError(Exception):
    def __init__(self, path: tuple, reason: str):
        self.path = path
        self.reason = reason
        at = " / ".join(path) if path else "top"
        super().__init__(f"cannot merge at {at}: {reason}")


class ProjectionError(Exception):
    def __init__(self, process: str, cause):
        self.process = process
        self.cause = cause
        super().__init__(f"choreography is not projectable for {process}: {cause}")


# --------------------------------------------------------------------------
# merging

def merge(b1, b2, path: tuple = ()):
    """The least behaviour both arguments refine; only branch offers may
    differ between the two."""
    if b1 == b2:
        return b1
    match (b1, b2):
        case (Send(to=t1, expr=e1, cont=k1), Send(to=t2, expr=e2, cont=k2)) \
                if t1 == t2 and e1 == e2:
            return Send(t1, e1, merge(k1, k2, path + (f"{t1}!{render_expr(e1)}",)))
        case (Recv(source=s1, cont=k1), Recv(source=s2, cont=k2)) if s1 == s2:
            return Recv(s1, merge(k1, k2, path + (f"{s1}?",)))
        case (Select(to=t1, label=l1, cont=k1), Select(to=t2, label=l2, cont=k2)) \
                if t1 == t2 and l1 == l2:
            return Select(t1, l1, merge(k1, k2, path + (f"{t1}+{l1}",)))
        case (Branch(source=s1, branches=bs1), Branch(source=s2, branches=bs2)) \
                if s1 == s2:
            merged = dict(bs1)
            for label, t in bs2:
                if label in merged:
                    merged[label] = merge(merged[label], t,
                                          path + (f"{s1}&{label}",))
                else:
                    merged[label] = t
            return Branch(s1, tuple(merged.items()))
        case (CondSelf(partner=q1, then_branch=t1, else_branch=e1),
              CondSelf(partner=q2, then_branch=t2, else_branch=e2)) if q1 == q2:
            return CondSelf(q1, merge(t1, t2, path + (f"if *={q1} then",)),
                            merge(e1, e2, path + (f"if *={q1} else",)))
    raise MergeError(path, f"{render_behaviour(b1)}  vs  {render_behaviour(b2)}")


# --------------------------------------------------------------------------
# procedure usage

def procedure_usage(prog: Program) -> dict[str, frozenset]:
    """Processes taking part in each procedure, transitively through calls."""
    direct = {name: process_names(body) for name, body in prog.defs}
    calls = {name: call_names(body) for name, body in prog.defs}
    usage = dict(direct)
    changed = True
    while changed:
        changed = False
        for name in usage:
            combined = set(usage[name])
            for callee in calls[name]:
                combined |= usage.get(callee, set())
            if combined != usage[name]:
                usage[name] = combined
                changed = True
    return {name: frozenset(v) for name, v in usage.items()}


def unused_definitions(prog: Program) -> frozenset:
    """Defined procedures never reachable from the main choreography."""
    calls = {name: call_names(body) for name, body in prog.defs}
    reachable = set()
    work = list(call_names(prog.main))
    while work:
        x = work.pop()
        if x in reachable:
            continue
        reachable.add(x)
        work.extend(calls.get(x, ()))
    return frozenset(calls) - reachable


# --------------------------------------------------------------------------
# projecting one process

def project_behaviour(c, r: str, usage: dict):
    match c:
        case End() | Stuck():
            return End()
        case Seq(actions=actions, cont=cont):
            involved = [a for a in actions if r in (a.sender, a.receiver)]
            if len(involved) > 1:
                raise MergeError(
                    (), f"{r} appears in more than one action of a bundle")
            acc = project_behaviour(cont, r, usage)
            if not involved:
                return acc
            a = involved[0]
            if a.receiver == r:
                if isinstance(a, ValueCom):
                    return Recv(a.sender, acc)
                return Branch(a.sender, ((a.label, acc),))
            if isinstance(a, ValueCom):
                return Send(a.receiver, a.expr, acc)
            return Select(a.receiver, a.label, acc)
        case Cond(p=p, q=q, then_branch=t, else_branch=e):
            pt = project_behaviour(t, r, usage)
            pe = project_behaviour(e, r, usage)
            if r == p:
                return CondSelf(q, pt, pe)
            if r == q:
                return Send(p, SELF, merge(pt, pe, (f"if {p}={q}",)))
            return merge(pt, pe, (f"if {p}={q}",))
        case Call(name=name):
            if r in usage.get(name, frozenset()):
                return Call(name)
            return End()
        case Def():
            raise MergeError((), "nested definitions are not supported here; "
                                 "use top-level procedures")
    raise AssertionError(f"not a choreography term: {c!r}")


# --------------------------------------------------------------------------
# reassembling per-process definitions

def _sccs(nodes, edges):
    """Tarjan; emits strongly connected components callee-first."""
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    out: list = []
    counter = [0]

    def strongconnect(v):
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in edges.get(v, ()):
            if w not in index:
                strongconnect(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            comp = []
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp.append(w)
                if w == v:
                    break
            out.append(tuple(sorted(comp)))

    for v in sorted(nodes):
        if v not in index:
            strongconnect(v)
    return out


def _embed(names: tuple, term, bodies: dict):
    """Re-embed definitions for `names` around `term`, duplicating into
    each scope that needs them."""
    if not names:
        return term
    x, rest = names[0], names[1:]
    inner = _embed(rest, term, bodies)
    if x not in call_names(inner):
        return inner
    return Def(x, _embed(rest, bodies[x], bodies), inner)


def _wrap_definitions(main, bodies: dict):
    """Nest projected procedure definitions around a projected main term."""
    reachable = set()
    work = list(call_names(main))
    while work:
        x = work.pop()
        if x in reachable or x not in bodies:
            continue
        reachable.add(x)
        work.extend(call_names(bodies[x]))
    if not reachable:
        return main
    edges = {x: [y for y in call_names(bodies[x]) if y in reachable]
             for x in reachable}
    components = _sccs(reachable, edges)
    # Components arrive callee-first; a callee must enclose its callers,
    # so wrap in reverse: callers innermost, callees outermost.
    term = main
    for comp in reversed(components):
        term = _wrap_component(comp, term, bodies)
    return term


def _wrap_component(comp: tuple, term, bodies: dict):
    out = term
    for i in range(len(comp) - 1, -1, -1):
        x = comp[i]
        later = comp[i + 1:]
        out = Def(x, _embed(later, bodies[x], bodies), out)
    return out


# --------------------------------------------------------------------------
# whole-network projection

def epp(prog: Program) -> Network:
    """Project every process of the choreography, returning the network."""
    usage = procedure_usage(prog)
    processes = set(process_names(prog.main))
    for _, body in prog.defs:
        processes |= process_names(body)
    procs = []
    for r in sorted(processes):
        try:
            main_r = project_behaviour(prog.main, r, usage)
            bodies = {name: project_behaviour(body, r, usage)
                      for name, body in prog.defs
                      if r in usage.get(name, frozenset())}
            procs.append((r, _wrap_definitions(main_r, bodies)))
        except MergeError as exc:
            raise ProjectionError(r, exc) from exc
    return Network(tuple(procs))
