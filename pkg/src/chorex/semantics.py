"""Concrete labelled reductions and structural equivalence.

Three steppers live here: one for choreographies and two for networks
(synchronous rendezvous and asynchronous FIFO queues).  Each returns the
full set of enabled successor configurations, deterministically ordered,
so callers can enumerate ("all reductions") or pick one ("simulate").

Choreography stepping is closed under the structural rearrangement laws:
independent interactions may fire ahead of earlier ones, and any prefix
of a multicom that does not depend on the rest may fire on its own.
`struct_equiv` decides the equivalence generated by those same laws
(swapping independent actions, permuting inside a multicom, merging and
splitting adjacent multicoms), via a greedy normal form with a bounded
search fallback.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .printing import render_choreography, render_expr, render_value
from .terms import (
    Branch, Call, Cond, CondSelf, Def, End, Literal, Network, Program, Recv,
    Select, Selection, SelfRef, Send, Seq, Stuck, UNIT, Value, ValueCom,
)


class UnboundProcedure(Exception):
    pass


# --------------------------------------------------------------------------
# process stores and message queues

@dataclass(frozen=True)
class State:
    """Total map from process names to values; unlisted processes hold Unit.

    Unit entries are dropped and the rest sorted, so two states that agree
    as functions are equal as values.
    """

    entries: tuple[tuple[str, Value], ...] = ()

    def __post_init__(self):
        cleaned = tuple(sorted((p, v) for p, v in self.entries if v != UNIT))
        object.__setattr__(self, "entries", cleaned)

    def get(self, p: str) -> Value:
        for name, v in self.entries:
            if name == p:
                return v
        return UNIT

    def set(self, p: str, v: Value) -> "State":
        rest = tuple(it for it in self.entries if it[0] != p)
        return State(rest + ((p, v),))


def state(mapping=None, **values) -> State:
    items = dict(mapping or {})
    items.update(values)
    return State(tuple(items.items()))


@dataclass(frozen=True)
class Msg:
    value: Value


@dataclass(frozen=True)
class SelMsg:
    label: str


@dataclass(frozen=True)
class Queues:
    """Per ordered sender/receiver pair, a FIFO of in-flight messages."""

    entries: tuple[tuple[tuple[str, str], tuple], ...] = ()

    def __post_init__(self):
        cleaned = tuple(sorted((k, q) for k, q in self.entries if q))
        object.__setattr__(self, "entries", cleaned)

    def fifo(self, sender: str, receiver: str) -> tuple:
        for key, q in self.entries:
            if key == (sender, receiver):
                return q
        return ()

    def push(self, sender: str, receiver: str, item) -> "Queues":
        key = (sender, receiver)
        rest = tuple(it for it in self.entries if it[0] != key)
        return Queues(rest + ((key, self.fifo(sender, receiver) + (item,)),))

    def pop(self, sender: str, receiver: str) -> "Queues":
        key = (sender, receiver)
        q = self.fifo(sender, receiver)
        assert q, f"pop from empty queue {key}"
        rest = tuple(it for it in self.entries if it[0] != key)
        return Queues(rest + ((key, q[1:]),))

    def total(self) -> int:
        return sum(len(q) for _, q in self.entries)


# --------------------------------------------------------------------------
# reduction labels

@dataclass(frozen=True)
class ComLabel:
    sender: str
    payload: object     # a Value in concrete runs, an Expression in abstract ones
    receiver: str


@dataclass(frozen=True)
class SelLabel:
    sender: str
    receiver: str
    label: str


@dataclass(frozen=True)
class ThenLabel:
    p: str
    q: str


@dataclass(frozen=True)
class ElseLabel:
    p: str
    q: str


@dataclass(frozen=True)
class MultiLabel:
    parts: tuple


@dataclass(frozen=True)
class EnqLabel:
    inner: object


@dataclass(frozen=True)
class DeqLabel:
    inner: object


Label = Union[ComLabel, SelLabel, ThenLabel, ElseLabel, MultiLabel, EnqLabel, DeqLabel]


def _payload_text(payload) -> str:
    if isinstance(payload, (Literal, SelfRef)):
        return render_expr(payload)
    return render_value(payload)


def render_label(label) -> str:
    match label:
        case ComLabel(sender=p, payload=v, receiver=q):
            return f"{p}.{_payload_text(v)} -> {q}"
        case SelLabel(sender=p, receiver=q, label=l):
            return f"{p} -> {q}[{l}]"
        case ThenLabel(p=p, q=q):
            return f"{p}={q}:then"
        case ElseLabel(p=p, q=q):
            return f"{p}={q}:else"
        case MultiLabel(parts=parts):
            return "(" + " | ".join(render_label(a) for a in parts) + ")"
        case EnqLabel(inner=a):
            return f"enq[{render_label(a)}]"
        case DeqLabel(inner=a):
            return f"deq[{render_label(a)}]"
    raise TypeError(f"not a label: {label!r}")


def participants(label) -> frozenset[str]:
    match label:
        case ComLabel(sender=p, receiver=q) | SelLabel(sender=p, receiver=q):
            return frozenset((p, q))
        case ThenLabel(p=p, q=q) | ElseLabel(p=p, q=q):
            return frozenset((p, q))
        case MultiLabel(parts=parts):
            out = frozenset()
            for a in parts:
                out |= participants(a)
            return out
        case EnqLabel(inner=a) | DeqLabel(inner=a):
            return participants(a)
    raise TypeError(f"not a label: {label!r}")


def _pair_key(a) -> tuple:
    if isinstance(a, (ComLabel, ValueCom)):
        extra = _payload_text(a.payload) if isinstance(a, ComLabel) else render_expr(a.expr)
        return (a.sender, a.receiver, 0, extra)
    return (a.sender, a.receiver, 1, a.label)


def _pair_pn(a) -> frozenset[str]:
    return frozenset((a.sender, a.receiver))


def trace_canonical(parts) -> tuple:
    """Least representative of a bundle under swapping independent members.

    Repeatedly pulls to the front the smallest element (by sender/receiver)
    among those whose processes are disjoint from everything before them,
    which is exactly the freedom the permutation rule grants.
    """
    rest = list(parts)
    out = []
    while rest:
        best = None
        for i, a in enumerate(rest):
            if any(not _pair_pn(a).isdisjoint(_pair_pn(rest[j])) for j in range(i)):
                continue
            if best is None or _pair_key(a) < _pair_key(rest[best]):
                best = i
        assert best is not None  # index 0 is always movable
        out.append(rest.pop(best))
    return tuple(out)


def bundle_canonical(parts) -> tuple:
    """Total order for the members of one atomic bundle.

    A bundle commits as a unit - sends read the pre-state, receivers are
    updated together - so the textual order of its members carries no
    meaning and labels can be sorted outright.  (Contrast with
    `trace_canonical`, which reorders *sequences* and must respect
    process overlap.)
    """
    return tuple(sorted(parts, key=_pair_key))


def make_label(parts) -> Label:
    parts = tuple(parts)
    if len(parts) == 1:
        return parts[0]
    return MultiLabel(bundle_canonical(parts))


# --------------------------------------------------------------------------
# expression evaluation

def eval_expr(e, self_value: Value) -> Value:
    """Literal(v) evaluates to v; the placeholder * to the sender's value."""
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, SelfRef):
        return self_value
    raise TypeError(f"not an expression: {e!r}")


# --------------------------------------------------------------------------
# choreography stepping

_SPLIT_LIMIT = 12


def _rcv(actions) -> set[str]:
    return {a.receiver for a in actions}


def _snd(actions) -> set[str]:
    return {a.sender for a in actions}


def _pn(actions) -> set[str]:
    out: set[str] = set()
    for a in actions:
        out.update((a.sender, a.receiver))
    return out


def initial_splits(actions: tuple) -> list[tuple[int, ...]]:
    """Index sets S such that `actions` may fire S first, rest after.

    S must be closed under dependencies (an action joins only together
    with every earlier action sharing a process) and no receiver in S may
    be a sender of the remainder, mirroring the multicom merge/split side
    conditions.  Includes the full set (firing the bundle whole).
    """
    k = len(actions)
    if k > _SPLIT_LIMIT:
        return [tuple(range(k))]
    pns = [a.processes for a in actions]
    out = []
    for mask in range(1, 1 << k):
        sel = [i for i in range(k) if mask >> i & 1]
        ok = all(
            (mask >> j & 1) or pns[j].isdisjoint(pns[i])
            for i in sel for j in range(i)
        )
        if not ok:
            continue
        rest = [i for i in range(k) if not (mask >> i & 1)]
        rcv_s = {actions[i].receiver for i in sel}
        if any(actions[j].sender in rcv_s for j in rest):
            continue
        out.append(tuple(sel))
    return out


def _chor_moves(c, env, sigma, blocked, seen):
    """Yield ('act', actions, c') and ('then'/'else', p, q, c') moves,
    including moves of later independent actions (structural closure)."""
    match c:
        case Seq(actions=acts, cont=cont):
            group_pn = _pn(acts)
            for idx in initial_splits(acts):
                fired = tuple(acts[i] for i in idx)
                if blocked & _pn(fired):
                    continue
                rest = tuple(acts[i] for i in range(len(acts)) if i not in idx)
                yield ("act", fired, Seq(rest, cont) if rest else cont)
            for kind, *mid, new_cont in _chor_moves(cont, env, sigma,
                                                    blocked | group_pn, seen):
                yield (kind, *mid, Seq(acts, new_cont))
        case Cond(p=p, q=q, then_branch=t, else_branch=e):
            if not blocked:
                if sigma.get(p) == sigma.get(q):
                    yield ("then", p, q, t)
                else:
                    yield ("else", p, q, e)
        case Def(name=n, body=b, cont=k):
            env2 = {**env, n: b}
            for kind, *mid, new_cont in _chor_moves(k, env2, sigma, blocked, seen):
                yield (kind, *mid, Def(n, b, new_cont))
        case Call(name=n):
            if n in seen:
                return
            if n not in env:
                raise UnboundProcedure(n)
            yield from _chor_moves(env[n], env, sigma, blocked, seen | {n})
        case _:
            return


def step_choreography(prog: Program, c, sigma: State):
    """All concrete reductions of c under prog's definitions.

    Multicoms fire atomically: every send is evaluated against the
    pre-state, then all receivers are updated at once.
    """
    results = set()
    for move in _chor_moves(c, prog.defs_map, sigma, frozenset(), frozenset()):
        if move[0] == "act":
            _, actions, cont = move
            parts = []
            new_sigma = sigma
            for a in actions:
                if isinstance(a, ValueCom):
                    v = eval_expr(a.expr, sigma.get(a.sender))
                    parts.append(ComLabel(a.sender, v, a.receiver))
                    new_sigma = new_sigma.set(a.receiver, v)
                else:
                    parts.append(SelLabel(a.sender, a.receiver, a.label))
            results.add((make_label(parts), cont, new_sigma))
        elif move[0] == "then":
            _, p, q, cont = move
            results.add((ThenLabel(p, q), cont, sigma))
        else:
            _, p, q, cont = move
            results.add((ElseLabel(p, q), cont, sigma))
    return sorted(results, key=lambda r: (render_label(r[0]),
                                          render_choreography(r[1], marks=True)))


# --------------------------------------------------------------------------
# network stepping

def expose_head(b, env=None):
    """Unfold definitions/calls at the front of a behaviour.

    Returns (head, wrap) where head is the first non-Def non-Call node (or
    a Call whose unfolding cannot progress) and wrap(b') rebuilds the
    behaviour around a replacement head, keeping every binder in scope.
    """
    env = dict(env) if env else {}
    binders = []
    guard = set()
    cur = b
    while True:
        if isinstance(cur, Def):
            binders.append((cur.name, cur.body))
            env[cur.name] = cur.body
            cur = cur.cont
        elif isinstance(cur, Call):
            if cur.name in guard:
                break
            if cur.name not in env:
                raise UnboundProcedure(cur.name)
            guard.add(cur.name)
            cur = env[cur.name]
        else:
            break

    def wrap(new):
        out = new
        for name, body in reversed(binders):
            out = Def(name, body, out)
        return out

    return cur, wrap


def step_network_sync(net: Network, sigma: State):
    """All synchronous rendezvous reductions: send/receive, select/branch,
    and conditional paired with the compared process's send."""
    heads = {}
    for name, b in net.procs:
        heads[name] = expose_head(b)
    out = []
    for p in net.names:
        hp, wrap_p = heads[p]
        match hp:
            case Send(to=q, expr=e, cont=kp) if q in heads:
                hq, wrap_q = heads[q]
                if isinstance(hq, Recv) and hq.source == p:
                    v = eval_expr(e, sigma.get(p))
                    out.append((ComLabel(p, v, q),
                                _replace(net, {p: wrap_p(kp), q: wrap_q(hq.cont)}),
                                sigma.set(q, v)))
            case Select(to=q, label=l, cont=kp) if q in heads:
                hq, wrap_q = heads[q]
                if isinstance(hq, Branch) and hq.source == p and l in hq.labels:
                    out.append((SelLabel(p, q, l),
                                _replace(net, {p: wrap_p(kp), q: wrap_q(hq.branch(l))}),
                                sigma))
            case CondSelf(partner=q, then_branch=t, else_branch=f) if q in heads:
                hq, wrap_q = heads[q]
                if isinstance(hq, Send) and hq.to == p:
                    v = eval_expr(hq.expr, sigma.get(q))
                    if v == sigma.get(p):
                        label, taken = ThenLabel(p, q), t
                    else:
                        label, taken = ElseLabel(p, q), f
                    out.append((label,
                                _replace(net, {p: wrap_p(taken), q: wrap_q(hq.cont)}),
                                sigma))
            case _:
                pass
    return sorted(out, key=lambda r: render_label(r[0]))


def _replace(net: Network, updates: dict) -> Network:
    return Network(tuple((n, updates.get(n, b)) for n, b in net.procs))


def step_network_async(net: Network, sigma: State, queues: Queues):
    """Asynchronous reductions: sends and selections enqueue; receives,
    branches and conditionals consume the head of their incoming queue."""
    out = []
    for p, b in net.procs:
        head, wrap = expose_head(b)
        match head:
            case Send(to=q, expr=e, cont=k):
                v = eval_expr(e, sigma.get(p))
                out.append((EnqLabel(ComLabel(p, v, q)),
                            _replace(net, {p: wrap(k)}), sigma,
                            queues.push(p, q, Msg(v))))
            case Select(to=q, label=l, cont=k):
                out.append((EnqLabel(SelLabel(p, q, l)),
                            _replace(net, {p: wrap(k)}), sigma,
                            queues.push(p, q, SelMsg(l))))
            case Recv(source=q, cont=k):
                fifo = queues.fifo(q, p)
                if fifo and isinstance(fifo[0], Msg):
                    v = fifo[0].value
                    out.append((DeqLabel(ComLabel(q, v, p)),
                                _replace(net, {p: wrap(k)}), sigma.set(p, v),
                                queues.pop(q, p)))
            case Branch(source=q):
                fifo = queues.fifo(q, p)
                if fifo and isinstance(fifo[0], SelMsg) and fifo[0].label in head.labels:
                    out.append((DeqLabel(SelLabel(q, p, fifo[0].label)),
                                _replace(net, {p: wrap(head.branch(fifo[0].label))}),
                                sigma, queues.pop(q, p)))
            case CondSelf(partner=q, then_branch=t, else_branch=f):
                fifo = queues.fifo(q, p)
                if fifo and isinstance(fifo[0], Msg):
                    if fifo[0].value == sigma.get(p):
                        label, taken = ThenLabel(p, q), t
                    else:
                        label, taken = ElseLabel(p, q), f
                    out.append((DeqLabel(label),
                                _replace(net, {p: wrap(taken)}), sigma,
                                queues.pop(q, p)))
            case _:
                pass
    return sorted(out, key=lambda r: render_label(r[0]))


# --------------------------------------------------------------------------
# structural equivalence on choreographies

def _groups_mergeable(first, second) -> bool:
    rcv_first = _rcv(first)
    return rcv_first.isdisjoint(_rcv(second)) and rcv_first.isdisjoint(_snd(second))


def _atomize(bundle):
    """Split one simultaneous bundle into its inseparable pieces.

    A bundle may split into an earlier and a later part only when no
    receiver of the earlier part is a sender of the later one, so members
    on a cycle of receiver-feeds-sender constraints can never be pulled
    apart.  Returns those pieces in an order compatible with the
    one-directional constraints that remain.
    """
    members = list(bundle)
    n = len(members)
    # feeds[i][j]: member i receives at a process that member j sends from,
    # so i may never be placed strictly before j.
    feeds = [[members[i].receiver == members[j].sender and i != j
              for j in range(n)] for i in range(n)]
    reach = [row[:] for row in feeds]
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    groups: list[list[int]] = []
    assigned = [False] * n
    for i in range(n):
        if assigned[i]:
            continue
        cyc = [j for j in range(n)
               if j == i or (reach[i][j] and reach[j][i])]
        for j in cyc:
            assigned[j] = True
        groups.append(cyc)
    atoms = [tuple(members[j] for j in g) for g in groups]
    keys = [sorted(_pair_key(x) for x in a) for a in atoms]
    out = []
    remaining = list(range(len(atoms)))
    while remaining:
        # a piece is emittable once every piece it defers to is out:
        # member i feeding member j forces j's piece to come first
        ready = [gi for gi in remaining
                 if not any(feeds[i][j]
                            for gj in remaining if gj != gi
                            for i in groups[gi] for j in groups[gj])]
        gi = min(ready, key=lambda g: keys[g])
        remaining.remove(gi)
        out.append(atoms[gi])
    return out


def _atom_sets(atom):
    return {x.receiver for x in atom}, {x.sender for x in atom}


def _atoms_independent(u, v) -> bool:
    rcv_u, snd_u = _atom_sets(u)
    rcv_v, snd_v = _atom_sets(v)
    return (rcv_u.isdisjoint(rcv_v) and rcv_u.isdisjoint(snd_v)
            and rcv_v.isdisjoint(snd_u))


def _atom_key(atom):
    return [_pair_key(x) for x in atom]


def canonical_form(c):
    """Normal form for comparing choreographies up to reordering.

    Runs of interactions between structural boundaries are broken into
    inseparable atoms, then rewritten as the least sequence reachable by
    commuting independent atoms: two atoms commute when neither receives
    at a process the other touches as sender or receiver.  Procedure
    calls are opaque.
    """
    match c:
        case Seq():
            atoms = []
            cur = c
            while isinstance(cur, Seq):
                atoms.extend(bundle_canonical(a) for a in _atomize(cur.actions))
                cur = cur.cont
            rest = atoms
            ordered = []
            while rest:
                best = None
                for i, a in enumerate(rest):
                    if any(not _atoms_independent(a, rest[j]) for j in range(i)):
                        continue
                    if best is None or _atom_key(a) < _atom_key(rest[best]):
                        best = i
                ordered.append(rest.pop(best))
            out = canonical_form(cur)
            for atom in reversed(ordered):
                out = Seq(atom, out)
            return out
        case Cond(p=p, q=q, then_branch=t, else_branch=e):
            return Cond(p, q, canonical_form(t), canonical_form(e))
        case Def(name=n, body=b, cont=k):
            return Def(n, canonical_form(b), canonical_form(k))
        case _:
            return c


def _rewrite_positions(c):
    """Yield (subterm, rebuild) for every position where a Seq chain starts."""
    yield c, lambda x: x
    match c:
        case Seq(actions=acts, cont=k):
            for sub, rebuild in _rewrite_positions(k):
                yield sub, (lambda x, _a=acts, _r=rebuild: Seq(_a, _r(x)))
        case Cond(p=p, q=q, then_branch=t, else_branch=e):
            for sub, rebuild in _rewrite_positions(t):
                yield sub, (lambda x, _r=rebuild: Cond(p, q, _r(x), e))
            for sub, rebuild in _rewrite_positions(e):
                yield sub, (lambda x, _r=rebuild: Cond(p, q, t, _r(x)))
        case Def(name=n, body=b, cont=k):
            for sub, rebuild in _rewrite_positions(b):
                yield sub, (lambda x, _r=rebuild: Def(n, _r(x), k))
            for sub, rebuild in _rewrite_positions(k):
                yield sub, (lambda x, _r=rebuild: Def(n, b, _r(x)))
        case _:
            pass


def _equiv_neighbours(c):
    """Single merge/split rule applications anywhere in the term, canonicalized."""
    out = set()
    for sub, rebuild in _rewrite_positions(c):
        if not isinstance(sub, Seq):
            continue
        acts, cont = sub.actions, sub.cont
        # split off any proper independent prefix
        for idx in initial_splits(acts):
            if len(idx) == len(acts):
                continue
            fired = tuple(acts[i] for i in idx)
            rest = tuple(acts[i] for i in range(len(acts)) if i not in idx)
            out.add(canonical_form(rebuild(Seq(fired, Seq(rest, cont)))))
        # merge with the following bundle
        if isinstance(cont, Seq) and _groups_mergeable(acts, cont.actions):
            out.add(canonical_form(rebuild(Seq(acts + cont.actions, cont.cont))))
    out.discard(canonical_form(c))
    return out


def struct_equiv(c1, c2, depth: int = 6, max_states: int = 20000) -> bool:
    """Decide the structural equivalence generated by swapping independent
    actions and merging/splitting multicoms, congruence-closed.

    Equal greedy normal forms answer immediately; otherwise a bounded
    bidirectional search over rule applications (at most `depth` total)
    looks for a common form.
    """
    a, b = canonical_form(c1), canonical_form(c2)
    if a == b:
        return True
    seen_a, seen_b = {a}, {b}
    front_a, front_b = {a}, {b}
    for _ in range(depth):
        if len(front_a) <= len(front_b):
            front, seen, other = front_a, seen_a, seen_b
        else:
            front, seen, other = front_b, seen_b, seen_a
        new = set()
        for term in front:
            new |= _equiv_neighbours(term) - seen
        if not new:
            return False
        seen |= new
        if new & other:
            return True
        if len(seen_a) + len(seen_b) > max_states:
            return False
        if front is front_a:
            front_a = new
        else:
            front_b = new
    return False
