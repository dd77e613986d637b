"""Choreography extraction: graph search and term read-off.

The pipeline is:

1. lift the network and build (or lazily grow) the graph of all abstract
   reductions (`AesGraph`);
2. search for an execution subgraph: every non-terminal node commits to
   one communication edge or to both branches of one conditional
   (`find_valid_seg`).  The subgraph must be *valid*: every cycle passes
   through a node whose calls are all white, and every node a cycle
   re-enters must leave its call-free processes permanently stuck
   (otherwise the loop would starve them);
3. read the subgraph back as a choreography, introducing one procedure
   per node that a committed edge jumps back to (`seg_to_choreography`).

Validity is enforced with cheap incremental checks while searching - a
running count of all-white nodes on the stack decides back edges in
O(1), and edges into already-committed regions trigger a reachability
test - plus one full verification before a result is accepted.  When a
choice fails, the search restores the previous state and tries the next
candidate, so the exploration is exhaustive up to the node budget.

`extract_finite_rewriting` is an independent second route for finite
networks, rewriting the network to a choreography action by action; it
exists so the two routes can be checked against each other.
"""

from __future__ import annotations

import math
import os
import random
import sys
from dataclasses import dataclass

from .abstract import (
    AnnNet, finite_processes, is_all_white, is_terminated, lift, render_annet,
    step_network_abstract,
)
from .multicom import step_network_abstract_async
from .printing import render_behaviour
from .semantics import (
    ComLabel, ElseLabel, MultiLabel, SelLabel, ThenLabel, participants,
    render_label,
)
from .terms import (
    Branch, Call, Cond, CondSelf, Def, End, Network, Program, Recv, Select,
    Selection, Send, Seq, Stuck, ValueCom, network_size, subterms,
)

DEFAULT_MAX_NODES = 10 ** 6

SYNC = "sync"
ASYNC = "async"


class ResourceLimit(Exception):
    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(f"reduction graph exceeded {limit} nodes "
                         f"(raise with --max-nodes or CHOREX_MAX_NODES)")


class NotExtractable(Exception):
    def __init__(self, exhausted: tuple[str, ...]):
        self.exhausted = exhausted
        shown = "; ".join(exhausted[:3])
        more = f" (+{len(exhausted) - 3} more)" if len(exhausted) > 3 else ""
        super().__init__(
            f"no valid execution subgraph exists; every choice failed at "
            f"{len(exhausted)} node(s): {shown}{more}")


class NotFinite(Exception):
    pass


def _max_nodes(value=None) -> int:
    if value is not None:
        return value
    return int(os.environ.get("CHOREX_MAX_NODES", DEFAULT_MAX_NODES))


class AesGraph:
    """Interned graph of abstract reductions, grown eagerly or on demand."""

    def __init__(self, root: AnnNet, mode: str = SYNC, lazy: bool = False,
                 max_nodes: int | None = None):
        assert mode in (SYNC, ASYNC)
        self.mode = mode
        self.max_nodes = _max_nodes(max_nodes)
        self.nodes: list[AnnNet] = []
        self._ids: dict[AnnNet, int] = {}
        self._succ: dict[int, tuple] = {}
        self._white: dict[int, bool] = {}
        self._stuck_ok: dict[int, bool] = {}
        self.expansions = 0
        self.exhausted_report: tuple = ()
        self.root = self._intern(root)
        if not lazy:
            i = 0
            while i < len(self.nodes):
                self.successors(i)
                i += 1

    def _intern(self, node: AnnNet) -> int:
        nid = self._ids.get(node)
        if nid is None:
            if len(self.nodes) >= self.max_nodes:
                raise ResourceLimit(self.max_nodes)
            nid = len(self.nodes)
            self.nodes.append(node)
            self._ids[node] = nid
        return nid

    def successors(self, nid: int) -> tuple:
        cached = self._succ.get(nid)
        if cached is not None:
            return cached
        step = step_network_abstract if self.mode == SYNC else step_network_abstract_async
        out = tuple((label, self._intern(succ))
                    for label, succ in step(self.nodes[nid]))
        self._succ[nid] = out
        self.expansions += 1
        return out

    def is_white(self, nid: int) -> bool:
        if nid not in self._white:
            self._white[nid] = is_all_white(self.nodes[nid])
        return self._white[nid]

    def loop_entry_ok(self, nid: int) -> bool:
        """Call-free processes of this node take part in none of its edges."""
        if nid not in self._stuck_ok:
            finite = set(finite_processes(self.nodes[nid]))
            busy = set()
            for label, _ in self.successors(nid):
                busy |= participants(label)
            self._stuck_ok[nid] = finite.isdisjoint(busy)
        return self._stuck_ok[nid]

    def node_count(self) -> int:
        return len(self.nodes)

    def edge_count(self) -> int:
        return sum(len(self.successors(nid)) for nid in range(len(self.nodes)))


def build_aes(net: Network, mode: str = SYNC, lazy: bool = False,
              max_nodes: int | None = None) -> AesGraph:
    return AesGraph(lift(net), mode=mode, lazy=lazy, max_nodes=max_nodes)


def aes_node_bound(net: Network) -> float:
    """Worst-case node count for the reduction graph of `net`: e^(2n/e)
    in the total syntax size n."""
    n = network_size(net)
    return math.exp(2.0 * n / math.e)


# --------------------------------------------------------------------------
# execution subgraph search

@dataclass(frozen=True)
class Seg:
    root: int
    choices: dict            # nid -> ('leaf',) | ('act', label, tid) | ('cond', lt, t1, le, t2)
    back_targets: frozenset


def _candidates(graph: AesGraph, nid: int):
    """One entry per committable choice: a single interaction edge, or a
    then/else pair belonging to the same conditional."""
    conds: dict[tuple, dict] = {}
    acts = []
    for label, tid in graph.successors(nid):
        if isinstance(label, ThenLabel):
            conds.setdefault((label.p, label.q), {})["then"] = (label, tid)
        elif isinstance(label, ElseLabel):
            conds.setdefault((label.p, label.q), {})["else"] = (label, tid)
        else:
            acts.append((label, tid))
    out = []
    for label, tid in acts:
        kind = 1 if isinstance(label, SelLabel) else 0
        key = (min(participants(label)), kind, render_label(label))
        out.append((key, ("act", label, tid)))
    for (p, q), pair in conds.items():
        lt, t1 = pair["then"]
        le, t2 = pair["else"]
        key = (min(p, q), 2, render_label(lt))
        out.append((key, ("cond", lt, t1, le, t2)))
    out.sort(key=lambda e: e[0])
    return [cand for _, cand in out]


def find_valid_seg(graph: AesGraph, rng=None) -> Seg | None:
    """Depth-first search for a valid execution subgraph, trying choices
    in deterministic (or seeded) order with chronological backtracking."""
    chosen: dict[int, tuple] = {}
    committed: set[int] = set()
    back_targets: set[int] = set()
    stack: list[tuple[int, bool, int]] = []      # (nid, all_white, whites_below)
    stack_index: dict[int, int] = {}
    exhausted: set[int] = set()

    def whites_through(frame_idx: int) -> int:
        """All-white nodes from stack[frame_idx] to the top, inclusive."""
        _, top_white, top_wb = stack[-1]
        return top_wb + top_white - stack[frame_idx][2]

    def back_edge_ok(target: int) -> bool:
        if whites_through(stack_index[target]) < 1:
            return False
        return graph.loop_entry_ok(target)

    def cross_edge_ok(target: int) -> bool:
        """A committed region may loop back into the stack; make sure any
        cycle that closes through this edge still crosses a white node."""
        src = stack[-1][0]
        if graph.is_white(src):
            return True
        bad = {nid for nid, idx in stack_index.items() if whites_through(idx) == 0}
        seen = set()
        queue = [target]
        while queue:
            v = queue.pop()
            if v in seen or graph.is_white(v):
                continue
            seen.add(v)
            if v in bad:
                return False
            for t in _choice_targets(chosen.get(v)):
                queue.append(t)
        return True

    def child_ok(target: int) -> bool:
        if target in stack_index:
            if back_edge_ok(target):
                back_targets.add(target)
                return True
            return False
        if target in committed:
            return cross_edge_ok(target)
        return visit(target)

    def visit(nid: int) -> bool:
        cands = _candidates(graph, nid)
        if not cands:
            chosen[nid] = ("leaf",)
            committed.add(nid)
            return True
        if rng is not None:
            rng.shuffle(cands)
        white = graph.is_white(nid)
        wb = (stack[-1][2] + stack[-1][1]) if stack else 0
        stack.append((nid, white, wb))
        stack_index[nid] = len(stack) - 1
        try:
            for cand in cands:
                saved = (dict(chosen), set(committed), set(back_targets))
                chosen[nid] = cand
                if all(child_ok(t) for t in _choice_targets(cand)):
                    committed.add(nid)
                    return True
                restored_chosen, restored_committed, restored_back = saved
                chosen.clear(); chosen.update(restored_chosen)
                committed.clear(); committed.update(restored_committed)
                back_targets.clear(); back_targets.update(restored_back)
            exhausted.add(nid)
            return False
        finally:
            stack.pop()
            del stack_index[nid]

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 10000 + 50 * graph.node_count()))
    try:
        if visit(graph.root):
            seg = Seg(graph.root, dict(chosen), frozenset(back_targets))
            # The incremental checks are meant to be exact; a disagreement
            # here would mean a bug, and answering wrongly is worse than
            # crashing.
            assert _verify_seg(graph, seg), (
                "incremental validity checks disagree with the final "
                "verification; please report this")
            return seg
        graph.exhausted_report = tuple(sorted(
            render_annet(graph.nodes[nid]) for nid in exhausted))
        return None
    finally:
        sys.setrecursionlimit(old_limit)


def _choice_targets(choice) -> tuple:
    match choice:
        case None | ("leaf",):
            return ()
        case ("act", _, tid):
            return (tid,)
        case ("cond", _, t1, _, t2):
            return (t1, t2)
    raise AssertionError(choice)


def _verify_seg(graph: AesGraph, seg: Seg) -> bool:
    """Ground-truth validity: within the committed subgraph, no cycle
    avoids all-white nodes, and every re-entered node starves its
    call-free processes."""
    for target in seg.back_targets:
        if not graph.loop_entry_ok(target):
            return False
    # cycle check on the subgraph with all-white nodes removed
    colour: dict[int, int] = {}
    for start in seg.choices:
        if graph.is_white(start) or colour.get(start, 0) == 2:
            continue
        stack = [(start, iter(_choice_targets(seg.choices[start])))]
        colour[start] = 1
        while stack:
            nid, it = stack[-1]
            advanced = False
            for t in it:
                if graph.is_white(t):
                    continue
                c = colour.get(t, 0)
                if c == 1:
                    return False
                if c == 0:
                    colour[t] = 1
                    stack.append((t, iter(_choice_targets(seg.choices[t]))))
                    advanced = True
                    break
            if not advanced:
                colour[nid] = 2
                stack.pop()
    return True


# --------------------------------------------------------------------------
# read-off

def _label_to_interaction(label):
    if isinstance(label, ComLabel):
        return ValueCom(label.sender, label.payload, label.receiver)
    if isinstance(label, SelLabel):
        return Selection(label.sender, label.receiver, label.label)
    raise AssertionError(f"not an interaction label: {label!r}")


def _leaf_term(node: AnnNet):
    if is_terminated(node):
        return End()
    residue = tuple((name, render_behaviour(pr.term))
                    for name, pr in node.procs if not isinstance(pr.term, End))
    return Stuck(stuck=residue)


def seg_to_choreography(graph: AesGraph, seg: Seg) -> Program:
    """Turn the committed subgraph into a program.

    Nodes that committed edges jump back to become procedures; every
    other shared node is simply read out again (structurally shared in
    memory, semantically duplicated).
    """
    names: dict[int, str] = {}

    def proc_name(nid: int) -> str:
        if nid not in names:
            names[nid] = f"X{len(names) + 1}"
        return names[nid]

    memo: dict[int, object] = {}

    def ref(nid: int):
        if nid in seg.back_targets:
            return Call(proc_name(nid))
        return read(nid)

    def read(nid: int):
        if nid in memo:
            return memo[nid]
        choice = seg.choices[nid]
        match choice:
            case ("leaf",):
                term = _leaf_term(graph.nodes[nid])
            case ("act", label, tid):
                parts = label.parts if isinstance(label, MultiLabel) else (label,)
                term = Seq(tuple(_label_to_interaction(a) for a in parts), ref(tid))
            case ("cond", lt, t1, _, t2):
                term = Cond(lt.p, lt.q, ref(t1), ref(t2))
            case other:
                raise AssertionError(other)
        memo[nid] = term
        return term

    sys.setrecursionlimit(max(sys.getrecursionlimit(),
                              10000 + 50 * graph.node_count()))
    defs = tuple((proc_name(t), read(t))
                 for t in sorted(seg.back_targets, key=lambda n: (n != seg.root, n)))
    main = ref(seg.root)
    ordered = tuple(sorted(defs, key=lambda d: int(d[0][1:])))
    return Program(ordered, main)


def extract(net: Network, mode: str = SYNC, seed=None, lazy: bool = False,
            max_nodes: int | None = None) -> Program:
    """Extract a choreography describing every behaviour of `net`."""
    graph = build_aes(net, mode=mode, lazy=lazy, max_nodes=max_nodes)
    rng = random.Random(seed) if seed is not None else None
    seg = find_valid_seg(graph, rng=rng)
    if seg is None:
        raise NotExtractable(graph.exhausted_report)
    return seg_to_choreography(graph, seg)


# --------------------------------------------------------------------------
# finite networks: direct rewriting

def _behaviour_finite(b) -> bool:
    return not any(isinstance(s, (Call, Def)) for s in subterms(b))


def extract_finite_rewriting(net: Network, rng=None):
    """Rewrite a finite network into a choreography one action at a time.

    An independent route to the graph extractor, kept deliberately
    simple: find the enabled interactions, fire one (first in the same
    deterministic order the graph search uses, or chosen by `rng`),
    recurse.  Conditionals resolve both branches in a single rule,
    consuming the compared process's send.  A network with no enabled
    interaction that is not finished becomes the deadlock marker.
    """
    for name, b in net.procs:
        if not _behaviour_finite(b):
            raise NotFinite(f"process {name} uses procedure definitions")

    def heads(cur: Network) -> dict:
        return dict(cur.procs)

    def redexes(cur: Network):
        hs = heads(cur)
        out = []
        for p, hp in hs.items():
            match hp:
                case Send(to=q) if isinstance(hs.get(q), Recv) and hs[q].source == p:
                    out.append(((min(p, q), 0, f"{p}->{q}"), ("com", p, q)))
                case Select(to=q, label=l) if (isinstance(hs.get(q), Branch)
                                               and hs[q].source == p
                                               and l in hs[q].labels):
                    out.append(((min(p, q), 1, f"{p}->{q}"), ("sel", p, q)))
                case CondSelf(partner=q) if (isinstance(hs.get(q), Send)
                                             and hs[q].to == p):
                    out.append(((min(p, q), 2, f"{p}|{q}"), ("cond", p, q)))
                case _:
                    pass
        out.sort(key=lambda e: e[0])
        return [r for _, r in out]

    def replace(cur: Network, updates: dict) -> Network:
        return Network(tuple((n, updates.get(n, b)) for n, b in cur.procs))

    def go(cur: Network):
        if all(isinstance(b, End) for _, b in cur.procs):
            return End()
        rs = redexes(cur)
        if not rs:
            residue = tuple((n, render_behaviour(b)) for n, b in cur.procs
                            if not isinstance(b, End))
            return Stuck(stuck=residue)
        kind, p, q = rs[0] if rng is None else rng.choice(rs)
        hs = heads(cur)
        hp, hq = hs[p], hs[q]
        if kind == "com":
            nxt = replace(cur, {p: hp.cont, q: hq.cont})
            return Seq((ValueCom(p, hp.expr, q),), go(nxt))
        if kind == "sel":
            nxt = replace(cur, {p: hp.cont, q: hq.branch(hp.label)})
            return Seq((Selection(p, q, hp.label),), go(nxt))
        then_net = replace(cur, {p: hp.then_branch, q: hq.cont})
        else_net = replace(cur, {p: hp.else_branch, q: hq.cont})
        return Cond(p, q, go(then_net), go(else_net))

    return go(net)


# --------------------------------------------------------------------------
# definition inlining

def _rename_calls(term, old: str, new: str):
    """Rename calls to `old` into `new`, stopping at shadowing definitions."""
    match term:
        case Call(name=n, ann=a) if n == old:
            return Call(new, a)
        case Def(name=n) if n == old:
            return term
        case Def(name=n, body=b, cont=c):
            return Def(n, _rename_calls(b, old, new), _rename_calls(c, old, new))
        case Seq(actions=acts, cont=c):
            return Seq(acts, _rename_calls(c, old, new))
        case Cond(p=p, q=q, then_branch=t, else_branch=e):
            return Cond(p, q, _rename_calls(t, old, new), _rename_calls(e, old, new))
        case _:
            return term


def inline_definitions(prog: Program):
    """Fold top-level procedures into one nested term.

    The program's procedures become nested definitions, innermost at the
    point of use; a procedure embedded into more than one scope is
    duplicated, with later copies renamed apart (X, X2, X3, ...), so the
    result can grow exponentially in the number of definitions.
    """
    taken: set[str] = set()

    def fresh(name: str) -> str:
        if name not in taken:
            taken.add(name)
            return name
        i = 2
        while f"{name}{i}" in taken:
            i += 1
        out = f"{name}{i}"
        taken.add(out)
        return out

    def embed(defs: tuple, c):
        if not defs:
            return c
        (x, body), rest = defs[0], defs[1:]
        nx = fresh(x)
        if nx != x:
            body = _rename_calls(body, x, nx)
            c = _rename_calls(c, x, nx)
            rest = tuple((n, _rename_calls(b, x, nx)) for n, b in rest)
        return Def(nx, embed(rest, body), embed(rest, c))

    return embed(prog.defs, prog.main)


# --------------------------------------------------------------------------
# DOT rendering

def _dot_escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def to_dot(graph: AesGraph, title: str = "aes") -> str:
    """GraphViz rendering of the whole reduction graph."""
    lines = [f'digraph "{_dot_escape(title)}" {{',
             '  rankdir=TB;',
             '  node [shape=box, fontname="monospace"];']
    for nid in range(graph.node_count()):
        full = render_annet(graph.nodes[nid])
        label = full if len(full) <= 120 else full[:117] + "..."
        extra = ', style=bold' if nid == graph.root else ''
        lines.append(f'  n{nid} [label="{_dot_escape(label)}", '
                     f'tooltip="{_dot_escape(full)}"{extra}];')
    for nid in range(graph.node_count()):
        for label, tid in graph.successors(nid):
            lines.append(f'  n{nid} -> n{tid} '
                         f'[label="{_dot_escape(render_label(label))}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
