"""Behavioural comparison of choreographies and networks.

Synchronous comparison is a straight bounded bisimulation game: both
sides expose labelled steps, and each move must be matched on the same
label, recursively, down to the requested depth.  Bundle labels are not
part of the synchronous game - a bundle is only observable through the
interleavings its independent parts admit.

Asynchronous comparison matches *completions*: on the network side a
message becomes observable when it is dequeued, so sends are silent and
each dequeue is one observable step.  The choreography side mirrors
that with a small machine that commits interactions silently (recording
each receiver's pending update, per-channel FIFO) and then delivers
them one at a time as the observable steps.  A process with a pending
delivery cannot take part in a new commitment, which keeps the
choreography from outrunning causality.
"""

from __future__ import annotations

from .semantics import (
    ComLabel, DeqLabel, ElseLabel, EnqLabel, MultiLabel, Queues, SelLabel,
    State, ThenLabel, participants, render_label, state, step_choreography,
    step_network_async, step_network_sync,
)
from .terms import Cond, Constant, Literal, Network, Program, Seq, ValueCom, subterms


# --------------------------------------------------------------------------
# plain trace enumeration

def trace_set(step_fn, config, depth: int) -> frozenset:
    """All label sequences of length <= depth from config.

    step_fn(config) must return an iterable of (label, next_config).
    The result is prefix-closed and includes the empty trace.
    """
    traces = {()}
    frontier = [((), config)]
    for _ in range(depth):
        nxt = []
        for prefix, cfg in frontier:
            for label, new_cfg in step_fn(cfg):
                t = prefix + (label,)
                if t not in traces:
                    traces.add(t)
                nxt.append((t, new_cfg))
        if not nxt:
            break
        frontier = nxt
    return frozenset(traces)


def choreography_stepper(prog: Program, multicoms: bool = True):
    def step(cfg):
        c, sigma = cfg
        out = []
        for label, c2, s2 in step_choreography(prog, c, sigma):
            if not multicoms and isinstance(label, MultiLabel):
                continue
            out.append((label, (c2, s2)))
        return out
    return step


def sync_stepper():
    def step(cfg):
        net, sigma = cfg
        return [(l, (n2, s2)) for l, n2, s2 in step_network_sync(net, sigma)]
    return step


def async_stepper():
    def step(cfg):
        net, sigma, queues = cfg
        return [(l, (n2, s2, q2))
                for l, n2, s2, q2 in step_network_async(net, sigma, queues)]
    return step


# --------------------------------------------------------------------------
# synchronous bounded bisimulation

class _Distinguished(Exception):
    def __init__(self, trace):
        self.trace = trace


def _group(moves):
    grouped: dict = {}
    for label, cfg in moves:
        grouped.setdefault(label, set()).add(cfg)
    return grouped


def _play(cfg_a, cfg_b, depth, step_a, step_b, cache):
    """Raise _Distinguished with the offending label path, or return
    quietly when the configurations are depth-bisimilar."""
    if depth == 0:
        return
    key = (cfg_a, cfg_b)
    if cache.get(key, -1) >= depth:
        return
    moves_a = _group(step_a(cfg_a))
    moves_b = _group(step_b(cfg_b))
    # iterate in rendered order so reported differences are stable
    for label in sorted(moves_a.keys() | moves_b.keys(), key=render_label):
        here = (render_label(label),)
        left = moves_a.get(label)
        right = moves_b.get(label)
        if left is None or right is None:
            side = "first" if right is None else "second"
            raise _Distinguished(here + (f"<only the {side} system offers this>",))
        failure = None
        for a2 in left:
            matched = False
            for b2 in right:
                try:
                    _play(a2, b2, depth - 1, step_a, step_b, cache)
                    matched = True
                    break
                except _Distinguished as d:
                    failure = d
            if not matched:
                raise _Distinguished(here + failure.trace)
        for b2 in right:
            matched = False
            for a2 in left:
                try:
                    _play(a2, b2, depth - 1, step_a, step_b, cache)
                    matched = True
                    break
                except _Distinguished as d:
                    failure = d
            if not matched:
                raise _Distinguished(here + failure.trace)
    cache[key] = depth


def _run_game(cfg_a, cfg_b, depth, step_a, step_b):
    try:
        _play(cfg_a, cfg_b, depth, step_a, step_b, {})
        return True, None
    except _Distinguished as d:
        return False, d.trace


# --------------------------------------------------------------------------
# asynchronous machines (completion labels)

_PENDING_EMPTY: tuple = ()


def _pending_receivers(pending) -> set:
    return {part.receiver for _, part in pending}


def _chor_async_steps(prog: Program):
    """Observable steps of the completion machine: silent commits to a
    fixpoint, then one delivery or one conditional per step."""

    def silent_closure(cfgs):
        seen = set(cfgs)
        work = list(cfgs)
        while work:
            c, sigma, pending = work.pop()
            busy = _pending_receivers(pending)
            for label, c2, _ in step_choreography(prog, c, sigma):
                if isinstance(label, (ThenLabel, ElseLabel)):
                    continue  # conditionals are observable, not commitments
                parts = label.parts if isinstance(label, MultiLabel) else (label,)
                if participants(label) & busy:
                    continue
                new_pending = pending + tuple((p.receiver, p) for p in parts)
                nxt = (c2, sigma, tuple(new_pending))
                if nxt not in seen:
                    seen.add(nxt)
                    work.append(nxt)
        return seen

    def step(cfg):
        out = []
        for c, sigma, pending in silent_closure([cfg]):
            busy = _pending_receivers(pending)
            # deliveries: head of each sender->receiver channel
            delivered_pairs = set()
            for i, (receiver, part) in enumerate(pending):
                pair = (part.sender, receiver)
                if pair in delivered_pairs:
                    continue
                delivered_pairs.add(pair)
                rest = pending[:i] + pending[i + 1:]
                if isinstance(part, ComLabel):
                    out.append((part, (c, sigma.set(receiver, part.payload), rest)))
                else:
                    out.append((part, (c, sigma, rest)))
            # conditionals involving no pending process
            for label, c2, s2 in step_choreography(prog, c, sigma):
                if isinstance(label, (ThenLabel, ElseLabel)):
                    if not (participants(label) & busy):
                        out.append((label, (c2, s2, pending)))
        return out

    return step


def _net_async_steps(queue_cap: int):
    """Observable steps of a network under the completion reading: close
    over enqueues (up to the cap), then take one dequeue, reporting the
    dequeued action as the label."""

    def step(cfg):
        seen = {cfg}
        work = [cfg]
        out = []
        while work:
            net, sigma, queues = work.pop()
            for label, n2, s2, q2 in step_network_async(net, sigma, queues):
                if isinstance(label, EnqLabel):
                    if q2.total() <= queue_cap:
                        nxt = (n2, s2, q2)
                        if nxt not in seen:
                            seen.add(nxt)
                            work.append(nxt)
                else:
                    assert isinstance(label, DeqLabel)
                    out.append((label.inner, (n2, s2, q2)))
        return out

    return step


def default_queue_cap(net: Network) -> int:
    return 2 * len(net.procs) + 2


# --------------------------------------------------------------------------
# initial-state sampling

_SAMPLE_CAP = 16


def sample_states(prog: Program) -> list[State]:
    """Initial memories worth checking: the all-default state, plus, for
    every conditional, states that pre-align or pre-split the compared
    processes' values using the constants the program mentions."""
    terms = [prog.main] + [body for _, body in prog.defs]
    pairs = set()
    consts = set()
    for t in terms:
        for sub in subterms(t):
            if isinstance(sub, Cond):
                pairs.add((sub.p, sub.q))
            elif isinstance(sub, Seq):
                for a in sub.actions:
                    if isinstance(a, ValueCom) and isinstance(a.expr, Literal) \
                            and isinstance(a.expr.value, Constant):
                        consts.add(a.expr.value)
    values = sorted(consts, key=lambda v: v.name) or [Constant("probe")]
    out = [State()]
    for p, q in sorted(pairs):
        for v in values:
            out.append(state({p: v, q: v}))   # compared values agree
            out.append(state({p: v}))         # compared values differ
    unique = []
    for s in out:
        if s not in unique:
            unique.append(s)
    return unique[:_SAMPLE_CAP]


# --------------------------------------------------------------------------
# public entry points

def bounded_bisim(prog: Program, net: Network, sigma0: State, depth: int,
                  mode: str = "sync"):
    """Compare a choreography with a network up to `depth` observable
    steps.  Returns (True, None) or (False, distinguishing label path).
    """
    if mode == "sync":
        step_a = choreography_stepper(prog, multicoms=False)
        step_b = sync_stepper()
        return _run_game((prog.main, sigma0), (net, sigma0), depth, step_a, step_b)
    if mode == "async":
        step_a = _chor_async_steps(prog)
        step_b = _net_async_steps(default_queue_cap(net))
        return _run_game((prog.main, sigma0, _PENDING_EMPTY),
                         (net, sigma0, Queues()), depth, step_a, step_b)
    raise ValueError(f"unknown mode: {mode!r}")


def sync_traces_embed(net: Network, sigma0: State, depth: int,
                      queue_cap=None) -> bool:
    """Does every synchronous trace of `net` up to `depth` also appear in
    the asynchronous trace set under the completion reading?

    Walks the synchronous transition system while carrying the full set of
    asynchronous configurations reachable on the same label path, so a
    mismatch is detected exactly when some path has no asynchronous match.
    """
    cap = default_queue_cap(net) if queue_cap is None else queue_cap
    sync_step = sync_stepper()
    async_step = _net_async_steps(cap)
    seen = set()
    stack = [((net, sigma0), frozenset({(net, sigma0, Queues())}), depth)]
    while stack:
        sync_cfg, async_cfgs, d = stack.pop()
        if d == 0 or (sync_cfg, async_cfgs, d) in seen:
            continue
        seen.add((sync_cfg, async_cfgs, d))
        matches = _group(m for cfg in async_cfgs for m in async_step(cfg))
        for label, nxt in sync_step(sync_cfg):
            if label not in matches:
                return False
            stack.append((nxt, frozenset(matches[label]), d - 1))
    return True


def async_can_replay(net: Network, sigma0: State, trace, queue_cap=None) -> bool:
    """Can the asynchronous semantics reproduce this synchronous trace?

    Sends may be buffered freely (up to the cap); each trace label must
    then be realisable as the matching dequeue.
    """
    cap = default_queue_cap(net) if queue_cap is None else queue_cap
    step = _net_async_steps(cap)
    configs = {(net, sigma0, Queues())}
    for wanted in trace:
        nxt = set()
        for cfg in configs:
            for label, cfg2 in step(cfg):
                if label == wanted:
                    nxt.add(cfg2)
        if not nxt:
            return False
        configs = nxt
    return True
