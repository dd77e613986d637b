"""Term languages for global and local views of a protocol.

Two ASTs live here.  A *choreography* describes a protocol from a global
viewpoint: communications `p.e -> q`, label selections `p -> q[l]`, atomic
bundles of interactions (multicoms), conditionals comparing two processes'
stored values, and recursive procedures.  A *network* is the local view: a
parallel composition of named processes, each running a behaviour built from
sends, receives, selections, branchings, conditionals and procedures.

A few node types are deliberately shared between the two languages (`End`,
`Def`, `Call`): they mean the same thing in both and the sharing keeps
projection and extraction code free of pointless conversions.

Constructors validate the structural invariants (sender != receiver,
distinct multicom receivers, distinct branch labels, bound procedure
calls) and raise `InvalidTerm` on violation.  All nodes are immutable and
hashable, so terms can be used directly as graph keys.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

IDENT_FIRST = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
IDENT_REST = IDENT_FIRST | set("0123456789")


class InvalidTerm(ValueError):
    """A term constructor was given arguments violating its invariants."""


def _check_ident(name: str, what: str) -> None:
    if not name:
        raise InvalidTerm(f"empty {what}")
    ok = name[0] in IDENT_FIRST and all(ch in IDENT_REST for ch in name[1:])
    if not ok and not name.isdigit():
        raise InvalidTerm(f"invalid {what}: {name!r}")


# --------------------------------------------------------------------------
# values and expressions

@dataclass(frozen=True)
class Constant:
    name: str

    def __post_init__(self):
        _check_ident(self.name, "constant")


@dataclass(frozen=True)
class Unit:
    """The default value stored by a process that was never written to."""


UNIT = Unit()
Value = Union[Constant, Unit]


@dataclass(frozen=True)
class Literal:
    value: Value


@dataclass(frozen=True)
class SelfRef:
    """The placeholder expression: evaluates to the sender's own value."""


SELF = SelfRef()
Expression = Union[Literal, SelfRef]


# --------------------------------------------------------------------------
# interactions (the building blocks of choreography sequences)

@dataclass(frozen=True)
class ValueCom:
    sender: str
    expr: Expression
    receiver: str

    def __post_init__(self):
        if self.sender == self.receiver:
            raise InvalidTerm(f"self-communication at {self.sender}")

    @property
    def processes(self) -> frozenset[str]:
        return frozenset((self.sender, self.receiver))


@dataclass(frozen=True)
class Selection:
    sender: str
    receiver: str
    label: str

    def __post_init__(self):
        if self.sender == self.receiver:
            raise InvalidTerm(f"self-selection at {self.sender}")
        _check_ident(self.label, "label")

    @property
    def processes(self) -> frozenset[str]:
        return frozenset((self.sender, self.receiver))


Interaction = Union[ValueCom, Selection]


# --------------------------------------------------------------------------
# shared nodes

@dataclass(frozen=True)
class End:
    """Terminated (inaction); rendered `0` in both languages."""


@dataclass(frozen=True)
class Call:
    """Procedure call.  `ann` is used only on network terms during
    extraction: 'w' (white) / 'b' (black) track whether the call was
    introduced by an unfolding since the annotations were last reset."""

    name: str
    ann: str | None = None

    def __post_init__(self):
        _check_ident(self.name, "procedure name")
        if self.ann not in (None, "w", "b"):
            raise InvalidTerm(f"bad annotation {self.ann!r}")


@dataclass(frozen=True)
class Def:
    """`def name = body in cont` — recursive procedure scoped to cont."""

    name: str
    body: "Choreography | Behaviour"
    cont: "Choreography | Behaviour"

    def __post_init__(self):
        _check_ident(self.name, "procedure name")


# --------------------------------------------------------------------------
# choreography-only nodes

@dataclass(frozen=True)
class Stuck:
    """Deadlocked residue marker, rendered `1`.

    `stuck` optionally records which processes were stuck and their
    rendered residual behaviours; it is diagnostic only and excluded
    from equality so that structurally identical choreographies compare
    equal regardless of provenance.
    """

    stuck: tuple[tuple[str, str], ...] = field(default=(), compare=False, hash=False)


@dataclass(frozen=True)
class Seq:
    """One interaction or an atomic multicom, followed by a continuation.

    `actions` of length 1 is a plain communication/selection; length >= 2
    is a multicom and all receivers must be pairwise distinct.
    """

    actions: tuple[Interaction, ...]
    cont: "Choreography"

    def __post_init__(self):
        if not self.actions:
            raise InvalidTerm("empty action bundle")
        receivers = [a.receiver for a in self.actions]
        if len(set(receivers)) != len(receivers):
            raise InvalidTerm(f"multicom with duplicate receivers: {receivers}")


@dataclass(frozen=True)
class Cond:
    """`if p=q then ... else ...`: p compares its value with q's."""

    p: str
    q: str
    then_branch: "Choreography"
    else_branch: "Choreography"

    def __post_init__(self):
        if self.p == self.q:
            raise InvalidTerm(f"conditional comparing {self.p} with itself")


Choreography = Union[End, Stuck, Seq, Cond, Def, Call]


@dataclass(frozen=True)
class Program:
    """A choreography with top-level procedure definitions.

    `defs` is an ordered name -> body association; every Call in the main
    term or any body must resolve to a top-level def or an enclosing
    nested `def ... in ...`.
    """

    defs: tuple[tuple[str, Choreography], ...]
    main: Choreography

    def __post_init__(self):
        names = [n for n, _ in self.defs]
        if len(set(names)) != len(names):
            raise InvalidTerm(f"duplicate procedure definitions: {names}")
        bound = frozenset(names)
        for name, body in self.defs:
            _check_calls_bound(body, bound)
        _check_calls_bound(self.main, bound)

    @property
    def defs_map(self) -> dict[str, Choreography]:
        return dict(self.defs)


# --------------------------------------------------------------------------
# behaviour-only nodes

@dataclass(frozen=True)
class Send:
    to: str
    expr: Expression
    cont: "Behaviour"


@dataclass(frozen=True)
class Recv:
    source: str
    cont: "Behaviour"


@dataclass(frozen=True)
class Select:
    to: str
    label: str
    cont: "Behaviour"

    def __post_init__(self):
        _check_ident(self.label, "label")


@dataclass(frozen=True)
class Branch:
    """Offer a choice of labelled continuations to `source`.

    Branches are stored sorted by label so that equal offers compare equal.
    """

    source: str
    branches: tuple[tuple[str, "Behaviour"], ...]

    def __post_init__(self):
        if not self.branches:
            raise InvalidTerm("branch with no options")
        labels = [l for l, _ in self.branches]
        if len(set(labels)) != len(labels):
            raise InvalidTerm(f"duplicate branch labels: {labels}")
        ordered = tuple(sorted(self.branches, key=lambda it: it[0]))
        object.__setattr__(self, "branches", ordered)

    def branch(self, label: str) -> "Behaviour":
        for l, b in self.branches:
            if l == label:
                return b
        raise KeyError(label)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.branches)


@dataclass(frozen=True)
class CondSelf:
    """`if *=q then ... else ...`: compare own value with the one q sends."""

    partner: str
    then_branch: "Behaviour"
    else_branch: "Behaviour"


Behaviour = Union[End, Send, Recv, Select, Branch, CondSelf, Def, Call]


@dataclass(frozen=True)
class Network:
    """Named parallel composition; processes are kept sorted by name."""

    procs: tuple[tuple[str, Behaviour], ...]

    def __post_init__(self):
        names = [n for n, _ in self.procs]
        if len(set(names)) != len(names):
            raise InvalidTerm(f"duplicate process names: {names}")
        for name, b in self.procs:
            _check_ident(name, "process name")
            _check_calls_bound(b, frozenset())
        object.__setattr__(self, "procs", tuple(sorted(self.procs)))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.procs)

    def behaviour(self, name: str) -> Behaviour:
        for n, b in self.procs:
            if n == name:
                return b
        raise KeyError(name)


def network(procs) -> Network:
    """Build a Network from a mapping or an iterable of (name, behaviour)."""
    if hasattr(procs, "items"):
        procs = procs.items()
    return Network(tuple(procs))


# --------------------------------------------------------------------------
# structural queries

def _check_calls_bound(term, bound: frozenset[str]) -> None:
    match term:
        case Call(name=n):
            if n not in bound:
                raise InvalidTerm(f"call to undefined procedure {n}")
        case Def(name=n, body=b, cont=c):
            inner = bound | {n}
            _check_calls_bound(b, inner)
            _check_calls_bound(c, inner)
        case Seq(cont=c):
            _check_calls_bound(c, bound)
        case Cond(then_branch=t, else_branch=e) | CondSelf(then_branch=t, else_branch=e):
            _check_calls_bound(t, bound)
            _check_calls_bound(e, bound)
        case Send(cont=c) | Recv(cont=c) | Select(cont=c):
            _check_calls_bound(c, bound)
        case Branch(branches=bs):
            for _, b in bs:
                _check_calls_bound(b, bound)
        case _:
            pass


def subterms(term) -> Iterator:
    """Yield term and all its syntactic descendants (both languages)."""
    stack = [term]
    while stack:
        t = stack.pop()
        yield t
        match t:
            case Seq(cont=c):
                stack.append(c)
            case Cond(then_branch=a, else_branch=b) | CondSelf(then_branch=a, else_branch=b):
                stack.extend((a, b))
            case Def(body=b, cont=c):
                stack.extend((b, c))
            case Send(cont=c) | Recv(cont=c) | Select(cont=c):
                stack.append(c)
            case Branch(branches=bs):
                stack.extend(b for _, b in bs)
            case _:
                pass


def process_names(term) -> set[str]:
    """All process names occurring syntactically in a term of either language."""
    out: set[str] = set()
    for t in subterms(term):
        match t:
            case ValueCom(sender=s, receiver=r) | Selection(sender=s, receiver=r):
                out.update((s, r))
            case Seq(actions=acts):
                for a in acts:
                    out.update((a.sender, a.receiver))
            case Cond(p=p, q=q):
                out.update((p, q))
            case Send(to=x) | Select(to=x) | CondSelf(partner=x):
                out.add(x)
            case Recv(source=x) | Branch(source=x):
                out.add(x)
            case _:
                pass
    return out


def ast_size(term) -> int:
    """Number of AST nodes, counting expressions; used for the size bound."""
    n = 0
    for t in subterms(term):
        n += 1
        match t:
            case Seq(actions=acts):
                n += 2 * len(acts)  # each interaction plus its payload
            case Send() | Cond() | CondSelf():
                n += 1
            case _:
                pass
    return n


def network_size(net: Network) -> int:
    return sum(ast_size(b) for _, b in net.procs)


def call_names(term) -> set[str]:
    return {t.name for t in subterms(term) if isinstance(t, Call)}
