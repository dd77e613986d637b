"""Canonical text rendering for terms.

The output is deterministic (canonical spacing, branch maps already
label-sorted by construction) and re-parses to an equal AST.  Grammar
sketch, same one the parser accepts:

    network      p { B } | q { B } | ...
    B            q!e; B   p?; B   q+l; B   p&{ l: B, ... }
                 if *=q then B else B   def X = B in B   X   0
    program      def X = C  (zero or more)   main = C
    C            p.e -> q; C   p -> q[l]; C   (eta | eta | ...); C
                 if p=q then C else C   def X = C in C   X   0   1
    e            identifier, integer literal, or *

With `marks=True`, procedure-call annotations from extraction are shown
as X° / X* suffixes; that form is for diagnostics and DOT output only
and is not accepted back by the parser.
"""

from __future__ import annotations

from .terms import (
    Branch, Call, Cond, CondSelf, Constant, Def, End, Literal, Network,
    Program, Recv, Select, Selection, SelfRef, Send, Seq, Stuck, Unit,
    ValueCom, subterms,
)

WHITE_MARK = "∘"   # ring operator, printed after an unmarked-call name
BLACK_MARK = "•"


def render_value(v) -> str:
    if isinstance(v, Constant):
        return v.name
    if isinstance(v, Unit):
        return "()"
    raise TypeError(f"not a value: {v!r}")


def render_expr(e) -> str:
    if isinstance(e, SelfRef):
        return "*"
    if isinstance(e, Literal):
        return render_value(e.value)
    raise TypeError(f"not an expression: {e!r}")


def render_interaction(a) -> str:
    if isinstance(a, ValueCom):
        return f"{a.sender}.{render_expr(a.expr)} -> {a.receiver}"
    if isinstance(a, Selection):
        return f"{a.sender} -> {a.receiver}[{a.label}]"
    raise TypeError(f"not an interaction: {a!r}")


def render_choreography(c, marks: bool = False) -> str:
    match c:
        case End():
            return "0"
        case Stuck():
            return "1"
        case Seq(actions=acts, cont=cont):
            if len(acts) == 1:
                head = render_interaction(acts[0])
            else:
                head = "(" + " | ".join(render_interaction(a) for a in acts) + ")"
            return f"{head}; {render_choreography(cont, marks)}"
        case Cond(p=p, q=q, then_branch=t, else_branch=e):
            return (f"if {p}={q} then {render_choreography(t, marks)}"
                    f" else {render_choreography(e, marks)}")
        case Def(name=n, body=b, cont=k):
            return (f"def {n} = {render_choreography(b, marks)}"
                    f" in {render_choreography(k, marks)}")
        case Call(name=n, ann=a):
            return n + _mark(a, marks)
    raise TypeError(f"not a choreography: {c!r}")


def _mark(ann, marks: bool) -> str:
    if not marks or ann is None:
        return ""
    return WHITE_MARK if ann == "w" else BLACK_MARK


def render_behaviour(b, marks: bool = False) -> str:
    match b:
        case End():
            return "0"
        case Send(to=q, expr=e, cont=k):
            return f"{q}!{render_expr(e)}; {render_behaviour(k, marks)}"
        case Recv(source=p, cont=k):
            return f"{p}?; {render_behaviour(k, marks)}"
        case Select(to=q, label=l, cont=k):
            return f"{q}+{l}; {render_behaviour(k, marks)}"
        case Branch(source=p, branches=bs):
            inner = ", ".join(f"{l}: {render_behaviour(x, marks)}" for l, x in bs)
            return f"{p}&{{ {inner} }}"
        case CondSelf(partner=q, then_branch=t, else_branch=e):
            return (f"if *={q} then {render_behaviour(t, marks)}"
                    f" else {render_behaviour(e, marks)}")
        case Def(name=n, body=x, cont=k):
            return f"def {n} = {render_behaviour(x, marks)} in {render_behaviour(k, marks)}"
        case Call(name=n, ann=a):
            return n + _mark(a, marks)
    raise TypeError(f"not a behaviour: {b!r}")


def render_network(net: Network, marks: bool = False, compact: bool = False) -> str:
    parts = [f"{name} {{ {render_behaviour(b, marks)} }}" for name, b in net.procs]
    sep = " | " if compact else "\n| "
    return sep.join(parts) if parts else ""


def render_program(prog: Program) -> str:
    lines = [f"def {name} = {render_choreography(body)}" for name, body in prog.defs]
    lines.append(f"main = {render_choreography(prog.main)}")
    notes = _stuck_notes(prog)
    if notes:
        lines.append("")
        lines.extend(notes)
    return "\n".join(lines)


def _stuck_notes(prog: Program) -> list[str]:
    seen: list[str] = []
    for term in [prog.main] + [b for _, b in prog.defs]:
        for t in subterms(term):
            if isinstance(t, Stuck) and t.stuck:
                for proc, residual in t.stuck:
                    line = f"# stuck: {proc}: {residual}"
                    if line not in seen:
                        seen.append(line)
    return seen


def render_state(sigma) -> str:
    if not sigma.entries:
        return "(all unset)"
    return ", ".join(f"{p}={render_value(v)}" for p, v in sigma.entries)


def render(ast, marks: bool = False) -> str:
    """Render a Network or Program (the two file-level term kinds)."""
    if isinstance(ast, Network):
        return render_network(ast, marks)
    if isinstance(ast, Program):
        return render_program(ast)
    raise TypeError(f"render expects a Network or Program, got {type(ast).__name__}")
