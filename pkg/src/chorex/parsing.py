"""Recursive-descent parser for network (`.sp`) and choreography (`.cc`) files.

See `printing` for the grammar; the two are inverse on ASTs.  `#` starts a
line comment.  Structural violations in otherwise well-formed text (a
process comparing itself, an unbound procedure call, duplicate multicom
receivers) are reported as ParseError too, since the text denotes no term.
"""

from __future__ import annotations

from dataclasses import dataclass

from .terms import (
    Branch, Call, Cond, CondSelf, Constant, Def, End, InvalidTerm, Literal,
    Network, Program, Recv, Select, Selection, SELF, Send, Seq, Stuck,
    ValueCom, process_names, subterms,
)

KEYWORDS = {"def", "in", "if", "then", "else", "main"}
SYMBOLS = ("->", "{", "}", "(", ")", "[", "]", "|", ";", ",", ":", "?", "!",
           "+", "&", "=", ".", "*")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, expected=()):
        self.line = line
        self.col = col
        self.expected = frozenset(expected)
        at = f"line {line}, column {col}"
        if expected:
            message = f"{message} (expected one of: {', '.join(sorted(expected))})"
        super().__init__(f"{message} at {at}")


@dataclass(frozen=True)
class Token:
    kind: str       # NAME, INT, KEYWORD, SYM, EOF
    text: str
    line: int
    col: int


def _lex(source: str) -> list[Token]:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "KEYWORD" if word in KEYWORDS else "NAME"
            tokens.append(Token(kind, word, line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("INT", source[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("SYM", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, source: str):
        self.tokens = _lex(source)
        self.pos = 0

    # -- token plumbing ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def fail(self, message: str, expected=()):
        raise ParseError(message, self.tok.line, self.tok.col, expected)

    def expect_sym(self, sym: str) -> Token:
        if self.tok.kind == "SYM" and self.tok.text == sym:
            return self.advance()
        self.fail(f"found {self.tok.text!r}", expected={sym})

    def expect_keyword(self, word: str) -> Token:
        if self.tok.kind == "KEYWORD" and self.tok.text == word:
            return self.advance()
        self.fail(f"found {self.tok.text!r}", expected={word})

    def expect_name(self, what: str) -> str:
        if self.tok.kind == "NAME":
            return self.advance().text
        self.fail(f"found {self.tok.text!r} where a {what} was needed",
                  expected={"identifier"})

    def at_sym(self, sym: str) -> bool:
        return self.tok.kind == "SYM" and self.tok.text == sym

    def at_keyword(self, word: str) -> bool:
        return self.tok.kind == "KEYWORD" and self.tok.text == word

    def build(self, ctor, *args):
        """Construct a node, converting invariant violations to parse errors."""
        try:
            return ctor(*args)
        except InvalidTerm as exc:
            raise ParseError(str(exc), self.tok.line, self.tok.col) from exc

    # -- expressions and interactions --------------------------------------

    def parse_expr(self):
        if self.at_sym("*"):
            self.advance()
            return SELF
        if self.tok.kind in ("NAME", "INT"):
            return Literal(self.build(Constant, self.advance().text))
        self.fail(f"found {self.tok.text!r} where an expression was needed",
                  expected={"identifier", "integer", "*"})

    def parse_interaction(self):
        sender = self.expect_name("process name")
        if self.at_sym("."):
            self.advance()
            expr = self.parse_expr()
            self.expect_sym("->")
            receiver = self.expect_name("process name")
            return self.build(ValueCom, sender, expr, receiver)
        if self.at_sym("->"):
            self.advance()
            receiver = self.expect_name("process name")
            self.expect_sym("[")
            label = self.expect_name("label")
            self.expect_sym("]")
            return self.build(Selection, sender, receiver, label)
        self.fail(f"found {self.tok.text!r} in an interaction",
                  expected={".", "->"})

    # -- choreographies -----------------------------------------------------

    def parse_choreography(self):
        t = self.tok
        if t.kind == "INT" and t.text == "0":
            self.advance()
            return End()
        if t.kind == "INT" and t.text == "1":
            self.advance()
            return Stuck()
        if self.at_keyword("if"):
            self.advance()
            p = self.expect_name("process name")
            self.expect_sym("=")
            q = self.expect_name("process name")
            self.expect_keyword("then")
            then_branch = self.parse_choreography()
            self.expect_keyword("else")
            else_branch = self.parse_choreography()
            return self.build(Cond, p, q, then_branch, else_branch)
        if self.at_keyword("def"):
            self.advance()
            name = self.expect_name("procedure name")
            self.expect_sym("=")
            body = self.parse_choreography()
            self.expect_keyword("in")
            cont = self.parse_choreography()
            return self.build(Def, name, body, cont)
        if self.at_sym("("):
            self.advance()
            actions = [self.parse_interaction()]
            while self.at_sym("|"):
                self.advance()
                actions.append(self.parse_interaction())
            self.expect_sym(")")
            self.expect_sym(";")
            cont = self.parse_choreography()
            return self.build(Seq, tuple(actions), cont)
        if t.kind == "NAME":
            nxt = self.peek()
            if nxt.kind == "SYM" and nxt.text in (".", "->"):
                action = self.parse_interaction()
                self.expect_sym(";")
                cont = self.parse_choreography()
                return self.build(Seq, (action,), cont)
            self.advance()
            return self.build(Call, t.text)
        self.fail(f"found {self.tok.text!r} where a choreography was needed",
                  expected={"0", "1", "if", "def", "(", "identifier"})

    def parse_program(self) -> Program:
        defs = []
        while self.at_keyword("def"):
            self.advance()
            name = self.expect_name("procedure name")
            self.expect_sym("=")
            defs.append((name, self.parse_choreography()))
        self.expect_keyword("main")
        self.expect_sym("=")
        main = self.parse_choreography()
        if self.tok.kind != "EOF":
            self.fail(f"trailing input {self.tok.text!r}", expected={"end of file"})
        return self.build(Program, tuple(defs), main)

    # -- behaviours ----------------------------------------------------------

    def parse_behaviour(self):
        t = self.tok
        if t.kind == "INT" and t.text == "0":
            self.advance()
            return End()
        if self.at_keyword("if"):
            self.advance()
            self.expect_sym("*")
            self.expect_sym("=")
            partner = self.expect_name("process name")
            self.expect_keyword("then")
            then_branch = self.parse_behaviour()
            self.expect_keyword("else")
            else_branch = self.parse_behaviour()
            return CondSelf(partner, then_branch, else_branch)
        if self.at_keyword("def"):
            self.advance()
            name = self.expect_name("procedure name")
            self.expect_sym("=")
            body = self.parse_behaviour()
            self.expect_keyword("in")
            cont = self.parse_behaviour()
            return self.build(Def, name, body, cont)
        if t.kind == "NAME":
            nxt = self.peek()
            if nxt.kind == "SYM" and nxt.text == "!":
                self.advance(), self.advance()
                expr = self.parse_expr()
                self.expect_sym(";")
                return Send(t.text, expr, self.parse_behaviour())
            if nxt.kind == "SYM" and nxt.text == "?":
                self.advance(), self.advance()
                self.expect_sym(";")
                return Recv(t.text, self.parse_behaviour())
            if nxt.kind == "SYM" and nxt.text == "+":
                self.advance(), self.advance()
                label = self.expect_name("label")
                self.expect_sym(";")
                return self.build(Select, t.text, label, self.parse_behaviour())
            if nxt.kind == "SYM" and nxt.text == "&":
                self.advance(), self.advance()
                self.expect_sym("{")
                branches = [self.parse_branch_arm()]
                while self.at_sym(","):
                    self.advance()
                    branches.append(self.parse_branch_arm())
                self.expect_sym("}")
                return self.build(Branch, t.text, tuple(branches))
            self.advance()
            return self.build(Call, t.text)
        self.fail(f"found {self.tok.text!r} where a behaviour was needed",
                  expected={"0", "if", "def", "identifier"})

    def parse_branch_arm(self):
        label = self.expect_name("label")
        self.expect_sym(":")
        return label, self.parse_behaviour()

    def parse_network(self) -> Network:
        procs = []
        if self.tok.kind != "EOF":
            procs.append(self.parse_process())
            while self.at_sym("|"):
                self.advance()
                procs.append(self.parse_process())
        if self.tok.kind != "EOF":
            self.fail(f"trailing input {self.tok.text!r}", expected={"|", "end of file"})
        return self.build(Network, tuple(procs))

    def parse_process(self):
        name = self.expect_name("process name")
        self.expect_sym("{")
        behaviour = self.parse_behaviour()
        self.expect_sym("}")
        return name, behaviour


def parse_network(text: str) -> Network:
    return _Parser(text).parse_network()


def parse_choreography(text: str) -> Program:
    return _Parser(text).parse_program()


def dangling_references(net: Network) -> set[str]:
    """Names that behaviours talk to but that run no process in the network.

    Such references are legal (the actions simply never fire), so this is
    surfaced as a warning by the CLI rather than rejected here.
    """
    present = set(net.names)
    referenced: set[str] = set()
    for _, b in net.procs:
        referenced |= process_names(b)
    return referenced - present
