"""Concrete syntax for global assertions.

    Seller -> Buyer : (price | price > 0) .
    choice Buyer -> Seller {
      {price < 100} pay:
        end
      ;
      {true} quit:
        end
    }

plus `rec t<10>(v | v > 0) . ... t<v1>` loops and an explicit `end`.
Predicates use &&, ||, !, =>, exists/forall, and integer comparisons.
Comments run from // to the end of the line.

parse and format are mutually inverse: format emits one canonical layout,
and parsing it back yields the identical syntax tree (spans aside).
"""

from __future__ import annotations

from dataclasses import dataclass

from .assertions import (
    Branch,
    Branching,
    End,
    GlobalAssertion,
    Interaction,
    Prefix,
    RecCall,
    RecDef,
    SourceSpan,
)
from .errors import ParseError
from .logic import (
    Add,
    And,
    BoolLit,
    Cmp,
    Divisible,
    Exists,
    Expression,
    Forall,
    Formula,
    Implies,
    Lit,
    Mul,
    Not,
    Or,
    Sub,
    Var,
)

KEYWORDS = {"rec", "end", "choice", "exists", "forall", "true", "false"}

_PUNCT = ("->", "&&", "||", "=>", "<=", ">=", "!=", "=", "<", ">", "!", ".", ",", ";", ":", "|", "{", "}", "(", ")", "+", "-", "*")


@dataclass(frozen=True)
class Token:
    kind: str  # "id", "int", "punct", "eof"
    text: str
    start: int
    line: int
    column: int


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(text)

    def advance(k: int) -> None:
        nonlocal i, line, col
        for _ in range(k):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < n:
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if c.isalpha() or c == "_":
            start, sline, scol = i, line, col
            while i < n and (text[i].isalnum() or text[i] == "_"):
                advance(1)
            while i < n and text[i] == "'":
                advance(1)
            tokens.append(Token("id", text[start:i], start, sline, scol))
            continue
        if c.isdigit():
            start, sline, scol = i, line, col
            while i < n and text[i].isdigit():
                advance(1)
            tokens.append(Token("int", text[start:i], start, sline, scol))
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(Token("punct", p, i, line, col))
                advance(len(p))
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", n, line, col))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.pos + ahead, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.peek()
        return ParseError(message, tok.line, tok.column)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind == "eof":
            shown = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {text!r}, found {shown}", tok)
        return self.next()

    def ident(self, what: str) -> Token:
        tok = self.peek()
        if tok.kind != "id" or tok.text in KEYWORDS:
            shown = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected {what}, found {shown}", tok)
        return self.next()

    def span_from(self, start_tok: Token) -> SourceSpan:
        end = self.tokens[self.pos - 1] if self.pos > 0 else start_tok
        return SourceSpan(start_tok.start, end.start + len(end.text), start_tok.line, start_tok.column)

    # ---- assertions ----

    def assertion(self) -> GlobalAssertion:
        tok = self.peek()
        if tok.text == "end":
            self.next()
            return End(self.span_from(tok))
        if tok.text == "rec":
            return self.rec_def()
        if tok.text == "choice":
            return self.branching()
        if tok.kind == "id":
            if self.peek(1).text == "<":
                return self.rec_call()
            return self.prefix()
        shown = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"expected an interaction, choice, rec, jump, or end, found {shown}", tok)

    def prefix(self) -> GlobalAssertion:
        start = self.peek()
        sender = self.ident("a participant name").text
        self.expect("->")
        receiver = self.ident("a participant name").text
        self.expect(":")
        self.expect("(")
        variables = [self.ident("a variable name").text]
        while self.peek().kind == "id":
            variables.append(self.ident("a variable name").text)
        self.expect("|")
        predicate = self.formula()
        self.expect(")")
        ispan = self.span_from(start)
        self.expect(".")
        cont = self.assertion()
        i = Interaction(sender, receiver, tuple(variables), predicate, ispan)
        return Prefix(i, cont, ispan)

    def branching(self) -> GlobalAssertion:
        start = self.expect("choice")
        sender = self.ident("a participant name").text
        self.expect("->")
        receiver = self.ident("a participant name").text
        self.expect("{")
        branches = [self.branch()]
        while self.peek().text == ";":
            self.next()
            branches.append(self.branch())
        self.expect("}")
        return Branching(sender, receiver, tuple(branches), self.span_from(start))

    def branch(self) -> Branch:
        start = self.expect("{")
        guard = self.formula()
        self.expect("}")
        label = self.ident("a branch label").text
        self.expect(":")
        body = self.assertion()
        return Branch(guard, label, body, self.span_from(start))

    def rec_def(self) -> GlobalAssertion:
        start = self.expect("rec")
        name = self.ident("a loop name").text
        self.expect("<")
        init_args = [self.expression()]
        while self.peek().text == ",":
            self.next()
            init_args.append(self.expression())
        self.expect(">")
        self.expect("(")
        params = [self.ident("a parameter name").text]
        while self.peek().kind == "id":
            params.append(self.ident("a parameter name").text)
        self.expect("|")
        invariant = self.formula()
        self.expect(")")
        head_span = self.span_from(start)
        self.expect(".")
        body = self.assertion()
        return RecDef(name, tuple(init_args), tuple(params), invariant, body, head_span)

    def rec_call(self) -> GlobalAssertion:
        start = self.ident("a loop name")
        self.expect("<")
        args = [self.expression()]
        while self.peek().text == ",":
            self.next()
            args.append(self.expression())
        self.expect(">")
        return RecCall(start.text, tuple(args), self.span_from(start))

    # ---- formulas, loosest first: => then || then && then ! ----

    def formula(self) -> Formula:
        tok = self.peek()
        if tok.text in ("exists", "forall"):
            self.next()
            names = [self.ident("a variable name").text]
            while self.peek().kind == "id" and self.peek().text not in KEYWORDS:
                names.append(self.ident("a variable name").text)
            self.expect(".")
            body = self.formula()
            return Exists(tuple(names), body) if tok.text == "exists" else Forall(tuple(names), body)
        return self.implication()

    def implication(self) -> Formula:
        lhs = self.disjunction()
        if self.peek().text == "=>":
            self.next()
            return Implies(lhs, self.implication())
        return lhs

    def disjunction(self) -> Formula:
        parts = [self.conjunction()]
        while self.peek().text == "||":
            self.next()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conjunction(self) -> Formula:
        parts = [self.negation()]
        while self.peek().text == "&&":
            self.next()
            parts.append(self.negation())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def negation(self) -> Formula:
        if self.peek().text == "!":
            self.next()
            return Not(self.negation())
        return self.atom()

    def atom(self) -> Formula:
        tok = self.peek()
        if tok.text == "true":
            self.next()
            return BoolLit(True)
        if tok.text == "false":
            self.next()
            return BoolLit(False)
        if tok.text in ("exists", "forall"):
            return self.formula()
        if tok.text == "(":
            # either a parenthesized formula or the left side of a comparison
            save = self.pos
            self.next()
            try:
                inner = self.formula()
                self.expect(")")
            except ParseError:
                self.pos = save
            else:
                return inner
        lhs = self.expression()
        op_tok = self.peek()
        if op_tok.text not in ("=", "!=", "<", "<=", ">", ">="):
            raise self.error("expected a comparison operator", op_tok)
        self.next()
        rhs = self.expression()
        return Cmp(op_tok.text, lhs, rhs)

    # ---- integer expressions ----

    def expression(self) -> Expression:
        lhs = self.term()
        while self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.term()
            lhs = Add(lhs, rhs) if op == "+" else Sub(lhs, rhs)
        return lhs

    def term(self) -> Expression:
        lhs = self.factor()
        while self.peek().text == "*":
            star = self.next()
            rhs = self.factor()
            if isinstance(lhs, Lit):
                lhs = Mul(lhs.value, rhs)
            elif isinstance(rhs, Lit):
                lhs = Mul(rhs.value, lhs)
            else:
                raise self.error("multiplication needs a literal coefficient", star)
        return lhs

    def factor(self) -> Expression:
        tok = self.peek()
        if tok.text == "-":
            self.next()
            inner = self.factor()
            if isinstance(inner, Lit):
                return Lit(-inner.value)
            return Mul(-1, inner)
        if tok.kind == "int":
            self.next()
            return Lit(int(tok.text))
        if tok.kind == "id" and tok.text not in KEYWORDS:
            self.next()
            return Var(tok.text)
        if tok.text == "(":
            self.next()
            inner = self.expression()
            self.expect(")")
            return inner
        shown = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"expected an expression, found {shown}", tok)


def parse(text: str) -> GlobalAssertion:
    p = _Parser(text)
    g = p.assertion()
    tok = p.peek()
    if tok.kind != "eof":
        raise p.error(f"trailing input after the assertion: {tok.text!r}", tok)
    return g


def parse_formula(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    tok = p.peek()
    if tok.kind != "eof":
        raise p.error(f"trailing input after the formula: {tok.text!r}", tok)
    return f


# ---- printing ----

# formula precedence: 0 quantifier, 1 =>, 2 ||, 3 &&, 4 !, 5 atom

def format_expression(e: Expression, level: int = 0) -> str:
    # level 0 sum position, 1 right operand of +/-, 2 factor position
    match e:
        case Lit(v):
            return str(v)
        case Var(name):
            return name
        case Add(lhs, rhs):
            s = f"{format_expression(lhs, 0)} + {format_expression(rhs, 1)}"
            return f"({s})" if level >= 1 else s
        case Sub(lhs, rhs):
            s = f"{format_expression(lhs, 0)} - {format_expression(rhs, 1)}"
            return f"({s})" if level >= 1 else s
        case Mul(coeff, arg):
            s = f"{coeff} * {format_expression(arg, 2)}"
            return f"({s})" if level >= 2 else s
    raise TypeError(f"not an expression: {e!r}")


def format_formula(f: Formula, level: int = 0) -> str:
    match f:
        case BoolLit(v):
            return "true" if v else "false"
        case Cmp(op, lhs, rhs):
            return f"{format_expression(lhs)} {op} {format_expression(rhs)}"
        case Divisible(d, arg):
            return f"divides({d}, {format_expression(arg)})"
        case Not(arg):
            return f"!{format_formula(arg, 4)}"
        case And(args):
            s = " && ".join(format_formula(a, 4) for a in args)
            return f"({s})" if level > 3 else s
        case Or(args):
            s = " || ".join(format_formula(a, 3) for a in args)
            return f"({s})" if level > 2 else s
        case Implies(lhs, rhs):
            s = f"{format_formula(lhs, 2)} => {format_formula(rhs, 1)}"
            return f"({s})" if level > 1 else s
        case Exists(names, body):
            s = f"exists {' '.join(names)} . {format_formula(body, 0)}"
            return f"({s})" if level > 0 else s
        case Forall(names, body):
            s = f"forall {' '.join(names)} . {format_formula(body, 0)}"
            return f"({s})" if level > 0 else s
    raise TypeError(f"not a formula: {f!r}")


def format_assertion(g: GlobalAssertion) -> str:
    lines: list[str] = []

    def emit(a: GlobalAssertion, indent: int) -> None:
        pad = "  " * indent
        match a:
            case Prefix(i, cont):
                head = f"{pad}{i.sender} -> {i.receiver} : ({' '.join(i.variables)} | {format_formula(i.predicate)}) ."
                lines.append(head)
                emit(cont, indent)
            case Branching(s, r, branches):
                lines.append(f"{pad}choice {s} -> {r} {{")
                for k, b in enumerate(branches):
                    if k:
                        lines.append(f"{pad}  ;")
                    lines.append(f"{pad}  {{{format_formula(b.guard)}}} {b.label}:")
                    emit(b.body, indent + 2)
                lines.append(f"{pad}}}")
            case RecDef(name, init_args, params, invariant, body):
                args = ", ".join(format_expression(e) for e in init_args)
                head = f"{pad}rec {name}<{args}>({' '.join(params)} | {format_formula(invariant)}) ."
                lines.append(head)
                emit(body, indent + 1)
            case RecCall(name, args):
                rendered = ", ".join(format_expression(e) for e in args)
                lines.append(f"{pad}{name}<{rendered}>")
            case End():
                lines.append(f"{pad}end")
            case _:
                raise TypeError(f"not a global assertion: {a!r}")

    emit(g, 0)
    return "\n".join(lines) + "\n"
