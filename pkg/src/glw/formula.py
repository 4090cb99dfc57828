"""Modal formula syntax: AST, parser, printer, normalization, metrics.

Grammar (ASCII, whitespace ignored between tokens):

    formula := imp
    imp     := or ("->" imp)?          right-associative
    or      := and ("|" and)*
    and     := unary ("&" unary)*
    unary   := "~" unary | "[]" unary | "<>" unary | atom
    atom    := "#" | "T" | "p" digits | "(" formula ")"

Printing is fully parenthesized and canonical: parse(str(f)) == f.
"""

from __future__ import annotations

from dataclasses import dataclass


class Formula:
    """Base class of the modal formula AST.  Instances are immutable."""

    __slots__ = ()

    def __str__(self) -> str:
        return fmt(self)


@dataclass(frozen=True)
class Var(Formula):
    index: int


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Neg(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    arg: Formula


@dataclass(frozen=True)
class Dia(Formula):
    arg: Formula


BOT = Bot()
TOP = Top()


def lob_axiom(f: Formula) -> Formula:
    """Instance of the Loeb schema [](([]f -> f)) -> []f."""
    return Imp(Box(Imp(Box(f), f)), Box(f))


def k_axiom(f: Formula, g: Formula) -> Formula:
    """Instance of the distribution schema [](f -> g) -> ([]f -> []g)."""
    return Imp(Box(Imp(f, g)), Imp(Box(f), Box(g)))


class ParseError(ValueError):
    """Syntax error carrying the offending position and the expected tokens."""

    def __init__(self, message: str, pos: int, expected: set[str]):
        super().__init__(f"{message} at position {pos}; expected one of {sorted(expected)}")
        self.pos = pos
        self.expected = expected


_TWO_CHAR = {"->": "IMP", "[]": "BOX", "<>": "DIA"}
_ONE_CHAR = {"~": "NEG", "&": "AND", "|": "OR", "(": "LP", ")": "RP", "#": "BOT", "T": "TOP"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    toks = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        two = text[i : i + 2]
        if two in _TWO_CHAR:
            toks.append((_TWO_CHAR[two], two, i))
            i += 2
            continue
        if c in _ONE_CHAR:
            toks.append((_ONE_CHAR[c], c, i))
            i += 1
            continue
        if c == "p":
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j == i + 1:
                raise ParseError("variable 'p' needs digits", i, {"p<digits>"})
            toks.append(("VAR", text[i:j], i))
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", i, set("~&|()#T") | {"->", "[]", "<>", "p<digits>"})
    toks.append(("EOF", "", n))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.pos]

    def take(self, kind: str) -> tuple[str, str, int]:
        tok = self.toks[self.pos]
        if tok[0] != kind:
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2], {kind})
        self.pos += 1
        return tok

    def formula(self) -> Formula:
        return self.imp()

    def imp(self) -> Formula:
        left = self.or_()
        if self.peek()[0] == "IMP":
            self.take("IMP")
            return Imp(left, self.imp())
        return left

    def or_(self) -> Formula:
        left = self.and_()
        while self.peek()[0] == "OR":
            self.take("OR")
            left = Or(left, self.and_())
        return left

    def and_(self) -> Formula:
        left = self.unary()
        while self.peek()[0] == "AND":
            self.take("AND")
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind, _, pos = self.peek()
        if kind == "NEG":
            self.take("NEG")
            return Neg(self.unary())
        if kind == "BOX":
            self.take("BOX")
            return Box(self.unary())
        if kind == "DIA":
            self.take("DIA")
            return Dia(self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind, text, pos = self.peek()
        if kind == "BOT":
            self.take("BOT")
            return BOT
        if kind == "TOP":
            self.take("TOP")
            return TOP
        if kind == "VAR":
            self.take("VAR")
            return Var(int(text[1:]))
        if kind == "LP":
            self.take("LP")
            f = self.formula()
            self.take("RP")
            return f
        raise ParseError(f"unexpected token {text!r}", pos, {"#", "T", "p<digits>", "("})


def parse(text: str) -> Formula:
    p = _Parser(text)
    f = p.formula()
    tok = p.peek()
    if tok[0] != "EOF":
        raise ParseError(f"trailing input {tok[1]!r}", tok[2], {"EOF"})
    return f


def fmt(f: Formula) -> str:
    """Canonical fully parenthesized text; inverse of parse."""
    if isinstance(f, Var):
        return f"p{f.index}"
    if isinstance(f, Bot):
        return "#"
    if isinstance(f, Top):
        return "T"
    if isinstance(f, Neg):
        return f"~({fmt(f.arg)})"
    if isinstance(f, Box):
        return f"[]({fmt(f.arg)})"
    if isinstance(f, Dia):
        return f"<>({fmt(f.arg)})"
    if isinstance(f, And):
        return f"({fmt(f.left)} & {fmt(f.right)})"
    if isinstance(f, Or):
        return f"({fmt(f.left)} | {fmt(f.right)})"
    if isinstance(f, Imp):
        return f"({fmt(f.left)} -> {fmt(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def desugar(f: Formula) -> Formula:
    """Eliminate Top and Dia: T becomes ~#, <>g becomes ~[]~g.  Idempotent."""
    if isinstance(f, (Var, Bot)):
        return f
    if isinstance(f, Top):
        return Neg(BOT)
    if isinstance(f, Neg):
        return Neg(desugar(f.arg))
    if isinstance(f, And):
        return And(desugar(f.left), desugar(f.right))
    if isinstance(f, Or):
        return Or(desugar(f.left), desugar(f.right))
    if isinstance(f, Imp):
        return Imp(desugar(f.left), desugar(f.right))
    if isinstance(f, Box):
        return Box(desugar(f.arg))
    if isinstance(f, Dia):
        return Neg(Box(Neg(desugar(f.arg))))
    raise TypeError(f"not a formula: {f!r}")


def modal_depth(f: Formula) -> int:
    if isinstance(f, (Var, Bot, Top)):
        return 0
    if isinstance(f, Neg):
        return modal_depth(f.arg)
    if isinstance(f, (And, Or, Imp)):
        return max(modal_depth(f.left), modal_depth(f.right))
    if isinstance(f, (Box, Dia)):
        return 1 + modal_depth(f.arg)
    raise TypeError(f"not a formula: {f!r}")


def subformulas(f: Formula) -> list[Formula]:
    """All subtrees of the desugared formula, deduplicated, in postorder.

    The desugared root comes last.  The order is the canonical "subformula
    order" used for deterministic search elsewhere.
    """
    out: list[Formula] = []
    seen: set[Formula] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, (And, Or, Imp)):
            walk(g.left)
            walk(g.right)
        elif isinstance(g, (Neg, Box)):
            walk(g.arg)
        if g not in seen:
            seen.add(g)
            out.append(g)

    walk(desugar(f))
    return out


def variables(f: Formula) -> list[int]:
    """Sorted list of variable indices occurring in f."""
    idx: set[int] = set()

    def walk(g: Formula) -> None:
        if isinstance(g, Var):
            idx.add(g.index)
        elif isinstance(g, (Neg, Box, Dia)):
            walk(g.arg)
        elif isinstance(g, (And, Or, Imp)):
            walk(g.left)
            walk(g.right)

    walk(f)
    return sorted(idx)


def node_count(f: Formula) -> int:
    if isinstance(f, (Var, Bot, Top)):
        return 1
    if isinstance(f, (Neg, Box, Dia)):
        return 1 + node_count(f.arg)
    return 1 + node_count(f.left) + node_count(f.right)
