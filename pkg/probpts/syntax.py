"""
The language
============

.. currentmodule:: probpts.syntax

:mod:`probpts` analyzes a small imperative language with pointers and fork-join threads. Programs are plain UTF-8
text. Whitespace is insignificant and ``//`` starts a line comment.

.. code::

    a := &c;
    if (c <= 0) @0.6 { b := &c; } else { b := &d; }
    par { a := &c; } { a := &d; }
    while (c <= 99) @100 {
        if (d <= 0) @1/2 { e := &d; } else { e := 5; }
        c := c + 1;
    }

Every branch carries the probability that its condition holds (``@0.6`` or ``@3/5``), and every loop carries an upper
bound for its trip count (``@100``). ``par`` runs two or more blocks as threads, ``parif`` spawns each block when its
guard holds, and ``parfor @n`` runs ``n`` copies of its block.


Grammar
-------

.. code::

    program  ::= stmt+
    stmt     ::= "skip" ";"
               | IDENT ":=" aexpr ";"
               | IDENT ":=" "&" IDENT ";"
               | IDENT ":=" "*" IDENT ";"
               | "*" IDENT ":=" aexpr ";"
               | "if" "(" bexpr ")" "@" PROB block "else" block
               | "while" "(" bexpr ")" "@" NAT block
               | "par" block block+
               | "parif" arm+                  arm ::= "(" bexpr "@" PROB ")" block
               | "parfor" "@" NAT block
    block    ::= "{" stmt* "}"
    aexpr    ::= NAT | IDENT | aexpr ("+"|"-"|"*") aexpr | "(" aexpr ")"
    bexpr    ::= "true" | "false" | "!" bexpr | aexpr "==" aexpr | aexpr "<=" aexpr
               | bexpr "&&" bexpr | bexpr "||" bexpr | "(" bexpr ")"
    PROB     ::= decimal literal in [0,1] | NAT "/" NAT

``*`` binds tighter than ``+`` and ``-``, comparisons bind tighter than ``!``, ``!`` binds tighter than ``&&``, and
``&&`` binds tighter than ``||``.


Labels
------

Every statement occurrence gets an integer label, assigned in preorder starting at ``0``. A block of several statements
is a right-nested chain of :class:`Seq` nodes, and the :class:`Seq` node is labelled before its children. An empty
block is a :class:`Skip`. Parsing the same text always yields the same labels, and ``parse(render(program))`` is equal
to ``program``.


API reference
-------------

.. autofunction:: parse

.. autofunction:: render

.. autofunction:: collect_vars

.. autofunction:: make_program

.. autoexception:: ParseError
"""
import logging
from dataclasses import dataclass, field, replace
from itertools import count
from typing import Iterable, Iterator, List, Tuple, Union
from lark import Lark, Token, Transformer
from lark.exceptions import UnexpectedEOF, UnexpectedInput, VisitError
from probpts.utils import Prob, format_prob, parse_prob


logger = logging.getLogger(__name__)

Span = Tuple[int, int]

NO_SPAN: Span = (0, 0)

# Label of statements built by desugaring, which are never reported.
SYNTHETIC = -1


class ParseError(ValueError):

    """
    Raised when program text does not match the grammar, or carries an invalid annotation.
    """

    def __init__(self, message: str, line: int = 0, column: int = 0) -> None:
        super().__init__(message)
        self.line = line
        self.column = column


# Arithmetic expressions.

@dataclass(frozen=True)
class Num:
    value: int

    def __post_init__(self) -> None:
        assert self.value >= 0, "literals should be natural numbers"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    left: "AExpr"
    op: str
    right: "AExpr"

    def __post_init__(self) -> None:
        assert self.op in ("+", "-", "*"), f"unknown arithmetic operator {self.op!r}"


AExpr = Union[Num, Var, BinOp]


# Boolean expressions.

@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Not:
    operand: "BExpr"


@dataclass(frozen=True)
class Compare:
    left: AExpr
    op: str
    right: AExpr

    def __post_init__(self) -> None:
        assert self.op in ("==", "<="), f"unknown comparison {self.op!r}"


@dataclass(frozen=True)
class Logic:
    left: "BExpr"
    op: str
    right: "BExpr"

    def __post_init__(self) -> None:
        assert self.op in ("&&", "||"), f"unknown connective {self.op!r}"


BExpr = Union[BoolConst, Not, Compare, Logic]


# Statements. Spans are source positions and take no part in equality.

class Stmt:
    label: int
    span: Span


@dataclass(frozen=True)
class Assign(Stmt):
    target: str
    expr: AExpr
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class AddrAssign(Stmt):
    target: str
    source: str
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class StarAssign(Stmt):
    target: str
    expr: AExpr
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class DerefAssign(Stmt):
    target: str
    source: str
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Skip(Stmt):
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class Seq(Stmt):
    first: Stmt
    second: Stmt
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)


@dataclass(frozen=True)
class If(Stmt):
    cond: BExpr
    prob: Prob
    then: Stmt
    orelse: Stmt
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        assert 0 <= self.prob <= 1, "prob should be in [0, 1]"


@dataclass(frozen=True)
class While(Stmt):
    cond: BExpr
    bound: int
    body: Stmt
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        assert self.bound >= 0, "bound should be >= 0"


@dataclass(frozen=True)
class Par(Stmt):
    threads: Tuple[Stmt, ...]
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        assert len(self.threads) >= 1, "par should have at least one thread"


@dataclass(frozen=True)
class Arm:
    cond: BExpr
    prob: Prob
    body: Stmt

    def __post_init__(self) -> None:
        assert 0 <= self.prob <= 1, "prob should be in [0, 1]"


@dataclass(frozen=True)
class ParIf(Stmt):
    arms: Tuple[Arm, ...]
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        assert len(self.arms) >= 1, "parif should have at least one arm"


@dataclass(frozen=True)
class ParFor(Stmt):
    count: int
    body: Stmt
    label: int = 0
    span: Span = field(default=NO_SPAN, compare=False, repr=False)

    def __post_init__(self) -> None:
        assert self.count >= 1, "count should be >= 1"


@dataclass(frozen=True)
class Program:
    body: Stmt
    vars: Tuple[str, ...]


def _chain(stmt: Stmt) -> Iterator[Stmt]:
    while isinstance(stmt, Seq):
        yield from _chain(stmt.first)
        stmt = stmt.second
    yield stmt


def seq(*stmts: Stmt) -> Stmt:
    """
    Chains statements the way a block does: right-nested, with an empty chain being :class:`Skip`. Sequences among
    ``stmts`` are spliced into the chain.
    """
    flat = [link for stmt in stmts for link in _chain(stmt)]
    if not flat:
        return Skip()
    result = flat[-1]
    for stmt in reversed(flat[:-1]):
        result = Seq(stmt, result, span=stmt.span)
    return result


def children(stmt: Stmt) -> Tuple[Stmt, ...]:
    if isinstance(stmt, Seq):
        return (stmt.first, stmt.second)
    if isinstance(stmt, If):
        return (stmt.then, stmt.orelse)
    if isinstance(stmt, (While, ParFor)):
        return (stmt.body,)
    if isinstance(stmt, Par):
        return stmt.threads
    if isinstance(stmt, ParIf):
        return tuple(arm.body for arm in stmt.arms)
    return ()


def walk(stmt: Stmt) -> Iterator[Stmt]:
    pending = [stmt]
    while pending:
        stmt = pending.pop()
        yield stmt
        pending.extend(reversed(children(stmt)))


def _relabel(stmt: Stmt, labels: Iterator[int]) -> Stmt:
    label = next(labels)
    if isinstance(stmt, Seq):
        # Labels go to each Seq node, then its first statement, then the rest of the chain.
        links: List[Tuple[Seq, int, Stmt]] = []
        link: Stmt = stmt
        while isinstance(link, Seq):
            links.append((link, label, _relabel(link.first, labels)))
            link = link.second
            if isinstance(link, Seq):
                label = next(labels)
        result = _relabel(link, labels)
        for node, node_label, first in reversed(links):
            result = replace(node, label=node_label, first=first, second=result)
        return result
    if isinstance(stmt, If):
        then = _relabel(stmt.then, labels)
        return replace(stmt, label=label, then=then, orelse=_relabel(stmt.orelse, labels))
    if isinstance(stmt, (While, ParFor)):
        return replace(stmt, label=label, body=_relabel(stmt.body, labels))
    if isinstance(stmt, Par):
        return replace(stmt, label=label, threads=tuple(_relabel(thread, labels) for thread in stmt.threads))
    if isinstance(stmt, ParIf):
        arms = tuple(replace(arm, body=_relabel(arm.body, labels)) for arm in stmt.arms)
        return replace(stmt, label=label, arms=arms)
    return replace(stmt, label=label)


def _aexpr_vars(expr: AExpr) -> Iterator[str]:
    if isinstance(expr, Var):
        yield expr.name
    elif isinstance(expr, BinOp):
        yield from _aexpr_vars(expr.left)
        yield from _aexpr_vars(expr.right)


def _bexpr_vars(expr: BExpr) -> Iterator[str]:
    if isinstance(expr, Not):
        yield from _bexpr_vars(expr.operand)
    elif isinstance(expr, Compare):
        yield from _aexpr_vars(expr.left)
        yield from _aexpr_vars(expr.right)
    elif isinstance(expr, Logic):
        yield from _bexpr_vars(expr.left)
        yield from _bexpr_vars(expr.right)


def _stmt_vars(stmt: Stmt) -> Iterator[str]:
    if isinstance(stmt, (Assign, StarAssign)):
        yield stmt.target
        yield from _aexpr_vars(stmt.expr)
    elif isinstance(stmt, (AddrAssign, DerefAssign)):
        yield stmt.target
        yield stmt.source
    elif isinstance(stmt, Seq):
        for link in _chain(stmt):
            yield from _stmt_vars(link)
        return
    elif isinstance(stmt, (If, While)):
        yield from _bexpr_vars(stmt.cond)
    elif isinstance(stmt, ParIf):
        for arm in stmt.arms:
            yield from _bexpr_vars(arm.cond)
            yield from _stmt_vars(arm.body)
        return
    for child in children(stmt):
        yield from _stmt_vars(child)


def collect_vars(stmt: Stmt) -> Tuple[str, ...]:
    """
    Returns every variable read, written, address-taken or dereferenced in ``stmt``, once each, in order of first
    occurrence.
    """
    return tuple(dict.fromkeys(_stmt_vars(stmt)))


def make_program(body: Stmt) -> Program:
    """
    Labels ``body`` in preorder and wraps it in a :class:`Program` with its variables.
    """
    body = _relabel(body, count())
    return Program(body=body, vars=collect_vars(body))


def desugar_parif(stmt: ParIf) -> Par:
    # Each arm becomes a thread that runs its body when the guard holds.
    return Par(
        tuple(
            If(arm.cond, arm.prob, arm.body, Skip(label=SYNTHETIC), label=SYNTHETIC, span=stmt.span)
            for arm in stmt.arms
        ),
        label=SYNTHETIC,
        span=stmt.span,
    )


def replicate(body: Stmt, copies: int) -> Par:
    return Par((body,) * copies, label=SYNTHETIC, span=body.span)


# Parsing.

GRAMMAR = r"""
program: stmt+

block: LBRACE stmt* "}"

?stmt: SKIP ";"                                        -> skip
     | IDENT ":=" aexpr ";"                            -> assign
     | IDENT ":=" "&" IDENT ";"                        -> addr_assign
     | IDENT ":=" "*" IDENT ";"                        -> deref_assign
     | STAR IDENT ":=" aexpr ";"                       -> star_assign
     | IF "(" bexpr ")" "@" prob block "else" block    -> if_
     | WHILE "(" bexpr ")" "@" NAT block               -> while_
     | PAR block block+                                -> par
     | PARIF arm+                                      -> parif
     | PARFOR "@" NAT block                            -> parfor

arm: "(" bexpr "@" prob ")" block

prob: FRACTION | DECIMAL

?bexpr: bor
?bor: band
    | bor "||" band                 -> or_
?band: bnot
     | band "&&" bnot               -> and_
?bnot: "!" bnot                     -> not_
     | batom
?batom: "true"                      -> true
      | "false"                     -> false
      | aexpr "==" aexpr            -> eq
      | aexpr "<=" aexpr            -> le
      | "(" bexpr ")"

?aexpr: sum
?sum: product
    | sum "+" product               -> add
    | sum "-" product               -> sub
?product: atom
        | product "*" atom          -> mul
?atom: NAT                          -> num
     | IDENT                        -> var
     | "(" aexpr ")"

SKIP: "skip"
IF: "if"
WHILE: "while"
PAR: "par"
PARIF: "parif"
PARFOR: "parfor"
STAR: "*"
LBRACE: "{"
IDENT: /(?!(?:skip|if|else|while|parif|parfor|par|true|false)\b)[A-Za-z_][A-Za-z0-9_]*/
NAT: /[0-9]+/
FRACTION: /[0-9]+\/[0-9]+/
DECIMAL: /[0-9]+(\.[0-9]+)?/
COMMENT: /\/\/[^\n]*/

%import common.WS
%ignore WS
%ignore COMMENT
"""


def _span(token: Token) -> Span:
    return (token.line or 0, token.column or 0)


class _AstBuilder(Transformer):

    # Expressions.

    def num(self, children: List[Token]) -> Num:
        return Num(int(children[0]))

    def var(self, children: List[Token]) -> Var:
        return Var(str(children[0]))

    def add(self, children: List[AExpr]) -> BinOp:
        return BinOp(children[0], "+", children[1])

    def sub(self, children: List[AExpr]) -> BinOp:
        return BinOp(children[0], "-", children[1])

    def mul(self, children: List[AExpr]) -> BinOp:
        return BinOp(children[0], "*", children[1])

    def true(self, children: List[object]) -> BoolConst:
        return BoolConst(True)

    def false(self, children: List[object]) -> BoolConst:
        return BoolConst(False)

    def not_(self, children: List[BExpr]) -> Not:
        return Not(children[0])

    def eq(self, children: List[AExpr]) -> Compare:
        return Compare(children[0], "==", children[1])

    def le(self, children: List[AExpr]) -> Compare:
        return Compare(children[0], "<=", children[1])

    def and_(self, children: List[BExpr]) -> Logic:
        return Logic(children[0], "&&", children[1])

    def or_(self, children: List[BExpr]) -> Logic:
        return Logic(children[0], "||", children[1])

    # Annotations.

    def prob(self, children: List[Token]) -> Prob:
        token = children[0]
        try:
            return parse_prob(str(token))
        except ValueError as ex:
            line, column = _span(token)
            raise ParseError(f"line {line}, column {column}: {ex}", line, column) from ex

    # Statements.

    def program(self, children: List[Stmt]) -> Stmt:
        return seq(*children)

    def block(self, children: List[Union[Token, Stmt]]) -> Stmt:
        brace, *stmts = children
        assert isinstance(brace, Token)
        if not stmts:
            return Skip(span=_span(brace))
        return seq(*stmts)  # type: ignore

    def skip(self, children: List[Token]) -> Skip:
        return Skip(span=_span(children[0]))

    def assign(self, children: List[object]) -> Assign:
        target, expr = children
        assert isinstance(target, Token)
        return Assign(str(target), expr, span=_span(target))  # type: ignore

    def addr_assign(self, children: List[Token]) -> AddrAssign:
        target, source = children
        return AddrAssign(str(target), str(source), span=_span(target))

    def deref_assign(self, children: List[Token]) -> DerefAssign:
        target, source = children
        return DerefAssign(str(target), str(source), span=_span(target))

    def star_assign(self, children: List[object]) -> StarAssign:
        star, target, expr = children
        assert isinstance(star, Token)
        return StarAssign(str(target), expr, span=_span(star))  # type: ignore

    def if_(self, children: List[object]) -> If:
        keyword, cond, prob, then, orelse = children
        assert isinstance(keyword, Token)
        return If(cond, prob, then, orelse, span=_span(keyword))  # type: ignore

    def while_(self, children: List[object]) -> While:
        keyword, cond, bound, body = children
        assert isinstance(keyword, Token)
        return While(cond, int(str(bound)), body, span=_span(keyword))  # type: ignore

    def par(self, children: List[object]) -> Par:
        keyword, *threads = children
        assert isinstance(keyword, Token)
        return Par(tuple(threads), span=_span(keyword))  # type: ignore

    def arm(self, children: List[object]) -> Arm:
        cond, prob, body = children
        return Arm(cond, prob, body)  # type: ignore

    def parif(self, children: List[object]) -> ParIf:
        keyword, *arms = children
        assert isinstance(keyword, Token)
        return ParIf(tuple(arms), span=_span(keyword))  # type: ignore

    def parfor(self, children: List[object]) -> ParFor:
        keyword, copies, body = children
        assert isinstance(keyword, Token)
        line, column = _span(keyword)
        if int(str(copies)) < 1:
            raise ParseError(f"line {line}, column {column}: parfor count should be >= 1", line, column)
        return ParFor(int(str(copies)), body, span=(line, column))  # type: ignore


_parser = Lark(GRAMMAR, start="program", parser="earley", propagate_positions=True)


def _end_of(text: str) -> Span:
    # One past the last character, 1-based.
    return text.count("\n") + 1, len(text) - text.rfind("\n")


def parse(text: str) -> Program:
    """
    Parses program text into a labelled :class:`Program`.

    :raises ParseError: if the text does not match the grammar, or an annotation is out of range.
    """
    try:
        tree = _parser.parse(text)
    except UnexpectedEOF as ex:
        line, column = _end_of(text)
        raise ParseError(f"line {line}, column {column}: unexpected end of input", line, column) from ex
    except UnexpectedInput as ex:
        context = ex.get_context(text).rstrip()
        raise ParseError(
            f"line {ex.line}, column {ex.column}: syntax error\n{context}",
            ex.line,
            ex.column,
        ) from ex
    try:
        body = _AstBuilder().transform(tree)
    except VisitError as ex:
        if isinstance(ex.orig_exc, ParseError):
            raise ex.orig_exc from None
        raise
    program = make_program(body)
    logger.debug("Parsed %d statements over %d variables", len(list(walk(program.body))), len(program.vars))
    return program


# Rendering.

def render_aexpr(expr: AExpr) -> str:
    if isinstance(expr, Num):
        return str(expr.value)
    if isinstance(expr, Var):
        return expr.name
    operands = [
        f"({render_aexpr(operand)})" if isinstance(operand, BinOp) else render_aexpr(operand)
        for operand in (expr.left, expr.right)
    ]
    return f"{operands[0]} {expr.op} {operands[1]}"


def render_bexpr(expr: BExpr) -> str:
    if isinstance(expr, BoolConst):
        return "true" if expr.value else "false"
    if isinstance(expr, Not):
        if isinstance(expr.operand, (BoolConst, Not)):
            return f"!{render_bexpr(expr.operand)}"
        return f"!({render_bexpr(expr.operand)})"
    if isinstance(expr, Compare):
        return f"{render_aexpr(expr.left)} {expr.op} {render_aexpr(expr.right)}"
    operands = [
        f"({render_bexpr(operand)})" if isinstance(operand, Logic) else render_bexpr(operand)
        for operand in (expr.left, expr.right)
    ]
    return f"{operands[0]} {expr.op} {operands[1]}"


def _render_block(stmt: Stmt, depth: int) -> List[str]:
    return ["{", *_render_lines(stmt, depth + 1), "    " * depth + "}"]


def _join_blocks(head: str, blocks: Iterable[Tuple[str, Stmt]], depth: int) -> List[str]:
    # Glues "head {", body lines, "} sep {", ... into indented lines.
    lines = ["    " * depth + head]
    for sep, body in blocks:
        block = _render_block(body, depth)
        lines[-1] += sep + block[0]
        lines.extend(block[1:])
    return lines


def _render_lines(stmt: Stmt, depth: int) -> List[str]:
    indent = "    " * depth
    if isinstance(stmt, Skip):
        return [f"{indent}skip;"]
    if isinstance(stmt, Assign):
        return [f"{indent}{stmt.target} := {render_aexpr(stmt.expr)};"]
    if isinstance(stmt, AddrAssign):
        return [f"{indent}{stmt.target} := &{stmt.source};"]
    if isinstance(stmt, StarAssign):
        return [f"{indent}*{stmt.target} := {render_aexpr(stmt.expr)};"]
    if isinstance(stmt, DerefAssign):
        return [f"{indent}{stmt.target} := *{stmt.source};"]
    if isinstance(stmt, Seq):
        return [line for link in _chain(stmt) for line in _render_lines(link, depth)]
    if isinstance(stmt, If):
        head = f"if ({render_bexpr(stmt.cond)}) @{format_prob(stmt.prob)}"
        return _join_blocks(head, ((" ", stmt.then), (" else ", stmt.orelse)), depth)
    if isinstance(stmt, While):
        return _join_blocks(f"while ({render_bexpr(stmt.cond)}) @{stmt.bound}", ((" ", stmt.body),), depth)
    if isinstance(stmt, Par):
        return _join_blocks("par", ((" ", thread) for thread in stmt.threads), depth)
    if isinstance(stmt, ParIf):
        return _join_blocks(
            "parif",
            ((f" ({render_bexpr(arm.cond)} @{format_prob(arm.prob)}) ", arm.body) for arm in stmt.arms),
            depth,
        )
    if isinstance(stmt, ParFor):
        return _join_blocks(f"parfor @{stmt.count}", ((" ", stmt.body),), depth)
    raise AssertionError(f"unknown statement {stmt!r}")


def render_stmt(stmt: Stmt, depth: int = 0) -> str:
    return "\n".join(_render_lines(stmt, depth))


def render(program: Program) -> str:
    """
    Renders ``program`` as canonical text. Probabilities are rendered as reduced fractions.
    """
    return render_stmt(program.body)


def describe(stmt: Stmt) -> str:
    """
    A one-line summary of ``stmt``, used in reports.
    """
    if isinstance(stmt, Seq):
        return "seq"
    if isinstance(stmt, (Skip, Assign, AddrAssign, StarAssign, DerefAssign)):
        return render_stmt(stmt)
    return _render_lines(stmt, 0)[0].rstrip(" {")

