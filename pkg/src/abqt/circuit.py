"""A small line-oriented language for coherent-state optical circuits.

Example::

    MODES 3
    STATE 0 1 = 1.0 |a,a> + 1.0 |-a,-a>     # two-mode cat
    STATE 2 = |a>
    BPS 0 2
    PHASE 1 pi/2
    DISP 1 0 0.5
    MEASURE 0 ODD
    TARGET 1 2 = |a, 0>

Scalars are expressions over numbers, ``j`` (imaginary unit), ``pi`` and ``a``
(the coherent amplitude supplied at evaluation time), with ``+ - * /`` and
parentheses.  A number immediately followed by a name multiplies it (``2a``,
``0.5pi``, but not ``2 a``).  The two DISP scalars are separated by
whitespace, so compound ones must be parenthesized: ``DISP 0 (pi/2) -1``.

Parsing is total: any input either yields a :class:`CircuitProgram` or raises
:class:`CircuitSyntaxError` carrying a line and column.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .coherent import StateVector, fidelity, normalize, permute_modes, tensor
from .errors import CircuitSyntaxError, PreconditionError
from .measurement import OutcomeClass, herald_class
from .optics import apply_bps, apply_displacement, apply_phase

MAX_MODES = 64
MAX_DEPTH = 64
MAX_TERMS = 4096

KEYWORDS = ("MODES", "STATE", "BPS", "PHASE", "DISP", "MEASURE", "TARGET")
CLASS_NAMES = {"ZERO": OutcomeClass.ZERO, "EVEN": OutcomeClass.EVEN_NONZERO,
               "EVEN_NONZERO": OutcomeClass.EVEN_NONZERO, "ODD": OutcomeClass.ODD}


# ---- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    imaginary: bool = False


@dataclass(frozen=True)
class Sym:
    name: str           # "a", "pi" or "j"


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Num, Sym, Neg, BinOp]


def evaluate_expr(expr, alpha=1.0) -> complex:
    if isinstance(expr, Num):
        return complex(0, expr.value) if expr.imaginary else complex(expr.value)
    if isinstance(expr, Sym):
        return {"a": complex(alpha), "pi": complex(math.pi), "j": 1j}[expr.name]
    if isinstance(expr, Neg):
        return -evaluate_expr(expr.operand, alpha)
    left, right = evaluate_expr(expr.left, alpha), evaluate_expr(expr.right, alpha)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if right == 0:
        raise PreconditionError("division by zero in circuit expression")
    return left / right


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def format_expr(expr, min_prec=0) -> str:
    """Source text with the fewest parentheses that reparse to the same tree."""
    if isinstance(expr, Num):
        return repr(expr.value) + ("j" if expr.imaginary else "")
    if isinstance(expr, Sym):
        return expr.name
    if isinstance(expr, Neg):
        return "-" + format_expr(expr.operand, 3)
    prec = _PRECEDENCE[expr.op]
    # operators are left-associative: a same-precedence right child needs parentheses
    text = f"{format_expr(expr.left, prec)} {expr.op} {format_expr(expr.right, prec + 1)}"
    return f"({text})" if prec < min_prec else text


# ---- statements ------------------------------------------------------------

@dataclass(frozen=True)
class Term:
    negative: bool
    coeff: Optional[Expr]
    labels: tuple


@dataclass(frozen=True)
class Statement:
    keyword: str
    args: tuple
    terms: tuple = ()
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CircuitProgram:
    statements: tuple

    @property
    def mode_count(self):
        for st in self.statements:
            if st.keyword == "MODES":
                return st.args[0]
        return 0


# ---- lexer -----------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#[^\n]*)
  | (?P<newline>\r?\n)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?j?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<sym>[|>,=+\-*/()])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text):
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CircuitSyntaxError(f"input is not valid UTF-8 ({exc.reason})", 1, 1) from None
    tokens, line, col, pos = [], 1, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise CircuitSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "newline":
            tokens.append(Token("newline", "\n", line, col))
            line, col = line + 1, 1
        else:
            if kind not in ("ws", "comment"):
                tokens.append(Token(kind, m.group(), line, col))
            col += m.end() - m.start()
        pos = m.end()
    tokens.append(Token("newline", "\n", line, col))
    tokens.append(Token("eof", "", line + 1, 1))
    return tokens


# ---- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0
        self.depth = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, tok=None):
        tok = tok or self.tok
        return CircuitSyntaxError(message, tok.line, tok.column)

    def advance(self):
        tok = self.tok
        self.i += 1
        return tok

    def at(self, kind, text=None):
        return self.tok.kind == kind and (text is None or self.tok.text == text)

    def expect(self, kind, text=None, what=None):
        if not self.at(kind, text):
            found = "end of line" if self.tok.kind == "newline" else repr(self.tok.text or "end of input")
            raise self.error(f"expected {what or text or kind}, found {found}")
        return self.advance()

    def integer(self, what):
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            raise self.error(f"expected {what} (a non-negative integer)")
        if len(tok.text) > 9:
            raise self.error(f"{what} is too large")
        self.advance()
        return int(tok.text)

    # expressions
    def expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("expression nested too deeply")
        node = self.product()
        while self.at("sym", "+") or self.at("sym", "-"):
            op = self.advance().text
            node = BinOp(op, node, self.product())
        self.depth -= 1
        return node

    def product(self):
        node = self.unary()
        while self.at("sym", "*") or self.at("sym", "/"):
            op = self.advance().text
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.at("sym", "-") or self.at("sym", "+"):
            sign = self.advance().text
            self.depth += 1
            if self.depth > MAX_DEPTH:
                raise self.error("expression nested too deeply")
            operand = self.unary()
            self.depth -= 1
            return Neg(operand) if sign == "-" else operand
        return self.primary()

    def primary(self):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            imaginary = tok.text.endswith("j")
            value = float(tok.text.rstrip("j"))
            if not math.isfinite(value):
                raise self.error("number out of range", tok)
            node = Num(value, imaginary)
            nxt = self.tok
            adjacent = nxt.line == tok.line and nxt.column == tok.column + len(tok.text)
            if adjacent and self.at("name") and nxt.text in ("a", "pi", "j"):
                node = BinOp("*", node, Sym(self.advance().text))
            return node
        if tok.kind == "name":
            if tok.text not in ("a", "pi", "j"):
                raise self.error(f"unknown name {tok.text!r} in expression")
            self.advance()
            return Sym(tok.text)
        if self.at("sym", "("):
            self.advance()
            node = self.expr()
            self.expect("sym", ")")
            return node
        found = "end of line" if tok.kind == "newline" else repr(tok.text or "end of input")
        raise self.error(f"expected a number, name or '(', found {found}")

    # coherent terms
    def term(self, negative, arity):
        coeff = None
        if not self.at("sym", "|"):
            coeff = self.expr()
        start = self.expect("sym", "|", "'|' opening a coherent term")
        labels = [self.expr()]
        while self.at("sym", ","):
            self.advance()
            labels.append(self.expr())
        self.expect("sym", ">", "'>' closing a coherent term")
        if len(labels) != arity:
            raise self.error(f"term has {len(labels)} labels but {arity} modes are listed", start)
        return Term(negative, coeff, tuple(labels))

    def term_list(self, arity):
        negative = False
        if self.at("sym", "-") or self.at("sym", "+"):
            negative = self.advance().text == "-"
        terms = [self.term(negative, arity)]
        while self.at("sym", "+") or self.at("sym", "-"):
            negative = self.advance().text == "-"
            terms.append(self.term(negative, arity))
            if len(terms) > MAX_TERMS:
                raise self.error("too many terms")
        return tuple(terms)

    def mode_list(self):
        modes = []
        while self.at("number"):
            modes.append(self.integer("a mode index"))
        if not modes:
            raise self.error("expected at least one mode index")
        return tuple(modes)


def parse_circuit(text) -> CircuitProgram:
    """Parse circuit source; raises :class:`CircuitSyntaxError` on any malformed input."""
    p = _Parser(tokenize(text))
    statements = []
    n_modes = None
    prepared, measured = set(), set()
    gates_seen = target_seen = False

    def check_mode(m, tok):
        if n_modes is None:
            raise CircuitSyntaxError("MODES must be declared before modes are used", tok.line, tok.column)
        if m >= n_modes:
            raise CircuitSyntaxError(f"undeclared mode {m} (MODES {n_modes})", tok.line, tok.column)
        if m in measured:
            raise CircuitSyntaxError(f"mode {m} was already measured", tok.line, tok.column)

    while not p.at("eof"):
        if p.at("newline"):
            p.advance()
            continue
        head = p.tok
        if head.kind != "name" or head.text not in KEYWORDS:
            raise p.error(f"unknown keyword {head.text!r}")
        p.advance()
        kw = head.text
        if target_seen:
            raise p.error("nothing may follow TARGET", head)
        arg_toks = []

        def arg(what, kind="int"):
            arg_toks.append(p.tok)
            if p.at("newline") or p.at("eof"):
                raise p.error(f"{kw} is missing its {what}")
            if kind == "int":
                return p.integer(what)
            # DISP takes two space-separated scalars, so compound ones need parentheses
            return p.expr() if kind == "expr" else p.unary()

        if kw == "MODES":
            if n_modes is not None or statements:
                raise p.error("MODES must be the first statement and appear once", head)
            n = arg("mode count")
            if not 1 <= n <= MAX_MODES:
                raise p.error(f"mode count must be in 1..{MAX_MODES}", arg_toks[0])
            n_modes = n
            st = Statement(kw, (n,), line=head.line)
        elif kw in ("STATE", "TARGET"):
            modes_tok = p.tok
            modes = p.mode_list()
            for m in modes:
                check_mode(m, modes_tok)
            if len(set(modes)) != len(modes):
                raise CircuitSyntaxError("mode listed twice", modes_tok.line, modes_tok.column)
            if kw == "STATE":
                if gates_seen:
                    raise p.error("STATE must precede gates and measurements", head)
                if prepared & set(modes):
                    raise CircuitSyntaxError("mode prepared twice", modes_tok.line, modes_tok.column)
                prepared |= set(modes)
            else:
                remaining = set(range(n_modes)) - measured
                if set(modes) != remaining:
                    raise CircuitSyntaxError(
                        f"TARGET must list exactly the unmeasured modes {sorted(remaining)}",
                        modes_tok.line, modes_tok.column)
                target_seen = True
            p.expect("sym", "=", "'='")
            terms = p.term_list(len(modes))
            st = Statement(kw, modes, terms, line=head.line)
        elif kw == "BPS":
            i, j = arg("first mode"), arg("second mode")
            check_mode(i, arg_toks[0])
            check_mode(j, arg_toks[1])
            if i == j:
                raise p.error("BPS needs two distinct modes", arg_toks[1])
            gates_seen = True
            st = Statement(kw, (i, j), line=head.line)
        elif kw == "PHASE":
            m = arg("mode")
            check_mode(m, arg_toks[0])
            st = Statement(kw, (m, arg("angle", "expr")), line=head.line)
            gates_seen = True
        elif kw == "DISP":
            m = arg("mode")
            check_mode(m, arg_toks[0])
            st = Statement(kw, (m, arg("real part", "atom"), arg("imaginary part", "atom")), line=head.line)
            gates_seen = True
        else:  # MEASURE
            m = arg("mode")
            check_mode(m, arg_toks[0])
            tok = p.tok
            if tok.kind != "name" or tok.text not in CLASS_NAMES:
                raise p.error("MEASURE needs a class: ZERO, EVEN or ODD")
            p.advance()
            measured.add(m)
            gates_seen = True
            st = Statement(kw, (m, CLASS_NAMES[tok.text]), line=head.line)
        if not (p.at("newline") or p.at("eof")):
            raise p.error(f"unexpected {p.tok.text!r} after {kw} statement")
        statements.append(st)
    return CircuitProgram(tuple(statements))


def _format_terms(terms):
    parts = []
    for k, term in enumerate(terms):
        sign = "-" if term.negative else "+"
        body = ("" if term.coeff is None else format_expr(term.coeff) + " ") + \
            "|" + ", ".join(format_expr(x) for x in term.labels) + ">"
        if k == 0:
            parts.append(("- " if term.negative else "") + body)
        else:
            parts.append(f"{sign} {body}")
    return " ".join(parts)


def format_circuit(program: CircuitProgram) -> str:
    """Canonical source text; ``parse_circuit(format_circuit(p)) == p``."""
    lines = []
    names = {v: k for k, v in CLASS_NAMES.items() if k != "EVEN_NONZERO"}
    for st in program.statements:
        if st.keyword == "MODES":
            lines.append(f"MODES {st.args[0]}")
        elif st.keyword in ("STATE", "TARGET"):
            modes = " ".join(str(m) for m in st.args)
            lines.append(f"{st.keyword} {modes} = {_format_terms(st.terms)}")
        elif st.keyword == "BPS":
            lines.append(f"BPS {st.args[0]} {st.args[1]}")
        elif st.keyword == "PHASE":
            lines.append(f"PHASE {st.args[0]} {format_expr(st.args[1])}")
        elif st.keyword == "DISP":
            lines.append(f"DISP {st.args[0]} {format_expr(st.args[1], 3)} {format_expr(st.args[2], 3)}")
        else:
            lines.append(f"MEASURE {st.args[0]} {names[st.args[1]]}")
    return "\n".join(lines) + "\n"


# ---- evaluation ------------------------------------------------------------

@dataclass
class CircuitResult:
    state: Optional[StateVector]
    modes: tuple                 # original indices of the surviving modes, in order
    probability: float
    target_fidelity: Optional[float] = None


def _terms_state(terms, n, alpha):
    built = []
    for term in terms:
        c = 1.0 if term.coeff is None else evaluate_expr(term.coeff, alpha)
        built.append((-c if term.negative else c, [evaluate_expr(x, alpha) for x in term.labels]))
    return StateVector.from_terms(built, n)


def evaluate_circuit(program: CircuitProgram, alpha=1.0) -> CircuitResult:
    """Run the program: prepare, apply gates, herald measurements one mode at a time."""
    n = program.mode_count
    if n == 0:
        return CircuitResult(None, (), 1.0)
    pieces, order = [], []
    target = None
    for st in program.statements:
        if st.keyword == "STATE":
            pieces.append(_terms_state(st.terms, len(st.args), alpha))
            order.extend(st.args)
    vacuum = [m for m in range(n) if m not in order]
    if vacuum:
        pieces.append(StateVector.from_terms([(1, [0] * len(vacuum))], len(vacuum)))
        order.extend(vacuum)
    state = normalize(tensor(*pieces))
    state = permute_modes(state, [order.index(m) for m in range(n)])
    live = list(range(n))
    prob = 1.0
    for st in program.statements:
        if st.keyword == "BPS":
            state = apply_bps(state, live.index(st.args[0]), live.index(st.args[1]))
        elif st.keyword == "PHASE":
            psi = evaluate_expr(st.args[1], alpha)
            if abs(psi.imag) > 1e-12:
                raise PreconditionError(f"line {st.line}: phase must be real")
            state = apply_phase(state, live.index(st.args[0]), psi.real)
        elif st.keyword == "DISP":
            re_, im_ = evaluate_expr(st.args[1], alpha), evaluate_expr(st.args[2], alpha)
            state = apply_displacement(state, live.index(st.args[0]), re_ + 1j * im_)
        elif st.keyword == "MEASURE":
            k = live.index(st.args[0])
            state, p = herald_class(state, (st.args[1],), (k,))
            prob *= p
            live.pop(k)
        elif st.keyword == "TARGET":
            target = (st.args, _terms_state(st.terms, len(st.args), alpha))
    result = CircuitResult(state, tuple(live), prob)
    if target is not None and state.mode_count:
        modes, tstate = target
        tstate = permute_modes(tstate, [modes.index(m) for m in live])
        result.target_fidelity = fidelity(tstate, state)
    return result


__all__ = ["CircuitProgram", "CircuitResult", "Statement", "Term", "Num", "Sym", "Neg", "BinOp",
           "parse_circuit", "format_circuit", "evaluate_circuit", "evaluate_expr", "format_expr",
           "tokenize", "KEYWORDS"]
