"""Math-aware text analysis: numeral extraction, expression parsing and
equivalence, and question-structure counting.

Everything here is pure and reentrant. Numbers are ``decimal.Decimal``
throughout so that 2.50 and 2.5 compare equal while each keeps its authored
form. Spans are (byte offset, length) pairs into the UTF-8 encoding of the
source text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_HALF_EVEN, Context, Decimal, localcontext
from typing import Iterator, Mapping, Optional, Union


class MathTextError(Exception):
    """Base class for errors raised by this module."""


class ParseError(MathTextError):
    """Expression text could not be parsed.

    ``offset`` is a byte offset into the source string; ``expected``
    describes what the parser was looking for at that point.
    """

    def __init__(self, message: str, offset: int, expected: str = ""):
        super().__init__(f"{message} at offset {offset}" + (f" (expected {expected})" if expected else ""))
        self.offset = offset
        self.expected = expected


class UnboundVariable(MathTextError):
    def __init__(self, name: str):
        super().__init__(f"no binding for variable '{name}'")
        self.name = name


class DivisionByZero(MathTextError):
    pass


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Number:
    value: Decimal


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # only "neg"
    child: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of "+", "-", "*", "/"
    left: "Expr"
    right: "Expr"


Expr = Union[Number, Variable, Unary, Binary]


@dataclass(frozen=True)
class Equation:
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class NumericLiteral:
    """A digit-form numeral found in prose.

    ``value`` is the exact decimal with currency symbol and thousands
    separators stripped; ``raw`` is the source substring as written.
    """

    value: Decimal
    raw: str
    span: tuple[int, int]


@dataclass(frozen=True)
class QuestionStructure:
    enumerated_items: int
    question_marks: int
    imperative_tasks: int

    def total(self) -> int:
        return self.enumerated_items + self.question_marks + self.imperative_tasks


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_TOK_NUMBER = "number"
_TOK_IDENT = "ident"
_TOK_OP = "op"
_TOK_LPAREN = "lparen"
_TOK_RPAREN = "rparen"
_TOK_END = "end"

# Thousands-separated form first so "1,000" lexes as one numeral.
_NUMBER_RE = re.compile(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")

_OP_CHARS = {"+": "+", "-": "-", "*": "*", "×": "*", "/": "/", "÷": "/"}


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    offset: int  # byte offset into source


def _byte_offsets(text: str) -> list[int]:
    offsets = [0]
    total = 0
    for ch in text:
        total += len(ch.encode("utf-8"))
        offsets.append(total)
    return offsets


def _tokenize(src: str) -> list[_Token]:
    """Lex an expression string. '$' (LaTeX math / currency) is skipped."""
    offsets = _byte_offsets(src)
    tokens: list[_Token] = []
    i = 0
    while i < len(src):
        ch = src[i]
        if ch.isspace() or ch == "$":
            i += 1
            continue
        m = _NUMBER_RE.match(src, i)
        if m:
            tokens.append(_Token(_TOK_NUMBER, m.group(), offsets[i]))
            i = m.end()
            continue
        m = _IDENT_RE.match(src, i)
        if m:
            tokens.append(_Token(_TOK_IDENT, m.group(), offsets[i]))
            i = m.end()
            continue
        if ch in _OP_CHARS:
            tokens.append(_Token(_TOK_OP, _OP_CHARS[ch], offsets[i]))
            i += 1
            continue
        if ch == "(":
            tokens.append(_Token(_TOK_LPAREN, ch, offsets[i]))
            i += 1
            continue
        if ch == ")":
            tokens.append(_Token(_TOK_RPAREN, ch, offsets[i]))
            i += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", offsets[i], "number, variable, operator or parenthesis")
    tokens.append(_Token(_TOK_END, "", offsets[len(src)]))
    return tokens


def _parse_number(text: str) -> Decimal:
    return Decimal(text.replace(",", ""))


class _Parser:
    """Recursive-descent parser.

    Precedence: unary minus > multiplication/division > addition/subtraction,
    all left-associative. Implicit multiplication is recognized for a number
    followed by a parenthesis or a variable, and a closing parenthesis
    followed by an opening one.
    """

    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def prev_kind(self) -> str:
        return self.tokens[self.pos - 1].kind if self.pos > 0 else ""

    def parse(self) -> Expr:
        expr = self.expr()
        tok = self.peek()
        if tok.kind != _TOK_END:
            raise ParseError(f"unexpected {tok.text!r}", tok.offset, "end of expression")
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self.peek().kind == _TOK_OP and self.peek().text in ("+", "-"):
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            tok = self.peek()
            if tok.kind == _TOK_OP and tok.text in ("*", "/"):
                op = self.advance().text
                node = Binary(op, node, self.unary())
                continue
            # Implicit multiplication by adjacency.
            prev = self.prev_kind()
            if prev == _TOK_NUMBER and tok.kind in (_TOK_IDENT, _TOK_LPAREN):
                node = Binary("*", node, self.unary())
                continue
            if prev == _TOK_RPAREN and tok.kind == _TOK_LPAREN:
                node = Binary("*", node, self.unary())
                continue
            return node

    def unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == _TOK_OP and tok.text == "-":
            self.advance()
            return Unary("neg", self.unary())
        return self.primary()

    def primary(self) -> Expr:
        tok = self.advance()
        if tok.kind == _TOK_NUMBER:
            return Number(_parse_number(tok.text))
        if tok.kind == _TOK_IDENT:
            return Variable(tok.text)
        if tok.kind == _TOK_LPAREN:
            node = self.expr()
            closing = self.advance()
            if closing.kind != _TOK_RPAREN:
                raise ParseError(f"unexpected {closing.text or 'end of input'!r}", closing.offset, "')'")
            return node
        raise ParseError(
            f"unexpected {tok.text or 'end of input'!r}", tok.offset, "number, variable, '-' or '('"
        )


def parse_expression(src: str) -> Expr:
    """Parse an arithmetic expression. Raises ParseError on bad input."""
    if not src.strip():
        raise ParseError("empty expression", 0, "an expression")
    return _Parser(_tokenize(src)).parse()


def parse_equation(src: str) -> Equation:
    """Parse "lhs = rhs" where both sides are expressions."""
    parts = src.split("=")
    if len(parts) != 2:
        raise ParseError("expected exactly one '='", 0, "a single equation")
    lhs = parse_expression(parts[0])
    rhs = parse_expression(parts[1])
    return Equation(lhs, rhs)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return 1 if node.op in ("+", "-") else 2
    if isinstance(node, Unary):
        return 3
    return 4


def to_text(node: Expr) -> str:
    """Render an AST so that re-parsing reproduces the same tree."""
    if isinstance(node, Number):
        return format(node.value, "f")
    if isinstance(node, Variable):
        return node.name
    if isinstance(node, Unary):
        inner = to_text(node.child)
        if _prec(node.child) < _prec(node):
            inner = f"({inner})"
        return f"-{inner}"
    left = to_text(node.left)
    if _prec(node.left) < _prec(node):
        left = f"({left})"
    right = to_text(node.right)
    # Left-associative grammar: same-precedence right children need parens.
    if _prec(node.right) <= _prec(node):
        right = f"({right})"
    return f"{left} {node.op} {right}"


# ---------------------------------------------------------------------------
# Canonicalization and equivalence
# ---------------------------------------------------------------------------

def canonicalize(ast: Expr) -> Expr:
    """Rename variables v0, v1, ... in order of first occurrence."""
    mapping: dict[str, str] = {}

    def walk(node: Expr) -> Expr:
        if isinstance(node, Number):
            return node
        if isinstance(node, Variable):
            if node.name not in mapping:
                mapping[node.name] = f"v{len(mapping)}"
            return Variable(mapping[node.name])
        if isinstance(node, Unary):
            return Unary(node.op, walk(node.child))
        return Binary(node.op, walk(node.left), walk(node.right))

    return walk(ast)


def alpha_equivalent(a: Expr, b: Expr) -> bool:
    """Structural equality up to consistent variable renaming.

    Numbers compare as exact decimals (2.50 equals 2.5). No algebraic
    normalization is applied: "a + b" and "b + a" are not equivalent.
    """
    return canonicalize(a) == canonicalize(b)


def variables_of(ast: Expr) -> list[str]:
    """Variable names in first-occurrence order."""
    seen: list[str] = []

    def walk(node: Expr) -> None:
        if isinstance(node, Variable):
            if node.name not in seen:
                seen.append(node.name)
        elif isinstance(node, Unary):
            walk(node.child)
        elif isinstance(node, Binary):
            walk(node.left)
            walk(node.right)

    walk(ast)
    return seen


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

_EVAL_CONTEXT = Context(prec=60, rounding=ROUND_HALF_EVEN)
_DIV_QUANTUM = Decimal("1e-12")


def evaluate(ast: Expr, bindings: Mapping[str, Decimal]) -> Decimal:
    """Evaluate with exact decimal arithmetic.

    Division rounds to at most 12 fractional digits (half-even) at the point
    of division; addition, subtraction and multiplication are exact.
    """
    with localcontext(_EVAL_CONTEXT):
        return _eval(ast, bindings)


def _eval(ast: Expr, bindings: Mapping[str, Decimal]) -> Decimal:
    if isinstance(ast, Number):
        return ast.value
    if isinstance(ast, Variable):
        if ast.name not in bindings:
            raise UnboundVariable(ast.name)
        return Decimal(bindings[ast.name])
    if isinstance(ast, Unary):
        return -_eval(ast.child, bindings)
    left = _eval(ast.left, bindings)
    right = _eval(ast.right, bindings)
    if ast.op == "+":
        return left + right
    if ast.op == "-":
        return left - right
    if ast.op == "*":
        return left * right
    if right == 0:
        raise DivisionByZero(f"division by zero: {to_text(ast.right)} = 0")
    quotient = left / right
    if quotient == quotient.to_integral_value() or -quotient.as_tuple().exponent <= 12:
        return quotient
    return quotient.quantize(_DIV_QUANTUM, rounding=ROUND_HALF_EVEN)


# ---------------------------------------------------------------------------
# Numeral extraction
# ---------------------------------------------------------------------------

_LITERAL_RE = re.compile(r"\$?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)")


def _enumeration_marker_spans(text: str) -> list[tuple[int, int]]:
    """Character spans of list markers ("1.", "(a)", ...) at line starts."""
    spans = []
    pos = 0
    for line in text.split("\n"):
        m = _ENUM_MARKER_RE.match(line)
        if m:
            spans.append((pos + m.start(), pos + m.end()))
        pos += len(line) + 1
    return spans


def extract_numeric_literals(text: str) -> list[NumericLiteral]:
    """Every digit-form numeral in source order.

    Word-form numbers ("two", "single") are not extracted. A numeral glued
    to letters ("2x", "2-point") is. '$' directly before the digits counts
    as a currency prefix and stays in ``raw`` but not in ``value``.
    Enumeration markers at line starts are list markup, not values.
    """
    offsets = _byte_offsets(text)
    markers = _enumeration_marker_spans(text)
    out: list[NumericLiteral] = []
    for m in _LITERAL_RE.finditer(text):
        if any(lo <= m.start() < hi for lo, hi in markers):
            continue
        raw = m.group()
        value = Decimal(raw.lstrip("$").replace(",", ""))
        start = offsets[m.start()]
        out.append(NumericLiteral(value=value, raw=raw, span=(start, offsets[m.end()] - start)))
    return out


def distinct_values(text: str) -> set[Decimal]:
    return {lit.value for lit in extract_numeric_literals(text)}


# ---------------------------------------------------------------------------
# Finding expressions in prose
# ---------------------------------------------------------------------------

_EDGE_PUNCT = ".,;:!?\"'"


def _try_parse(src: str) -> Optional[Expr]:
    stripped = src.strip().strip(_EDGE_PUNCT).strip()
    if not stripped:
        return None
    try:
        return parse_expression(stripped)
    except ParseError:
        return None


def _parse_side(text: str, anchor: str) -> Optional[Expr]:
    """Best-effort parse of one side of an equation.

    Tries the whole side, then word-boundary affixes nearest the '=':
    suffixes for the left side, prefixes for the right.
    """
    full = _try_parse(text)
    if full is not None:
        return full
    words = text.split()
    if anchor == "suffix":
        for i in range(1, len(words)):
            candidate = _try_parse(" ".join(words[i:]))
            if candidate is not None:
                return candidate
    else:
        for i in range(len(words) - 1, 0, -1):
            candidate = _try_parse(" ".join(words[:i]))
            if candidate is not None:
                return candidate
    return None


def _is_word_hyphen(line: str, i: int) -> bool:
    """True for the hyphen in compound words like "2-point"."""
    if line[i] != "-":
        return False
    before = line[i - 1] if i > 0 else ""
    after = line[i + 1] if i + 1 < len(line) else ""
    return before.isdigit() and after.isalpha()


def _has_arithmetic_anchor(line: str) -> bool:
    for i, ch in enumerate(line):
        if ch in "+*×÷/" or (ch == "-" and not _is_word_hyphen(line, i)):
            j = i - 1
            while j >= 0 and line[j] == " ":
                j -= 1
            k = i + 1
            while k < len(line) and line[k] == " ":
                k += 1
            before_ok = j >= 0 and (line[j].isalnum() or line[j] == ")")
            after_ok = k < len(line) and (line[k].isalnum() or line[k] in "($-")
            if before_ok and after_ok:
                return True
    return False


def _lenient_token_runs(line: str) -> Iterator[list[_Token]]:
    """Maximal runs of expression tokens, breaking at unlexable characters
    and at compound-word hyphens."""
    offsets = _byte_offsets(line)
    run: list[_Token] = []
    i = 0
    while i < len(line):
        ch = line[i]
        if ch.isspace() or ch == "$":
            i += 1
            continue
        if ch == "-" and _is_word_hyphen(line, i):
            if run:
                yield run
                run = []
            i += 1
            continue
        m = _NUMBER_RE.match(line, i)
        if m:
            run.append(_Token(_TOK_NUMBER, m.group(), offsets[i]))
            i = m.end()
            continue
        m = _IDENT_RE.match(line, i)
        if m:
            run.append(_Token(_TOK_IDENT, m.group(), offsets[i]))
            i = m.end()
            continue
        if ch in _OP_CHARS:
            run.append(_Token(_TOK_OP, _OP_CHARS[ch], offsets[i]))
            i += 1
            continue
        if ch == "(":
            run.append(_Token(_TOK_LPAREN, ch, offsets[i]))
            i += 1
            continue
        if ch == ")":
            run.append(_Token(_TOK_RPAREN, ch, offsets[i]))
            i += 1
            continue
        if run:
            yield run
            run = []
        i += 1
    if run:
        yield run


def _parse_token_window(tokens: list[_Token]) -> Optional[Expr]:
    end = _Token(_TOK_END, "", tokens[-1].offset + len(tokens[-1].text.encode("utf-8")))
    try:
        return _Parser(tokens + [end]).parse()
    except ParseError:
        return None


def _scan_prose_line(line: str) -> list[tuple[tuple[int, int], Expr]]:
    """Find standalone arithmetic expressions in a line without '='."""
    if not _has_arithmetic_anchor(line):
        return []
    hits: list[tuple[tuple[int, int], Expr]] = []
    for run in _lenient_token_runs(line):
        if not any(t.kind == _TOK_OP for t in run):
            continue
        start = 0
        n = len(run)
        while start < n:
            found = None
            for end in range(n, start, -1):
                window = run[start:end]
                if len(window) < 3 or not any(t.kind == _TOK_OP for t in window):
                    continue
                ast = _parse_token_window(window)
                if ast is not None:
                    begin = window[0].offset
                    length = window[-1].offset + len(window[-1].text.encode("utf-8")) - begin
                    found = ((begin, length), ast, end)
                    break
            if found is None:
                start += 1
            else:
                hits.append((found[0], found[1]))
                start = found[2]
    return hits


def find_expressions(text: str) -> list[tuple[tuple[int, int], Union[Equation, Expr]]]:
    """Locate equations and arithmetic expressions in prose, line by line.

    A line with a single '=' is treated as a candidate equation; an
    unparseable descriptive side ("The amount of money left = ...") falls
    back to the nearest parseable words around the '='. Lines that cannot
    be parsed are skipped silently.
    """
    results: list[tuple[tuple[int, int], Union[Equation, Expr]]] = []
    offsets = _byte_offsets(text)
    pos = 0
    for line in text.split("\n"):
        start, end = pos, pos + len(line)
        pos = end + 1
        eq_count = line.count("=")
        if eq_count >= 2:
            continue
        if eq_count == 1:
            lhs_text, rhs_text = line.split("=")
            lhs_full = _try_parse(lhs_text)
            rhs_full = _try_parse(rhs_text)
            if lhs_full is not None and rhs_full is not None:
                pass
            elif rhs_full is not None:
                lhs_full = _parse_side(lhs_text, "suffix")
            elif lhs_full is not None:
                rhs_full = _parse_side(rhs_text, "prefix")
            if lhs_full is None or rhs_full is None:
                continue
            span = (offsets[start], offsets[end] - offsets[start])
            results.append((span, Equation(lhs_full, rhs_full)))
            continue
        for (rel_off, length), ast in _scan_prose_line(line):
            results.append(((offsets[start] + rel_off, length), ast))
    return results


# ---------------------------------------------------------------------------
# Question structure
# ---------------------------------------------------------------------------

DIRECTIVE_VERBS = frozenset(
    {"write", "create", "define", "use", "find", "calculate", "determine", "explain", "solve"}
)

_ENUM_MARKER_RE = re.compile(r"^\s*(?:\(\d{1,3}\)|\d{1,3}[.)]|\([a-z]\)|[a-z]\)|[-*•])(?=\s|$)")

_ABBREVIATIONS = [
    (re.compile(r"\b([eE])\.([gG])\."), r"\1_\2_"),
    (re.compile(r"\b([iI])\.([eE])\."), r"\1_\2_"),
    (re.compile(r"\b(Mr|Ms|Dr)\."), r"\1_"),
]


def split_sentences(text: str) -> list[tuple[str, str]]:
    """Split into (sentence, terminator) pairs.

    The terminator is the run of '.', '?' and '!' that ended the sentence
    ("" for a trailing fragment). Dots inside decimals and the
    abbreviations Mr./Ms./Dr./e.g./i.e. do not end sentences.
    """
    masked = text
    for pattern, repl in _ABBREVIATIONS:
        masked = pattern.sub(repl, masked)
    sentences: list[tuple[str, str]] = []
    current: list[str] = []
    i = 0
    while i < len(masked):
        ch = masked[i]
        if ch in ".?!":
            if ch == "." and 0 < i < len(masked) - 1 and masked[i - 1].isdigit() and masked[i + 1].isdigit():
                current.append(ch)
                i += 1
                continue
            run = ch
            while i + 1 < len(masked) and masked[i + 1] in ".?!":
                i += 1
                run += masked[i]
            sentence = "".join(current).strip()
            if sentence:
                sentences.append((sentence, run))
            current = []
            i += 1
            continue
        current.append(ch)
        i += 1
    tail = "".join(current).strip()
    if tail:
        sentences.append((tail, ""))
    return sentences


_SENTENCE_LEAD_RE = re.compile(r"^[\s\"']*(?:\(\d{1,3}\)|\d{1,3}[.)]|\([a-z]\)|[a-z]\)|[-*•])?[\s\"']*")


def _first_word(sentence: str) -> str:
    rest = _SENTENCE_LEAD_RE.sub("", sentence, count=1)
    m = re.match(r"[A-Za-z]+", rest)
    return m.group().lower() if m else ""


def count_questions(text: str) -> QuestionStructure:
    """Count enumerated items, question sentences and directive-verb tasks."""
    enumerated = sum(1 for line in text.split("\n") if _ENUM_MARKER_RE.match(line))
    question_marks = 0
    imperative = 0
    for sentence, terminator in split_sentences(text):
        if "?" in terminator:
            question_marks += 1
        if _first_word(sentence) in DIRECTIVE_VERBS:
            imperative += 1
    return QuestionStructure(
        enumerated_items=enumerated,
        question_marks=question_marks,
        imperative_tasks=imperative,
    )
