"""Parser and evaluator for the dashboard query language.

A small Kibana-flavoured boolean language over flat documents:

    expr  := or
    or    := and ("or" and)*
    and   := unary ("and" unary)*
    unary := "not" unary | "(" expr ")" | term
    term  := path ":" value

Keywords are case-insensitive; whitespace is insignificant outside quotes.
A value is a quoted string (exact match), an unquoted token that may contain
``*`` (wildcard match), or ``/alt1|alt2|.../`` (any alternative matches).
All matching is case-sensitive and anchored to the full field value; ``*``
matches any possibly-empty character run and every other character is
literal. A term on a field the document lacks is false. An empty query or a
bare ``*`` matches every document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache


class QuerySyntaxError(ValueError):
    """Raised for malformed query text; carries position and expectation."""

    def __init__(self, position: int, expected: str):
        self.position = position
        self.expected = expected
        super().__init__(f"syntax error at position {position}: expected {expected}")


# --- AST ---------------------------------------------------------------


@dataclass(frozen=True)
class Exact:
    value: str


@dataclass(frozen=True)
class Glob:
    pattern: str


@dataclass(frozen=True)
class SlashPattern:
    alternatives: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.alternatives:
            raise ValueError("slash pattern needs at least one alternative")


Pattern = Exact | Glob | SlashPattern


@dataclass(frozen=True)
class Term:
    path: str
    pattern: Pattern


@dataclass(frozen=True)
class And:
    children: tuple


@dataclass(frozen=True)
class Or:
    children: tuple


@dataclass(frozen=True)
class Not:
    child: object


@dataclass(frozen=True)
class MatchAll:
    pass


QueryNode = And | Or | Not | Term | MatchAll


# --- tokenizer ---------------------------------------------------------

_WORD_CHARS = re.compile(r"[A-Za-z0-9_.@*+#%-]+")
_PATH_RE = re.compile(r"[A-Za-z0-9_@+-]+(\.[A-Za-z0-9_@+-]+)*")
_KEYWORDS = {"and", "or", "not"}


@dataclass(frozen=True)
class _Token:
    kind: str  # word | string | slash | lparen | rparen | colon | eof
    value: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c == "(":
            tokens.append(_Token("lparen", c, i))
            i += 1
        elif c == ")":
            tokens.append(_Token("rparen", c, i))
            i += 1
        elif c == ":":
            tokens.append(_Token("colon", c, i))
            i += 1
        elif c == '"':
            j = i + 1
            out = []
            while j < n and text[j] != '"':
                if text[j] == "\\" and j + 1 < n:
                    out.append(text[j + 1])
                    j += 2
                else:
                    out.append(text[j])
                    j += 1
            if j >= n:
                raise QuerySyntaxError(i, 'closing quote')
            tokens.append(_Token("string", "".join(out), i))
            i = j + 1
        elif c == "/":
            j = text.find("/", i + 1)
            if j < 0:
                raise QuerySyntaxError(i, "closing '/'")
            tokens.append(_Token("slash", text[i + 1 : j], i))
            i = j + 1
        else:
            m = _WORD_CHARS.match(text, i)
            if not m:
                raise QuerySyntaxError(i, "a term, 'not', or '('")
            tokens.append(_Token("word", m.group(0), i))
            i = m.end()
    tokens.append(_Token("eof", "", n))
    return tokens


# --- parser ------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def _is_keyword(self, tok: _Token, kw: str) -> bool:
        return tok.kind == "word" and tok.value.lower() == kw

    def parse_expr(self):
        return self.parse_or()

    def parse_or(self):
        children = [self.parse_and()]
        while self._is_keyword(self.peek(), "or"):
            self.advance()
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def parse_and(self):
        children = [self.parse_unary()]
        while self._is_keyword(self.peek(), "and"):
            self.advance()
            children.append(self.parse_unary())
        return children[0] if len(children) == 1 else And(tuple(children))

    def parse_unary(self):
        tok = self.peek()
        if self._is_keyword(tok, "not"):
            self.advance()
            return Not(self.parse_unary())
        if tok.kind == "lparen":
            self.advance()
            node = self.parse_expr()
            closing = self.peek()
            if closing.kind != "rparen":
                raise QuerySyntaxError(closing.pos, "')'")
            self.advance()
            return node
        return self.parse_term()

    def parse_term(self):
        tok = self.peek()
        if tok.kind != "word":
            raise QuerySyntaxError(tok.pos, "a field path, 'not', or '('")
        if tok.value == "*" and self.tokens[self.i + 1].kind != "colon":
            self.advance()
            return MatchAll()
        if tok.value.lower() in _KEYWORDS:
            raise QuerySyntaxError(tok.pos, "a field path, 'not', or '('")
        if not _PATH_RE.fullmatch(tok.value):
            raise QuerySyntaxError(tok.pos, "a dotted field path")
        self.advance()
        colon = self.peek()
        if colon.kind != "colon":
            raise QuerySyntaxError(colon.pos, "':'")
        self.advance()
        return Term(tok.value, self.parse_value())

    def parse_value(self) -> Pattern:
        tok = self.peek()
        if tok.kind == "string":
            self.advance()
            return Exact(tok.value)
        if tok.kind == "slash":
            self.advance()
            return SlashPattern(tuple(tok.value.split("|")))
        if tok.kind == "word" and tok.value.lower() not in _KEYWORDS:
            self.advance()
            return Glob(tok.value)
        raise QuerySyntaxError(tok.pos, "a value")


def parse_kql(text: str) -> QueryNode:
    """Parse query text into an AST; empty text matches everything."""
    tokens = _tokenize(text)
    if tokens[0].kind == "eof":
        return MatchAll()
    parser = _Parser(tokens)
    node = parser.parse_expr()
    trailing = parser.peek()
    if trailing.kind != "eof":
        raise QuerySyntaxError(trailing.pos, "end of query")
    return node


# --- evaluation --------------------------------------------------------


def canonical_value(value) -> str:
    """Field value as the string that patterns are matched against."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    return str(value)


@lru_cache(maxsize=4096)
def _glob_regex(pattern: str) -> re.Pattern:
    parts = [".*" if ch == "*" else re.escape(ch) for ch in pattern]
    return re.compile("".join(parts), re.DOTALL)


def glob_match(pattern: str, value: str) -> bool:
    """Anchored wildcard match: ``*`` spans anything, all else is literal."""
    return _glob_regex(pattern).fullmatch(value) is not None


def _match(pattern: Pattern, value: str) -> bool:
    if isinstance(pattern, Exact):
        return value == pattern.value
    if isinstance(pattern, Glob):
        return glob_match(pattern.pattern, value)
    return any(glob_match(alt, value) for alt in pattern.alternatives)


def eval_query(node: QueryNode, doc: dict) -> bool:
    """Evaluate a query AST against a flat dotted-path document."""
    if isinstance(node, MatchAll):
        return True
    if isinstance(node, And):
        return all(eval_query(c, doc) for c in node.children)
    if isinstance(node, Or):
        return any(eval_query(c, doc) for c in node.children)
    if isinstance(node, Not):
        return not eval_query(node.child, doc)
    if isinstance(node, Term):
        if node.path not in doc:
            return False
        return _match(node.pattern, canonical_value(doc[node.path]))
    raise TypeError(f"not a query node: {node!r}")


# --- rendering ---------------------------------------------------------

_BARE_SAFE = re.compile(r"[A-Za-z0-9_.@*+#%-]+\Z")


def _render_value(pattern: Pattern) -> str:
    if isinstance(pattern, Exact):
        escaped = pattern.value.replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if isinstance(pattern, Glob):
        if not _BARE_SAFE.match(pattern.pattern) or pattern.pattern.lower() in _KEYWORDS:
            raise ValueError(f"glob not representable as a bare token: {pattern.pattern!r}")
        return pattern.pattern
    body = "|".join(pattern.alternatives)
    if "/" in body:
        raise ValueError("slash pattern alternatives may not contain '/'")
    return f"/{body}/"


def to_kql(node: QueryNode) -> str:
    """Render an AST back to query text (inverse of parse for safe values)."""
    if isinstance(node, MatchAll):
        return "*"
    if isinstance(node, Term):
        return f"{node.path}: {_render_value(node.pattern)}"
    if isinstance(node, Not):
        return f"not {to_kql(node.child)}"
    if isinstance(node, And):
        return "(" + " and ".join(to_kql(c) for c in node.children) + ")"
    if isinstance(node, Or):
        return "(" + " or ".join(to_kql(c) for c in node.children) + ")"
    raise TypeError(f"not a query node: {node!r}")
