"""
SDG query language: parser, AST and canonical renderer.

The language is a Scopus-style subset:

    TITLE-ABS-KEY("extreme" W/3 "poverty") AND NOT SUBJAREA(2700)

Field functions TITLE, ABS, KEY and TITLE-ABS-KEY scope quoted term
patterns; inside a scope patterns combine with W/n, PRE/n, AND and OR.
At the outer level scopes and the SUBJAREA / SRCTITLE filters combine
with AND NOT, AND and OR. Binding strength: proximity > AND > OR inside a
scope, AND NOT > AND > OR outside; parentheses override.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator, Union

import pyparsing as pp

from .common import (
    QueryBankError,
    QuerySyntaxError,
    ProximityOperandError,
    UnsupportedFieldError,
    WildcardPositionError,
    check_sdg,
    ConfigurationError,
)
from .corpus import ALL_FIELDS, Field, tokenize

pp.ParserElement.enable_packrat()


# ============================================================================
# AST
# ============================================================================


@dataclass(frozen=True, slots=True)
class TermPattern:
    """
    A quoted pattern: one token or a phrase of consecutive tokens.

    With `prefix` set, the final token matches any token it is a prefix of
    (written `"pollut*"`).
    """

    tokens: tuple[str, ...]
    prefix: bool = False

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ConfigurationError("term pattern needs at least one token")
        for tok in self.tokens:
            if tokenize(tok) != [tok]:
                raise ConfigurationError(f"not a normalised token: {tok!r}")


@dataclass(frozen=True, slots=True)
class Proximity:
    left: TermPattern
    right: TermPattern
    distance: int
    ordered: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.left, TermPattern) or not isinstance(
            self.right, TermPattern
        ):
            raise ConfigurationError("proximity operands must be term patterns")
        if self.distance < 0:
            raise ConfigurationError("proximity distance must be non-negative")


@dataclass(frozen=True, slots=True)
class And:
    children: tuple[QueryAst, ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ConfigurationError("AND needs at least two operands")


@dataclass(frozen=True, slots=True)
class Or:
    children: tuple[QueryAst, ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise ConfigurationError("OR needs at least two operands")


@dataclass(frozen=True, slots=True)
class AndNot:
    left: QueryAst
    right: QueryAst


@dataclass(frozen=True, slots=True)
class FieldScope:
    fields: frozenset[Field]
    child: QueryAst

    def __post_init__(self) -> None:
        if frozenset(self.fields) not in SCOPE_NAMES:
            raise ConfigurationError(f"unsupported field set: {sorted(self.fields)}")


class SubjectMode(str, Enum):
    INCLUDE = "include"
    EXCLUDE = "exclude"


@dataclass(frozen=True, slots=True)
class SubjectFilter:
    """
    ASJC subject-area filter.

    Codes are 4-digit ASJC codes or 2-digit area prefixes. INCLUDE matches
    records carrying some listed code, EXCLUDE records carrying none.
    """

    codes: frozenset[int]
    mode: SubjectMode = SubjectMode.INCLUDE

    def __post_init__(self) -> None:
        if not self.codes:
            raise ConfigurationError("SUBJAREA needs at least one code")
        for code in self.codes:
            if not (10 <= code <= 99 or 1000 <= code <= 9999):
                raise ConfigurationError(
                    f"SUBJAREA code {code} is neither a 2-digit area nor a 4-digit code"
                )


@dataclass(frozen=True, slots=True)
class SourceFilter:
    pattern: TermPattern


QueryAst = Union[
    TermPattern, Proximity, And, Or, AndNot, FieldScope, SubjectFilter, SourceFilter
]

SCOPE_FUNCTIONS: dict[str, frozenset[Field]] = {
    "TITLE-ABS-KEY": frozenset(ALL_FIELDS),
    "TITLE": frozenset({Field.TITLE}),
    "ABS": frozenset({Field.ABSTRACT}),
    "KEY": frozenset({Field.KEYWORDS}),
}
SCOPE_NAMES: dict[frozenset[Field], str] = {v: k for k, v in SCOPE_FUNCTIONS.items()}


# ============================================================================
# GRAMMAR
# ============================================================================


def _byte_offset(source: str, loc: int) -> int:
    return len(source[:loc].encode("utf-8"))


def _make_pattern(raw: str, source: str, loc: int) -> TermPattern:
    text = raw.strip()
    prefix = False
    if "*" in text:
        if text.count("*") > 1 or not text.endswith("*"):
            raise WildcardPositionError(
                "'*' may only end the final token of a pattern",
                _byte_offset(source, loc),
            )
        text = text[:-1]
        if not text or not text[-1].isalnum():
            raise WildcardPositionError(
                "'*' must follow a letter or digit", _byte_offset(source, loc)
            )
        prefix = True
    tokens = tokenize(text)
    if not tokens:
        raise QuerySyntaxError(
            "pattern contains no searchable token",
            _byte_offset(source, loc),
            {"letter or digit"},
        )
    return TermPattern(tuple(tokens), prefix)


def _operands(group: pp.ParseResults) -> list:
    return [t for t in group if not isinstance(t, str)]


def _proximity_action(source: str, loc: int, toks: pp.ParseResults) -> Proximity:
    group = toks[0]
    if len(group) != 3:
        raise ProximityOperandError(
            "proximity operators cannot be chained", _byte_offset(source, loc)
        )
    left, op, right = group[0], group[1], group[2]
    if not isinstance(left, TermPattern) or not isinstance(right, TermPattern):
        raise ProximityOperandError(
            "W/n and PRE/n take two quoted patterns", _byte_offset(source, loc)
        )
    m = _PROX_RE.fullmatch(op)
    assert m is not None
    return Proximity(left, right, int(m.group(2)), m.group(1).upper() == "PRE")


def _and_action(source: str, loc: int, toks: pp.ParseResults) -> And:
    return And(tuple(_operands(toks[0])))


def _or_action(source: str, loc: int, toks: pp.ParseResults) -> Or:
    return Or(tuple(_operands(toks[0])))


def _and_not_action(source: str, loc: int, toks: pp.ParseResults) -> AndNot:
    operands = _operands(toks[0])
    node = operands[0]
    for right in operands[1:]:
        node = AndNot(node, right)
    return node


def _scope_action(source: str, loc: int, toks: pp.ParseResults) -> FieldScope:
    return FieldScope(SCOPE_FUNCTIONS[toks[0].upper()], toks[1])


def _code_action(source: str, loc: int, toks: pp.ParseResults) -> int:
    digits = toks[0]
    if len(digits) not in (2, 4) or digits.startswith("0"):
        raise QuerySyntaxError(
            f"SUBJAREA code {digits!r} must be a 2-digit area or a 4-digit code",
            _byte_offset(source, loc),
            {"ASJC code"},
        )
    return int(digits)


def _subject_action(source: str, loc: int, toks: pp.ParseResults) -> SubjectFilter:
    mode = SubjectMode.EXCLUDE if "negate" in toks else SubjectMode.INCLUDE
    return SubjectFilter(frozenset(toks["codes"]), mode)


def _source_action(source: str, loc: int, toks: pp.ParseResults) -> SourceFilter:
    return SourceFilter(toks[1])


def _unsupported_action(source: str, loc: int, toks: pp.ParseResults):
    raise UnsupportedFieldError(
        f"unsupported field function {toks[0]!r}",
        _byte_offset(source, loc),
        set(SCOPE_FUNCTIONS) | {"SUBJAREA", "SRCTITLE"},
    )


_PROX_RE = re.compile(r"(W|PRE)/(\d+)", re.IGNORECASE)


def _build_grammar() -> pp.ParserElement:
    LPAR, RPAR = pp.Suppress("("), pp.Suppress(")")
    AND = pp.CaselessKeyword("AND")
    OR = pp.CaselessKeyword("OR")
    NOT = pp.CaselessKeyword("NOT")

    pattern = pp.QuotedString('"', esc_char="\\").set_name("quoted pattern")
    pattern.set_parse_action(lambda s, loc, toks: _make_pattern(toks[0], s, loc))

    prox_op = pp.Regex(_PROX_RE.pattern, flags=re.IGNORECASE).set_name("W/n or PRE/n")

    scope_body = pp.infix_notation(
        pattern,
        [
            (prox_op, 2, pp.OpAssoc.LEFT, _proximity_action),
            (AND, 2, pp.OpAssoc.LEFT, _and_action),
            (OR, 2, pp.OpAssoc.LEFT, _or_action),
        ],
    ).set_name("term expression")

    field_fn = pp.one_of(list(SCOPE_FUNCTIONS), caseless=True).set_name("field function")
    scope = (field_fn + LPAR - scope_body + RPAR).set_parse_action(_scope_action)

    code = pp.Regex(r"\d+").set_name("ASJC code").set_parse_action(_code_action)
    subject = (
        pp.CaselessKeyword("SUBJAREA")
        + LPAR
        - pp.Opt(NOT)("negate")
        + pp.Group(code + pp.ZeroOrMore(pp.Opt(pp.Suppress(OR)) + code))("codes")
        + RPAR
    ).set_parse_action(_subject_action)

    source = (
        pp.CaselessKeyword("SRCTITLE") + LPAR - pattern + RPAR
    ).set_parse_action(_source_action)

    unsupported = (
        ~(AND | OR | NOT) + pp.Regex(r"[A-Za-z][A-Za-z0-9_-]*(?=\s*\()")
    ).set_parse_action(_unsupported_action)

    operand = (scope | subject | source | unsupported).set_name("field function")

    return pp.infix_notation(
        operand,
        [
            (AND + NOT, 2, pp.OpAssoc.LEFT, _and_not_action),
            (AND, 2, pp.OpAssoc.LEFT, _and_action),
            (OR, 2, pp.OpAssoc.LEFT, _or_action),
        ],
    ).set_name("query")


_QUERY = _build_grammar()


def parse(source: str) -> QueryAst:
    """
    Parse query text into an AST.

    Args:
        source: Query text

    Returns:
        The root AST node

    Raises:
        QuerySyntaxError: With the byte offset and the expected token set;
            WildcardPositionError, ProximityOperandError and
            UnsupportedFieldError for the specific violations
    """
    try:
        result = _QUERY.parse_string(source, parse_all=True)
    except pp.ParseBaseException as e:
        found = source[e.loc : e.loc + 12]
        what = f"unexpected {found!r}" if found else "unexpected end of query"
        expected = set()
        if e.msg and e.msg.startswith("Expected "):
            expected.add(e.msg[len("Expected ") :])
        raise QuerySyntaxError(what, _byte_offset(source, e.loc), expected) from None
    return result[0]


# ============================================================================
# RENDERING
# ============================================================================


def render_pattern(pattern: TermPattern) -> str:
    return '"' + " ".join(pattern.tokens) + ("*" if pattern.prefix else "") + '"'


def _render_term(node: QueryAst, top: bool) -> str:
    if isinstance(node, TermPattern):
        return render_pattern(node)
    if isinstance(node, Proximity):
        op = f"{'PRE' if node.ordered else 'W'}/{node.distance}"
        text = f"{render_pattern(node.left)} {op} {render_pattern(node.right)}"
    elif isinstance(node, And):
        text = " AND ".join(_render_term(c, False) for c in node.children)
    elif isinstance(node, Or):
        text = " OR ".join(_render_term(c, False) for c in node.children)
    else:
        raise ConfigurationError(f"{type(node).__name__} cannot appear inside a field scope")
    return text if top else f"({text})"


def render(ast: QueryAst) -> str:
    """
    Render an AST as canonical query text.

    Composite nodes are fully parenthesised, operators upper-case and
    patterns double-quoted, so parse(render(a)) == a.
    """
    if isinstance(ast, FieldScope):
        return f"{SCOPE_NAMES[frozenset(ast.fields)]}({_render_term(ast.child, True)})"
    if isinstance(ast, SubjectFilter):
        codes = " OR ".join(str(c) for c in sorted(ast.codes))
        neg = "NOT " if ast.mode is SubjectMode.EXCLUDE else ""
        return f"SUBJAREA({neg}{codes})"
    if isinstance(ast, SourceFilter):
        return f"SRCTITLE({render_pattern(ast.pattern)})"
    if isinstance(ast, And):
        return "(" + " AND ".join(render(c) for c in ast.children) + ")"
    if isinstance(ast, Or):
        return "(" + " OR ".join(render(c) for c in ast.children) + ")"
    if isinstance(ast, AndNot):
        return f"({render(ast.left)} AND NOT {render(ast.right)})"
    raise ConfigurationError(f"{type(ast).__name__} must be enclosed in a field scope")


def walk(ast: QueryAst) -> Iterator[QueryAst]:
    """Yield every node of the tree, parents before children."""
    yield ast
    if isinstance(ast, (And, Or)):
        for c in ast.children:
            yield from walk(c)
    elif isinstance(ast, AndNot):
        yield from walk(ast.left)
        yield from walk(ast.right)
    elif isinstance(ast, FieldScope):
        yield from walk(ast.child)
    elif isinstance(ast, Proximity):
        yield ast.left
        yield ast.right


def query_terms(ast: QueryAst) -> set[TermPattern]:
    """Every text pattern of a query (SRCTITLE patterns excluded)."""
    return {n for n in walk(ast) if isinstance(n, TermPattern)}


# ============================================================================
# QUERY BANKS
# ============================================================================

_HEADER_RE = re.compile(r"^#\s*SDG\s+(\d+)\s+(\S.*?)\s*$", re.IGNORECASE)


@dataclass(frozen=True, slots=True)
class BankEntry:
    sdg: int
    theme: str
    query: QueryAst
    source: str = field(default="", compare=False)


@dataclass(frozen=True)
class QueryBank:
    """Theme-level queries grouped by SDG."""

    entries: tuple[BankEntry, ...] = ()

    def __post_init__(self) -> None:
        seen: set[tuple[int, str]] = set()
        for e in self.entries:
            check_sdg(e.sdg)
            if (e.sdg, e.theme) in seen:
                raise ConfigurationError(f"duplicate theme {e.theme!r} for SDG {e.sdg}")
            seen.add((e.sdg, e.theme))

    def sdgs(self) -> list[int]:
        return sorted({e.sdg for e in self.entries})

    def for_sdg(self, sdg: int) -> list[BankEntry]:
        return [e for e in self.entries if e.sdg == sdg]

    def __iter__(self) -> Iterator[BankEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def parse_query_bank(text: str, path: str | Path = "<string>") -> list[BankEntry]:
    """
    Parse bank text: `# SDG <n> <theme>` headers, each followed by one query.

    Raises:
        QueryBankError: With file and line on any structural or query error
    """
    entries: list[BankEntry] = []
    current: tuple[int, str, int] | None = None
    lines: list[str] = []

    def flush() -> None:
        if current is None:
            return
        sdg, theme, header_line = current
        src = " ".join(lines).strip()
        if not src:
            raise QueryBankError(path, header_line, f"theme {theme!r} has no query")
        try:
            ast = parse(src)
        except QuerySyntaxError as e:
            raise QueryBankError(path, header_line + 1, f"theme {theme!r}: {e}") from e
        entries.append(BankEntry(sdg, theme, ast, src))

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _HEADER_RE.match(line)
            if not m:
                raise QueryBankError(path, line_no, "expected '# SDG <n> <theme>' header")
            flush()
            sdg = int(m.group(1))
            if not 1 <= sdg <= 17:
                raise QueryBankError(path, line_no, f"SDG {sdg} outside [1, 17]")
            current = (sdg, m.group(2), line_no)
            lines = []
        elif current is None:
            raise QueryBankError(path, line_no, "query text before the first header")
        else:
            lines.append(line)
    flush()
    return entries


def load_query_bank(path: str | Path) -> QueryBank:
    """
    Load a bank from one file or from every `*.txt` file of a directory.

    Each file holds the themes of a single SDG.
    """
    p = Path(path)
    files = sorted(p.glob("*.txt")) if p.is_dir() else [p]
    entries: list[BankEntry] = []
    for f in files:
        file_entries = parse_query_bank(f.read_text(encoding="utf-8"), f)
        if len({e.sdg for e in file_entries}) > 1:
            raise QueryBankError(f, 1, "a bank file must hold the themes of one SDG")
        entries.extend(file_entries)
    try:
        return QueryBank(tuple(entries))
    except ConfigurationError as e:
        raise QueryBankError(path, 0, str(e)) from e


def render_bank(bank: QueryBank) -> str:
    out = []
    for e in bank:
        out.append(f"# SDG {e.sdg} {e.theme}")
        out.append(render(e.query))
        out.append("")
    return "\n".join(out)
