"""Conversion between quadruple lists and the linearized token sequence.

The linear layout is ``[ ⟨ aspect… C1 C2 opinion… S ⟩ … ]``: one bracket
pair around the whole list, one angle pair per quadruple, fields adjacent
with no separators.  Field boundaries are recovered deterministically when
parsing because C1 and sentiment names are reserved uppercase symbols that
never occur in (lowercased) span text: the first C1 name ends the aspect
field, the subcategory is exactly one token, and the first sentiment name
ends the opinion field.  Implicit elements are the single token ``null``.
"""

from .schema import Quadruple

OPEN_LIST = "["
CLOSE_LIST = "]"
OPEN_QUAD = "⟨"   # ⟨
CLOSE_QUAD = "⟩"  # ⟩
BOS = "⟨bos⟩"
EOS = "⟨eos⟩"
IMPLICIT_TOKEN = "null"

STRUCTURE_TOKENS = frozenset({OPEN_LIST, CLOSE_LIST, OPEN_QUAD, CLOSE_QUAD})
BOUNDARY_TOKENS = frozenset({BOS, EOS})
RESERVED_TOKENS = STRUCTURE_TOKENS | BOUNDARY_TOKENS | {IMPLICIT_TOKEN}

FIELD_SEPARATOR = "|"


class LinearizeError(ValueError):
    pass


class ParseError(ValueError):
    """Parse failure; carries the earliest offending token index.

    `token_index` is the 0-based position of the offending token, or
    len(sequence) when the sequence ended too early.  `token` is None in
    the latter case.
    """

    def __init__(self, token_index, token, message):
        super().__init__(f"at token {token_index} ({token!r}): {message}")
        self.token_index = token_index
        self.token = token
        self.reason = message


def _field_tokens(span, which):
    if span is None:
        return [IMPLICIT_TOKEN]
    words = span.split()
    if not words:
        raise LinearizeError(f"explicit {which} span is empty")
    for w in words:
        if w in RESERVED_TOKENS:
            raise LinearizeError(f"reserved token {w!r} in {which} span {span!r}")
    return words


def linearize(quads, separator=False):
    """Flatten `quads` into the augmented token sequence.

    Quadruple order is preserved.  With `separator`, a ``|`` token is
    emitted between fields (ablation mode; default off).
    """
    out = [OPEN_LIST]
    for quad in quads:
        body = [
            _field_tokens(quad.aspect, "aspect"),
            [quad.category],
            [quad.subcategory],
            _field_tokens(quad.opinion, "opinion"),
            [quad.sentiment],
        ]
        out.append(OPEN_QUAD)
        for i, group in enumerate(body):
            if separator and i > 0:
                out.append(FIELD_SEPARATOR)
            out.extend(group)
        out.append(CLOSE_QUAD)
    out.append(CLOSE_LIST)
    return out


def token_count(quads):
    """Length linearize(quads) will have (2 + per-quad 2+|a|+2+|o|+1)."""
    total = 2
    for q in quads:
        a = 1 if q.aspect is None else len(q.aspect.split())
        o = 1 if q.opinion is None else len(q.opinion.split())
        total += 2 + a + 2 + o + 1
    return total


def _span_value(tokens):
    if tokens == [IMPLICIT_TOKEN]:
        return None
    return " ".join(tokens)


class _Cursor:
    def __init__(self, tokens):
        self.tokens = list(tokens)
        self.i = 0

    def peek(self):
        if self.i >= len(self.tokens):
            return None
        return self.tokens[self.i]

    def take(self):
        t = self.peek()
        self.i += 1
        return t

    def fail(self, message):
        if self.i >= len(self.tokens):
            raise ParseError(len(self.tokens), None, f"unexpected end of sequence: {message}")
        raise ParseError(self.i, self.tokens[self.i], message)


def _parse_field(cur, stop_names, which, allow_separator):
    """Collect field tokens until a token in `stop_names` (not consumed)."""
    collected = []
    while True:
        t = cur.peek()
        if t is None:
            cur.fail(f"expected a {which} field terminator")
        if t in stop_names:
            if not collected:
                cur.fail(f"empty {which} field")
            return collected
        if allow_separator and t == FIELD_SEPARATOR:
            if not collected:
                cur.fail(f"empty {which} field")
            return collected
        if t in STRUCTURE_TOKENS or t in BOUNDARY_TOKENS:
            cur.fail(f"structure token inside {which} field")
        collected.append(cur.take())


def _expect_separator(cur, separator):
    if separator:
        if cur.peek() != FIELD_SEPARATOR:
            cur.fail("expected field separator")
        cur.take()


def _parse_quad_body(cur, schema, separator):
    aspect = _parse_field(cur, schema.subcategories, "aspect", separator)
    _expect_separator(cur, separator)
    c1 = cur.peek()
    if c1 not in schema.subcategories:
        cur.fail("expected a category name")
    cur.take()
    _expect_separator(cur, separator)
    c2 = cur.peek()
    if c2 is None or c2 not in schema.subcategories[c1]:
        cur.fail(f"expected a subcategory of {c1}")
    cur.take()
    _expect_separator(cur, separator)
    sentiments = set(schema.sentiments)
    opinion = _parse_field(cur, sentiments, "opinion", separator)
    _expect_separator(cur, separator)
    s = cur.peek()
    if s not in sentiments:
        cur.fail("expected a sentiment name")
    cur.take()
    if cur.peek() != CLOSE_QUAD:
        cur.fail("expected quadruple close")
    cur.take()
    return Quadruple(
        aspect=_span_value(aspect),
        category=c1,
        subcategory=c2,
        opinion=_span_value(opinion),
        sentiment=s,
    )


def parse(seq, schema, separator=False):
    """Invert linearize; raises ParseError on any malformed sequence.

    A leading ⟨bos⟩ and trailing ⟨eos⟩ are tolerated so decoder output can
    be parsed directly.  Unknown category/subcategory/sentiment names are
    errors, never normalized.
    """
    quads, err = parse_partial(seq, schema, separator=separator)
    if err is not None:
        raise err
    return quads


def parse_partial(seq, schema, separator=False):
    """Like parse, but returns (quadruples recovered so far, error or None)."""
    cur = _Cursor(seq)
    quads = []
    try:
        if cur.peek() == BOS:
            cur.take()
        if cur.peek() != OPEN_LIST:
            cur.fail("expected opening bracket")
        cur.take()
        while True:
            t = cur.peek()
            if t == CLOSE_LIST:
                cur.take()
                break
            if t == OPEN_QUAD:
                cur.take()
                quads.append(_parse_quad_body(cur, schema, separator))
            else:
                cur.fail("expected quadruple open or closing bracket")
        if cur.peek() == EOS:
            cur.take()
        if cur.peek() is not None:
            cur.fail("trailing tokens after closing bracket")
    except ParseError as err:
        return quads, err
    return quads, None


def to_line(tokens):
    """Space-separated one-line serialization for CLI interchange."""
    return " ".join(tokens)


def from_line(line):
    return line.split()
