"""Domain types, category schema loading, and ACOS-format dataset ingestion.

The ACOS file format is one sample per line, tab-separated: the review
sentence first, then one field per annotated quadruple.  A quadruple field
holds four whitespace-separated tokens::

    <aspect_start,aspect_end> <C1#C2> <sentiment_index> <opinion_start,opinion_end>

Spans are word indices into the whitespace-tokenized sentence, start
inclusive, end exclusive.  The span ``-1,-1`` marks an implicit element.
Sentiment indices map through a configurable polarity map; the default
``{0: NEGATIVE, 1: NEUTRAL, 2: POSITIVE}`` matches the public ACOS release.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path

SENTIMENT_NEGATIVE = "NEGATIVE"
SENTIMENT_NEUTRAL = "NEUTRAL"
SENTIMENT_POSITIVE = "POSITIVE"

DEFAULT_SENTIMENTS = (SENTIMENT_NEGATIVE, SENTIMENT_NEUTRAL, SENTIMENT_POSITIVE)
DEFAULT_POLARITY_MAP = {0: SENTIMENT_NEGATIVE, 1: SENTIMENT_NEUTRAL, 2: SENTIMENT_POSITIVE}

# Category / subcategory / sentiment names are reserved uppercase symbols;
# review text is lowercased at ingestion, so symbols can never collide with
# span tokens.
_SYMBOL_RE = re.compile(r"^[A-Z0-9][A-Z0-9_&\-]*$")

IMPLICIT_SUBSETS = ("EA&EO", "IA&EO", "EA&IO", "IA&IO")


class SchemaError(ValueError):
    """Raised for schema violations: bad config entries, invalid quadruples."""


@dataclass(frozen=True)
class CategorySchema:
    """Closed label taxonomy: top-level categories, per-category subcategories,
    and sentiment polarities.  Immutable after construction; all name tuples
    are lexicographically ordered."""

    categories: tuple
    subcategories: dict
    sentiments: tuple

    @property
    def k(self):
        """Number of top-level categories."""
        return len(self.categories)

    def validate_quadruple(self, quad):
        """Raise SchemaError unless `quad` is valid under this schema."""
        if quad.category not in self.subcategories:
            raise SchemaError(f"unknown category {quad.category!r}")
        if quad.subcategory not in self.subcategories[quad.category]:
            raise SchemaError(
                f"unknown subcategory {quad.subcategory!r} for category {quad.category!r}"
            )
        if quad.sentiment not in self.sentiments:
            raise SchemaError(f"unknown sentiment {quad.sentiment!r}")
        for name, span in (("aspect", quad.aspect), ("opinion", quad.opinion)):
            if span is not None and not span.strip():
                raise SchemaError(f"explicit {name} span is empty")


def _check_symbol(name, kind):
    if not _SYMBOL_RE.match(name):
        raise SchemaError(f"invalid {kind} name {name!r}: must be an uppercase symbol")


def make_schema(categories, subcategories, sentiments=DEFAULT_SENTIMENTS):
    """Validate and freeze a schema; ordering is forced to lexicographic."""
    cats = sorted(categories)
    if not cats:
        raise SchemaError("schema has no categories")
    if len(set(cats)) != len(cats):
        dup = next(c for c in cats if cats.count(c) > 1)
        raise SchemaError(f"duplicate category {dup!r}")
    sents = sorted(sentiments)
    if not sents:
        raise SchemaError("schema has no sentiments")
    if len(set(sents)) != len(sents):
        dup = next(s for s in sents if sents.count(s) > 1)
        raise SchemaError(f"duplicate sentiment {dup!r}")
    for s in sents:
        _check_symbol(s, "sentiment")
    subs = {}
    for c in cats:
        _check_symbol(c, "category")
        children = sorted(subcategories.get(c, ()))
        if not children:
            raise SchemaError(f"category {c!r} has an empty subcategory list")
        if len(set(children)) != len(children):
            dup = next(x for x in children if children.count(x) > 1)
            raise SchemaError(f"duplicate subcategory {dup!r} under {c!r}")
        for x in children:
            _check_symbol(x, "subcategory")
        subs[c] = tuple(children)
    return CategorySchema(tuple(cats), subs, tuple(sents))


def load_schema(config_source):
    """Load a schema from the plain-text config format.

    One line per category: ``C1: C2 C2 ...``; an optional line
    ``sentiments: S S ...`` overrides the default polarity set.  ``#``
    starts a comment.  Accepts a path or an open text stream.
    """
    if hasattr(config_source, "read"):
        text = config_source.read()
        name = getattr(config_source, "name", "<stream>")
    else:
        text = Path(config_source).read_text(encoding="utf-8")
        name = str(config_source)
    categories = []
    subcategories = {}
    sentiments = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise SchemaError(f"{name}:{lineno}: expected 'NAME: children...', got {raw!r}")
        head, _, rest = line.partition(":")
        head = head.strip()
        children = rest.split()
        if head == "sentiments":
            if sentiments is not None:
                raise SchemaError(f"{name}:{lineno}: duplicate sentiments line")
            if not children:
                raise SchemaError(f"{name}:{lineno}: empty sentiment list")
            sentiments = children
        else:
            if head in subcategories:
                raise SchemaError(f"{name}:{lineno}: duplicate category {head!r}")
            if not children:
                raise SchemaError(f"{name}:{lineno}: category {head!r} has no subcategories")
            categories.append(head)
            subcategories[head] = children
    return make_schema(categories, subcategories, sentiments or DEFAULT_SENTIMENTS)


def save_schema(schema, path):
    """Write a schema back out in the config format (lexicographic order)."""
    lines = ["sentiments: " + " ".join(schema.sentiments)]
    for c in schema.categories:
        lines.append(f"{c}: " + " ".join(schema.subcategories[c]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Quadruple:
    """One ⟨aspect, category#subcategory, opinion, sentiment⟩ record.

    `aspect` and `opinion` are whitespace-joined text spans, or None when
    the element is implicit.
    """

    aspect: "str | None"
    category: str
    subcategory: str
    opinion: "str | None"
    sentiment: str

    @property
    def aspect_implicit(self):
        return self.aspect is None

    @property
    def opinion_implicit(self):
        return self.opinion is None

    def implicit_subset(self):
        """EA&EO / IA&EO / EA&IO / IA&IO bucket of this quadruple."""
        if self.aspect is None:
            return "IA&IO" if self.opinion is None else "IA&EO"
        return "EA&IO" if self.opinion is None else "EA&EO"


@dataclass(frozen=True)
class Sample:
    """A lowercased, whitespace-tokenized review and its gold quadruples."""

    text: tuple
    gold: tuple

    @property
    def sentence(self):
        return " ".join(self.text)


def _span_occurs(span, tokens):
    words = span.split()
    n = len(words)
    return any(list(tokens[i : i + n]) == words for i in range(len(tokens) - n + 1))


def validate_sample(sample, schema):
    """Raise SchemaError unless every gold quadruple is schema-valid and its
    explicit spans occur contiguously in the sample text."""
    for quad in sample.gold:
        schema.validate_quadruple(quad)
        for name, span in (("aspect", quad.aspect), ("opinion", quad.opinion)):
            if span is not None and not _span_occurs(span, sample.text):
                raise SchemaError(
                    f"explicit {name} span {span!r} not found in text {sample.sentence!r}"
                )


@dataclass(frozen=True)
class IngestProblem:
    line_no: int
    message: str


@dataclass
class IngestResult:
    samples: list
    problems: list = field(default_factory=list)

    def summary(self):
        ok = len(self.samples)
        bad = len(self.problems)
        return f"{ok} samples ingested, {bad} problem(s)"


def _parse_span(token, n_tokens):
    parts = token.split(",")
    if len(parts) != 2:
        raise ValueError(f"unparsable span {token!r}")
    s, e = int(parts[0]), int(parts[1])
    if (s, e) == (-1, -1):
        return None
    if not (0 <= s < e <= n_tokens):
        raise ValueError(f"span {token!r} out of range for {n_tokens} tokens")
    return (s, e)


def ingest_acos_file(path, polarity_map=None, schema=None):
    """Ingest one ACOS-format TSV file.

    Malformed quadruple fields and lines are recorded as IngestProblems with
    their 1-based line number; ingestion continues past them.  When `schema`
    is given, category/subcategory membership is checked per quadruple.
    """
    polarity_map = DEFAULT_POLARITY_MAP if polarity_map is None else polarity_map
    result = IngestResult(samples=[])
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            tokens = tuple(fields[0].lower().split())
            if not tokens:
                result.problems.append(IngestProblem(line_no, "empty sentence"))
                continue
            quads = []
            line_ok = True
            for f in fields[1:]:
                if not f.strip():
                    continue
                try:
                    quads.append(_parse_quad_field(f, tokens, polarity_map, schema))
                except (ValueError, SchemaError) as exc:
                    result.problems.append(IngestProblem(line_no, f"{exc} in field {f!r}"))
                    line_ok = False
            if line_ok:
                result.samples.append(Sample(text=tokens, gold=tuple(quads)))
    return result


def _parse_quad_field(f, tokens, polarity_map, schema):
    parts = f.split()
    if len(parts) != 4:
        raise ValueError(f"expected 4 tokens, got {len(parts)}")
    aspect_span = _parse_span(parts[0], len(tokens))
    if "#" not in parts[1]:
        raise ValueError(f"category field {parts[1]!r} missing '#'")
    category, _, subcategory = parts[1].partition("#")
    sent_idx = int(parts[2])
    if sent_idx not in polarity_map:
        raise ValueError(f"sentiment index {sent_idx} not in polarity map")
    opinion_span = _parse_span(parts[3], len(tokens))
    quad = Quadruple(
        aspect=None if aspect_span is None else " ".join(tokens[aspect_span[0] : aspect_span[1]]),
        category=category,
        subcategory=subcategory,
        opinion=None if opinion_span is None else " ".join(tokens[opinion_span[0] : opinion_span[1]]),
        sentiment=polarity_map[sent_idx],
    )
    if schema is not None:
        schema.validate_quadruple(quad)
    return quad


def derive_schema(samples, sentiments=None):
    """Fallback schema: the union of observed C1#C2 pairs in `samples`.

    Derived schemas should be persisted with save_schema so later runs are
    reproducible against a fixed file.
    """
    subcategories = {}
    seen_sentiments = set()
    for sample in samples:
        for quad in sample.gold:
            subcategories.setdefault(quad.category, set()).add(quad.subcategory)
            seen_sentiments.add(quad.sentiment)
    if not subcategories:
        raise SchemaError("cannot derive a schema from samples with no quadruples")
    if sentiments is None:
        sentiments = sorted(seen_sentiments | set(DEFAULT_SENTIMENTS))
    return make_schema(sorted(subcategories), subcategories, sentiments)


@dataclass(frozen=True)
class DatasetStats:
    """Per-split sample/quadruple counts plus the implicit-element partition
    (computed over all splits together)."""

    split_samples: dict
    split_quads: dict
    implicit: dict

    @property
    def total_samples(self):
        return sum(self.split_samples.values())

    @property
    def total_quads(self):
        return sum(self.split_quads.values())


def dataset_stats(samples_by_split):
    """Count samples/quadruples per split and partition quadruples by the
    explicit/implicit status of aspect and opinion.

    The four subset counts are exhaustive and disjoint: they always sum to
    the total quadruple count.
    """
    split_samples = {}
    split_quads = {}
    implicit = {key: 0 for key in IMPLICIT_SUBSETS}
    for split, samples in samples_by_split.items():
        split_samples[split] = len(samples)
        split_quads[split] = sum(len(s.gold) for s in samples)
        for sample in samples:
            for quad in sample.gold:
                implicit[quad.implicit_subset()] += 1
    return DatasetStats(split_samples, split_quads, implicit)


def format_stats_table(stats, name="dataset"):
    """Plain-text rendering of both count tables."""
    lines = [f"{name}: samples / quadruples per split"]
    for split in stats.split_samples:
        lines.append(
            f"  {split:<8} {stats.split_samples[split]:>6} {stats.split_quads[split]:>8}"
        )
    lines.append(f"  {'total':<8} {stats.total_samples:>6} {stats.total_quads:>8}")
    lines.append("implicit-element partition")
    for key in IMPLICIT_SUBSETS:
        lines.append(f"  {key:<8} {stats.implicit[key]:>6}")
    lines.append(f"  {'total':<8} {sum(stats.implicit.values()):>6}")
    return "\n".join(lines)
