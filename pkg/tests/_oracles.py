"""Brute-force reference implementations shared by the unit tests and the
acceptance suite.

The grammar oracle treats the parser as ground truth: a token is legal
after a prefix exactly when some completion turns prefix+token into a full
sequence that parses.  Trying a fixed family of completion suffixes is
enough, because every state the grammar can land in after one more token
has at least one covering template in the family (see the comments in
`completion_templates`).  A wrongly permissive grammar is caught directly
(no completion can make an unparseable continuation pass), and a wrongly
restrictive one is caught at the state where the missing token should have
been offered, which the breadth-first sweep always visits before anything
behind it.
"""

import zlib

import numpy as np

from quadgen import ParseError, parse
from quadgen.linearize import BOS, CLOSE_LIST, CLOSE_QUAD, EOS, IMPLICIT_TOKEN
from quadgen.decode import Phase


def completion_templates(schema):
    """Suffix family covering every state reachable after one more token.

    Landing state -> covering template:
      Done                -> ()
      ExpectEos           -> (eos,)
      AfterOpenBracket,
      AfterQuadClose      -> ("]", eos)
      ExpectQuadClose     -> ("⟩", "]", eos), the j=len sentiment suffix
      SentimentWalk       -> remaining sentiment tokens + close
      OpinionField (>0)   -> any full sentiment + close (j=0 suffix)
      OpinionField (0)    -> "null" + a sentiment + close
      Sub/CategoryWalk    -> remaining symbol tokens + a legal continuation
      AspectField (>0)    -> any full category+subcategory path + tail
      AspectField (0)     -> "null" + full path + tail
    """
    tails = set()
    close = (CLOSE_QUAD, CLOSE_LIST, EOS)
    s0 = (schema.sentiments[0],)
    tails.add(())
    tails.add((EOS,))
    tails.add((CLOSE_LIST, EOS))
    for s in schema.sentiments:
        st = (s,)
        for j in range(len(st) + 1):
            tails.add(st[j:] + close)
    tails.add((IMPLICIT_TOKEN,) + s0 + close)
    for c1 in schema.categories:
        ct = (c1,)
        for c2 in schema.subcategories[c1]:
            sub = (c2,)
            for j in range(len(ct) + 1):
                tails.add(ct[j:] + sub + (IMPLICIT_TOKEN,) + s0 + close)
            for j in range(1, len(sub) + 1):
                tails.add(sub[j:] + (IMPLICIT_TOKEN,) + s0 + close)
    first_pair = (
        (schema.categories[0],)
        + (schema.subcategories[schema.categories[0]][0],)
    )
    tails.add((IMPLICIT_TOKEN,) + first_pair + (IMPLICIT_TOKEN,) + s0 + close)
    # short templates first so the common cases hit early
    return sorted(tails, key=len)


def is_complete_sequence(tokens, schema):
    """Full well-formed output: exactly one ⟨eos⟩, at the very end, no
    ⟨bos⟩ anywhere, and the body parses."""
    if tokens.count(EOS) != 1 or tokens[-1] != EOS or BOS in tokens:
        return False
    try:
        parse(list(tokens), schema)
    except ParseError:
        return False
    return True


def oracle_allowed(prefix, vocab, schema, templates):
    allowed = set()
    for t in vocab.tokens:
        cand = tuple(prefix) + (t,)
        for tail in templates:
            if is_complete_sequence(cand + tail, schema):
                allowed.add(t)
                break
    return allowed


def reachable_states(grammar):
    """One representative state per distinct candidate set the grammar can
    ever offer.  allowed_tokens depends only on the phase, the trie cursor,
    and whether the current field is still empty, so states are deduplicated
    on that key."""

    def key(state):
        return (state.phase, id(state.cursor), state.field_len > 0)

    start = grammar.initial_state()
    seen = {key(start)}
    queue = [start]
    while queue:
        state = queue.pop()
        yield state
        for t in grammar.allowed_tokens(state):
            nxt = grammar.advance(state, t)
            if nxt.phase is Phase.DONE:
                continue
            k = key(nxt)
            if k not in seen:
                seen.add(k)
                queue.append(nxt)


def check_grammar_against_oracle(grammar):
    """Sweep every reachable grammar state and compare its candidate set to
    the brute-force oracle.  Returns the number of states checked."""
    schema, vocab = grammar.schema, grammar.vocab
    templates = completion_templates(schema)
    checked = 0
    for state in reachable_states(grammar):
        allowed = grammar.allowed_tokens(state)
        assert allowed, f"empty candidate set in phase {state.phase}"
        expected = oracle_allowed(state.history[1:], vocab, schema, templates)
        assert set(allowed) == expected, (
            f"phase={state.phase.value} prefix={state.history[1:]!r} "
            f"grammar-only={sorted(set(allowed) - expected)} "
            f"oracle-only={sorted(expected - set(allowed))}"
        )
        checked += 1
    return checked


class HashScorer:
    """Stateless scorer: scores depend only on the history, via a hash of
    the joined tokens.  Unlike an rng-backed scorer, call order cannot
    matter, so greedy and width-1 beam runs see identical numbers."""

    def __init__(self, vocab, seed=0):
        self.vocab = vocab
        self.seed = seed

    def next_scores(self, history, memory=None):
        text = f"{self.seed}|" + "\x1f".join(history)
        rng = np.random.default_rng(zlib.crc32(text.encode("utf-8")))
        return rng.uniform(size=len(self.vocab))
