"""Constrained decoding: a grammar state machine over the linearized
quadruple layout that prunes any autoregressive scorer's candidate
vocabulary to legal continuations, plus greedy and beam search drivers.

The grammar tracks a phase in the quadruple layout and, inside the three
symbol walks (category, subcategory, sentiment), a cursor into the matching
constraint trie.  Free-text fields (aspect, opinion) offer the full scorer
vocabulary minus structure/boundary tokens; emitting a category first-token
exits the aspect field and emitting a sentiment first-token exits the
opinion field, mirroring how the parser recovers field boundaries.  A field
must emit at least one token before an exit symbol is allowed, so spans can
never be vacuously empty ("null" counts as that one token).
"""

import enum
from dataclasses import dataclass, replace

import numpy as np

from .linearize import (
    BOS,
    BOUNDARY_TOKENS,
    CLOSE_LIST,
    CLOSE_QUAD,
    EOS,
    IMPLICIT_TOKEN,
    OPEN_LIST,
    OPEN_QUAD,
    STRUCTURE_TOKENS,
)
from .numerics import log_softmax

DEFAULT_MAX_LEN = 128


class ConfigError(ValueError):
    """Scorer/grammar configuration problem (missing reserved tokens,
    vocabulary mismatch, ambiguous symbol tokenization)."""


class GrammarError(ValueError):
    """Advance on a token outside the allowed set."""


class Vocabulary:
    """Ordered token inventory shared by scorers and the grammar."""

    def __init__(self, tokens):
        self.tokens = tuple(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ConfigError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index


def build_vocabulary(schema, samples=(), extra_tokens=()):
    """Reserved tokens + schema symbols + corpus words, lexicographic."""
    tokens = set(STRUCTURE_TOKENS) | set(BOUNDARY_TOKENS) | {IMPLICIT_TOKEN}
    tokens.update(schema.sentiments)
    for c1 in schema.categories:
        tokens.add(c1)
        tokens.update(schema.subcategories[c1])
    for sample in samples:
        tokens.update(sample.text)
    tokens.update(extra_tokens)
    return Vocabulary(sorted(tokens))


class Phase(enum.Enum):
    START = "start"
    AFTER_OPEN_BRACKET = "after_open_bracket"
    ASPECT_FIELD = "aspect_field"
    CATEGORY_WALK = "category_walk"
    SUBCATEGORY_WALK = "subcategory_walk"
    OPINION_FIELD = "opinion_field"
    SENTIMENT_WALK = "sentiment_walk"
    EXPECT_QUAD_CLOSE = "expect_quad_close"
    AFTER_QUAD_CLOSE = "after_quad_close"
    EXPECT_EOS = "expect_eos"
    DONE = "done"


WALK_PHASES = frozenset({Phase.CATEGORY_WALK, Phase.SUBCATEGORY_WALK, Phase.SENTIMENT_WALK})


@dataclass(frozen=True, eq=False)
class DecodingState:
    """Immutable position in the grammar: phase, active trie cursor (walk
    phases only), emitted-token history, and tokens emitted in the current
    free-text field."""

    phase: Phase
    cursor: object = None
    field_len: int = 0
    history: tuple = (BOS,)
    source_tokens: frozenset = None

    @property
    def done(self):
        return self.phase is Phase.DONE

    @property
    def step(self):
        """Number of tokens emitted so far (history minus the seed ⟨bos⟩)."""
        return len(self.history) - 1


class QuadrupleGrammar:
    """The constraint FSM for one schema + vocabulary pair.

    Frozen after construction; many decoding sessions may share one
    instance concurrently.  `copy_restriction` limits free-text fields to
    tokens of the source sentence plus "null" (text-span grounding);
    default off so fields see the whole vocabulary.
    """

    def __init__(self, schema, vocab, category_trie=None, sentiment_trie=None,
                 copy_restriction=False):
        from .trie import build_category_trie, build_sentiment_trie

        self.schema = schema
        self.vocab = vocab
        self.copy_restriction = copy_restriction
        self.category_trie = category_trie or build_category_trie(schema)
        self.sentiment_trie = sentiment_trie or build_sentiment_trie(schema)

        self._check_prefix_free()
        self.c1_first = frozenset(self.category_trie.children())
        self.s_first = frozenset(self.sentiment_trie.children())

        required = set(STRUCTURE_TOKENS) | {BOS, EOS, IMPLICIT_TOKEN}
        required |= self._all_walk_tokens()
        missing = sorted(t for t in required if t not in vocab)
        if missing:
            raise ConfigError(f"vocabulary missing required tokens: {missing}")
        self.required_tokens = frozenset(required)

        base = frozenset(
            t for t in vocab.tokens if t not in STRUCTURE_TOKENS and t not in BOUNDARY_TOKENS
        )
        self._field_base = base
        self._aspect_first = base - self.c1_first
        self._opinion_first = base - self.s_first

    def _all_walk_tokens(self):
        tokens = set()
        stack = [self.category_trie.root, self.sentiment_trie.root]
        while stack:
            node = stack.pop()
            tokens.update(node.children)
            stack.extend(node.children.values())
            if node.payload is not None:
                stack.append(node.payload.root)
        return tokens

    def _check_prefix_free(self):
        tries = [("category", self.category_trie), ("sentiment", self.sentiment_trie)]
        for node in self.category_trie.root.children.values():
            if node.payload is not None:
                tries.append(("subcategory", node.payload))
        for kind, trie in tries:
            if not trie.is_prefix_free():
                raise ConfigError(
                    f"{kind} trie is not prefix-free; symbol tokenization is ambiguous"
                )

    def initial_state(self, source_tokens=None):
        src = None
        if source_tokens is not None:
            src = frozenset(source_tokens)
        return DecodingState(phase=Phase.START, source_tokens=src)

    def _field_tokens(self, state, first_exclusions):
        base = self._field_base
        if self.copy_restriction and state.source_tokens is not None:
            base = (base & state.source_tokens) | {IMPLICIT_TOKEN}
        if state.field_len == 0:
            return base - first_exclusions
        return base | (first_exclusions & self._field_base)

    def allowed_tokens(self, state):
        """Candidate vocabulary V' for the next step; never empty."""
        phase = state.phase
        if phase is Phase.DONE:
            raise GrammarError("no tokens allowed in the Done state")
        if phase is Phase.START:
            return frozenset({OPEN_LIST})
        if phase in (Phase.AFTER_OPEN_BRACKET, Phase.AFTER_QUAD_CLOSE):
            return frozenset({OPEN_QUAD, CLOSE_LIST})
        if phase is Phase.ASPECT_FIELD:
            return frozenset(self._field_tokens(state, self.c1_first))
        if phase is Phase.OPINION_FIELD:
            return frozenset(self._field_tokens(state, self.s_first))
        if phase in WALK_PHASES:
            return frozenset(state.cursor.children)
        if phase is Phase.EXPECT_QUAD_CLOSE:
            return frozenset({CLOSE_QUAD})
        if phase is Phase.EXPECT_EOS:
            return frozenset({EOS})
        raise AssertionError(f"unhandled phase {phase}")

    def advance(self, state, token):
        """Deterministic transition on `token`; GrammarError if disallowed."""
        if token not in self.allowed_tokens(state):
            raise GrammarError(f"token {token!r} not allowed in phase {state.phase.value}")
        history = state.history + (token,)
        phase = state.phase

        def moved(new_phase, cursor=None, field_len=0):
            return replace(
                state, phase=new_phase, cursor=cursor, field_len=field_len, history=history
            )

        if phase is Phase.START:
            return moved(Phase.AFTER_OPEN_BRACKET)
        if phase in (Phase.AFTER_OPEN_BRACKET, Phase.AFTER_QUAD_CLOSE):
            if token == OPEN_QUAD:
                return moved(Phase.ASPECT_FIELD)
            return moved(Phase.EXPECT_EOS)
        if phase is Phase.ASPECT_FIELD:
            if token in self.c1_first and state.field_len > 0:
                node = self.category_trie.root.child(token)
                return self._walk_step(moved, node, Phase.CATEGORY_WALK)
            return moved(Phase.ASPECT_FIELD, field_len=state.field_len + 1)
        if phase is Phase.CATEGORY_WALK:
            return self._walk_step(moved, state.cursor.child(token), Phase.CATEGORY_WALK)
        if phase is Phase.SUBCATEGORY_WALK:
            node = state.cursor.child(token)
            if node.terminal:
                return moved(Phase.OPINION_FIELD)
            return moved(Phase.SUBCATEGORY_WALK, cursor=node)
        if phase is Phase.OPINION_FIELD:
            if token in self.s_first and state.field_len > 0:
                node = self.sentiment_trie.root.child(token)
                if node.terminal:
                    return moved(Phase.EXPECT_QUAD_CLOSE)
                return moved(Phase.SENTIMENT_WALK, cursor=node)
            return moved(Phase.OPINION_FIELD, field_len=state.field_len + 1)
        if phase is Phase.SENTIMENT_WALK:
            node = state.cursor.child(token)
            if node.terminal:
                return moved(Phase.EXPECT_QUAD_CLOSE)
            return moved(Phase.SENTIMENT_WALK, cursor=node)
        if phase is Phase.EXPECT_QUAD_CLOSE:
            return moved(Phase.AFTER_QUAD_CLOSE)
        if phase is Phase.EXPECT_EOS:
            return moved(Phase.DONE)
        raise AssertionError(f"unhandled phase {phase}")

    def _walk_step(self, moved, node, walk_phase):
        # A terminal category node carries the trie of its subcategories.
        if node.terminal:
            return moved(Phase.SUBCATEGORY_WALK, cursor=node.payload.root)
        return moved(walk_phase, cursor=node)

    def force_close_token(self, state):
        """Deterministic choice driving the shortest legal completion, used
        when max_len truncates generation."""
        phase = state.phase
        allowed = self.allowed_tokens(state)
        if phase is Phase.START:
            return OPEN_LIST
        if phase in (Phase.AFTER_OPEN_BRACKET, Phase.AFTER_QUAD_CLOSE):
            return CLOSE_LIST
        if phase in (Phase.ASPECT_FIELD, Phase.OPINION_FIELD):
            if state.field_len == 0:
                return IMPLICIT_TOKEN if IMPLICIT_TOKEN in allowed else min(allowed)
            exits = allowed & (self.c1_first if phase is Phase.ASPECT_FIELD else self.s_first)
            return min(exits)
        if phase in WALK_PHASES:
            return min(allowed)
        if phase is Phase.EXPECT_QUAD_CLOSE:
            return CLOSE_QUAD
        if phase is Phase.EXPECT_EOS:
            return EOS
        raise GrammarError(f"cannot force-close from phase {phase.value}")


@dataclass
class DecodeResult:
    tokens: list
    truncated: bool = False

    @property
    def text(self):
        return " ".join(self.tokens)


def select_token(scores, allowed, vocab):
    """Argmax over the allowed set with deterministic lexicographic
    tie-breaking.  Identical to masking non-allowed scores to -inf and
    taking the (tie-ruled) global argmax."""
    best_score = None
    best_token = None
    for t in allowed:
        s = scores[vocab.index[t]]
        if best_score is None or s > best_score or (s == best_score and t < best_token):
            best_score = s
            best_token = t
    return best_token


def _check_scorer(grammar, scorer):
    if tuple(scorer.vocab.tokens) != tuple(grammar.vocab.tokens):
        missing = sorted(t for t in grammar.required_tokens if t not in scorer.vocab)
        if missing:
            raise ConfigError(f"scorer vocabulary missing required tokens: {missing}")
        raise ConfigError("scorer vocabulary does not match the grammar vocabulary")


def _force_close(grammar, state, generated):
    while not state.done:
        token = grammar.force_close_token(state)
        state = grammar.advance(state, token)
        if token != EOS:
            generated.append(token)
    return state


def constrained_greedy_decode(grammar, scorer, memory=None, max_len=DEFAULT_MAX_LEN,
                              source_tokens=None):
    """Greedy search restricted to the grammar's candidate sets.

    The output always parses; if max_len truncates generation the shortest
    legal completion is appended and the result is flagged truncated.  The
    returned tokens exclude the ⟨bos⟩/⟨eos⟩ boundary markers.
    """
    if max_len < 4:
        raise ValueError("max_len must be at least 4")
    _check_scorer(grammar, scorer)
    state = grammar.initial_state(source_tokens)
    generated = []
    truncated = False
    while not state.done:
        if state.step >= max_len:
            truncated = True
            _force_close(grammar, state, generated)
            break
        scores = scorer.next_scores(state.history, memory)
        token = select_token(scores, grammar.allowed_tokens(state), scorer.vocab)
        state = grammar.advance(state, token)
        if token != EOS:
            generated.append(token)
    return DecodeResult(tokens=generated, truncated=truncated)


def unconstrained_greedy_decode(scorer, memory=None, max_len=DEFAULT_MAX_LEN):
    """Plain greedy argmax over the full vocabulary (the w/o-CD baseline).
    Output may be malformed by design; `truncated` means no ⟨eos⟩ was
    produced within max_len."""
    history = (BOS,)
    generated = []
    all_tokens = frozenset(scorer.vocab.tokens)
    for _ in range(max_len):
        scores = scorer.next_scores(history, memory)
        token = select_token(scores, all_tokens, scorer.vocab)
        history = history + (token,)
        if token == EOS:
            return DecodeResult(tokens=generated, truncated=False)
        generated.append(token)
    return DecodeResult(tokens=generated, truncated=True)


@dataclass
class _Hypothesis:
    state: DecodingState
    tokens: tuple
    score: float
    truncated: bool = False


def constrained_beam_decode(grammar, scorer, memory=None, beam_width=4,
                            max_len=DEFAULT_MAX_LEN, source_tokens=None):
    """Beam search over the constrained grammar.

    Hypothesis score is the sum of log-probabilities after softmax over the
    allowed set at each step.  beam_width=1 reproduces
    constrained_greedy_decode exactly (same tie rule).
    """
    if beam_width < 1:
        raise ValueError("beam_width must be at least 1")
    if max_len < 4:
        raise ValueError("max_len must be at least 4")
    _check_scorer(grammar, scorer)
    active = [_Hypothesis(state=grammar.initial_state(source_tokens), tokens=(), score=0.0)]
    finished = []
    for _ in range(max_len):
        if not active:
            break
        candidates = []
        for hyp in active:
            scores = scorer.next_scores(hyp.state.history, memory)
            allowed = sorted(grammar.allowed_tokens(hyp.state))
            idx = np.array([scorer.vocab.index[t] for t in allowed])
            logp = log_softmax(scores[idx])
            order = sorted(range(len(allowed)), key=lambda j: (-logp[j], allowed[j]))
            for j in order[:beam_width]:
                token = allowed[j]
                new_state = grammar.advance(hyp.state, token)
                new_tokens = hyp.tokens if token == EOS else hyp.tokens + (token,)
                candidates.append(
                    _Hypothesis(state=new_state, tokens=new_tokens, score=hyp.score + logp[j])
                )
        candidates.sort(key=lambda h: (-h.score, h.tokens))
        active = []
        for hyp in candidates:
            if hyp.state.done:
                finished.append(hyp)
            elif len(active) < beam_width:
                active.append(hyp)
    if finished:
        best = min(finished, key=lambda h: (-h.score, h.tokens))
        return DecodeResult(tokens=list(best.tokens), truncated=False)
    best = min(active, key=lambda h: (-h.score, h.tokens))
    generated = list(best.tokens)
    _force_close(grammar, best.state, generated)
    return DecodeResult(tokens=generated, truncated=True)


class RandomScorer:
    """Uniform-random scores per step; seeded and deterministic."""

    def __init__(self, vocab, seed=0):
        self.vocab = vocab
        self._rng = np.random.default_rng(seed)

    def next_scores(self, history, memory=None):
        return self._rng.uniform(size=len(self.vocab))


class OracleScorer:
    """Teacher-forcing oracle: scores the next token of a fixed target
    sequence highest; bails to ⟨eos⟩ if the history ever deviates."""

    def __init__(self, vocab, target_tokens):
        self.vocab = vocab
        target = list(target_tokens)
        if not target or target[-1] != EOS:
            target.append(EOS)
        missing = sorted({t for t in target if t not in vocab})
        if missing:
            raise ConfigError(f"oracle target tokens missing from vocabulary: {missing}")
        self.target = tuple(target)

    def next_scores(self, history, memory=None):
        scores = np.zeros(len(self.vocab))
        i = len(history) - 1
        if i < len(self.target) and tuple(history[1:]) == self.target[:i]:
            scores[self.vocab.index[self.target[i]]] = 1.0
        else:
            scores[self.vocab.index[EOS]] = 1.0
        return scores


class AdversarialScorer:
    """Always pushes an out-of-schema uppercase name hardest; useful for
    demonstrating what constrained decoding prevents."""

    def __init__(self, vocab, bad_token="BOGUSCAT"):
        if bad_token not in vocab:
            raise ConfigError(f"adversarial token {bad_token!r} not in vocabulary")
        self.vocab = vocab
        self.bad_token = bad_token

    def next_scores(self, history, memory=None):
        scores = np.zeros(len(self.vocab))
        scores[self.vocab.index[self.bad_token]] = 5.0
        scores[self.vocab.index[OPEN_QUAD]] = 2.0
        scores[self.vocab.index[OPEN_LIST]] = 1.0
        return scores
