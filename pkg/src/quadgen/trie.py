"""Generic k-ary prefix tree over tokens, plus builders for the constraint
tries used by the decoder: the two-level category→subcategory trie and the
flat sentiment trie.

Nodes carry an optional payload on terminal entries; the category trie uses
payloads to link each complete category to the trie of its own
subcategories, keeping the two-level dependency explicit.
"""


class TrieError(ValueError):
    pass


class TrieNode:
    __slots__ = ("label", "children", "terminal", "payload")

    def __init__(self, label=""):
        self.label = label
        self.children = {}
        self.terminal = False
        self.payload = None

    def child(self, token):
        """Child node for `token`, or None.  The decoder advances cursors
        through this, so a walk costs one dict hop per token."""
        return self.children.get(token)


class TokenTrie:
    """Prefix tree keyed by token strings.

    Insertion order never affects queries; children sets are exact.
    """

    def __init__(self):
        self.root = TrieNode()
        self._entries = []

    def insert(self, tokens, payload=None):
        """Insert a token sequence, optionally attaching a payload to its
        terminal node.  Re-inserting the same sequence with a conflicting
        payload is an error."""
        tokens = list(tokens)
        if not tokens:
            raise TrieError("cannot insert an empty token sequence")
        node = self.root
        for t in tokens:
            nxt = node.children.get(t)
            if nxt is None:
                nxt = TrieNode(t)
                node.children[t] = nxt
            node = nxt
        if node.terminal and node.payload != payload:
            raise TrieError(f"conflicting payload on re-insert of {tokens!r}")
        if not node.terminal:
            self._entries.append(tuple(tokens))
        node.terminal = True
        node.payload = payload

    def node(self, prefix=()):
        """Node reached by walking `prefix` from the root, or None."""
        node = self.root
        for t in prefix:
            node = node.children.get(t)
            if node is None:
                return None
        return node

    def children(self, prefix=()):
        """Exact set of child labels under `prefix`; empty set when the
        prefix is not present."""
        node = self.node(prefix)
        if node is None:
            return set()
        return set(node.children)

    def lookup(self, tokens):
        """(found, payload) for a complete entry."""
        node = self.node(tokens)
        if node is None or not node.terminal:
            return False, None
        return True, node.payload

    def entries(self):
        """All inserted sequences, in insertion order."""
        return list(self._entries)

    def is_prefix_free(self):
        """True when no complete entry is a strict prefix of another, i.e.
        no terminal node has children.  Walk phases in the decoder require
        this to keep completion unambiguous."""
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.terminal and node.children:
                return False
            stack.extend(node.children.values())
        return True

    def dump(self):
        """Indented text rendering for inspection (trie-dump CLI)."""
        lines = []
        self._dump_node(self.root, 0, lines)
        return "\n".join(lines)

    def _dump_node(self, node, depth, lines):
        for label in sorted(node.children):
            child = node.children[label]
            mark = "*" if child.terminal else ""
            lines.append("  " * depth + child.label + mark)
            if isinstance(child.payload, TokenTrie):
                sub = child.payload.dump()
                for subline in sub.splitlines():
                    lines.append("  " * (depth + 1) + "-> " + subline.strip())
            self._dump_node(child, depth + 1, lines)


def _default_tokenize(name):
    return [name]


def build_category_trie(schema, tokenize=None):
    """Two-level constraint trie: root children are the C1 names; each C1
    terminal node's payload is the trie of that category's C2 names."""
    tokenize = tokenize or _default_tokenize
    trie = TokenTrie()
    for c1 in schema.categories:
        sub = TokenTrie()
        for c2 in schema.subcategories[c1]:
            sub.insert(tokenize(c2))
        trie.insert(tokenize(c1), payload=sub)
    return trie


def build_sentiment_trie(schema, tokenize=None):
    """Flat trie of the sentiment polarity names, all terminal."""
    tokenize = tokenize or _default_tokenize
    trie = TokenTrie()
    for s in schema.sentiments:
        trie.insert(tokenize(s))
    return trie
