import numpy as np

from relgraph import AnnotatedToken, Pattern, PatternKind, RelationalGraph


def make_sentence(text, tags=None, heads=None, deprels=None):
    """Sentence whose lemmas equal the whitespace tokens of `text`."""
    words = text.split()
    if tags is None:
        tags = ["NN"] * len(words)
    tokens = []
    for k, word in enumerate(words):
        head = heads[k] if heads is not None else None
        deprel = deprels[k] if deprels is not None else None
        tokens.append(AnnotatedToken(word, word, tags[k], head=head, deprel=deprel))
    return tokens


def demo_graph():
    """Three words, three patterns: ostrich->bird twice, penguin->bird once."""
    g = RelationalGraph()
    ostrich = g.vocab.intern("ostrich")
    bird = g.vocab.intern("bird")
    penguin = g.vocab.intern("penguin")
    large = g.patterns.intern(Pattern(PatternKind.LEX, "X is a large Y"))
    flightless = g.patterns.intern(Pattern(PatternKind.LEX, "both X and penguin are flightless Y"))
    isa = g.patterns.intern(Pattern(PatternKind.LEX, "X is a Y"))
    g.add_edge(ostrich, bird, large, 1.0)
    g.add_edge(ostrich, bird, flightless, 1.0)
    g.add_edge(penguin, bird, isa, 1.0)
    return g


def random_graph(seed, n_words=8, n_patterns=4, n_edges=20):
    """Random graph with vocab and patterns interned in edge order."""
    rng = np.random.default_rng(seed)
    g = RelationalGraph()
    seen = set()
    while len(seen) < n_edges:
        key = (
            int(rng.integers(n_words)),
            int(rng.integers(n_words)),
            int(rng.integers(n_patterns)),
        )
        if key in seen:
            continue
        seen.add(key)
        u = g.vocab.intern(f"word{key[0]}")
        v = g.vocab.intern(f"word{key[1]}")
        l = g.patterns.intern(Pattern(PatternKind.LEX, f"X rel{key[2]} Y"))
        g.add_edge(u, v, l, float(rng.uniform(0.01, 5.0)))
    return g


def planted_graph(seed, n_words=20, n_patterns=3, dim=4):
    """Graph whose weights are bilinear scores of a hidden positive-entry model.

    Positive entries keep every score a valid (>= 0) edge weight, so no edge
    is dropped and the hidden model attains exactly zero loss.
    """
    rng = np.random.default_rng([seed, 777])
    hidden_vecs = np.abs(rng.standard_normal((n_words, dim)))
    hidden_mats = np.abs(rng.standard_normal((n_patterns, dim, dim)))
    g = RelationalGraph()
    for k in range(n_words):
        g.vocab.intern(f"word{k}")
    for k in range(n_patterns):
        g.patterns.intern(Pattern(PatternKind.LEX, f"X rel{k} Y"))
    for l in range(n_patterns):
        for u in range(n_words):
            for v in range(n_words):
                if u == v:
                    continue
                g.add_edge(u, v, l, float(hidden_vecs[u] @ hidden_mats[l] @ hidden_vecs[v]))
    return g
