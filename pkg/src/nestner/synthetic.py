"""Synthetic nested corpus whose nesting can be read off the tokens.

* an *atom* (always depth 0) is a label keyword followed by 0-2 content
  words, e.g. ``kw1_b n7 n2``;
* a *region* is a label-specific bracket pair around 1-3 items (fillers,
  atoms, smaller regions).  A region holding only fillers is depth 0; one
  holding a depth ``d - 1`` item is depth ``d``.

Sentence ``i`` always contains one structure of depth ``i % (max_depth + 1)``
so every depth up to ``max_depth`` is realised even for tiny corpora.
"""

from __future__ import annotations

import numpy as np

from .annotations import Mention, Span, Sentence
from .corpus import Corpus

FILLERS = ("the", "a", "of", "with", "and", "after", "before", "during", "was", "were",
           "patient", "noted", "showed", "left", "right", "mild", "severe", "daily",
           "then", "also")
CONTENT = tuple(f"n{i}" for i in range(16))
BRACKETS = (("(", ")"), ("[", "]"), ("{", "}"), ("<", ">"), ("«", "»"), ("/*", "*/"))
KEYWORDS_PER_LABEL = 3


def label_names(label_count: int) -> list:
    return [f"E{i}" for i in range(label_count)]


def brackets(i: int) -> tuple:
    return BRACKETS[i] if i < len(BRACKETS) else (f"<{i}", f"{i}>")


class _Builder:
    def __init__(self, rng, labels):
        self.rng = rng
        self.labels = labels
        self.tokens = []
        self.mentions = set()

    def choice(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def fillers(self, lo=1, hi=3):
        for _ in range(int(self.rng.integers(lo, hi + 1))):
            self.tokens.append(self.choice(FILLERS))

    def atom(self):
        k = int(self.rng.integers(len(self.labels)))
        begin = len(self.tokens)
        self.tokens.append(f"kw{k}_{'abc'[int(self.rng.integers(KEYWORDS_PER_LABEL))]}")
        for _ in range(int(self.rng.integers(0, 3))):
            self.tokens.append(self.choice(CONTENT))
        self.mentions.add(Mention(Span(begin, len(self.tokens)), self.labels[k]))

    def region(self, depth):
        k = int(self.rng.integers(len(self.labels)))
        open_, close = brackets(k)
        begin = len(self.tokens)
        self.tokens.append(open_)
        if depth == 0:
            self.fillers(1, 3)
        else:
            n_items = int(self.rng.integers(1, 4))
            anchor = int(self.rng.integers(n_items))
            for j in range(n_items):
                if j == anchor:
                    self.structure(depth - 1)
                elif self.rng.random() < 0.5:
                    self.fillers(1, 2)
                else:
                    self.atom()
        self.tokens.append(close)
        self.mentions.add(Mention(Span(begin, len(self.tokens)), self.labels[k]))

    def structure(self, depth):
        if depth == 0 and self.rng.random() < 0.7:
            self.atom()
        else:
            self.region(depth)


def generate_synthetic(n_sentences: int, max_depth: int = 2, label_count: int = 3, seed: int = 0) -> Corpus:
    if not 0 <= max_depth <= 3:
        raise ValueError("max_depth must lie in [0, 3]")
    if label_count < 1:
        raise ValueError("label_count must be positive")
    rng = np.random.default_rng(seed)
    labels = label_names(label_count)
    sentences = []
    for i in range(n_sentences):
        b = _Builder(rng, labels)
        n_segments = int(rng.integers(2, 5))
        anchor = int(rng.integers(n_segments))
        for j in range(n_segments):
            if j == anchor:
                b.structure(i % (max_depth + 1))
            elif rng.random() < 0.4:
                b.fillers()
            else:
                b.structure(int(rng.integers(0, max_depth + 1)))
        sentences.append(Sentence(tuple(b.tokens), b.mentions, f"synth-{i // 10}"))
    return Corpus(sentences)
