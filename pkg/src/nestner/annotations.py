"""Spans, mentions, nesting depth and the BIO / BIOUL tag codecs.

Spans are end-exclusive token intervals.  A mention is a labeled span; two
mentions sharing a span but not a label are distinct, and they still count
as overlapping (one tag per token per decoding pass).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

from .errors import OverlapError, SchemeMismatch

BIO = "BIO"
BIOUL = "BIOUL"
SCHEMES = (BIO, BIOUL)


@dataclass(frozen=True, order=True)
class Span:
    begin: int
    end: int

    def __post_init__(self):
        if not 0 <= self.begin < self.end:
            raise ValueError(f"invalid span [{self.begin}, {self.end})")

    def __len__(self):
        return self.end - self.begin

    def contains(self, other: "Span") -> bool:
        """Non-strict containment."""
        return self.begin <= other.begin and other.end <= self.end


@dataclass(frozen=True, order=True)
class Mention:
    span: Span
    label: str

    @property
    def begin(self) -> int:
        return self.span.begin

    @property
    def end(self) -> int:
        return self.span.end

    def __len__(self):
        return len(self.span)

    def __repr__(self):
        return f"Mention([{self.begin},{self.end})/{self.label})"


def mention(begin: int, end: int, label: str) -> Mention:
    return Mention(Span(begin, end), label)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple
    mentions: frozenset = frozenset()
    doc_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "mentions", frozenset(self.mentions))
        for m in self.mentions:
            if m.end > len(self.tokens):
                raise ValueError(f"{m!r} exceeds sentence length {len(self.tokens)}")

    def __len__(self):
        return len(self.tokens)


def spans_overlap(a: Span, b: Span) -> bool:
    return a.begin < b.end and b.begin < a.end


def mentions_overlap(a: Mention, b: Mention) -> bool:
    return spans_overlap(a.span, b.span)


def is_disjoint(mentions: Iterable[Mention]) -> bool:
    ordered = sorted(mentions, key=lambda m: (m.begin, m.end))
    return all(prev.end <= cur.begin for prev, cur in zip(ordered, ordered[1:]))


def strictly_contains(outer: Mention, inner: Mention) -> bool:
    return outer.span != inner.span and outer.span.contains(inner.span)


def compute_depths(mentions: Iterable[Mention]) -> dict:
    """Map each mention to its nesting depth (labels are ignored).

    Depth 0 mentions strictly contain no other mention; otherwise the depth is
    one more than the deepest strictly contained mention.
    """
    ordered = sorted(set(mentions), key=lambda m: (len(m), m.begin, m.label))
    depths = {}
    # a strictly contained span is strictly shorter, so it is already resolved
    for i, outer in enumerate(ordered):
        inner_depths = [depths[m] for m in ordered[:i] if strictly_contains(outer, m)]
        depths[outer] = 1 + max(inner_depths) if inner_depths else 0
    return depths


@dataclass(frozen=True)
class TagScheme:
    """Tag vocabulary for one scheme over a closed label set.

    Tag ids are ``0`` for ``O`` followed by the per-label prefixes in the
    order B, I (then L, U for BIOUL), labels sorted.
    """

    kind: str
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in SCHEMES:
            raise ValueError(f"unknown tag scheme {self.kind!r}")
        object.__setattr__(self, "labels", tuple(sorted(set(self.labels))))

    @property
    def prefixes(self) -> tuple:
        return ("B", "I") if self.kind == BIO else ("B", "I", "L", "U")

    @cached_property
    def tags(self) -> tuple:
        return ("O",) + tuple(f"{p}-{label}" for label in self.labels for p in self.prefixes)

    @cached_property
    def index(self) -> dict:
        return {tag: i for i, tag in enumerate(self.tags)}

    def __len__(self):
        return len(self.tags)

    def tag_id(self, prefix: str, label: str) -> int:
        return self.index[f"{prefix}-{label}"] if prefix != "O" else 0

    def split(self, tag_id: int) -> tuple:
        """``(prefix, label)`` of a tag id; label is None for O."""
        tag = self.tags[tag_id]
        if tag == "O":
            return "O", None
        prefix, label = tag.split("-", 1)
        return prefix, label


@dataclass(frozen=True)
class TagSequence:
    scheme: TagScheme
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(int(t) for t in self.tags))
        n = len(self.scheme)
        for t in self.tags:
            if not 0 <= t < n:
                raise ValueError(f"tag id {t} outside scheme of size {n}")

    def __len__(self):
        return len(self.tags)

    def names(self) -> list:
        return [self.scheme.tags[t] for t in self.tags]

    @classmethod
    def from_names(cls, scheme: TagScheme, names: Sequence[str]) -> "TagSequence":
        return cls(scheme, tuple(scheme.index[n] for n in names))


@dataclass(frozen=True)
class ObservedTags:
    """One tag sequence per previously decoded layer (may be empty)."""

    scheme: TagScheme
    layers: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        for layer in self.layers:
            if layer.scheme != self.scheme:
                raise SchemeMismatch("observed layers must share the read scheme")
        if len({len(layer) for layer in self.layers}) > 1:
            raise ValueError("observed layers differ in length")

    @property
    def depth(self) -> int:
        return len(self.layers)


def encode_mentions(mentions: Iterable[Mention], scheme: TagScheme, length: int) -> TagSequence:
    mentions = sorted(mentions)
    for prev, cur in zip(mentions, mentions[1:]):
        if mentions_overlap(prev, cur):
            raise OverlapError(f"cannot encode overlapping mentions {prev!r} and {cur!r}")
    tags = [0] * length
    for m in mentions:
        if m.end > length:
            raise ValueError(f"{m!r} exceeds length {length}")
        if scheme.kind == BIOUL and len(m) == 1:
            tags[m.begin] = scheme.tag_id("U", m.label)
            continue
        tags[m.begin] = scheme.tag_id("B", m.label)
        for i in range(m.begin + 1, m.end):
            tags[i] = scheme.tag_id("I", m.label)
        if scheme.kind == BIOUL:
            tags[m.end - 1] = scheme.tag_id("L", m.label)
    return TagSequence(scheme, tags)


def decode_tags(seq: TagSequence) -> set:
    """Decode a tag sequence into disjoint mentions, repairing ill-formed input.

    An I (or L) tag without a matching open entity starts a new one; an open
    entity closes at O, B, U, a label change, or the end of the sequence.
    """
    scheme = seq.scheme
    out = set()
    open_label, open_begin = None, 0

    def close(end):
        nonlocal open_label
        if open_label is not None:
            out.add(mention(open_begin, end, open_label))
            open_label = None

    for i, tag_id in enumerate(seq.tags):
        prefix, label = scheme.split(tag_id)
        if prefix == "O":
            close(i)
        elif prefix == "B" or prefix == "U":
            close(i)
            open_label, open_begin = label, i
            if prefix == "U":
                close(i + 1)
        else:
            if open_label != label:
                close(i)
                open_label, open_begin = label, i
            if prefix == "L":
                close(i + 1)
    close(len(seq.tags))
    return out


def build_observed(history: Sequence[Iterable[Mention]], read_scheme: TagScheme, length: int) -> ObservedTags:
    return ObservedTags(read_scheme, tuple(encode_mentions(layer, read_scheme, length) for layer in history))
