"""Corpus readers/writers (BRAT standoff, JSON lines) and deterministic splits."""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .annotations import Mention, Sentence, Span
from .errors import MissingTextFile, ParseError, SchemaError, TooSmall

log = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass
class Corpus:
    sentences: list = field(default_factory=list)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Corpus(self.sentences[item])
        return self.sentences[item]

    @property
    def label_vocabulary(self) -> list:
        return sorted({m.label for s in self.sentences for m in s.mentions})

    @property
    def token_vocabulary(self) -> list:
        return sorted({t for s in self.sentences for t in s.tokens})


def tokenize(text: str) -> list:
    """``(token, char_begin, char_end)`` triples for words and single punctuation marks."""
    return [(m.group(), m.start(), m.end()) for m in TOKEN_RE.finditer(text)]


# ---------------------------------------------------------------------------
# BRAT standoff


@dataclass
class BratStats:
    snapped: int = 0
    discontinuous: int = 0
    cross_line: int = 0
    empty: int = 0


def _parse_entity_line(path, line_no, line):
    """``(label, char_begin, char_end)`` or None for a discontinuous fragment list."""
    fields = line.split("\t")
    if len(fields) >= 2:
        head = fields[1]
    else:
        parts = line.split(None, 4)
        if len(parts) < 4:
            raise ParseError(path, line_no, f"malformed entity line: {line!r}")
        head = " ".join(parts[1:4])
    parts = head.split(None, 1)
    if len(parts) != 2:
        raise ParseError(path, line_no, f"missing entity offsets: {line!r}")
    label, offsets = parts
    if ";" in offsets:
        return None
    bounds = offsets.split()
    try:
        begin, end = int(bounds[0]), int(bounds[1])
    except (IndexError, ValueError):
        raise ParseError(path, line_no, f"bad character offsets {offsets!r}") from None
    if not 0 <= begin < end:
        raise ParseError(path, line_no, f"empty or reversed offsets {begin} {end}")
    return label, begin, end


def read_brat_document(text_path, ann_path, doc_id=None, stats=None) -> list:
    """Sentences of one document; each text line is one sentence."""
    stats = stats if stats is not None else BratStats()
    text = Path(text_path).read_text(encoding="utf-8")
    doc_id = doc_id or Path(text_path).stem
    lines, offset = [], 0
    for raw in text.split("\n"):
        lines.append((offset, raw, tokenize(raw)))
        offset += len(raw) + 1

    entities = []
    for line_no, line in enumerate(Path(ann_path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.startswith("T"):
            continue
        parsed = _parse_entity_line(ann_path, line_no, line)
        if parsed is None:
            stats.discontinuous += 1
            continue
        entities.append(parsed)

    per_line = [set() for _ in lines]
    for label, begin, end in entities:
        for k, (start, raw, toks) in enumerate(lines):
            if start <= begin < start + len(raw) + 1:
                break
        else:
            stats.cross_line += 1
            continue
        start, raw, toks = lines[k]
        if end > start + len(raw):
            stats.cross_line += 1
            continue
        lo, hi = begin - start, end - start
        covered = [i for i, (_, b, e) in enumerate(toks) if b < hi and lo < e]
        if not covered:
            stats.empty += 1
            continue
        first, last = covered[0], covered[-1]
        if toks[first][1] != lo or toks[last][2] != hi:
            stats.snapped += 1
        per_line[k].add(Mention(Span(first, last + 1), label))

    return [Sentence(tuple(t for t, _, _ in toks), per_line[k], doc_id)
            for k, (_, _, toks) in enumerate(lines) if toks]


def read_brat(directory) -> Corpus:
    """Read every ``*.ann`` file with its ``*.txt`` twin, in file-name order.

    Offsets that cut through a token are widened to whole tokens;
    discontinuous and cross-line annotations are skipped.  Counts of each are
    logged as one warning.
    """
    directory = Path(directory)
    stats = BratStats()
    sentences = []
    for ann in sorted(directory.glob("*.ann")):
        txt = ann.with_suffix(".txt")
        if not txt.exists():
            raise MissingTextFile(f"no text file for {ann}")
        sentences.extend(read_brat_document(txt, ann, ann.stem, stats))
    if stats.snapped or stats.discontinuous or stats.cross_line or stats.empty:
        log.warning("BRAT ingestion: %d snapped outward, %d discontinuous skipped, "
                    "%d cross-line skipped, %d without tokens skipped",
                    stats.snapped, stats.discontinuous, stats.cross_line, stats.empty)
    return Corpus(sentences)


# ---------------------------------------------------------------------------
# JSON lines


def sentence_record(sentence: Sentence) -> dict:
    return {
        "doc_id": sentence.doc_id,
        "tokens": list(sentence.tokens),
        "mentions": [{"begin": m.begin, "end": m.end, "label": m.label}
                     for m in sorted(sentence.mentions)],
    }


def sentence_from_record(index: int, record) -> Sentence:
    if not isinstance(record, dict):
        raise SchemaError(index, "record is not an object")
    tokens = record.get("tokens")
    if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
        raise SchemaError(index, "'tokens' must be a list of strings")
    doc_id = record.get("doc_id", "")
    if not isinstance(doc_id, str):
        raise SchemaError(index, "'doc_id' must be a string")
    mentions = set()
    for m in record.get("mentions", []):
        try:
            begin, end, label = m["begin"], m["end"], m["label"]
        except (KeyError, TypeError):
            raise SchemaError(index, f"mention {m!r} needs begin, end and label") from None
        if not (isinstance(begin, int) and isinstance(end, int) and isinstance(label, str)):
            raise SchemaError(index, f"mention {m!r} has wrongly typed fields")
        if not 0 <= begin < end <= len(tokens):
            raise SchemaError(index, f"mention [{begin}, {end}) outside {len(tokens)} tokens")
        mentions.add(Mention(Span(begin, end), label))
    return Sentence(tuple(tokens), mentions, doc_id)


def read_jsonl(path) -> Corpus:
    sentences = []
    with open(path, encoding="utf-8") as f:
        for index, line in enumerate(f):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(index, f"invalid JSON: {exc}") from None
            sentences.append(sentence_from_record(index, record))
    return Corpus(sentences)


def write_jsonl(path, corpus) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for sentence in corpus:
            f.write(json.dumps(sentence_record(sentence), ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# splits

LAST_FRACTION_TEST = "last_fraction_test"
PROVIDED_FILES = "provided_files"


def _tail_split(sentences, fraction):
    cut = len(sentences) - math.floor(fraction * len(sentences))
    return sentences[:cut], sentences[cut:]


def split(corpus, scheme=LAST_FRACTION_TEST, test=None, dev=None, fraction=0.10):
    """``(train, dev, test)`` corpora, order preserving and RNG free.

    ``last_fraction_test``: the last ``fraction`` of sentences is the test
    set and the last ``fraction`` of the remainder the dev set.
    ``provided_files``: ``corpus`` is the training file and ``test`` is
    required; ``dev`` is used as given, otherwise carved from the tail of
    the training file.
    """
    sentences = list(corpus)
    if scheme == LAST_FRACTION_TEST:
        if len(sentences) < 10:
            raise TooSmall(f"need at least 10 sentences to split, got {len(sentences)}")
        rest, test_part = _tail_split(sentences, fraction)
        train_part, dev_part = _tail_split(rest, fraction)
        return Corpus(train_part), Corpus(dev_part), Corpus(test_part)
    if scheme == PROVIDED_FILES:
        if test is None:
            raise ValueError("provided_files split needs a test corpus")
        if dev is not None:
            return Corpus(sentences), Corpus(list(dev)), Corpus(list(test))
        if len(sentences) < 10:
            raise TooSmall(f"need at least 10 training sentences to carve a dev set, got {len(sentences)}")
        train_part, dev_part = _tail_split(sentences, fraction)
        return Corpus(train_part), Corpus(dev_part), Corpus(list(test))
    raise ValueError(f"unknown split scheme {scheme!r}")
