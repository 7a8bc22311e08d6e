"""Exact-match scoring and corpus depth statistics."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass

from .annotations import compute_depths
from .errors import LengthMismatch


@dataclass(frozen=True)
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "f1": self.f1}


def f1_score(precision: float, recall: float) -> float:
    return 2 * precision * recall / (precision + recall) if precision + recall else 0.0


def _aligned(pred, gold):
    pred, gold = list(pred), list(gold)
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predicted sentences vs {len(gold)} gold sentences")
    return zip(pred, gold)


def _mentions(x):
    return set(getattr(x, "mentions", x))


def exact_match_prf(pred, gold) -> PRF:
    """Micro-averaged exact (begin, end, label) matching over aligned sentences."""
    total = PRF()
    for p, g in _aligned(pred, gold):
        p, g = _mentions(p), _mentions(g)
        hit = len(p & g)
        total = total + PRF(hit, len(p) - hit, len(g) - hit)
    return total


def per_label_prf(pred, gold) -> dict:
    """``{"labels": {label: PRF}, "micro": PRF, "macro_f1": float}``."""
    counts = {}
    for p, g in _aligned(pred, gold):
        p, g = _mentions(p), _mentions(g)
        for m in p | g:
            tp, fp, fn = counts.get(m.label, (0, 0, 0))
            counts[m.label] = (tp + (m in p and m in g), fp + (m in p and m not in g),
                               fn + (m in g and m not in p))
    labels = {label: PRF(*counts[label]) for label in sorted(counts)}
    micro = sum(labels.values(), PRF())
    macro = sum(r.f1 for r in labels.values()) / len(labels) if labels else 0.0
    return {"labels": labels, "micro": micro, "macro_f1": macro}


def depth_histogram(sentences) -> dict:
    """``{depth: count}`` over all gold mentions (depths computed per sentence)."""
    hist = Counter()
    for s in sentences:
        hist.update(compute_depths(_mentions(s)).values())
    return dict(sorted(hist.items()))


def flat_recall_ceiling(sentences) -> float:
    """Best recall any single-pass (disjoint) prediction can reach.

    Per sentence the largest disjoint subset is found by earliest-end
    interval scheduling, which is exact for unweighted intervals.
    """
    reachable = total = 0
    for s in sentences:
        mentions = sorted(_mentions(s), key=lambda m: (m.end, m.begin))
        total += len(mentions)
        frontier = 0
        for m in mentions:
            if m.begin >= frontier:
                reachable += 1
                frontier = m.end
    return reachable / total if total else 1.0


def format_prf_row(name: str, prf: PRF, width: int = 24) -> str:
    return f"{name:<{width}} {prf.precision:>9.4f} {prf.recall:>9.4f} {prf.f1:>9.4f}"


def format_report(pred, gold) -> str:
    """Plain-text report: micro P/R/F1, per-label table, gold depth histogram."""
    micro = exact_match_prf(pred, gold)
    by_label = per_label_prf(pred, gold)
    width = max([len("micro")] + [len(label) for label in by_label["labels"]]) + 2
    header = f"{'':<{width}} {'Precision':>9} {'Recall':>9} {'F1':>9}"
    lines = [header, format_prf_row("micro", micro, width), "-" * len(header)]
    for label, prf in by_label["labels"].items():
        lines.append(format_prf_row(label, prf, width))
    lines.append(f"{'macro F1':<{width}} {'':>9} {'':>9} {by_label['macro_f1']:>9.4f}")
    lines.append("")
    hist = depth_histogram(gold)
    lines.append("gold mentions by depth")
    for depth, count in hist.items():
        lines.append(f"  D{depth:<3} {count:>8}")
    lines.append(f"  {'total':<4} {sum(hist.values()):>8}")
    return "\n".join(lines)


def report_records(pred, gold) -> list:
    """Machine-readable counterpart of :func:`format_report` (one JSON line each)."""
    records = [{"scope": "micro", **exact_match_prf(pred, gold).as_dict()}]
    by_label = per_label_prf(pred, gold)
    for label, prf in by_label["labels"].items():
        records.append({"scope": "label", "label": label, **prf.as_dict()})
    records.append({"scope": "macro", "f1": by_label["macro_f1"]})
    for depth, count in depth_histogram(gold).items():
        records.append({"scope": "depth", "depth": depth, "count": count})
    return [json.dumps(r, sort_keys=False) for r in records]
