"""Which disjoint subset of the remaining gold mentions to target next.

All policies share one tie-break: earlier begin, then shorter span, then
label.  Multi-pass policies: ``greedy``, ``short_to_large``,
``large_to_short``.  Single-pass (flat) baselines: ``flat_short``,
``flat_large``, ``flat_greedy``.
"""

from __future__ import annotations

from typing import Iterable

from .annotations import Mention, compute_depths, mentions_overlap, strictly_contains
from .errors import TooLarge

GREEDY = "greedy"
SHORT_TO_LARGE = "short_to_large"
LARGE_TO_SHORT = "large_to_short"
FLAT_SHORT = "flat_short"
FLAT_LARGE = "flat_large"
FLAT_GREEDY = "flat_greedy"

ITERATIVE_POLICIES = (GREEDY, SHORT_TO_LARGE, LARGE_TO_SHORT)
FLAT_POLICIES = (FLAT_SHORT, FLAT_LARGE, FLAT_GREEDY)
POLICIES = ITERATIVE_POLICIES + FLAT_POLICIES

BRUTE_FORCE_LIMIT = 14


def is_flat(policy: str) -> bool:
    return policy in FLAT_POLICIES


def tie_key(m: Mention):
    return (m.begin, len(m), m.label)


def _pairs(mentions: Iterable[Mention]) -> set:
    return {(i, m.label) for m in mentions for i in range(m.begin, m.end)}


def overlap_f1(candidate: Iterable[Mention], predicted: Iterable[Mention]) -> float:
    """Labeled token-level F1 between two mention sets (1.0 if both are empty)."""
    a, b = _pairs(candidate), _pairs(predicted)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    hit = len(a & b)
    return 2.0 * hit / (len(a) + len(b))


def take_disjoint(ordered: Iterable[Mention]) -> set:
    """Accept mentions in order, skipping any that overlap one already taken."""
    taken = []
    for m in ordered:
        if not any(mentions_overlap(m, t) for t in taken):
            taken.append(m)
    return set(taken)


def select_greedy(gold, observed, predicted) -> set:
    """Greedy target closest to the current prediction in overlap F1.

    Candidates are ranked exact predictions first, then by their own overlap
    F1 against ``predicted``, then by the tie-break.  The first candidate is
    always taken; a later one is taken if it is disjoint from the selection
    and does not lower the selection's overlap F1.
    """
    predicted = set(predicted)
    remaining = set(gold) - set(observed)
    ranked = sorted(remaining, key=lambda m: (m not in predicted,
                                              -overlap_f1({m}, predicted), tie_key(m)))
    selected = []
    score = None
    for m in ranked:
        if any(mentions_overlap(m, s) for s in selected):
            continue
        new_score = overlap_f1(selected + [m], predicted)
        if score is None or new_score >= score:
            selected.append(m)
            score = new_score
    return set(selected)


def containment_minima(mentions) -> list:
    mentions = list(mentions)
    return [m for m in mentions if not any(strictly_contains(m, o) for o in mentions)]


def containment_maxima(mentions) -> list:
    mentions = list(mentions)
    return [m for m in mentions if not any(strictly_contains(o, m) for o in mentions)]


def select_by_depth(gold, observed, direction: str) -> set:
    """Innermost (``short_to_large``) or outermost (``large_to_short``) remaining level.

    Nesting is measured among the still unobserved mentions; overlaps left
    inside the chosen level are resolved by the tie-break and deferred.
    """
    remaining = set(gold) - set(observed)
    if direction == SHORT_TO_LARGE:
        level = containment_minima(remaining)
    elif direction == LARGE_TO_SHORT:
        level = containment_maxima(remaining)
    else:
        raise ValueError(f"unknown depth direction {direction!r}")
    return take_disjoint(sorted(level, key=tie_key))


def select_flat(gold, kind: str) -> set:
    if kind == FLAT_SHORT:
        level = containment_minima(gold)
    elif kind == FLAT_LARGE:
        level = containment_maxima(gold)
    else:
        raise ValueError(f"unknown flat selector {kind!r}")
    return take_disjoint(sorted(level, key=tie_key))


def select_target(policy: str, gold, observed=(), predicted=()) -> set:
    if policy == GREEDY or policy == FLAT_GREEDY:
        return select_greedy(gold, observed, predicted)
    if policy in (SHORT_TO_LARGE, LARGE_TO_SHORT):
        return select_by_depth(gold, observed, policy)
    if policy in (FLAT_SHORT, FLAT_LARGE):
        return select_flat(gold, policy)
    raise ValueError(f"unknown order policy {policy!r}")


def sample_observed(gold, p: float, rng) -> set:
    """Keep each gold mention independently with probability ``p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    ordered = sorted(gold)
    keep = rng.random(len(ordered)) < p
    return {m for m, k in zip(ordered, keep) if k}


def layer_mentions(mentions) -> list:
    """Partition mentions into disjoint layers, innermost first.

    Mentions are visited by (depth, tie-break) and placed in the first layer
    they do not overlap.
    """
    depths = compute_depths(mentions)
    layers = []
    for m in sorted(depths, key=lambda m: (depths[m], tie_key(m))):
        for layer in layers:
            if not any(mentions_overlap(m, o) for o in layer):
                layer.add(m)
                break
        else:
            layers.append({m})
    return layers


def _disjoint_subsets(items):
    """Every non-empty pairwise-disjoint subset of ``items`` (backtracking)."""
    chosen = []

    def walk(i):
        for j in range(i, len(items)):
            m = items[j]
            if any(mentions_overlap(m, c) for c in chosen):
                continue
            chosen.append(m)
            yield tuple(chosen)
            yield from walk(j + 1)
            chosen.pop()

    yield from walk(0)


def brute_force_select(gold, observed, predicted) -> set:
    """Exhaustive oracle: best non-empty disjoint subset by overlap F1.

    Equal scores go to the subset whose membership vector, read in
    tie-break order, is lexicographically largest.
    """
    remaining = sorted(set(gold) - set(observed), key=tie_key)
    if len(remaining) > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"{len(remaining)} unobserved mentions exceed {BRUTE_FORCE_LIMIT}")
    if not remaining:
        return set()
    predicted = set(predicted)
    n = len(remaining)
    best, best_key = None, None
    for subset in _disjoint_subsets(remaining):
        members = [False] * n
        for m in subset:
            members[remaining.index(m)] = True
        key = (overlap_f1(subset, predicted), members)
        if best_key is None or key > best_key:
            best, best_key = set(subset), key
    return best
