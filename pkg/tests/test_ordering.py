import numpy as np
import pytest

from nestner.annotations import compute_depths, is_disjoint, mention, mentions_overlap
from nestner.errors import TooLarge
from nestner.ordering import (
    FLAT_LARGE,
    FLAT_SHORT,
    GREEDY,
    LARGE_TO_SHORT,
    POLICIES,
    SHORT_TO_LARGE,
    brute_force_select,
    layer_mentions,
    overlap_f1,
    sample_observed,
    select_by_depth,
    select_flat,
    select_greedy,
    select_target,
)

INNER, OUTER = mention(1, 2, "X"), mention(0, 3, "Y")
CHAIN = [mention(2, 3, "X"), mention(1, 4, "X"), mention(0, 6, "Y")]


def random_gold(rng, length=12, count=None):
    count = int(rng.integers(0, 10)) if count is None else count
    labels = ("A", "B")
    out = set()
    for _ in range(count):
        b = int(rng.integers(0, length))
        e = int(rng.integers(b + 1, min(length, b + 5) + 1))
        out.add(mention(b, e, labels[int(rng.integers(2))]))
    return out


def random_disjoint_subset(rng, mentions):
    picked = []
    for m in sorted(mentions, key=lambda _: rng.random()):
        if rng.random() < 0.6 and not any(mentions_overlap(m, p) for p in picked):
            picked.append(m)
    return set(picked)


def test_overlap_f1_examples():
    assert overlap_f1({mention(0, 2, "X")}, {mention(1, 3, "X")}) == 0.5
    assert overlap_f1({INNER}, {INNER}) == 1.0
    assert overlap_f1({mention(0, 1, "X")}, {mention(2, 3, "X")}) == 0.0
    assert overlap_f1(set(), set()) == 1.0
    # labels matter
    assert overlap_f1({mention(0, 2, "X")}, {mention(0, 2, "Y")}) == 0.0


def test_greedy_examples():
    assert select_greedy({INNER, OUTER}, set(), set()) == {OUTER}  # earlier begin wins
    same_begin = {mention(0, 1, "X"), mention(0, 3, "Y")}
    assert select_greedy(same_begin, set(), set()) == {mention(0, 1, "X")}
    assert select_greedy({INNER, OUTER}, set(), {INNER}) == {INNER}
    assert select_greedy({INNER, OUTER}, {INNER, OUTER}, set()) == set()
    assert select_greedy({INNER, OUTER}, {INNER}, set()) == {OUTER}


def test_greedy_takes_every_disjoint_mention_with_empty_prediction():
    gold = {mention(0, 1, "X"), mention(2, 4, "Y"), mention(5, 6, "X")}
    assert select_greedy(gold, set(), set()) == gold


def test_depth_examples():
    assert select_by_depth(CHAIN, set(), SHORT_TO_LARGE) == {CHAIN[0]}
    assert select_by_depth(CHAIN, set(), LARGE_TO_SHORT) == {CHAIN[2]}
    assert select_by_depth(CHAIN, {CHAIN[0]}, SHORT_TO_LARGE) == {CHAIN[1]}
    assert select_by_depth(CHAIN, set(CHAIN), SHORT_TO_LARGE) == set()
    with pytest.raises(ValueError):
        select_by_depth(CHAIN, set(), "sideways")


def test_depth_defers_overlapping_same_level():
    a, b = mention(0, 2, "X"), mention(1, 3, "X")
    assert select_by_depth({a, b}, set(), SHORT_TO_LARGE) == {a}
    assert select_by_depth({a, b}, {a}, SHORT_TO_LARGE) == {b}


def test_flat_examples():
    assert select_flat({INNER, OUTER}, FLAT_SHORT) == {INNER}
    assert select_flat({INNER, OUTER}, FLAT_LARGE) == {OUTER}
    flat = {mention(0, 1, "X"), mention(3, 5, "Y")}
    assert select_flat(flat, FLAT_SHORT) == flat == select_flat(flat, FLAT_LARGE)


def test_flat_outputs_are_disjoint_subsets():
    rng = np.random.default_rng(0)
    for _ in range(200):
        gold = random_gold(rng)
        short, large = select_flat(gold, FLAT_SHORT), select_flat(gold, FLAT_LARGE)
        assert short | large <= gold
        assert is_disjoint(short) and is_disjoint(large)


def test_brute_force_examples():
    assert brute_force_select({INNER}, set(), set()) == {INNER}
    assert brute_force_select({INNER, OUTER}, set(), {INNER}) == {INNER}
    gold = {mention(0, 1, "X"), mention(2, 4, "Y"), mention(0, 4, "Y")}
    assert brute_force_select(gold, set(), set()) == {mention(0, 1, "X"), mention(2, 4, "Y")}
    assert brute_force_select(gold, gold, set()) == set()
    many = {mention(i, i + 1, "X") for i in range(15)}
    with pytest.raises(TooLarge):
        brute_force_select(many, set(), set())


def test_greedy_never_beats_oracle_and_matches_on_exact_predictions():
    rng = np.random.default_rng(1)
    equal_cases = 0
    for trial in range(500):
        gold = random_gold(rng, count=int(rng.integers(1, 13)))
        observed = {m for m in gold if rng.random() < 0.3}
        remaining = gold - observed
        exact = trial % 2 == 0
        if exact:
            predicted = random_disjoint_subset(rng, remaining)
        else:
            predicted = random_disjoint_subset(rng, random_gold(rng))
        g = select_greedy(gold, observed, predicted)
        o = brute_force_select(gold, observed, predicted)
        assert is_disjoint(g) and g <= remaining
        assert overlap_f1(g, predicted) <= overlap_f1(o, predicted) + 1e-12
        if exact and predicted:
            equal_cases += 1
            assert overlap_f1(g, predicted) == overlap_f1(o, predicted) == 1.0
    assert equal_cases > 100


@pytest.mark.parametrize("policy", [GREEDY, SHORT_TO_LARGE, LARGE_TO_SHORT])
def test_repeated_selection_enumerates_gold_once(policy):
    rng = np.random.default_rng(2)
    for _ in range(200):
        gold = random_gold(rng)
        observed, rounds = set(), 0
        while True:
            rounds += 1
            predicted = random_disjoint_subset(rng, random_gold(rng))
            target = select_target(policy, gold, observed, predicted)
            assert not target & observed
            if not target:
                break
            observed |= target
            assert rounds <= len(gold) + 1
        assert observed == gold
        if policy != GREEDY and gold:
            depth = max(compute_depths(gold).values())
            assert rounds <= len(gold) + 1 and rounds >= depth + 2


def test_select_target_dispatch():
    for policy in POLICIES:
        assert select_target(policy, {INNER}, set(), set()) == {INNER}
    with pytest.raises(ValueError):
        select_target("random", {INNER})


def test_sample_observed():
    gold = {mention(0, 1, "X"), mention(0, 2, "X"), mention(3, 4, "Y"), mention(5, 8, "X")}
    rng = np.random.default_rng(3)
    assert sample_observed(gold, 0.0, rng) == set()
    assert sample_observed(gold, 1.0, rng) == gold
    counts = {m: 0 for m in gold}
    trials = 10_000
    for _ in range(trials):
        for m in sample_observed(gold, 0.5, rng):
            counts[m] += 1
    for m, c in counts.items():
        assert abs(c / trials - 0.5) <= 0.02
    with pytest.raises(ValueError):
        sample_observed(gold, 1.5, rng)


def test_layer_mentions():
    layers = layer_mentions(set(CHAIN) | {mention(4, 5, "X")})
    assert layers == [{CHAIN[0], mention(4, 5, "X")}, {CHAIN[1]}, {CHAIN[2]}]
    rng = np.random.default_rng(4)
    for _ in range(100):
        gold = random_gold(rng)
        layers = layer_mentions(gold)
        assert all(is_disjoint(layer) for layer in layers)
        assert set().union(*layers) == gold if layers else not gold
