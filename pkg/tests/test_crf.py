import math

import numpy as np
import pytest

from nestner import autodiff as ad
from nestner import crf
from nestner.annotations import BIO, BIOUL, TagScheme, TagSequence, decode_tags, is_disjoint
from nestner.errors import EmptySequence, IllegalGoldPath, ShapeError

from oracles import brute_argmax, brute_log_partition, path_score


def random_instance(rng, T, n, masked=None):
    e = rng.normal(size=(T, n))
    trans, start, end = rng.normal(size=(n, n)), rng.normal(size=n), rng.normal(size=n)
    if masked is not None:
        trans = np.where(masked.allowed, trans, crf.NEG)
        start = np.where(masked.start, start, crf.NEG)
        end = np.where(masked.end, end, crf.NEG)
    return e, trans, start, end


def crf_params(rng, d, scheme):
    return crf.init_crf_params(d, scheme, rng)


def test_emissions_zero_weights():
    scheme = TagScheme(BIO, ("X",))
    p = crf_params(np.random.default_rng(0), 2, scheme)
    p["crf.w"].data = np.zeros((2, 3))
    out = crf.emissions(ad.Tensor(np.ones((4, 2))), p)
    np.testing.assert_array_equal(out.data, np.zeros((4, 3)))


def test_emissions_hand_computed():
    scheme = TagScheme(BIO, ("X",))
    p = crf_params(np.random.default_rng(0), 2, scheme)
    p["crf.w"].data = np.array([[1.0, 2.0, 3.0], [-1.0, 0.5, 0.0]])
    p["crf.b"].data = np.array([0.1, 0.2, 0.3])
    out = crf.emissions(ad.Tensor([[2.0, 4.0]]), p)
    np.testing.assert_allclose(out.data, [[2 - 4 + 0.1, 4 + 2 + 0.2, 6 + 0 + 0.3]])


def test_emissions_shape_error():
    p = crf_params(np.random.default_rng(0), 2, TagScheme(BIO, ("X",)))
    with pytest.raises(ShapeError):
        crf.emissions(ad.Tensor(np.ones((3, 5))), p)


def test_emissions_gradient():
    rng = np.random.default_rng(1)
    p = crf_params(rng, 3, TagScheme(BIO, ("X",)))
    h = ad.Parameter(rng.normal(size=(4, 3)), "h")
    probe = ad.Tensor(rng.normal(size=(4, 3)))
    errors = ad.check_gradients(lambda: ad.tensor_sum(ad.mul(crf.emissions(h, p), probe)),
                                [h, p["crf.w"], p["crf.b"]])
    assert max(errors.values()) <= 1e-4


def test_log_partition_single_position():
    rng = np.random.default_rng(2)
    e, trans, start, end = random_instance(rng, 1, 4)
    z = crf.log_partition(e, trans, start, end).item()
    v = start + e[0] + end
    assert z == pytest.approx(np.log(np.exp(v - v.max()).sum()) + v.max(), abs=1e-12)


def test_log_partition_all_zero_is_n_log_k():
    for n_tags, T in [(2, 3), (3, 4), (5, 2)]:
        zeros = np.zeros((T, n_tags))
        z = crf.log_partition(zeros, np.zeros((n_tags, n_tags)), np.zeros(n_tags), np.zeros(n_tags)).item()
        assert z == pytest.approx(T * math.log(n_tags), abs=1e-12)
        assert z == pytest.approx(brute_log_partition(zeros, np.zeros((n_tags, n_tags)),
                                                      np.zeros(n_tags), np.zeros(n_tags)), abs=1e-12)


def test_log_partition_and_viterbi_match_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(100):
        T, n = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        e, trans, start, end = random_instance(rng, T, n)
        assert crf.log_partition(e, trans, start, end).item() == pytest.approx(
            brute_log_partition(e, trans, start, end), abs=1e-9)
        path, score = crf.viterbi_arrays(e, trans, start, end)
        best, best_score = brute_argmax(e, trans, start, end)
        assert score == pytest.approx(best_score, abs=1e-9)
        assert path == best


def test_viterbi_tie_break_prefers_lowest_ids():
    zeros = np.zeros((3, 3))
    path, _ = crf.viterbi_arrays(zeros, np.zeros((3, 3)), np.zeros(3), np.zeros(3))
    assert path == [0, 0, 0]


def test_empty_sequence_errors():
    with pytest.raises(EmptySequence):
        crf.log_partition(np.zeros((0, 3)), np.zeros((3, 3)), np.zeros(3), np.zeros(3))
    with pytest.raises(EmptySequence):
        crf.viterbi_arrays(np.zeros((0, 3)), np.zeros((3, 3)), np.zeros(3), np.zeros(3))


def test_masks():
    bio = crf.transition_mask(TagScheme(BIO, ("X", "Y")))
    t = TagScheme(BIO, ("X", "Y")).index
    assert bio.allowed[t["B-X"], t["I-X"]] and bio.allowed[t["I-X"], t["I-X"]]
    assert not bio.allowed[t["B-Y"], t["I-X"]] and not bio.allowed[t["O"], t["I-X"]]
    assert not bio.start[t["I-X"]] and bio.end[t["I-X"]] and bio.end[t["B-X"]]
    s = TagScheme(BIOUL, ("X", "Y"))
    m, t = crf.transition_mask(s), s.index
    assert m.allowed[t["B-X"], t["L-X"]] and m.allowed[t["I-X"], t["L-X"]]
    assert not m.allowed[t["B-X"], t["O"]] and not m.allowed[t["I-X"], t["B-Y"]]
    assert m.allowed[t["L-X"], t["U-Y"]] and m.allowed[t["U-X"], t["B-X"]]
    assert not m.allowed[t["O"], t["L-X"]]
    assert not m.end[t["B-X"]] and not m.end[t["I-X"]] and m.end[t["L-X"]] and m.end[t["U-X"]]
    assert not m.start[t["L-X"]] and m.start[t["U-X"]]
    free = crf.transition_mask(s, constrained=False)
    assert free.allowed.all() and free.start.all() and free.end.all()


def _setup_nll(rng, scheme, T, d=3):
    p = crf_params(rng, d, scheme)
    for k in ("crf.trans", "crf.start", "crf.end"):
        p[k].data = rng.normal(size=p[k].shape)
    em = ad.Parameter(rng.normal(size=(T, len(scheme))), "em")
    return p, em


def test_nll_matches_enumeration_and_is_nonnegative():
    rng = np.random.default_rng(4)
    scheme = TagScheme(BIO, ("X",))  # 3 tags
    mask = crf.transition_mask(scheme)
    for _ in range(30):
        T = int(rng.integers(1, 5))
        p, em = _setup_nll(rng, scheme, T)
        trans = np.where(mask.allowed, p["crf.trans"].data, crf.NEG)
        start = np.where(mask.start, p["crf.start"].data, crf.NEG)
        end = np.where(mask.end, p["crf.end"].data, crf.NEG)
        legal = [path for path in np.ndindex(*(3,) * T) if mask.is_legal(path)]
        gold = legal[int(rng.integers(len(legal)))]
        loss = crf.nll(em, p, TagSequence(scheme, gold), mask).item()
        expected = brute_log_partition(em.data, trans, start, end) - path_score(em.data, trans, start, end, gold)
        assert loss == pytest.approx(expected, abs=1e-9)
        assert loss >= -1e-9 and 0 < math.exp(-loss) <= 1
        z = brute_log_partition(em.data, trans, start, end)
        total = sum(math.exp(path_score(em.data, trans, start, end, q) - z) for q in np.ndindex(*(3,) * T))
        assert total == pytest.approx(1.0, abs=1e-8)


def test_nll_single_legal_path_is_zero():
    scheme = TagScheme(BIOUL, ("X",))
    mask = crf.transition_mask(scheme)
    # length 1: the only legal tags are O and U-X; forbid U-X at the end
    mask = crf.TransitionMask(mask.allowed, mask.start, np.array([True, False, False, False, False]))
    p, em = _setup_nll(np.random.default_rng(5), scheme, 1)
    assert crf.nll(em, p, TagSequence(scheme, [0]), mask).item() <= 1e-9


def test_nll_gradients():
    rng = np.random.default_rng(6)
    scheme = TagScheme(BIOUL, ("X", "Y"))
    mask = crf.transition_mask(scheme)
    p, em = _setup_nll(rng, scheme, 5)
    gold = TagSequence.from_names(scheme, ["B-X", "L-X", "O", "U-Y", "O"])
    params = [em, p["crf.trans"], p["crf.start"], p["crf.end"]]
    errors = ad.check_gradients(lambda: crf.nll(em, p, gold, mask), params)
    assert max(errors.values()) <= 1e-4, errors
    # masked transitions get no gradient
    assert np.all(p["crf.trans"].grad[~mask.allowed] == 0)


def test_nll_rejects_illegal_gold():
    scheme = TagScheme(BIO, ("X",))
    p, em = _setup_nll(np.random.default_rng(7), scheme, 2)
    with pytest.raises(IllegalGoldPath):
        crf.nll(em, p, TagSequence.from_names(scheme, ["O", "I-X"]), crf.transition_mask(scheme))


def test_viterbi_examples():
    scheme = TagScheme(BIO, ("X",))
    mask = crf.transition_mask(scheme)
    p = crf_params(np.random.default_rng(8), 2, scheme)
    em = np.zeros((4, 3))
    em[:, 0] = 50
    assert crf.viterbi(em, p, mask, scheme).names() == ["O"] * 4
    em = np.zeros((4, 3))
    gold = [0, 1, 2, 2]
    em[np.arange(4), gold] = 10
    assert list(crf.viterbi(em, p, mask, scheme).tags) == gold


def test_viterbi_respects_mask_and_beats_gold():
    rng = np.random.default_rng(9)
    scheme = TagScheme(BIOUL, ("X", "Y"))
    mask = crf.transition_mask(scheme)
    for _ in range(1000):
        T = int(rng.integers(1, 8))
        e, trans, start, end = random_instance(rng, T, len(scheme), masked=mask)
        path, score = crf.viterbi_arrays(e, trans, start, end)
        assert mask.is_legal(path)
        out = decode_tags(TagSequence(scheme, path))
        assert is_disjoint(out)
        gold = [0] * T
        assert score >= path_score(e, trans, start, end, gold) - 1e-9
