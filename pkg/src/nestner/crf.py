"""Linear-chain CRF head: emissions, scheme masks, forward algorithm, Viterbi.

Path score of tags ``y`` over emissions ``e``::

    start[y0] + sum_t e[t, y_t] + sum_t trans[y_{t-1}, y_t] + end[y_{T-1}]

Illegal transitions (and illegal first/last tags) are replaced by ``NEG``
before any computation, so they carry no gradient and never get updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .annotations import BIO, TagScheme, TagSequence
from .errors import EmptySequence, IllegalGoldPath, ShapeError

NEG = -1e4


@dataclass(frozen=True)
class TransitionMask:
    allowed: np.ndarray  # [n_tags, n_tags], prev -> cur
    start: np.ndarray
    end: np.ndarray

    def is_legal(self, tags) -> bool:
        tags = list(tags)
        if not tags:
            return False
        if not (self.start[tags[0]] and self.end[tags[-1]]):
            return False
        return all(self.allowed[a, b] for a, b in zip(tags, tags[1:]))


def transition_mask(scheme: TagScheme, constrained: bool = True) -> TransitionMask:
    """Legal moves of ``scheme``; everything is legal when unconstrained.

    BIO: ``I-X`` only after ``B-X``/``I-X`` and never first.  BIOUL: ``I-X``
    and ``L-X`` only after ``B-X``/``I-X``; ``O``, ``B``, ``U`` only after
    ``O``, ``L``, ``U``; a sequence starts on O/B/U and ends on O/L/U.
    """
    n = len(scheme)
    allowed = np.ones((n, n), dtype=bool)
    start = np.ones(n, dtype=bool)
    end = np.ones(n, dtype=bool)
    if not constrained:
        return TransitionMask(allowed, start, end)
    parts = [scheme.split(i) for i in range(n)]
    for cur, (cp, cl) in enumerate(parts):
        for prev, (pp, pl) in enumerate(parts):
            inside_prev = pp in ("B", "I")
            if cp in ("I", "L"):
                allowed[prev, cur] = inside_prev and pl == cl
            elif scheme.kind != BIO:
                allowed[prev, cur] = not inside_prev
        if cp in ("I", "L"):
            start[cur] = False
        if scheme.kind != BIO and cp in ("B", "I"):
            end[cur] = False
    return TransitionMask(allowed, start, end)


def init_crf_params(d_model: int, scheme: TagScheme, rng) -> dict:
    n = len(scheme)
    return {
        "crf.w": ad.Parameter(ad.glorot_init((d_model, n), rng), "crf.w", "head"),
        "crf.b": ad.Parameter(np.zeros(n), "crf.b", "head"),
        "crf.trans": ad.Parameter(np.zeros((n, n)), "crf.trans", "head"),
        "crf.start": ad.Parameter(np.zeros(n), "crf.start", "head"),
        "crf.end": ad.Parameter(np.zeros(n), "crf.end", "head"),
    }


def emissions(hidden, params) -> ad.Tensor:
    hidden = ad.as_tensor(hidden)
    w = params["crf.w"]
    if hidden.ndim != 2 or hidden.shape[1] != w.shape[0]:
        raise ShapeError(f"emissions: hidden {hidden.shape} vs projection {w.shape}")
    return ad.add(ad.matmul(hidden, w), params["crf.b"])


def masked_scores(params, mask: TransitionMask):
    """Transition/start/end tensors with illegal entries pinned to ``NEG``."""
    return (ad.where_mask(params["crf.trans"], mask.allowed, NEG),
            ad.where_mask(params["crf.start"], mask.start, NEG),
            ad.where_mask(params["crf.end"], mask.end, NEG))


def _logsumexp(x, axis):
    m = x.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(x - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def _forward_backward(e, trans, start, end):
    T, n = e.shape
    alpha = np.empty((T, n))
    beta = np.empty((T, n))
    alpha[0] = start + e[0]
    for t in range(1, T):
        alpha[t] = _logsumexp(alpha[t - 1][:, None] + trans, axis=0) + e[t]
    log_z = float(_logsumexp(alpha[-1] + end, axis=0))
    beta[-1] = end
    for t in range(T - 2, -1, -1):
        beta[t] = _logsumexp(trans + (e[t + 1] + beta[t + 1])[None, :], axis=1)
    return alpha, beta, log_z


def log_partition(em, trans, start, end) -> ad.Tensor:
    """log Z by the forward algorithm; gradients are the CRF marginals."""
    em, trans, start, end = (ad.as_tensor(x) for x in (em, trans, start, end))
    if em.ndim != 2 or em.shape[0] == 0:
        raise EmptySequence(f"log_partition needs a non-empty [T, n_tags] input, got {em.shape}")
    e, tr = em.data, trans.data
    alpha, beta, log_z = _forward_backward(e, tr, start.data, end.data)

    def bw(g):
        node = np.exp(alpha + beta - log_z)
        edge = np.zeros_like(tr)
        if e.shape[0] > 1:
            pair = (alpha[:-1, :, None] + tr[None] + (e[1:] + beta[1:])[:, None, :]) - log_z
            edge = np.exp(pair).sum(axis=0)
        return g * node, g * edge, g * node[0], g * node[-1]

    return ad._make(np.array(log_z), (em, trans, start, end), bw)


def path_score(em, trans, start, end, tags) -> ad.Tensor:
    em, trans, start, end = (ad.as_tensor(x) for x in (em, trans, start, end))
    tags = np.asarray(tags, dtype=np.int64)
    T = len(tags)
    pos = np.arange(T)
    value = (start.data[tags[0]] + em.data[pos, tags].sum()
             + tr_sum(trans.data, tags) + end.data[tags[-1]])

    def bw(g):
        ge = np.zeros(em.shape)
        ge[pos, tags] = g
        gt = np.zeros(trans.shape)
        np.add.at(gt, (tags[:-1], tags[1:]), g)
        gs = np.zeros(start.shape)
        gs[tags[0]] = g
        gend = np.zeros(end.shape)
        gend[tags[-1]] = g
        return ge, gt, gs, gend

    return ad._make(np.array(value), (em, trans, start, end), bw)


def tr_sum(trans, tags) -> float:
    return float(trans[tags[:-1], tags[1:]].sum()) if len(tags) > 1 else 0.0


def nll(em, params, gold: TagSequence, mask: TransitionMask) -> ad.Tensor:
    """Negative log-likelihood of the gold path (``log Z - score``)."""
    em = ad.as_tensor(em)
    if em.ndim != 2 or em.shape[0] == 0:
        raise EmptySequence("nll needs at least one position")
    if len(gold) != em.shape[0]:
        raise ShapeError(f"gold length {len(gold)} vs emissions {em.shape}")
    if not mask.is_legal(gold.tags):
        raise IllegalGoldPath(f"gold path {gold.names()} violates the transition mask")
    trans, start, end = masked_scores(params, mask)
    return ad.sub(log_partition(em, trans, start, end), path_score(em, trans, start, end, gold.tags))


def viterbi_arrays(e, trans, start, end) -> tuple:
    """Best path and its score; ties go to the lowest tag id at every choice."""
    T, n = e.shape
    if T == 0:
        raise EmptySequence("viterbi needs at least one position")
    score = start + e[0]
    back = np.zeros((T, n), dtype=np.int64)
    for t in range(1, T):
        cand = score[:, None] + trans
        back[t] = cand.argmax(axis=0)  # argmax returns the first (lowest) maximiser
        score = cand[back[t], np.arange(n)] + e[t]
    final = score + end
    best = int(final.argmax())
    path = [best]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    return path[::-1], float(final[best])


def viterbi(em, params, mask: TransitionMask, scheme: TagScheme) -> TagSequence:
    e = em.data if isinstance(em, ad.Tensor) else np.asarray(em, dtype=float)
    if e.ndim != 2 or e.shape[0] == 0:
        raise EmptySequence("viterbi needs a non-empty [T, n_tags] input")
    trans = np.where(mask.allowed, params["crf.trans"].data, NEG)
    start = np.where(mask.start, params["crf.start"].data, NEG)
    end = np.where(mask.end, params["crf.end"].data, NEG)
    path, _ = viterbi_arrays(e, trans, start, end)
    return TagSequence(scheme, path)
