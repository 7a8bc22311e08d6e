"""Optimisation: Adam with two learning-rate groups, warmup + linear decay,
observed-subset simulation and per-step target selection."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .annotations import encode_mentions
from .errors import EmptyCorpus, MissingGradient
from .inference import DecodeConfig, predict_corpus
from .metrics import exact_match_prf
from .ordering import GREEDY, FLAT_GREEDY, POLICIES, is_flat, layer_mentions, sample_observed, select_target

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 8
    lr_encoder: float = 1e-3
    lr_head: float = 9e-3
    warmup_fraction: float = 0.10
    order: str = "short_to_large"
    observed_p: float = 0.5
    seed: int = 0
    max_iterations: int = 8
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.warmup_fraction < 1.0:
            raise ValueError("warmup_fraction must lie in (0, 1)")
        if self.lr_encoder <= 0 or self.lr_head <= 0:
            raise ValueError("learning rates must be positive")
        if self.order not in POLICIES:
            raise ValueError(f"unknown order policy {self.order!r}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")

    @property
    def group_lrs(self) -> dict:
        return {"encoder": self.lr_encoder, "head": self.lr_head}


def lr_at(step: int, total_steps: int, peak: float, warmup_fraction: float = 0.10) -> float:
    """Linear warmup from 0 to ``peak`` over ``ceil(warmup_fraction * total)``
    steps, then linear decay back to 0 at ``total_steps``."""
    warmup = math.ceil(warmup_fraction * total_steps)
    if step < warmup:
        return peak * step / warmup
    if total_steps == warmup:
        return peak
    return peak * max(0.0, (total_steps - step) / (total_steps - warmup))


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


class Adam:
    """Adam without weight decay; each parameter uses its group's rate."""

    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.state = AdamState()
        for p in self.params:
            self.state.m[p.name] = np.zeros(p.shape)
            self.state.v[p.name] = np.zeros(p.shape)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self, lrs: dict, allow_missing: bool = False):
        """Apply one update with per-group learning rates ``lrs``.

        With ``allow_missing`` a parameter that received no gradient is left
        untouched (moments included) instead of raising.
        """
        s = self.state
        s.step += 1
        b1, b2 = self.beta1, self.beta2
        c1, c2 = 1 - b1 ** s.step, 1 - b2 ** s.step
        for p in self.params:
            g = p.grad
            if g is None:
                if not allow_missing:
                    raise MissingGradient(f"parameter {p.name} has no gradient")
                continue
            m, v = s.m[p.name], s.v[p.name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            p.data = p.data - lrs[p.group] * (m / c1) / (np.sqrt(v / c2) + self.eps)


def sentence_loss(model, sentence, config: TrainConfig, rng) -> ad.Tensor:
    """CRF loss of one simulated decoding step on ``sentence``.

    A random subset of the gold mentions is marked as already found and
    layered into history; the target is chosen by the order policy among the
    rest.  An empty target trains the stop (all-O) behaviour.
    """
    tokens, gold = sentence.tokens, set(sentence.mentions)
    flat = is_flat(config.order) or not model.uses_history
    observed = set() if flat else sample_observed(gold, config.observed_p, rng)
    history = layer_mentions(observed)
    predicted = ()
    if config.order in (GREEDY, FLAT_GREEDY):
        predicted = model.decode_flat(tokens, history)
    target = select_target(config.order, gold, observed, predicted)
    tags = encode_mentions(target, model.write_scheme, len(tokens))
    return model.loss(tokens, history, tags, training=True, rng=rng)


def train_step(model, optimizer: Adam, batch, config: TrainConfig, rng, lrs: dict) -> float:
    """Mean loss over ``batch``; gradients are accumulated then applied once."""
    optimizer.zero_grad()
    total = 0.0
    for sentence in batch:
        loss = sentence_loss(model, sentence, config, rng)
        ad.backward(ad.scale(loss, 1.0 / len(batch)))
        total += loss.item()
    optimizer.step(lrs, allow_missing=True)
    return total / len(batch)


@dataclass
class EpochRecord:
    epoch: int
    step: int
    loss: float
    dev_precision: float = float("nan")
    dev_recall: float = float("nan")
    dev_f1: float = float("nan")

    def line(self) -> str:
        return (f"epoch={self.epoch} step={self.step} loss={self.loss:.6f} "
                f"dev_p={self.dev_precision:.4f} dev_r={self.dev_recall:.4f} dev_f1={self.dev_f1:.4f}")


@dataclass
class TrainResult:
    model: object
    history: list
    best_epoch: int
    losses: list


def decode_config_for(model, config: TrainConfig) -> DecodeConfig:
    iterations = 1 if is_flat(config.order) or not model.uses_history else config.max_iterations
    return DecodeConfig(iterations, model.read_scheme, model.write_scheme)


def evaluate(model, sentences, config: TrainConfig):
    pred = predict_corpus(model, sentences, decode_config_for(model, config), config.workers)
    return exact_match_prf(pred, [s.mentions for s in sentences])


def train(model, train_sentences, dev_sentences, config: TrainConfig, on_epoch=None) -> TrainResult:
    """Train in place and restore the best-on-dev parameters.

    ``on_epoch`` receives each :class:`EpochRecord` as it is produced.
    """
    train_sentences = [s for s in train_sentences if len(s.tokens)]
    if not train_sentences:
        raise EmptyCorpus("no training sentences")
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.parameters())
    steps_per_epoch = math.ceil(len(train_sentences) / config.batch_size)
    total = steps_per_epoch * config.epochs
    history, losses = [], []
    best, best_f1, best_epoch = model.snapshot(), -1.0, 0
    step = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_sentences))
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = [train_sentences[i] for i in order[start:start + config.batch_size]]
            step += 1
            lrs = {g: lr_at(step, total, peak, config.warmup_fraction)
                   for g, peak in config.group_lrs.items()}
            loss = train_step(model, optimizer, batch, config, rng, lrs)
            losses.append(loss)
            epoch_loss += loss
        record = EpochRecord(epoch, step, epoch_loss / steps_per_epoch)
        if dev_sentences:
            prf = evaluate(model, dev_sentences, config)
            record.dev_precision, record.dev_recall, record.dev_f1 = prf.precision, prf.recall, prf.f1
            if prf.f1 >= best_f1:
                best, best_f1, best_epoch = model.snapshot(), prf.f1, epoch
        else:
            best, best_epoch = model.snapshot(), epoch
        history.append(record)
        log.info(record.line())
        if on_epoch is not None:
            on_epoch(record)
    model.restore(best)
    return TrainResult(model, history, best_epoch, losses)
