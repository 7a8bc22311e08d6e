"""Iterative decoding: flat passes conditioned on everything found so far."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .annotations import BIOUL, TagScheme
from .errors import SequenceTooLong


@dataclass(frozen=True)
class DecodeConfig:
    max_iterations: int = 8
    read_scheme: TagScheme = TagScheme(BIOUL)
    write_scheme: TagScheme = TagScheme(BIOUL)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


def decode_iterations(model, tokens, config: DecodeConfig) -> list:
    """Per-iteration ``(decoded, new)`` mention sets, in order.

    Iteration k sees the ``new`` sets of iterations 1..k-1 as its history
    layers.  The loop stops after the first iteration that adds nothing, or
    at ``config.max_iterations``.
    """
    max_len = getattr(model, "max_len", None)
    if max_len is not None and len(tokens) > max_len:
        raise SequenceTooLong(f"sentence of {len(tokens)} tokens exceeds max_len={max_len}")
    if not tokens:
        return []
    history, emitted, trace = [], set(), []
    for _ in range(config.max_iterations):
        decoded = set(model.decode_flat(tokens, history))
        new = decoded - emitted
        trace.append((decoded, new))
        if not new:
            break
        emitted |= new
        history.append(new)
    return trace


def predict_sentence(model, tokens, config: DecodeConfig) -> set:
    out = set()
    for _, new in decode_iterations(model, tokens, config):
        out |= new
    return out


def predict_corpus(model, sentences, config: DecodeConfig, workers: int = 1) -> list:
    """Predictions for each sentence (token sequences or Sentence objects), in order."""
    token_lists = [getattr(s, "tokens", s) for s in sentences]
    if workers <= 1 or len(token_lists) < 2:
        return [predict_sentence(model, tokens, config) for tokens in token_lists]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda tokens: predict_sentence(model, tokens, config), token_lists))
