"""The iterative nested NER model: encoder + CRF head + vocabularies."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import autodiff as ad
from . import crf
from .annotations import TagScheme, build_observed, decode_tags
from .encoder import EncoderConfig, encode, init_encoder_params

UNK = "<unk>"


class NestedNER:
    """Model state: configuration, vocabularies and named parameters.

    ``decode_flat`` is the single-pass interface used by the inference loop;
    anything exposing it (and ``max_len``) can be iterated.
    """

    def __init__(self, encoder_config: EncoderConfig, write_scheme: TagScheme, tokens,
                 constrained: bool = True, seed: int = 0, params: dict = None):
        self.tokens = list(tokens)
        if not self.tokens or self.tokens[0] != UNK:
            self.tokens = [UNK] + [t for t in self.tokens if t != UNK]
        self.encoder_config = replace(encoder_config, vocab_size=len(self.tokens))
        self.write_scheme = write_scheme
        self.constrained = constrained
        self.seed = seed
        self.token_index = {t: i for i, t in enumerate(self.tokens)}
        self.mask = crf.transition_mask(write_scheme, constrained)
        if params is None:
            rng = np.random.default_rng(seed)
            params = init_encoder_params(self.encoder_config, rng)
            params.update(crf.init_crf_params(self.encoder_config.d_model, write_scheme, rng))
        self.params = params

    @property
    def read_scheme(self) -> TagScheme:
        return self.encoder_config.read_scheme

    @property
    def max_len(self) -> int:
        return self.encoder_config.max_len

    @property
    def uses_history(self) -> bool:
        return self.encoder_config.tag_layer is not None

    def parameters(self) -> list:
        return list(self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def token_ids(self, tokens) -> np.ndarray:
        return np.array([self.token_index.get(t, 0) for t in tokens], dtype=np.int64)

    def observed(self, history, length):
        if not self.uses_history or not history:
            return None
        return build_observed(history, self.read_scheme, length)

    def emissions(self, tokens, history=(), training=False, rng=None) -> ad.Tensor:
        observed = self.observed(history, len(tokens))
        hidden = encode(self.token_ids(tokens), observed, self.encoder_config, self.params,
                        training=training, rng=rng)
        return crf.emissions(hidden, self.params)

    def loss(self, tokens, history, target_tags, training=True, rng=None) -> ad.Tensor:
        em = self.emissions(tokens, history, training, rng)
        return crf.nll(em, self.params, target_tags, self.mask)

    def viterbi(self, tokens, history=()):
        with ad.no_grad():
            em = self.emissions(tokens, history)
        return crf.viterbi(em, self.params, self.mask, self.write_scheme)

    def decode_flat(self, tokens, history=()) -> set:
        """Mentions of one Viterbi pass conditioned on ``history`` layers."""
        return decode_tags(self.viterbi(tokens, history))

    def snapshot(self) -> dict:
        return {name: p.data.copy() for name, p in self.params.items()}

    def restore(self, values: dict):
        for name, value in values.items():
            self.params[name].data = value.copy()
