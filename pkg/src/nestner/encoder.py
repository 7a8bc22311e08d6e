"""Toy transformer encoder with observed-tag injection.

Pre-norm blocks (``x + attn(ln(x))`` then ``x + ffn(ln(x))``) with learned
absolute positions and a final layer norm.  After block ``tag_layer`` the
embeddings of every observed tag at a position are summed and added to the
residual stream; ``tag_layer == 0`` injects right after the embeddings and
``tag_layer == n_layers`` right before the final norm.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import autodiff as ad
from .annotations import BIOUL, ObservedTags, TagScheme
from .errors import LengthMismatch, SchemeMismatch, SequenceTooLong

LAYER_PARAMS = ("ln1.g", "ln1.b", "w_qkv", "b_qkv", "w_o", "b_o",
                "ln2.g", "ln2.b", "w_ff1", "b_ff1", "w_ff2", "b_ff2")


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    max_len: int = 128
    n_layers: int = 4
    n_heads: int = 4
    d_model: int = 64
    d_ff: int = 128
    tag_layer: Optional[int] = 2  # None disables injection (flat models)
    dropout: float = 0.25
    tag_dropout: bool = True
    read_scheme: TagScheme = field(default_factory=lambda: TagScheme(BIOUL))

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model={self.d_model} not divisible by n_heads={self.n_heads}")
        if self.tag_layer is not None and not 0 <= self.tag_layer <= self.n_layers:
            raise ValueError(f"tag_layer must lie in [0, {self.n_layers}], got {self.tag_layer}")

    def fingerprint(self) -> str:
        record = asdict(self)
        record["read_scheme"] = [self.read_scheme.kind, list(self.read_scheme.labels)]
        blob = json.dumps(record, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def layer_param_count(d_model: int, d_ff: int) -> int:
    """Scalars in one block: two norms, fused qkv, output proj, two ffn maps."""
    d = d_model
    return 2 * (2 * d) + (3 * d * d + 3 * d) + (d * d + d) + (d * d_ff + d_ff) + (d_ff * d + d)


def num_params(config: EncoderConfig) -> int:
    """Token table + position table + blocks + final norm (+ tag table)."""
    d = config.d_model
    total = config.vocab_size * d + config.max_len * d
    total += config.n_layers * layer_param_count(d, config.d_ff)
    total += 2 * d
    if config.tag_layer is not None:
        total += len(config.read_scheme) * d
    return total


def init_encoder_params(config: EncoderConfig, rng) -> dict:
    d, f = config.d_model, config.d_ff
    p = {}

    def add(name, value, group="encoder"):
        p[name] = ad.Parameter(value, name, group)

    add("tok_emb", ad.glorot_init((config.vocab_size, d), rng))
    add("pos_emb", ad.glorot_init((config.max_len, d), rng))
    for i in range(config.n_layers):
        pre = f"layer{i}."
        add(pre + "ln1.g", np.ones(d))
        add(pre + "ln1.b", np.zeros(d))
        add(pre + "w_qkv", ad.glorot_init((d, 3 * d), rng))
        add(pre + "b_qkv", np.zeros(3 * d))
        add(pre + "w_o", ad.glorot_init((d, d), rng))
        add(pre + "b_o", np.zeros(d))
        add(pre + "ln2.g", np.ones(d))
        add(pre + "ln2.b", np.zeros(d))
        add(pre + "w_ff1", ad.glorot_init((d, f), rng))
        add(pre + "b_ff1", np.zeros(f))
        add(pre + "w_ff2", ad.glorot_init((f, d), rng))
        add(pre + "b_ff2", np.zeros(d))
    add("ln_f.g", np.ones(d))
    add("ln_f.b", np.zeros(d))
    if config.tag_layer is not None:
        # the tag table trains with the head learning rate, like the CRF
        add("tag_emb", ad.glorot_init((len(config.read_scheme), d), rng), group="head")
    return p


def tag_counts(observed: ObservedTags, length: int, n_tags: int) -> np.ndarray:
    """``counts[t, k]`` = how many observed layers carry tag ``k`` at position ``t``."""
    counts = np.zeros((length, n_tags))
    positions = np.arange(length)
    for layer in observed.layers:
        np.add.at(counts, (positions, np.asarray(layer.tags)), 1.0)
    return counts


def _block(x, params, pre, config, training, rng):
    T, d, H = x.shape[0], config.d_model, config.n_heads
    dh = d // H
    p = config.dropout

    h = ad.layer_norm(x, params[pre + "ln1.g"], params[pre + "ln1.b"])
    qkv = ad.add(ad.matmul(h, params[pre + "w_qkv"]), params[pre + "b_qkv"])
    heads = ad.transpose(ad.reshape(qkv, (T, 3, H, dh)), (1, 2, 0, 3))  # [3, H, T, dh]
    q = ad.slice_(heads, 0)
    k = ad.slice_(heads, 1)
    v = ad.slice_(heads, 2)
    scores = ad.scale(ad.matmul(q, ad.transpose(k, (0, 2, 1))), 1.0 / np.sqrt(dh))
    attn = ad.dropout(ad.softmax(scores, axis=-1), p, training, rng)
    ctx = ad.reshape(ad.transpose(ad.matmul(attn, v), (1, 0, 2)), (T, d))
    out = ad.add(ad.matmul(ctx, params[pre + "w_o"]), params[pre + "b_o"])
    x = ad.add(x, ad.dropout(out, p, training, rng))

    h = ad.layer_norm(x, params[pre + "ln2.g"], params[pre + "ln2.b"])
    h = ad.gelu(ad.add(ad.matmul(h, params[pre + "w_ff1"]), params[pre + "b_ff1"]))
    h = ad.add(ad.matmul(h, params[pre + "w_ff2"]), params[pre + "b_ff2"])
    return ad.add(x, ad.dropout(h, p, training, rng))


def encode(token_ids, observed: Optional[ObservedTags], config: EncoderConfig, params: dict,
           training: bool = False, rng=None, return_layers: bool = False):
    """Hidden states ``[len(token_ids), d_model]`` conditioned on observed tags.

    With ``return_layers`` also returns the residual stream after the
    embeddings and after each block, captured before any injection.
    """
    token_ids = np.asarray(token_ids, dtype=np.int64)
    T = len(token_ids)
    if T > config.max_len:
        raise SequenceTooLong(f"sequence of {T} tokens exceeds max_len={config.max_len}")
    if observed is not None and observed.depth:
        if observed.scheme != config.read_scheme:
            raise SchemeMismatch(f"observed tags use {observed.scheme.kind}, encoder reads "
                                 f"{config.read_scheme.kind}")
        if len(observed.layers[0]) != T:
            raise LengthMismatch(f"observed layers have length {len(observed.layers[0])}, "
                                 f"sentence has {T}")
    if training and config.dropout > 0 and rng is None:
        raise ValueError("training mode with dropout needs an rng")

    x = ad.add(ad.embedding_lookup(params["tok_emb"], token_ids),
               ad.slice_(params["pos_emb"], slice(0, T)))
    x = ad.dropout(x, config.dropout, training, rng)
    layers = []
    for i in range(config.n_layers + 1):
        if return_layers:
            layers.append(x)
        if i == config.tag_layer and observed is not None and observed.depth:
            counts = tag_counts(observed, T, len(config.read_scheme))
            tags = ad.matmul(ad.Tensor(counts), params["tag_emb"])
            if config.tag_dropout:
                tags = ad.dropout(tags, config.dropout, training, rng)
            x = ad.add(x, tags)
        if i < config.n_layers:
            x = _block(x, params, f"layer{i}.", config, training, rng)
    out = ad.layer_norm(x, params["ln_f.g"], params["ln_f.b"])
    return (out, layers) if return_layers else out
