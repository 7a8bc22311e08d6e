"""Flat ``key = value`` run configuration with file and command-line layers.

Precedence is command line > config file > built-in defaults.  Example::

    # encoder
    n_layers = 4
    d_model = 64
    tag_layer = 2          # "none" disables tag injection
    # training
    order = short_to_large
    epochs = 20
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from .annotations import BIO, BIOUL, TagScheme
from .encoder import EncoderConfig
from .errors import ConfigError
from .inference import DecodeConfig
from .model import NestedNER
from .ordering import POLICIES, is_flat
from .training import TrainConfig

SCHEMES = (BIO, BIOUL)


@dataclass(frozen=True)
class RunConfig:
    # encoder
    n_layers: int = 4
    n_heads: int = 4
    d_model: int = 64
    d_ff: int = 128
    max_len: int = 128
    tag_layer: Optional[int] = 2
    dropout: float = 0.25
    tag_dropout: bool = True
    # tagging
    read_scheme: str = BIOUL
    write_scheme: str = BIOUL
    constrained: bool = True
    # training
    epochs: int = 20
    batch_size: int = 8
    lr_encoder: float = 1e-3
    lr_head: float = 9e-3
    warmup_fraction: float = 0.10
    order: str = "short_to_large"
    observed_p: float = 0.5
    seed: int = 0
    # inference
    max_iterations: int = 8
    workers: int = 1

    def __post_init__(self):
        for key in ("read_scheme", "write_scheme"):
            if getattr(self, key) not in SCHEMES:
                raise ConfigError(f"{key} must be one of {SCHEMES}, got {getattr(self, key)!r}")
        if self.order not in POLICIES:
            raise ConfigError(f"order must be one of {POLICIES}, got {self.order!r}")
        try:
            self.train_config()
            self.encoder_config(("X",))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, lr_encoder=self.lr_encoder,
                           lr_head=self.lr_head, warmup_fraction=self.warmup_fraction, order=self.order,
                           observed_p=self.observed_p, seed=self.seed,
                           max_iterations=self.max_iterations, workers=self.workers)

    def encoder_config(self, labels, vocab_size: int = 1) -> EncoderConfig:
        # flat baselines never see history, so they get no tag table
        tag_layer = None if is_flat(self.order) else self.tag_layer
        return EncoderConfig(vocab_size=vocab_size, max_len=self.max_len, n_layers=self.n_layers,
                             n_heads=self.n_heads, d_model=self.d_model, d_ff=self.d_ff,
                             tag_layer=tag_layer, dropout=self.dropout, tag_dropout=self.tag_dropout,
                             read_scheme=TagScheme(self.read_scheme, labels))

    def decode_config(self, labels=()) -> DecodeConfig:
        iterations = 1 if is_flat(self.order) or self.tag_layer is None else self.max_iterations
        return DecodeConfig(iterations, TagScheme(self.read_scheme, labels),
                            TagScheme(self.write_scheme, labels))

    def build_model(self, labels, tokens) -> NestedNER:
        labels = tuple(sorted(labels))
        return NestedNER(self.encoder_config(labels), TagScheme(self.write_scheme, labels), tokens,
                         constrained=self.constrained, seed=self.seed)

    def lines(self) -> list:
        return [f"{k} = {format_value(v)}" for k, v in asdict(self).items()]


FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}
KEYS = tuple(FIELD_TYPES)


def format_value(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def parse_value(key: str, text: str):
    if key not in FIELD_TYPES:
        raise ConfigError(f"unknown config key {key!r}")
    kind = FIELD_TYPES[key]
    text = text.strip()
    try:
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "Optional[int]":
            return None if text.lower() == "none" else int(text)
        if kind == "float":
            return float(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {text!r}") from None
    return text


def read_config_file(path) -> dict:
    values = {}
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key = key.strip()
            try:
                values[key] = parse_value(key, value)
            except ConfigError as exc:
                raise ConfigError(f"{path}:{line_no}: {exc}") from None
    return values


def resolve(path=None, overrides=None, base: RunConfig = None) -> RunConfig:
    """Defaults (or ``base``), then the file at ``path``, then ``overrides``."""
    values = read_config_file(path) if path else {}
    for key, value in (overrides or {}).items():
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        if value is not None:
            values[key] = parse_value(key, value) if isinstance(value, str) else value
    return replace(base or RunConfig(), **values)
